// Client state machine against a scripted mock socket: handshake, seq
// watermark (out-of-order discard), drag coalescing, reconnect reset.

import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { TeleopClient, type SocketLike } from "../src/client.js";
import type { FramesPayload } from "../src/protocol.js";

const fixtures = JSON.parse(
  readFileSync(fileURLToPath(new URL("./fixtures/wire_fixtures.json", import.meta.url)), "utf-8"),
);

class MockSocket implements SocketLike {
  sent: string[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.onclose?.();
  }

  open(): void {
    this.onopen?.();
  }

  deliver(msg: unknown): void {
    this.onmessage?.({ data: JSON.stringify(msg) });
  }
}

const FRAMES: FramesPayload = {
  palm: { p: [0, 0, 0], q: [1, 0, 0, 0] },
  thumb_tip: { p: [0.1, 0.05, 0], q: [1, 0, 0, 0] },
  index_tip: { p: [0.02, 0.17, 0], q: [1, 0, 0, 0] },
  middle_tip: { p: [0, 0.19, 0], q: [1, 0, 0, 0] },
};

function jointState(seq: number, overrides: Record<string, unknown> = {}) {
  return { ...structuredClone(fixtures.joint_state), seq, ...overrides };
}

function connect(ratePerSecond = 1000): { client: TeleopClient; socket: MockSocket; events: string[] } {
  const socket = new MockSocket();
  const events: string[] = [];
  const client = new TeleopClient(
    { url: "ws://mock", sendRatePerSecond: ratePerSecond, socketFactory: () => socket },
    {
      status: (s) => events.push(`status:${s}`),
      state: (m) => events.push(`state:${m.seq}`),
      protocolError: (m) => events.push(`error:${m}`),
    },
  );
  client.connect();
  socket.open();
  socket.deliver(fixtures.hello);
  client.setFrames(FRAMES);
  return { client, socket, events };
}

describe("TeleopClient", () => {
  it("performs the hello handshake", () => {
    const { client, socket } = connect();
    expect(JSON.parse(socket.sent[0]).type).toBe("hello");
    expect(client.status).toBe("connected");
    expect(client.hello?.model_descriptor.dof).toBe(7);
  });

  it("applies joint_state and exposes it in the latest-value cell", () => {
    const { client, socket } = connect();
    client.dragFrame("index_tip", { p: [0.03, 0.18, 0], q: [1, 0, 0, 0] });
    expect(socket.sent.some((s) => JSON.parse(s).type === "pose_update")).toBe(true);
    socket.deliver(jointState(1));
    expect(client.latestState?.seq).toBe(1);
  });

  it("discards out-of-order and duplicate joint_state", () => {
    const { client, socket, events } = connect();
    socket.deliver(jointState(2));
    socket.deliver(jointState(1)); // stale: lower seq than applied
    socket.deliver(jointState(2)); // duplicate
    expect(client.latestState?.seq).toBe(2);
    expect(client.discardedOutOfOrder).toBe(2);
    expect(events.filter((e) => e.startsWith("state:"))).toEqual(["state:2"]);
  });

  it("every outbound seq is answered by at most one applied inbound", () => {
    const { client, socket } = connect();
    for (let i = 0; i < 5; i++) {
      client.dragFrame("thumb_tip", { p: [0.1, 0.05 + i * 0.01, 0], q: [1, 0, 0, 0] });
    }
    const outSeqs = socket.sent
      .map((s) => JSON.parse(s))
      .filter((m) => m.type === "pose_update")
      .map((m) => m.seq);
    const applied: number[] = [];
    for (const seq of outSeqs) {
      socket.deliver(jointState(seq));
      if (client.latestState?.seq === seq) applied.push(seq);
      socket.deliver(jointState(seq)); // duplicate must not re-apply
    }
    expect(applied).toEqual(outSeqs);
    expect(client.discardedOutOfOrder).toBe(outSeqs.length);
  });

  it("does not send pose updates before hello", () => {
    const socket = new MockSocket();
    const client = new TeleopClient({ url: "ws://mock", socketFactory: () => socket });
    client.connect();
    socket.open();
    client.setFrames(FRAMES);
    client.dragFrame("palm", { p: [0, 0, 0.1], q: [1, 0, 0, 0] });
    expect(socket.sent.filter((s) => JSON.parse(s).type === "pose_update")).toHaveLength(0);
  });

  it("reconnect resets the session state", () => {
    const { client, socket } = connect();
    socket.deliver(jointState(4));
    expect(client.latestState?.seq).toBe(4);
    client.reconnect();
    socket.open();
    socket.deliver(fixtures.hello);
    client.setFrames(FRAMES);
    expect(client.latestState).toBeNull();
    client.dragFrame("palm", { p: [0, 0, 0.01], q: [1, 0, 0, 0] });
    const updates = socket.sent.map((s) => JSON.parse(s)).filter((m) => m.type === "pose_update");
    expect(updates[updates.length - 1].seq).toBe(1); // seq counter restarted
  });

  it("surfaces protocol errors without crashing", () => {
    const { socket, events } = connect();
    socket.deliver({ type: "error", message: "bad frames", seq: 9 });
    expect(events).toContain("error:bad frames");
  });
});
