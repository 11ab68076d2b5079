// Teleop client: websocket lifecycle, hello handshake, sequence tracking,
// drag coalescing under the send-rate cap, and a latest-value cell that
// decouples rendering from message arrival.

import {
  encodeHello,
  encodePoseUpdate,
  encodeSetParams,
  FRAME_NAMES,
  type FrameName,
  type FramesPayload,
  type HelloMsg,
  type JointStateMsg,
  type ParamsPayload,
  type PosePayload,
  parseServerMsg,
} from "./protocol.js";
import { RateGovernor, systemClock, type Clock } from "./rate.js";

// Minimal structural WebSocket interface so tests and node can inject
// their own implementation (browser WebSocket and `ws` both satisfy it).
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type ConnectionStatus = "connecting" | "connected" | "error" | "closed";

export interface ClientOptions {
  url: string;
  sendRatePerSecond?: number;
  socketFactory?: SocketFactory;
  clock?: Clock;
  clientName?: string;
}

export interface ClientEvents {
  status?: (status: ConnectionStatus, detail?: string) => void;
  hello?: (msg: HelloMsg) => void;
  state?: (msg: JointStateMsg) => void;
  ack?: (params: ParamsPayload) => void;
  protocolError?: (message: string) => void;
}

export class TeleopClient {
  private socket: SocketLike | null = null;
  private seq = 0;
  private appliedSeq = 0;
  private governor: RateGovernor<FramesPayload>;
  private frames: FramesPayload | null = null;
  private helloReceived = false;

  /** Latest applied joint_state; rendering reads this cell, nothing else. */
  latestState: JointStateMsg | null = null;
  hello: HelloMsg | null = null;
  status: ConnectionStatus = "closed";

  // Counters exposed for the rate-cap and state-machine checks.
  sentPoseUpdates = 0;
  discardedOutOfOrder = 0;

  /** Sequence number of the most recently sent pose_update. */
  get lastSentSeq(): number {
    return this.seq;
  }

  constructor(
    private readonly options: ClientOptions,
    private readonly events: ClientEvents = {},
  ) {
    const rate = options.sendRatePerSecond ?? 60;
    const clock = options.clock ?? systemClock;
    this.governor = new RateGovernor<FramesPayload>(rate, (frames) => this.sendPoseNow(frames), clock);
  }

  connect(): void {
    const factory =
      this.options.socketFactory ?? ((url: string) => new WebSocket(url) as unknown as SocketLike);
    this.setStatus("connecting");
    this.helloReceived = false;
    const socket = factory(this.options.url);
    this.socket = socket;
    socket.onopen = () => {
      socket.send(encodeHello(this.options.clientName ?? "playground"));
    };
    socket.onerror = () => this.setStatus("error", "connection failed");
    socket.onclose = () => {
      this.governor.cancel();
      this.setStatus("closed");
    };
    socket.onmessage = (ev) => this.handleMessage(String(ev.data));
  }

  disconnect(): void {
    this.governor.cancel();
    this.socket?.close();
    this.socket = null;
  }

  /** Reset per-session state and reconnect (fresh session, default q). */
  reconnect(): void {
    this.disconnect();
    this.seq = 0;
    this.appliedSeq = 0;
    this.latestState = null;
    this.hello = null;
    this.connect();
  }

  private setStatus(status: ConnectionStatus, detail?: string): void {
    this.status = status;
    this.events.status?.(status, detail);
  }

  private handleMessage(raw: string): void {
    const msg = parseServerMsg(raw);
    if (msg === null) {
      this.events.protocolError?.("unparseable server message");
      return;
    }
    switch (msg.type) {
      case "hello":
        this.hello = msg;
        this.helloReceived = true;
        this.setStatus("connected");
        this.events.hello?.(msg);
        break;
      case "joint_state":
        // At most one applied inbound per outbound seq; anything at or
        // below the applied watermark is stale and dropped.
        if (msg.seq <= this.appliedSeq) {
          this.discardedOutOfOrder += 1;
          return;
        }
        this.appliedSeq = msg.seq;
        this.latestState = msg;
        this.events.state?.(msg);
        break;
      case "ack":
        this.events.ack?.(msg.params);
        break;
      case "error":
        this.events.protocolError?.(msg.message);
        break;
      case "heartbeat":
        break;
    }
  }

  /** Update one frame's pose; the full frame set is coalesced and sent
   * under the rate cap (latest drag wins). */
  dragFrame(name: FrameName, pose: PosePayload): void {
    if (this.frames === null) return;
    this.frames = { ...this.frames, [name]: pose };
    this.governor.submit(this.frames);
  }

  /** Install the full frame set (e.g. on load); does not send. */
  setFrames(frames: FramesPayload): void {
    for (const name of FRAME_NAMES) {
      if (!(name in frames)) throw new Error(`missing frame ${name}`);
    }
    this.frames = frames;
  }

  currentFrames(): FramesPayload | null {
    return this.frames;
  }

  private sendPoseNow(frames: FramesPayload): void {
    if (this.socket === null || !this.helloReceived) return;
    this.seq += 1;
    this.sentPoseUpdates += 1;
    this.socket.send(encodePoseUpdate(this.seq, frames));
  }

  setParams(updates: Partial<Pick<ParamsPayload, "alpha" | "human_scale">>): void {
    if (this.socket === null || !this.helloReceived) return;
    this.socket.send(encodeSetParams(updates));
  }
}
