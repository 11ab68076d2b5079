// Typed mirror of the teleop service wire schemas. All parsing of inbound
// JSON goes through the guards here so the rest of the UI only ever sees
// well-formed messages.

export const FRAME_NAMES = ["palm", "thumb_tip", "index_tip", "middle_tip"] as const;
export type FrameName = (typeof FRAME_NAMES)[number];

export interface PosePayload {
  p: [number, number, number];
  q: [number, number, number, number];
}

export type FramesPayload = Record<FrameName, PosePayload>;

export interface PoseDescriptor {
  p: number[];
  q: number[];
}

export interface JointDescriptor {
  name: string;
  parent: string;
  child: string;
  origin: PoseDescriptor;
  axis: number[];
  limits: [number, number];
}

export interface FrameDescriptor {
  name: FrameName;
  link: string;
  offset: PoseDescriptor;
}

export interface ModelDescriptor {
  dof: number;
  root: string;
  joints: JointDescriptor[];
  frames: FrameDescriptor[];
}

export interface ParamsPayload {
  alpha: number;
  human_scale: number;
  max_iters: number;
  grad_tol: number;
  step_tol: number;
  fd_step: number;
}

export interface HelloMsg {
  type: "hello";
  session_id: string;
  version: string;
  model_descriptor: ModelDescriptor;
  defaults: ParamsPayload;
  heartbeat_s: number;
}

export interface JointStateMsg {
  type: "joint_state";
  seq: number;
  q: number[];
  objective: number;
  converged: boolean;
  solve_micros: number;
  residuals: number[];
  dropped: number;
}

export interface AckMsg {
  type: "ack";
  params: ParamsPayload;
}

export interface ErrorMsg {
  type: "error";
  message: string;
  seq?: number;
}

export interface HeartbeatMsg {
  type: "heartbeat";
  t: number;
}

export type ServerMsg = HelloMsg | JointStateMsg | AckMsg | ErrorMsg | HeartbeatMsg;

function isRecord(x: unknown): x is Record<string, unknown> {
  return typeof x === "object" && x !== null;
}

function isNumberArray(x: unknown, length?: number): x is number[] {
  return Array.isArray(x) && (length === undefined || x.length === length) && x.every((v) => typeof v === "number");
}

function isPoseDescriptor(x: unknown): x is PoseDescriptor {
  return isRecord(x) && isNumberArray(x.p, 3) && isNumberArray(x.q, 4);
}

export function isModelDescriptor(x: unknown): x is ModelDescriptor {
  if (!isRecord(x) || typeof x.dof !== "number" || typeof x.root !== "string") return false;
  if (!Array.isArray(x.joints) || !Array.isArray(x.frames)) return false;
  const jointsOk = x.joints.every(
    (j: unknown) =>
      isRecord(j) &&
      typeof j.name === "string" &&
      typeof j.parent === "string" &&
      typeof j.child === "string" &&
      isPoseDescriptor(j.origin) &&
      isNumberArray(j.axis, 3) &&
      isNumberArray(j.limits, 2),
  );
  const framesOk =
    x.frames.length === 4 &&
    x.frames.every(
      (f: unknown) =>
        isRecord(f) &&
        FRAME_NAMES.includes(f.name as FrameName) &&
        typeof f.link === "string" &&
        isPoseDescriptor(f.offset),
    );
  return jointsOk && framesOk;
}

function isParamsPayload(x: unknown): x is ParamsPayload {
  return (
    isRecord(x) &&
    ["alpha", "human_scale", "max_iters", "grad_tol", "step_tol", "fd_step"].every(
      (k) => typeof x[k] === "number",
    )
  );
}

export function parseServerMsg(raw: string): ServerMsg | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (!isRecord(doc) || typeof doc.type !== "string") return null;
  switch (doc.type) {
    case "hello":
      if (
        typeof doc.session_id === "string" &&
        isModelDescriptor(doc.model_descriptor) &&
        isParamsPayload(doc.defaults) &&
        typeof doc.heartbeat_s === "number"
      ) {
        return doc as unknown as HelloMsg;
      }
      return null;
    case "joint_state":
      if (
        typeof doc.seq === "number" &&
        isNumberArray(doc.q) &&
        typeof doc.objective === "number" &&
        typeof doc.converged === "boolean" &&
        typeof doc.solve_micros === "number" &&
        isNumberArray(doc.residuals, 12) &&
        typeof doc.dropped === "number"
      ) {
        return doc as unknown as JointStateMsg;
      }
      return null;
    case "ack":
      return isParamsPayload(doc.params) ? (doc as unknown as AckMsg) : null;
    case "error":
      return typeof doc.message === "string" ? (doc as unknown as ErrorMsg) : null;
    case "heartbeat":
      return typeof doc.t === "number" ? (doc as unknown as HeartbeatMsg) : null;
    default:
      return null;
  }
}

export function encodeHello(client: string): string {
  return JSON.stringify({ type: "hello", client, version: "1" });
}

export function encodePoseUpdate(seq: number, frames: FramesPayload): string {
  return JSON.stringify({ type: "pose_update", seq, frames });
}

export function encodeSetParams(updates: Partial<Pick<ParamsPayload, "alpha" | "human_scale">>): string {
  return JSON.stringify({ type: "set_params", ...updates });
}
