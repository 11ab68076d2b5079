// Forward kinematics over the service's model descriptor, used to draw
// the robot skeleton client-side. Quaternions are (w, x, y, z).

import type { ModelDescriptor } from "./protocol.js";

export type Quat = [number, number, number, number];
export type Vec3 = [number, number, number];

export function quatMultiply(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function quatRotate(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  const [vx, vy, vz] = v;
  const tx = 2 * (y * vz - z * vy);
  const ty = 2 * (z * vx - x * vz);
  const tz = 2 * (x * vy - y * vx);
  return [
    vx + w * tx + (y * tz - z * ty),
    vy + w * ty + (z * tx - x * tz),
    vz + w * tz + (x * ty - y * tx),
  ];
}

export function quatFromAxisAngle(axis: Vec3, angle: number): Quat {
  const h = 0.5 * angle;
  const s = Math.sin(h);
  return [Math.cos(h), axis[0] * s, axis[1] * s, axis[2] * s];
}

function quatNormalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export interface LinkPose {
  p: Vec3;
  q: Quat;
}

export interface SkeletonPose {
  links: Map<string, LinkPose>;
  joints: { name: string; origin: Vec3 }[];
  frames: Map<string, Vec3>;
}

// Walks the descriptor's joint list (parents before children may not hold,
// so iterate until resolved) and returns world poses for links, joint
// origins and the four task frames.
export function forwardKinematics(desc: ModelDescriptor, q: number[]): SkeletonPose {
  if (q.length !== desc.dof) {
    throw new Error(`config length ${q.length} does not match dof ${desc.dof}`);
  }
  const links = new Map<string, LinkPose>();
  links.set(desc.root, { p: [0, 0, 0], q: [1, 0, 0, 0] });
  const joints: { name: string; origin: Vec3 }[] = [];
  let pending = desc.joints.map((j, index) => ({ j, index }));
  while (pending.length > 0) {
    const next = pending.filter(({ j }) => links.has(j.parent));
    if (next.length === 0) throw new Error("descriptor joint graph disconnected");
    for (const { j, index } of next) {
      const parent = links.get(j.parent)!;
      const originP = j.origin.p as Vec3;
      const rotated = quatRotate(parent.q, originP);
      const worldP: Vec3 = [parent.p[0] + rotated[0], parent.p[1] + rotated[1], parent.p[2] + rotated[2]];
      const worldQ = quatMultiply(parent.q, j.origin.q as Quat);
      const jointQ = quatNormalize(
        quatMultiply(worldQ, quatFromAxisAngle(j.axis as Vec3, q[index])),
      );
      links.set(j.child, { p: worldP, q: jointQ });
      joints.push({ name: j.name, origin: worldP });
    }
    const done = new Set(next.map(({ j }) => j.name));
    pending = pending.filter(({ j }) => !done.has(j.name));
  }
  const frames = new Map<string, Vec3>();
  for (const f of desc.frames) {
    const link = links.get(f.link);
    if (!link) throw new Error(`frame ${f.name} references unknown link ${f.link}`);
    const r = quatRotate(link.q, f.offset.p as Vec3);
    frames.set(f.name, [link.p[0] + r[0], link.p[1] + r[1], link.p[2] + r[2]]);
  }
  return { links, joints, frames };
}
