// 3-D scene objects: robot skeleton (line segments + joint spheres) built
// from the model descriptor, and draggable tracker gizmos for the four
// human frames. Pure scene-graph code; the renderer lives in main.ts so
// everything here also runs headless.

import * as THREE from "three";
import { forwardKinematics } from "./fk.js";
import { FRAME_NAMES, type FrameName, type FramesPayload, type ModelDescriptor, type PosePayload } from "./protocol.js";

const BONE_COLOR = 0x4a90d9;
const JOINT_COLOR = 0xf5a623;
const TIP_COLOR = 0x7ed321;
const GIZMO_COLORS: Record<FrameName, number> = {
  palm: 0xffffff,
  thumb_tip: 0xe74c3c,
  index_tip: 0x2ecc71,
  middle_tip: 0x9b59b6,
};

export class SkeletonView {
  readonly group = new THREE.Group();
  private bones = new Map<string, THREE.Line>();
  private jointSpheres = new Map<string, THREE.Mesh>();
  private frameMarkers = new Map<string, THREE.Mesh>();

  constructor(private readonly descriptor: ModelDescriptor) {
    const jointGeo = new THREE.SphereGeometry(0.004, 12, 12);
    const jointMat = new THREE.MeshBasicMaterial({ color: JOINT_COLOR });
    for (const j of descriptor.joints) {
      const line = new THREE.Line(
        new THREE.BufferGeometry().setFromPoints([new THREE.Vector3(), new THREE.Vector3()]),
        new THREE.LineBasicMaterial({ color: BONE_COLOR }),
      );
      this.bones.set(j.name, line);
      this.group.add(line);
      const sphere = new THREE.Mesh(jointGeo, jointMat);
      this.jointSpheres.set(j.name, sphere);
      this.group.add(sphere);
    }
    const tipGeo = new THREE.SphereGeometry(0.003, 10, 10);
    const tipMat = new THREE.MeshBasicMaterial({ color: TIP_COLOR });
    for (const f of descriptor.frames) {
      const marker = new THREE.Mesh(tipGeo, tipMat);
      this.frameMarkers.set(f.name, marker);
      this.group.add(marker);
      const line = new THREE.Line(
        new THREE.BufferGeometry().setFromPoints([new THREE.Vector3(), new THREE.Vector3()]),
        new THREE.LineBasicMaterial({ color: TIP_COLOR }),
      );
      this.bones.set(`frame:${f.name}`, line);
      this.group.add(line);
    }
    this.update(new Array(descriptor.dof).fill(0));
  }

  /** Re-pose every bone and marker from a joint configuration. */
  update(q: number[]): void {
    const pose = forwardKinematics(this.descriptor, q);
    for (const j of this.descriptor.joints) {
      const parent = pose.links.get(j.parent)!;
      const child = pose.links.get(j.child)!;
      const line = this.bones.get(j.name)!;
      const positions = line.geometry.getAttribute("position") as THREE.BufferAttribute;
      positions.setXYZ(0, parent.p[0], parent.p[1], parent.p[2]);
      positions.setXYZ(1, child.p[0], child.p[1], child.p[2]);
      positions.needsUpdate = true;
      this.jointSpheres.get(j.name)!.position.set(child.p[0], child.p[1], child.p[2]);
    }
    for (const f of this.descriptor.frames) {
      const tip = pose.frames.get(f.name)!;
      const link = pose.links.get(f.link)!;
      this.frameMarkers.get(f.name)!.position.set(tip[0], tip[1], tip[2]);
      const line = this.bones.get(`frame:${f.name}`)!;
      const positions = line.geometry.getAttribute("position") as THREE.BufferAttribute;
      positions.setXYZ(0, link.p[0], link.p[1], link.p[2]);
      positions.setXYZ(1, tip[0], tip[1], tip[2]);
      positions.needsUpdate = true;
    }
  }

  markerPosition(frame: string): THREE.Vector3 {
    return this.frameMarkers.get(frame)!.position.clone();
  }
}

export class GizmoSet {
  readonly group = new THREE.Group();
  private readonly handles = new Map<FrameName, THREE.Mesh>();
  private readonly quats = new Map<FrameName, [number, number, number, number]>();

  constructor(initial: FramesPayload) {
    for (const name of FRAME_NAMES) {
      const mesh = new THREE.Mesh(
        new THREE.SphereGeometry(0.006, 16, 16),
        new THREE.MeshBasicMaterial({ color: GIZMO_COLORS[name], transparent: true, opacity: 0.75 }),
      );
      const pose = initial[name];
      mesh.position.set(pose.p[0], pose.p[1], pose.p[2]);
      mesh.userData.frameName = name;
      this.handles.set(name, mesh);
      this.quats.set(name, [...pose.q]);
      this.group.add(mesh);
    }
  }

  handleMeshes(): THREE.Mesh[] {
    return [...this.handles.values()];
  }

  setPosition(name: FrameName, p: [number, number, number]): void {
    this.handles.get(name)!.position.set(p[0], p[1], p[2]);
  }

  pose(name: FrameName): PosePayload {
    const pos = this.handles.get(name)!.position;
    // Rotation handles are intentionally absent: task-space vectors ignore
    // orientation, so the stored quaternion passes through unchanged.
    return { p: [pos.x, pos.y, pos.z], q: [...this.quats.get(name)!] };
  }

  poses(): FramesPayload {
    return {
      palm: this.pose("palm"),
      thumb_tip: this.pose("thumb_tip"),
      index_tip: this.pose("index_tip"),
      middle_tip: this.pose("middle_tip"),
    };
  }
}
