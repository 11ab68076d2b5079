// Playground entry point: wires the socket client, 3-D scene, drag
// handling and the parameter panel together. Configuration via URL query
// params: ?service=ws://host:port/ws&rate=60

import * as THREE from "three";
import { TeleopClient } from "./client.js";
import { forwardKinematics } from "./fk.js";
import { Panel } from "./panel.js";
import { Debouncer } from "./rate.js";
import { GizmoSet, SkeletonView } from "./scene.js";
import type { FrameName, FramesPayload, HelloMsg } from "./protocol.js";

const params = new URLSearchParams(location.search);
const serviceUrl = params.get("service") ?? `ws://${location.hostname || "127.0.0.1"}:8000/ws`;
const sendRate = Number(params.get("rate") ?? "60");

const canvas = document.getElementById("view") as HTMLCanvasElement;
const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
const scene = new THREE.Scene();
scene.background = new THREE.Color(0x10141a);
const camera = new THREE.PerspectiveCamera(45, 1, 0.001, 10);

// Minimal orbit: drag empty space rotates, wheel zooms.
const orbit = { azimuth: 0.9, elevation: 0.5, radius: 0.45, target: new THREE.Vector3(0, 0.08, 0) };
function applyOrbit(): void {
  const { azimuth, elevation, radius, target } = orbit;
  camera.position.set(
    target.x + radius * Math.cos(elevation) * Math.sin(azimuth),
    target.y + radius * Math.sin(elevation),
    target.z + radius * Math.cos(elevation) * Math.cos(azimuth),
  );
  camera.lookAt(target);
}
applyOrbit();

function resize(): void {
  const w = canvas.clientWidth || canvas.parentElement!.clientWidth;
  const h = canvas.clientHeight || canvas.parentElement!.clientHeight;
  renderer.setSize(w, h, false);
  camera.aspect = w / h;
  camera.updateProjectionMatrix();
}
window.addEventListener("resize", resize);

let skeleton: SkeletonView | null = null;
let gizmos: GizmoSet | null = null;

const panel = new Panel(document.getElementById("panel")!, {
  onAlpha: (value) => alphaDebounce.submit(value),
  onHumanScale: (value) => scaleDebounce.submit(value),
  onReconnect: () => client.reconnect(),
});

const alphaDebounce = new Debouncer<number>(150, (alpha) => client.setParams({ alpha }));
const scaleDebounce = new Debouncer<number>(150, (human_scale) => client.setParams({ human_scale }));

const client = new TeleopClient(
  { url: serviceUrl, sendRatePerSecond: sendRate },
  {
    status: (status, detail) => {
      panel.setStatus(detail ? `${status}: ${detail}` : status, status === "connected");
      if (status === "closed" || status === "error") {
        setTimeout(() => client.status !== "connected" && client.reconnect(), 2000);
      }
    },
    hello: (msg) => onHello(msg),
    state: (msg) => panel.showState(msg),
    ack: (ackParams) => panel.applyAck(ackParams),
    protocolError: (message) => panel.revertWithToast(message),
  },
);

function onHello(msg: HelloMsg): void {
  if (skeleton) scene.remove(skeleton.group);
  if (gizmos) scene.remove(gizmos.group);
  skeleton = new SkeletonView(msg.model_descriptor);
  scene.add(skeleton.group);
  // Start the trackers at the robot's zero-config frame positions so the
  // initial objective is ~0.
  const zero = forwardKinematics(msg.model_descriptor, new Array(msg.model_descriptor.dof).fill(0));
  const frames = Object.fromEntries(
    msg.model_descriptor.frames.map((f) => {
      const p = zero.frames.get(f.name)!;
      return [f.name, { p: [p[0], p[1], p[2]], q: [1, 0, 0, 0] }];
    }),
  ) as unknown as FramesPayload;
  gizmos = new GizmoSet(frames);
  scene.add(gizmos.group);
  client.setFrames(frames);
  panel.applyAck(msg.defaults);
  resize();
}

// Pointer interaction: raycast gizmos; hit -> drag that frame in a
// camera-parallel plane; miss -> orbit the camera.
const raycaster = new THREE.Raycaster();
const pointer = new THREE.Vector2();
let dragging: { frame: FrameName; plane: THREE.Plane; offset: THREE.Vector3 } | null = null;
let orbiting: { x: number; y: number } | null = null;

function pointerRay(ev: PointerEvent): void {
  const rect = canvas.getBoundingClientRect();
  pointer.x = ((ev.clientX - rect.left) / rect.width) * 2 - 1;
  pointer.y = -((ev.clientY - rect.top) / rect.height) * 2 + 1;
  raycaster.setFromCamera(pointer, camera);
}

canvas.addEventListener("pointerdown", (ev) => {
  if (!gizmos) return;
  pointerRay(ev);
  const hits = raycaster.intersectObjects(gizmos.handleMeshes());
  if (hits.length > 0) {
    const mesh = hits[0].object as THREE.Mesh;
    const frame = mesh.userData.frameName as FrameName;
    const normal = new THREE.Vector3();
    camera.getWorldDirection(normal);
    const plane = new THREE.Plane().setFromNormalAndCoplanarPoint(normal, mesh.position);
    dragging = { frame, plane, offset: mesh.position.clone().sub(hits[0].point) };
    canvas.setPointerCapture(ev.pointerId);
  } else {
    orbiting = { x: ev.clientX, y: ev.clientY };
  }
});

canvas.addEventListener("pointermove", (ev) => {
  if (dragging && gizmos) {
    pointerRay(ev);
    const hit = new THREE.Vector3();
    if (raycaster.ray.intersectPlane(dragging.plane, hit)) {
      const p = hit.add(dragging.offset);
      gizmos.setPosition(dragging.frame, [p.x, p.y, p.z]);
      client.dragFrame(dragging.frame, gizmos.pose(dragging.frame));
    }
  } else if (orbiting) {
    orbit.azimuth -= (ev.clientX - orbiting.x) * 0.01;
    orbit.elevation = Math.min(Math.max(orbit.elevation + (ev.clientY - orbiting.y) * 0.01, -1.4), 1.4);
    orbiting = { x: ev.clientX, y: ev.clientY };
    applyOrbit();
  }
});

canvas.addEventListener("pointerup", () => {
  dragging = null;
  orbiting = null;
});

canvas.addEventListener("wheel", (ev) => {
  orbit.radius = Math.min(Math.max(orbit.radius * (1 + ev.deltaY * 0.001), 0.05), 3.0);
  applyOrbit();
  ev.preventDefault();
});

function animate(): void {
  requestAnimationFrame(animate);
  // Latest-value cell: rendering reads the last applied joint_state.
  if (skeleton && client.latestState) {
    skeleton.update(client.latestState.q);
  }
  renderer.render(scene, camera);
}

resize();
animate();
client.connect();
