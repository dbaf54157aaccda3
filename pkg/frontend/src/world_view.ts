// 3D workspace panel: an external orbitable view of the arm, the scene
// shapes, the body wrappers, and the camera frustum, drawn from engine
// ground truth. Worker consoles get joint drag handles that emit
// freedrive goals.

import { forwardKinematics } from "./kinematics";
import {
  CameraPose, Vec3, axisAngleMat, focalPixels, matMul, matVec, projectPoint,
} from "./math";
import { ClientMessage, Role, SceneDoc, Snapshot } from "./types";

export class WorldView {
  readonly canvas: HTMLCanvasElement;
  private ctx: CanvasRenderingContext2D;
  private scene: SceneDoc;
  private role: Role;
  private send: (msg: ClientMessage) => void;
  private focal: number;
  yaw = 0.7;
  pitch = 0.45;
  radius = 2.2;
  center: Vec3 = [0.45, 0.0, 0.25];
  private dragging = false;
  private dragJoint: number | null = null;
  private last: [number, number] | null = null;
  private lastSnapshot: Snapshot | null = null;

  constructor(canvas: HTMLCanvasElement, scene: SceneDoc, role: Role,
              send: (msg: ClientMessage) => void) {
    this.canvas = canvas;
    this.scene = scene;
    this.role = role;
    this.send = send;
    canvas.width = 640;
    canvas.height = 480;
    this.focal = focalPixels(canvas.width, 55);
    this.ctx = canvas.getContext("2d") as CanvasRenderingContext2D;
    this.bindInput();
  }

  viewPose(): CameraPose {
    const cy = Math.cos(this.yaw), sy = Math.sin(this.yaw);
    const cp = Math.cos(this.pitch), sp = Math.sin(this.pitch);
    const eye: Vec3 = [
      this.center[0] + this.radius * cp * cy,
      this.center[1] + this.radius * cp * sy,
      this.center[2] + this.radius * sp,
    ];
    // look-at rotation with columns [up-ish, left, forward]
    const fwd: Vec3 = [
      (this.center[0] - eye[0]) / this.radius,
      (this.center[1] - eye[1]) / this.radius,
      (this.center[2] - eye[2]) / this.radius,
    ];
    const worldUp: Vec3 = [0, 0, 1];
    const left: Vec3 = [
      worldUp[1] * fwd[2] - worldUp[2] * fwd[1],
      worldUp[2] * fwd[0] - worldUp[0] * fwd[2],
      worldUp[0] * fwd[1] - worldUp[1] * fwd[0],
    ];
    const ln = Math.hypot(left[0], left[1], left[2]) || 1;
    const l: Vec3 = [left[0] / ln, left[1] / ln, left[2] / ln];
    const up: Vec3 = [
      l[1] * fwd[2] - l[2] * fwd[1],
      l[2] * fwd[0] - l[0] * fwd[2],
      l[0] * fwd[1] - l[1] * fwd[0],
    ];
    return {
      position: eye,
      rotation: [up[0], l[0], fwd[0], up[1], l[1], fwd[1], up[2], l[2], fwd[2]],
    };
  }

  private pixelOf(ev: MouseEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    const sx = this.canvas.width / (rect.width || this.canvas.width);
    const sy = this.canvas.height / (rect.height || this.canvas.height);
    return [(ev.clientX - rect.left) * sx, (ev.clientY - rect.top) * sy];
  }

  private bindInput(): void {
    this.canvas.addEventListener("mousedown", (ev) => {
      const pix = this.pixelOf(ev);
      this.dragJoint = this.role === "worker" ? this.hitJoint(pix) : null;
      this.dragging = this.dragJoint === null;
      this.last = pix;
    });
    this.canvas.addEventListener("mousemove", (ev) => {
      if (!this.last) return;
      const now = this.pixelOf(ev);
      const du = now[0] - this.last[0];
      const dv = now[1] - this.last[1];
      this.last = now;
      if (this.dragJoint !== null && this.lastSnapshot) {
        // stand-in for physically pushing the arm: dragging a joint handle
        // nudges that joint in a freedrive goal
        const q = [...this.lastSnapshot.q];
        q[this.dragJoint] += du * 0.005;
        this.send({ type: "freedrive_goal", q });
        return;
      }
      if (this.dragging) {
        this.yaw -= du * 0.008;
        this.pitch = Math.min(1.4, Math.max(-0.2, this.pitch + dv * 0.008));
      }
    });
    const stop = () => {
      this.dragging = false;
      this.dragJoint = null;
      this.last = null;
    };
    this.canvas.addEventListener("mouseup", stop);
    this.canvas.addEventListener("mouseleave", stop);
    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      this.radius = Math.min(5, Math.max(0.7, this.radius + Math.sign(ev.deltaY) * 0.2));
    });
  }

  private jointPixels(): number[][] {
    if (!this.lastSnapshot) return [];
    const frames = forwardKinematics(this.scene, this.lastSnapshot.q);
    const view = this.viewPose();
    const out: number[][] = [];
    for (const o of frames.origins) {
      const p = projectPoint(o, view, this.canvas.width, this.canvas.height, this.focal);
      out.push(p ? [p[0], p[1]] : [-1e6, -1e6]);
    }
    return out;
  }

  private hitJoint(pix: [number, number]): number | null {
    const joints = this.jointPixels();
    for (let i = 0; i < joints.length; i++) {
      if (Math.hypot(joints[i][0] - pix[0], joints[i][1] - pix[1]) < 14) return i;
    }
    return null;
  }

  render(snapshot: Snapshot): number {
    this.lastSnapshot = snapshot;
    const ctx = this.ctx;
    const W = this.canvas.width;
    const H = this.canvas.height;
    let calls = 0;
    ctx.fillStyle = "#151a21";
    ctx.fillRect(0, 0, W, H);
    calls++;

    const view = this.viewPose();
    const proj = (p: Vec3) => projectPoint(p, view, W, H, this.focal);

    // scene shapes and body wrappers share the feed's primitive outlines
    ctx.strokeStyle = "#39546e";
    for (const doc of this.scene.shapes) {
      calls += this.outline(ctx, proj, doc);
    }
    ctx.strokeStyle = "#7e57c2";
    for (const doc of snapshot.scene.body) {
      calls += this.outline(ctx, proj, doc);
    }

    // the arm as a polyline over link origins, joints as handles
    const frames = forwardKinematics(this.scene, snapshot.q);
    const pts = frames.origins
      .map((o) => proj(o))
      .filter((p): p is [number, number, number] => p !== null);
    if (pts.length >= 2) {
      ctx.strokeStyle = "#eceff1";
      ctx.lineWidth = 4;
      ctx.beginPath();
      ctx.moveTo(pts[0][0], pts[0][1]);
      for (const p of pts.slice(1)) ctx.lineTo(p[0], p[1]);
      ctx.stroke();
      calls++;
      ctx.fillStyle = this.role === "worker" ? "#ffca28" : "#90a4ae";
      for (const p of pts) {
        ctx.beginPath();
        ctx.arc(p[0], p[1], 6, 0, 2 * Math.PI);
        ctx.fill();
        calls++;
      }
    }

    // camera frustum glyph at the camera pose
    const camPix = proj(frames.camera.position);
    if (camPix) {
      const fwd: Vec3 = [frames.camera.rotation[2], frames.camera.rotation[5],
        frames.camera.rotation[8]];
      const tip = proj([
        frames.camera.position[0] + 0.18 * fwd[0],
        frames.camera.position[1] + 0.18 * fwd[1],
        frames.camera.position[2] + 0.18 * fwd[2],
      ]);
      ctx.strokeStyle = "#4fc3f7";
      ctx.lineWidth = 2;
      ctx.strokeRect(camPix[0] - 7, camPix[1] - 5, 14, 10);
      calls++;
      if (tip) {
        ctx.beginPath();
        ctx.moveTo(camPix[0], camPix[1]);
        ctx.lineTo(tip[0], tip[1]);
        ctx.stroke();
        calls++;
      }
    }

    const target = snapshot.mode_state.target;
    if (target) {
      const t = proj(target);
      if (t) {
        ctx.fillStyle = "#ff5252";
        ctx.beginPath();
        ctx.arc(t[0], t[1], 5, 0, 2 * Math.PI);
        ctx.fill();
        calls++;
      }
    }

    if (snapshot.mode_state.braked) {
      ctx.fillStyle = "rgba(229,57,53,0.85)";
      ctx.fillRect(0, 0, W, 30);
      ctx.fillStyle = "#fff";
      ctx.font = "16px sans-serif";
      ctx.fillText("BRAKED", 12, 21);
      calls += 2;
    }
    return calls;
  }

  private outline(ctx: CanvasRenderingContext2D,
                  proj: (p: Vec3) => number[] | null, doc: SceneDoc["shapes"][0]): number {
    const pos = doc.position as Vec3;
    if (doc.kind === "sphere") {
      const p = proj(pos);
      if (!p) return 0;
      ctx.beginPath();
      ctx.arc(p[0], p[1], ((doc.params.radius ?? 0.05) * this.focal) / p[2], 0, 2 * Math.PI);
      ctx.stroke();
      return 1;
    }
    if (doc.kind === "capsule") {
      const p = proj(pos);
      if (!p) return 0;
      ctx.beginPath();
      ctx.arc(p[0], p[1], ((doc.params.radius ?? 0.05) * this.focal) / p[2], 0, 2 * Math.PI);
      ctx.stroke();
      return 1;
    }
    const he = doc.params.half_extents ?? [0.1, 0.1, 0.1];
    const q = (doc.quaternion ?? [1, 0, 0, 0]) as [number, number, number, number];
    const R = matMul(axisAngleMat([0, 0, 1], 0), [
      1 - 2 * (q[2] * q[2] + q[3] * q[3]), 2 * (q[1] * q[2] - q[0] * q[3]), 2 * (q[1] * q[3] + q[0] * q[2]),
      2 * (q[1] * q[2] + q[0] * q[3]), 1 - 2 * (q[1] * q[1] + q[3] * q[3]), 2 * (q[2] * q[3] - q[0] * q[1]),
      2 * (q[1] * q[3] - q[0] * q[2]), 2 * (q[2] * q[3] + q[0] * q[1]), 1 - 2 * (q[1] * q[1] + q[2] * q[2]),
    ]);
    const corners: number[][] = [];
    for (const sx of [-1, 1]) for (const sy of [-1, 1]) for (const sz of [-1, 1]) {
      const w = matVec(R, [sx * he[0], sy * he[1], sz * he[2]]);
      const p = proj([pos[0] + w[0], pos[1] + w[1], pos[2] + w[2]]);
      if (!p) return 0;
      corners.push(p);
    }
    const edges = [[0, 1], [2, 3], [4, 5], [6, 7], [0, 2], [1, 3], [4, 6], [5, 7],
      [0, 4], [1, 5], [2, 6], [3, 7]];
    ctx.beginPath();
    for (const [a, b] of edges) {
      ctx.moveTo(corners[a][0], corners[a][1]);
      ctx.lineTo(corners[b][0], corners[b][1]);
    }
    ctx.stroke();
    return 1;
  }
}
