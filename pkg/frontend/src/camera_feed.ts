// Camera feed panel: renders the scene from the robot camera's pose and
// maps mouse gestures to protocol messages. Right-click sets a target,
// wheel zooms, drag orbits when a target is set (shifts otherwise), and
// while the annotation toolbox is open drags draw overlays instead.

import { CameraPose, Vec3, focalPixels, projectPoint, quatToMat } from "./math";
import { AnnotationShape, ClientMessage, SceneDoc, ShapeDoc, Snapshot } from "./types";

export interface FeedCallbacks {
  send: (msg: ClientMessage) => void;
  annotationDrawn?: (shape: AnnotationShape, points: number[][]) => void;
}

export interface StoredAnnotation {
  shape: AnnotationShape;
  points: number[][];
  mine: boolean;
}

const TARGET_DOT_COLOR = "#ff5252";
const BODY_COLOR = "#7e57c2";
const SHAPE_COLOR = "#4fc3f7";

export class CameraFeed {
  readonly canvas: HTMLCanvasElement;
  private ctx: CanvasRenderingContext2D;
  private scene: SceneDoc;
  private focal: number;
  private lastSnapshot: Snapshot | null = null;
  private callbacks: FeedCallbacks;
  annotations: StoredAnnotation[] = [];
  annotationMode: AnnotationShape | null = null;
  private dragStart: [number, number] | null = null;
  private dragLast: [number, number] | null = null;
  private arrowFlash: { du: number; dv: number; until: number } | null = null;
  connected = true;

  constructor(canvas: HTMLCanvasElement, scene: SceneDoc, callbacks: FeedCallbacks) {
    this.canvas = canvas;
    this.scene = scene;
    this.callbacks = callbacks;
    canvas.width = scene.intrinsics.width;
    canvas.height = scene.intrinsics.height;
    this.focal = focalPixels(scene.intrinsics.width, scene.intrinsics.hfov_deg);
    this.ctx = canvas.getContext("2d") as CanvasRenderingContext2D;
    this.bindInput();
  }

  private pixelOf(ev: MouseEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    const scaleX = this.canvas.width / (rect.width || this.canvas.width);
    const scaleY = this.canvas.height / (rect.height || this.canvas.height);
    return [(ev.clientX - rect.left) * scaleX, (ev.clientY - rect.top) * scaleY];
  }

  private bindInput(): void {
    this.canvas.addEventListener("contextmenu", (ev) => {
      ev.preventDefault();
      const [u, v] = this.pixelOf(ev);
      this.callbacks.send({ type: "set_target_pixel", u, v });
    });
    this.canvas.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      // wheel up = zoom in = positive magnitude along the optical axis
      const magnitude = -Math.sign(ev.deltaY);
      this.callbacks.send({ type: "adjust", kind: "zoom", magnitude });
    });
    this.canvas.addEventListener("mousedown", (ev) => {
      if (ev.button !== 0) return;
      this.dragStart = this.pixelOf(ev);
      this.dragLast = this.dragStart;
    });
    this.canvas.addEventListener("mousemove", (ev) => {
      if (!this.dragStart || !this.dragLast) return;
      const now = this.pixelOf(ev);
      if (this.annotationMode) {
        this.dragLast = now;
        return; // annotation geometry is emitted on mouseup
      }
      const du = now[0] - this.dragLast[0];
      const dv = now[1] - this.dragLast[1];
      this.dragLast = now;
      if (du === 0 && dv === 0) return;
      const px = Math.hypot(du, dv);
      // screen-right drag is +du; screen-up is -dv in canvas coordinates
      const dir: [number, number] = [du / px, -dv / px];
      const hasTarget = this.lastSnapshot?.mode_state.target != null;
      const magnitude = px / 200; // input units per 200 px of drag
      this.callbacks.send({
        type: "adjust",
        kind: hasTarget ? "orbit" : "shift",
        magnitude,
        direction: dir,
      });
      this.arrowFlash = { du: dir[0], dv: dir[1], until: Date.now() + 300 };
    });
    const finish = () => {
      if (this.annotationMode && this.dragStart && this.dragLast) {
        const pts = this.annotationGeometry(this.dragStart, this.dragLast);
        this.annotations.push({ shape: this.annotationMode, points: pts, mine: true });
        this.callbacks.send({ type: "annotation", shape: this.annotationMode, points: pts });
        this.callbacks.annotationDrawn?.(this.annotationMode, pts);
      }
      this.dragStart = null;
      this.dragLast = null;
    };
    this.canvas.addEventListener("mouseup", finish);
    this.canvas.addEventListener("mouseleave", finish);
  }

  private annotationGeometry(a: [number, number], b: [number, number]): number[][] {
    if (this.annotationMode === "pin") return [[b[0], b[1]]];
    return [[a[0], a[1]], [b[0], b[1]]];
  }

  addRemoteAnnotation(shape: AnnotationShape, points: number[][]): void {
    this.annotations.push({ shape, points, mine: false });
  }

  clearAnnotations(): void {
    this.annotations = [];
  }

  cameraPose(snapshot: Snapshot): CameraPose {
    return {
      position: snapshot.camera.position,
      rotation: quatToMat(snapshot.camera.quaternion),
    };
  }

  render(snapshot: Snapshot): number {
    this.lastSnapshot = snapshot;
    const ctx = this.ctx;
    const W = this.canvas.width;
    const H = this.canvas.height;
    let drawCalls = 0;
    ctx.fillStyle = this.connected ? "#10151c" : "#333";
    ctx.fillRect(0, 0, W, H);
    drawCalls++;

    const cam = this.cameraPose(snapshot);
    const proj = (p: Vec3) => projectPoint(p, cam, W, H, this.focal);

    drawCalls += this.drawGroundGrid(ctx, proj);
    for (const doc of this.scene.shapes) {
      drawCalls += this.drawShape(ctx, proj, doc, SHAPE_COLOR, cam);
    }
    for (const doc of snapshot.scene.body) {
      drawCalls += this.drawShape(ctx, proj, doc, BODY_COLOR, cam);
    }

    const target = snapshot.mode_state.target;
    if (target) {
      const pix = proj(target);
      if (pix) {
        ctx.fillStyle = TARGET_DOT_COLOR;
        ctx.beginPath();
        ctx.arc(pix[0], pix[1], 6, 0, 2 * Math.PI);
        ctx.fill();
        drawCalls++;
      }
    }
    if (this.arrowFlash && Date.now() < this.arrowFlash.until) {
      drawCalls += this.drawArrowOverlay(ctx, W, H);
    }
    drawCalls += this.drawAnnotations(ctx);
    drawCalls += this.drawBanners(ctx, snapshot, W);
    return drawCalls;
  }

  private drawGroundGrid(ctx: CanvasRenderingContext2D, proj: (p: Vec3) => number[] | null): number {
    let calls = 0;
    ctx.strokeStyle = "#233042";
    ctx.lineWidth = 1;
    for (let x = -1; x <= 13; x++) {
      const a = proj([x * 0.1, -0.9, 0]);
      const b = proj([x * 0.1, 0.9, 0]);
      if (a && b) {
        ctx.beginPath();
        ctx.moveTo(a[0], a[1]);
        ctx.lineTo(b[0], b[1]);
        ctx.stroke();
        calls++;
      }
    }
    for (let y = -9; y <= 9; y++) {
      const a = proj([-0.1, y * 0.1, 0]);
      const b = proj([1.3, y * 0.1, 0]);
      if (a && b) {
        ctx.beginPath();
        ctx.moveTo(a[0], a[1]);
        ctx.lineTo(b[0], b[1]);
        ctx.stroke();
        calls++;
      }
    }
    return calls;
  }

  private drawShape(
    ctx: CanvasRenderingContext2D,
    proj: (p: Vec3) => number[] | null,
    doc: ShapeDoc,
    color: string,
    cam: CameraPose,
  ): number {
    ctx.strokeStyle = color;
    ctx.lineWidth = 1.5;
    const pos = doc.position as Vec3;
    const R = quatToMat((doc.quaternion ?? [1, 0, 0, 0]) as [number, number, number, number]);
    if (doc.kind === "sphere") {
      const pix = proj(pos);
      if (!pix) return 0;
      const depth = pix[2];
      const r = ((doc.params.radius ?? 0.05) * this.focal) / depth;
      ctx.beginPath();
      ctx.arc(pix[0], pix[1], r, 0, 2 * Math.PI);
      ctx.stroke();
      return 1;
    }
    if (doc.kind === "capsule") {
      const h = doc.params.half_length ?? 0.1;
      const axis: Vec3 = [R[2], R[5], R[8]];
      const ends: Vec3[] = [
        [pos[0] - h * axis[0], pos[1] - h * axis[1], pos[2] - h * axis[2]],
        [pos[0] + h * axis[0], pos[1] + h * axis[1], pos[2] + h * axis[2]],
      ];
      let calls = 0;
      const pix: number[][] = [];
      for (const e of ends) {
        const p = proj(e);
        if (!p) return calls;
        pix.push(p);
        const r = ((doc.params.radius ?? 0.05) * this.focal) / p[2];
        ctx.beginPath();
        ctx.arc(p[0], p[1], r, 0, 2 * Math.PI);
        ctx.stroke();
        calls++;
      }
      ctx.beginPath();
      ctx.moveTo(pix[0][0], pix[0][1]);
      ctx.lineTo(pix[1][0], pix[1][1]);
      ctx.stroke();
      return calls + 1;
    }
    // cuboid: project the 8 corners, draw the 12 edges
    const he = doc.params.half_extents ?? [0.1, 0.1, 0.1];
    const corners: number[][] = [];
    for (const sx of [-1, 1]) for (const sy of [-1, 1]) for (const sz of [-1, 1]) {
      const local: Vec3 = [sx * he[0], sy * he[1], sz * he[2]];
      const world: Vec3 = [
        pos[0] + R[0] * local[0] + R[1] * local[1] + R[2] * local[2],
        pos[1] + R[3] * local[0] + R[4] * local[1] + R[5] * local[2],
        pos[2] + R[6] * local[0] + R[7] * local[1] + R[8] * local[2],
      ];
      const p = proj(world);
      if (!p) return 0;
      corners.push(p);
    }
    const edges = [
      [0, 1], [2, 3], [4, 5], [6, 7],
      [0, 2], [1, 3], [4, 6], [5, 7],
      [0, 4], [1, 5], [2, 6], [3, 7],
    ];
    ctx.beginPath();
    for (const [a, b] of edges) {
      ctx.moveTo(corners[a][0], corners[a][1]);
      ctx.lineTo(corners[b][0], corners[b][1]);
    }
    ctx.stroke();
    return 1;
  }

  private drawArrowOverlay(ctx: CanvasRenderingContext2D, W: number, H: number): number {
    if (!this.arrowFlash) return 0;
    const cx = W / 2;
    const cy = H / 2;
    const len = 60;
    const ex = cx + this.arrowFlash.du * len;
    const ey = cy - this.arrowFlash.dv * len;
    ctx.strokeStyle = "#ffd54f";
    ctx.lineWidth = 3;
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(ex, ey);
    ctx.stroke();
    return 1;
  }

  private drawAnnotations(ctx: CanvasRenderingContext2D): number {
    let calls = 0;
    for (const ann of this.annotations) {
      ctx.strokeStyle = ann.mine ? "#ffab40" : "#69f0ae";
      ctx.fillStyle = ctx.strokeStyle;
      ctx.lineWidth = 2;
      const pts = ann.points;
      if (ann.shape === "pin") {
        ctx.beginPath();
        ctx.arc(pts[0][0], pts[0][1], 5, 0, 2 * Math.PI);
        ctx.fill();
      } else if (ann.shape === "rectangle") {
        const [a, b] = pts;
        ctx.strokeRect(Math.min(a[0], b[0]), Math.min(a[1], b[1]),
          Math.abs(b[0] - a[0]), Math.abs(b[1] - a[1]));
      } else {
        const [a, b] = pts;
        ctx.beginPath();
        ctx.moveTo(a[0], a[1]);
        ctx.lineTo(b[0], b[1]);
        ctx.stroke();
        const angle = Math.atan2(b[1] - a[1], b[0] - a[0]);
        ctx.beginPath();
        ctx.moveTo(b[0], b[1]);
        ctx.lineTo(b[0] - 12 * Math.cos(angle - 0.4), b[1] - 12 * Math.sin(angle - 0.4));
        ctx.moveTo(b[0], b[1]);
        ctx.lineTo(b[0] - 12 * Math.cos(angle + 0.4), b[1] - 12 * Math.sin(angle + 0.4));
        ctx.stroke();
      }
      calls++;
    }
    return calls;
  }

  private drawBanners(ctx: CanvasRenderingContext2D, snapshot: Snapshot, W: number): number {
    let calls = 0;
    if (snapshot.mode_state.braked) {
      ctx.fillStyle = "rgba(229,57,53,0.85)";
      ctx.fillRect(0, 0, W, 36);
      ctx.fillStyle = "#fff";
      ctx.font = "20px sans-serif";
      ctx.fillText("EMERGENCY BRAKE - reset to recover", 16, 26);
      calls += 2;
    } else if (snapshot.mode_state.annotating) {
      ctx.fillStyle = "rgba(255,179,0,0.85)";
      ctx.fillRect(0, 0, W, 30);
      ctx.fillStyle = "#000";
      ctx.font = "16px sans-serif";
      ctx.fillText("MOTION FROZEN while annotating", 16, 22);
      calls += 2;
    }
    if (snapshot.mode_state.tracking_lost) {
      ctx.fillStyle = "rgba(255,112,67,0.85)";
      ctx.fillRect(0, 40, W, 26);
      ctx.fillStyle = "#000";
      ctx.font = "14px sans-serif";
      ctx.fillText("hand tracking lost", 16, 58);
      calls += 2;
    }
    if (!this.connected) {
      ctx.fillStyle = "rgba(0,0,0,0.6)";
      ctx.fillRect(0, 0, W, this.canvas.height);
      ctx.fillStyle = "#fff";
      ctx.font = "24px sans-serif";
      ctx.fillText("reconnecting...", W / 2 - 80, this.canvas.height / 2);
      calls += 2;
    }
    return calls;
  }
}
