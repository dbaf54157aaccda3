// Wire protocol and snapshot shapes (mirrors docs/protocol.md).

export type Role = "helper" | "worker";

export type AdjustKind = "zoom" | "orbit" | "shift";
export type AnnotationShape = "pin" | "rectangle" | "arrow";
export type ModeName = "helper_led" | "robot_led" | "worker_led";

export type ClientMessage =
  | { type: "set_target_pixel"; u: number; v: number }
  | { type: "set_target_3d"; position: [number, number, number] }
  | { type: "adjust"; kind: AdjustKind; magnitude: number; direction?: [number, number] }
  | { type: "reset" }
  | { type: "mode_select"; mode: ModeName }
  | { type: "annotate_begin" }
  | { type: "annotate_end" }
  | { type: "annotation"; shape: AnnotationShape; points: number[][] }
  | { type: "point_slider"; enabled: boolean }
  | { type: "freedrive_goal"; q: number[] };

export interface ModeStateSummary {
  mode: ModeName;
  target: [number, number, number] | null;
  standoff: number | null;
  orbit_distance: number | null;
  annotating: boolean;
  braked: boolean;
  pointing_enabled: boolean;
  pointing_detected: boolean;
  freedrive_active: boolean;
  reset_active: boolean;
  tracking_lost: boolean;
}

export interface ShapeDoc {
  id: string | null;
  kind: "sphere" | "capsule" | "cuboid";
  params: { radius?: number; half_length?: number; half_extents?: number[] };
  position: number[];
  quaternion: number[];
}

export interface Snapshot {
  tick: number;
  sim_time: number;
  q: number[];
  camera: { position: [number, number, number]; quaternion: [number, number, number, number] };
  mode_state: ModeStateSummary;
  command: string;
  scene: { objects: Record<string, { position: number[] }>; body: ShapeDoc[] };
  perception: { hand_visible: boolean; pointing_detected: boolean; body_visible: boolean };
  solver: {
    iterations: number;
    objective: number;
    converged: boolean;
    in_collision: boolean;
    min_self_distance: number | null;
    min_env_distance: number | null;
  };
  diagnostics: { severity: string; message: string }[];
}

export type ServerMessage =
  | { type: "snapshot"; data: Snapshot }
  | { type: "ack"; kind: string }
  | { type: "error"; message: string }
  | { type: "annotation"; from: Role; data: { shape: AnnotationShape; points: number[][] } };

export interface Intrinsics {
  width: number;
  height: number;
  hfov_deg: number;
}

export interface SceneJoint {
  axis: number[];
  position?: number[];
  quaternion?: number[];
  transform?: number[];
}

export interface SceneDoc {
  robot: {
    joints: SceneJoint[];
    camera_mount?: { position?: number[]; quaternion?: number[] };
    link_wrappers?: object[];
  };
  reset_config: number[];
  intrinsics: Intrinsics;
  shapes: (ShapeDoc & { dynamic?: boolean })[];
}
