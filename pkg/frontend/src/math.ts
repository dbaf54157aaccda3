// Vector, quaternion, and pinhole camera math. Conventions mirror the
// engine: quaternions are scalar-first (w, x, y, z); the camera frame is
// +z forward, +y left, +x up; image u grows rightward, v downward.

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number];
export type Mat3 = number[]; // row-major, 9 entries

export function vadd(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function vsub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function vscale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function vnorm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

export function quatToMat(q: Quat): Mat3 {
  const [w, x, y, z] = q;
  const xx = x * x, yy = y * y, zz = z * z;
  const xy = x * y, xz = x * z, yz = y * z;
  const wx = w * x, wy = w * y, wz = w * z;
  return [
    1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),
    2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),
    2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy),
  ];
}

export function matMul(a: Mat3, b: Mat3): Mat3 {
  const out = new Array(9).fill(0);
  for (let i = 0; i < 3; i++)
    for (let j = 0; j < 3; j++)
      for (let k = 0; k < 3; k++) out[3 * i + j] += a[3 * i + k] * b[3 * k + j];
  return out;
}

export function matVec(m: Mat3, v: Vec3): Vec3 {
  return [
    m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
    m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
    m[6] * v[0] + m[7] * v[1] + m[8] * v[2],
  ];
}

export function matTVec(m: Mat3, v: Vec3): Vec3 {
  return [
    m[0] * v[0] + m[3] * v[1] + m[6] * v[2],
    m[1] * v[0] + m[4] * v[1] + m[7] * v[2],
    m[2] * v[0] + m[5] * v[1] + m[8] * v[2],
  ];
}

export function axisAngleMat(axis: Vec3, angle: number): Mat3 {
  const [x, y, z] = axis;
  const c = Math.cos(angle), s = Math.sin(angle), C = 1 - c;
  return [
    c + x * x * C, x * y * C - z * s, x * z * C + y * s,
    y * x * C + z * s, c + y * y * C, y * z * C - x * s,
    z * x * C - y * s, z * y * C + x * s, c + z * z * C,
  ];
}

export interface CameraPose {
  position: Vec3;
  rotation: Mat3;
}

export function focalPixels(widthPx: number, hfovDeg: number): number {
  return widthPx / (2 * Math.tan((hfovDeg * Math.PI) / 360));
}

// World point -> pixel, or null when at/behind the camera plane.
export function projectPoint(
  world: Vec3,
  cam: CameraPose,
  width: number,
  height: number,
  focal: number,
): [number, number, number] | null {
  const rel = vsub(world, cam.position);
  const p = matTVec(cam.rotation, rel); // camera frame: x up, y left, z fwd
  if (p[2] <= 1e-9) return null;
  const u = width / 2 - (focal * p[1]) / p[2];
  const v = height / 2 - (focal * p[0]) / p[2];
  return [u, v, p[2]];
}

// Pixel -> unit ray direction in the world frame.
export function backProject(
  u: number,
  v: number,
  cam: CameraPose,
  width: number,
  height: number,
  focal: number,
): Vec3 {
  const d: Vec3 = [(height / 2 - v) / focal, (width / 2 - u) / focal, 1];
  const n = vnorm(d);
  return matVec(cam.rotation, [d[0] / n, d[1] / n, d[2] / n]);
}

export function cameraAxes(rotation: Mat3): { forward: Vec3; left: Vec3; up: Vec3 } {
  return {
    forward: [rotation[2], rotation[5], rotation[8]],
    left: [rotation[1], rotation[4], rotation[7]],
    up: [rotation[0], rotation[3], rotation[6]],
  };
}
