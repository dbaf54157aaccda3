// Minimal forward kinematics over the scene document's joint list, used by
// the 3D view to place the arm's links from a snapshot's q.

import { axisAngleMat, matMul, matVec, quatToMat, vadd, Mat3, Vec3 } from "./math";
import { SceneDoc, SceneJoint } from "./types";

function jointTransform(j: SceneJoint): { p: Vec3; R: Mat3 } {
  if (j.transform && j.transform.length === 16) {
    const t = j.transform;
    return {
      p: [t[3], t[7], t[11]],
      R: [t[0], t[1], t[2], t[4], t[5], t[6], t[8], t[9], t[10]],
    };
  }
  const p = (j.position ?? [0, 0, 0]) as Vec3;
  const q = (j.quaternion ?? [1, 0, 0, 0]) as [number, number, number, number];
  return { p, R: quatToMat(q) };
}

export interface LinkFrames {
  origins: Vec3[]; // world position of each link frame (n entries)
  camera: { position: Vec3; rotation: Mat3 };
}

export function forwardKinematics(scene: SceneDoc, q: number[]): LinkFrames {
  let R: Mat3 = [1, 0, 0, 0, 1, 0, 0, 0, 1];
  let p: Vec3 = [0, 0, 0];
  const origins: Vec3[] = [];
  scene.robot.joints.forEach((joint, i) => {
    const fixed = jointTransform(joint);
    p = vadd(p, matVec(R, fixed.p));
    R = matMul(R, fixed.R);
    origins.push(p);
    const axis = joint.axis as Vec3;
    R = matMul(R, axisAngleMat(axis, q[i] ?? 0));
  });
  const mount = scene.robot.camera_mount ?? {};
  const mp = (mount.position ?? [0, 0, 0]) as Vec3;
  const mq = (mount.quaternion ?? [1, 0, 0, 0]) as [number, number, number, number];
  const camPos = vadd(p, matVec(R, mp));
  const camRot = matMul(R, quatToMat(mq));
  return { origins, camera: { position: camPos, rotation: camRot } };
}
