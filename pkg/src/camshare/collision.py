"""Batched link/environment proximity queries for the collision objectives.

One CollisionWorld is assembled per control tick (environment shapes and
body wrappers are frozen for the duration of a solve) and evaluated many
times as the solver iterates. All pair distances run as vectorized array
ops grouped by core type (point, segment, box); witness points feed the
analytic distance gradients.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import KinematicState, RobotModel
from .shapes import (Capsule, Cuboid, PlacedShape, Sphere, distance_report,
                     segment_box_distance_batch)


def cross_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cross product without np.cross's axis-juggling overhead."""
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    out[..., 0] = a1 * b2 - a2 * b1
    out[..., 1] = a2 * b0 - a0 * b2
    out[..., 2] = a0 * b1 - a1 * b0
    return out


def segment_segment_batch(p1, q1, p2, q2):
    """Vectorized closest points between segment batches (Ericson)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = np.sum(d1 * d1, axis=1)
    e = np.sum(d2 * d2, axis=1)
    f = np.sum(d2 * r, axis=1)
    c = np.sum(d1 * r, axis=1)
    b = np.sum(d1 * d2, axis=1)
    a_safe = np.where(a > 1e-18, a, 1.0)
    e_safe = np.where(e > 1e-18, e, 1.0)
    denom = a * e - b * b
    s = np.where(denom > 1e-18,
                 np.clip((b * f - c * e) / np.where(denom > 1e-18, denom, 1.0), 0.0, 1.0),
                 0.0)
    t = (b * s + f) / e_safe
    t_low = t < 0.0
    t_high = t > 1.0
    t = np.clip(t, 0.0, 1.0)
    s = np.where(t_low, np.clip(-c / a_safe, 0.0, 1.0), s)
    s = np.where(t_high, np.clip((b - c) / a_safe, 0.0, 1.0), s)
    s = np.where(e > 1e-18, s, np.clip(-c / a_safe, 0.0, 1.0))
    t = np.where(e > 1e-18, t, 0.0)
    s = np.where(a > 1e-18, s, 0.0)
    w1 = p1 + s[:, None] * d1
    w2 = p2 + t[:, None] * d2
    return w1, w2


def point_segment_batch(p, a, b):
    u = b - a
    uu = np.sum(u * u, axis=1)
    t = np.where(uu > 1e-18, np.sum((p - a) * u, axis=1) / np.where(uu > 1e-18, uu, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return a + t[:, None] * u


@dataclass
class CollisionSummary:
    chi_self: float
    chi_env: float
    grad_self: np.ndarray | None
    grad_env: np.ndarray | None
    min_self_distance: float
    min_env_distance: float
    in_collision: bool


class CollisionWorld:
    """Pairwise link-link and link-environment distance evaluator.

    Wrapper order follows ascending link index; self-collision pairs skip
    adjacent wrappers (the double sum starts at j = i + 2, since joined
    neighbors always sit near contact).
    """

    def __init__(self, model: RobotModel, env_shapes: list[PlacedShape],
                 epsilon: float, dist_floor: float):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.epsilon = epsilon
        self.dist_floor = dist_floor
        self.scale = (5.0 * epsilon) ** 2

        wrappers = sorted(model.link_wrappers, key=lambda w: w.link)
        self.wrapper_links = np.array([w.link for w in wrappers], dtype=int)
        self.w_offset_pos = np.array([w.offset_position for w in wrappers]).reshape(-1, 3)
        self.w_local_axis = np.array([w.offset_rotation[:, 2] for w in wrappers]).reshape(-1, 3)
        self.w_radius = np.array([getattr(w.shape, "radius", 0.0) for w in wrappers])
        self.w_half = np.array([getattr(w.shape, "half_length", 0.0) for w in wrappers])
        self.w_is_seg = np.array([isinstance(w.shape, Capsule) for w in wrappers])
        for w in wrappers:
            if isinstance(w.shape, Cuboid):
                raise ValueError("cuboid link wrappers are not supported by the "
                                 "batched collision path; wrap links in spheres "
                                 "or capsules")
        self.m = len(wrappers)

        self.self_pairs = [(i, j) for i in range(self.m - 2)
                           for j in range(i + 2, self.m)]

        # environment spheres and capsules merge into one segment table
        # (spheres are zero-length segments); cuboids get their own batch
        seg_p1, seg_p2, seg_r = [], [], []
        boxes = []
        for s in env_shapes:
            if isinstance(s.shape, Sphere):
                seg_p1.append(s.position)
                seg_p2.append(s.position)
                seg_r.append(s.shape.radius)
            elif isinstance(s.shape, Capsule):
                axis = s.rotation[:, 2]
                seg_p1.append(s.position - s.shape.half_length * axis)
                seg_p2.append(s.position + s.shape.half_length * axis)
                seg_r.append(s.shape.radius)
            else:
                boxes.append(s)
        self.env_seg_p1 = np.array(seg_p1).reshape(-1, 3)
        self.env_seg_p2 = np.array(seg_p2).reshape(-1, 3)
        self.env_seg_radius = np.array(seg_r)
        self.eb_rot = np.array([s.rotation for s in boxes]).reshape(-1, 3, 3)
        self.eb_pos = np.array([s.position for s in boxes]).reshape(-1, 3)
        self.eb_half = np.array([s.shape.half_extents for s in boxes]).reshape(-1, 3)
        self._build_pair_tables()
        if not self.env_seg_radius.size:
            # dummy row so fancy indexing stays valid when only self pairs exist
            self.env_seg_p1 = np.zeros((1, 3))
            self.env_seg_p2 = np.zeros((1, 3))
            self.env_seg_radius = np.zeros(1)

    def _place(self, state: KinematicState):
        Rl = state.link_rotations[self.wrapper_links]
        pl = state.link_positions[self.wrapper_links]
        centers = pl + np.einsum("wij,wj->wi", Rl, self.w_offset_pos)
        axes = np.einsum("wij,wj->wi", Rl, self.w_local_axis)
        seg_a = centers - self.w_half[:, None] * axes
        seg_b = centers + self.w_half[:, None] * axes
        return centers, seg_a, seg_b

    def _build_pair_tables(self):
        """Flatten all pairs into two batches: segment-segment (spheres and
        points ride along as zero-length segments) and segment-box."""
        ss_a: list[int] = []          # wrapper index, side A
        ss_b_wrapper: list[int] = []  # wrapper index for self pairs, -1 for env
        ss_b_seg: list[int] = []      # env segment index for env pairs, -1 otherwise
        for i, j in self.self_pairs:
            ss_a.append(i)
            ss_b_wrapper.append(j)
            ss_b_seg.append(-1)
        n_env_seg = self.env_seg_p1.shape[0]
        for w in range(self.m):
            for e in range(n_env_seg):
                ss_a.append(w)
                ss_b_wrapper.append(-1)
                ss_b_seg.append(e)
        self.ss_a = np.array(ss_a, dtype=int)
        self.ss_bw = np.array(ss_b_wrapper, dtype=int)
        self.ss_be = np.array(ss_b_seg, dtype=int)
        self.ss_is_self = self.ss_bw >= 0
        self.n_self = len(self.self_pairs)

        n_box = self.eb_pos.shape[0]
        self.box_w = np.repeat(np.arange(self.m), n_box)
        self.box_e = np.tile(np.arange(n_box), self.m)

    def evaluate(self, state: KinematicState, need_grad: bool) -> CollisionSummary:
        centers, seg_a, seg_b = self._place(state)
        n = state.q.shape[0]

        is_seg = self.w_is_seg[:, None]
        wa = np.where(is_seg, seg_a, centers)
        wb = np.where(is_seg, seg_b, centers)

        # one segment-segment batch covers self pairs and env sphere/capsule pairs
        d_ss = w1 = w2 = None
        if self.ss_a.size:
            a1 = wa[self.ss_a]
            a2 = wb[self.ss_a]
            self_mask = self.ss_is_self
            bw = np.where(self_mask, self.ss_bw, 0)
            be = np.where(self_mask, 0, self.ss_be)
            b1 = np.where(self_mask[:, None], wa[bw], self.env_seg_p1[be])
            b2 = np.where(self_mask[:, None], wb[bw], self.env_seg_p2[be])
            w1, w2 = segment_segment_batch(a1, a2, b1, b2)
            gap = np.linalg.norm(w1 - w2, axis=1)
            r_other = np.where(self_mask, self.w_radius[bw], self.env_seg_radius[be])
            d_ss = gap - self.w_radius[self.ss_a] - r_other
            gap_safe = np.where(gap > 1e-12, gap, 1.0)[:, None]
            nrm_ss = (w1 - w2) / gap_safe

        d_box = w_boxside = nrm_box = None
        if self.box_w.size:
            rot = self.eb_rot[self.box_e]
            pos = self.eb_pos[self.box_e]
            half = self.eb_half[self.box_e]
            a1 = wa[self.box_w]
            a2 = wb[self.box_w]
            l1 = np.einsum("pji,pj->pi", rot, a1 - pos)   # R^T (x - c)
            l2 = np.einsum("pji,pj->pi", rot, a2 - pos)
            gap, w_seg, w_box = segment_box_distance_batch(l1, l2, half)
            d_box = gap - self.w_radius[self.box_w]
            w_boxside = pos + np.einsum("pij,pj->pi", rot, w_seg)
            b_world = pos + np.einsum("pij,pj->pi", rot, w_box)
            nrm_box = (w_boxside - b_world) / np.where(gap > 1e-12, gap, 1.0)[:, None]

        def chi(d):
            if d is None or not d.size:
                return 0.0
            return float(np.sum(self.scale / np.maximum(d, self.dist_floor) ** 2))

        d_self = d_ss[:self.n_self] if d_ss is not None else np.empty(0)
        d_env_parts = []
        if d_ss is not None and d_ss.size > self.n_self:
            d_env_parts.append(d_ss[self.n_self:])
        if d_box is not None and d_box.size:
            d_env_parts.append(d_box)
        d_env = np.concatenate(d_env_parts) if d_env_parts else np.empty(0)
        min_self = float(d_self.min()) if d_self.size else np.inf
        min_env = float(d_env.min()) if d_env.size else np.inf

        grad_self = grad_env = None
        if need_grad:
            # gradient atoms: witness point on a moving link, the unit normal
            # at it, the owning wrapper, a sign, and a self/env flag
            parts_d, parts_w, parts_n, parts_l, parts_s, parts_self = [], [], [], [], [], []
            if d_ss is not None and d_ss.size:
                parts_d.append(d_ss)
                parts_w.append(w1)
                parts_n.append(nrm_ss)
                parts_l.append(self.wrapper_links[self.ss_a])
                parts_s.append(np.ones(d_ss.shape[0]))
                parts_self.append(self.ss_is_self)
                if self.n_self:
                    sl = slice(0, self.n_self)
                    parts_d.append(d_ss[sl])
                    parts_w.append(w2[sl])
                    parts_n.append(nrm_ss[sl])
                    parts_l.append(self.wrapper_links[self.ss_bw[sl]])
                    parts_s.append(-np.ones(self.n_self))
                    parts_self.append(np.ones(self.n_self, dtype=bool))
            if d_box is not None and d_box.size:
                parts_d.append(d_box)
                parts_w.append(w_boxside)
                parts_n.append(nrm_box)
                parts_l.append(self.wrapper_links[self.box_w])
                parts_s.append(np.ones(d_box.shape[0]))
                parts_self.append(np.zeros(d_box.shape[0], dtype=bool))

            grad_self = np.zeros(n)
            grad_env = np.zeros(n)
            if parts_d:
                d_all = np.concatenate(parts_d)
                w_all = np.concatenate(parts_w)
                n_all = np.concatenate(parts_n)
                l_all = np.concatenate(parts_l)
                s_all = np.concatenate(parts_s)
                self_all = np.concatenate(parts_self)
                coef = np.where(d_all > self.dist_floor,
                                -2.0 * self.scale / np.maximum(d_all, self.dist_floor) ** 3,
                                0.0) * s_all
                rel = w_all[:, None, :] - state.joint_origins[None, :, :]
                cols = cross_rows(state.joint_axes[None, :, :], rel)
                dots = np.einsum("pki,pi->pk", cols, n_all)
                mask = np.arange(n)[None, :] <= l_all[:, None]
                weighted = coef[:, None] * dots * mask
                grad_self = (weighted * self_all[:, None]).sum(axis=0)
                grad_env = (weighted * (~self_all)[:, None]).sum(axis=0)

        in_collision = min(min_self, min_env) <= self.dist_floor
        return CollisionSummary(chi(d_self), chi(d_env), grad_self, grad_env,
                                min_self, min_env, in_collision)


def pairwise_min_distance(shapes_a: list[PlacedShape], shapes_b: list[PlacedShape]) -> float:
    """Scalar cross-check helper: exact min distance over all pairs."""
    best = np.inf
    for a in shapes_a:
        for b in shapes_b:
            best = min(best, distance_report(a, b).distance)
    return float(best)
