"""Convex shape primitives and pairwise distance queries.

Three primitives: spheres, capsules (axis = local +z), cuboids. Distances
come from a support-mapping (GJK) solver run on the shapes' polytope cores
(point / segment / box) with radii subtracted afterwards, which terminates
exactly for every primitive pair. Closed-form routines cover the common
pairs and are used as fast paths; the GJK path stays available for any
combination and is cross-checked against the closed forms in tests.

Penetrating or touching pairs report distance 0 (no penetration depth).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .kinematics import InvalidInputError

logger = logging.getLogger(__name__)

GJK_MAX_ITERATIONS = 64
GJK_TOLERANCE = 1e-10


@dataclass(frozen=True)
class Sphere:
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidInputError("sphere radius must be positive")


@dataclass(frozen=True)
class Capsule:
    half_length: float
    radius: float

    def __post_init__(self):
        if self.half_length <= 0 or self.radius <= 0:
            raise InvalidInputError("capsule parameters must be positive")


@dataclass(frozen=True)
class Cuboid:
    half_extents: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.half_extents, dtype=float)
        if h.shape != (3,) or not np.all(h > 0):
            raise InvalidInputError("cuboid half extents must be three positive reals")
        object.__setattr__(self, "half_extents", h)


ConvexShape = Sphere | Capsule | Cuboid


@dataclass(frozen=True)
class PlacedShape:
    shape: ConvexShape
    position: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    shape_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=float))


def support(placed: PlacedShape, direction: np.ndarray) -> np.ndarray:
    """Farthest point of the shape in a world direction (exact per primitive)."""
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d)
    if norm == 0.0:
        raise InvalidInputError("support direction must be nonzero")
    d = d / norm
    core = _support_core(placed, d)
    r = _dilation_radius(placed.shape)
    return core + r * d


def _dilation_radius(shape: ConvexShape) -> float:
    if isinstance(shape, (Sphere, Capsule)):
        return shape.radius
    return 0.0


def _support_core(placed: PlacedShape, d: np.ndarray) -> np.ndarray:
    """Support point of the polytope core (point / segment / box)."""
    shape = placed.shape
    if isinstance(shape, Sphere):
        return placed.position
    if isinstance(shape, Capsule):
        axis = placed.rotation[:, 2]
        sign = 1.0 if d @ axis >= 0.0 else -1.0
        return placed.position + sign * shape.half_length * axis
    local = placed.rotation.T @ d
    corner = np.where(local >= 0.0, shape.half_extents, -shape.half_extents)
    return placed.position + placed.rotation @ corner


def _closest_on_simplex(points: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Closest point of conv(points) to the origin.

    Returns (closest point, barycentric weights, indices of the supporting
    sub-simplex). Enumerates every affinely independent subset, which is
    cheap at <= 4 vertices and avoids the usual Voronoi-region case bugs.
    """
    best: tuple[float, np.ndarray, np.ndarray, list[int]] | None = None
    m = len(points)
    for mask in range(1, 1 << m):
        idx = [k for k in range(m) if mask & (1 << k)]
        P = np.array([points[k] for k in idx])
        k = len(idx)
        G = P @ P.T
        A = np.empty((k + 1, k + 1))
        A[:k, :k] = G
        A[k, :k] = 1.0
        A[:k, k] = 1.0
        A[k, k] = 0.0
        rhs = np.zeros(k + 1)
        rhs[k] = 1.0
        try:
            sol = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            continue
        lam = sol[:k]
        if np.any(lam < -1e-12):
            continue
        lam = np.clip(lam, 0.0, None)
        s = lam.sum()
        if s <= 0.0:
            continue
        lam = lam / s
        v = lam @ P
        d2 = float(v @ v)
        if best is None or d2 < best[0] - 1e-15:
            best = (d2, v, lam, idx)
    assert best is not None
    return best[1], best[2], best[3]


@dataclass
class DistanceResult:
    distance: float
    witness_a: np.ndarray
    witness_b: np.ndarray
    converged: bool = True


def gjk_distance(a: PlacedShape, b: PlacedShape) -> DistanceResult:
    """Support-mapping distance between two placed convex shapes.

    Runs on the polytope cores and subtracts the dilation radii, so the
    result is exact up to the simplex-progress tolerance. Touching or
    penetrating pairs return 0. Witness points lie on the shape surfaces
    (informational when penetrating).
    """
    d0 = b.position - a.position
    if np.linalg.norm(d0) < 1e-12:
        d0 = np.array([1.0, 0.0, 0.0])
    sup_a = [_support_core(a, d0)]
    sup_b = [_support_core(b, -d0)]
    simplex = [sup_a[0] - sup_b[0]]
    v, lam, keep = _closest_on_simplex(simplex)

    r_total = _dilation_radius(a.shape) + _dilation_radius(b.shape)
    converged = False
    for _ in range(GJK_MAX_ITERATIONS):
        dist2 = float(v @ v)
        if dist2 < GJK_TOLERANCE:
            # origin inside the core difference: shapes overlap
            wa = sum(l * p for l, p in zip(lam, sup_a))
            return DistanceResult(0.0, wa, wa, True)
        new_a = _support_core(a, -v)
        new_b = _support_core(b, v)
        w = new_a - new_b
        # no progress toward the origin: converged
        if dist2 - float(v @ w) <= GJK_TOLERANCE * max(1.0, dist2):
            converged = True
            break
        simplex.append(w)
        sup_a.append(new_a)
        sup_b.append(new_b)
        v, lam, keep = _closest_on_simplex(simplex)
        simplex = [simplex[k] for k in keep]
        sup_a = [sup_a[k] for k in keep]
        sup_b = [sup_b[k] for k in keep]
        lam = np.asarray(lam)

    if not converged:
        logger.warning("GJK did not converge in %d iterations; returning best bound",
                       GJK_MAX_ITERATIONS)

    core_dist = float(np.linalg.norm(v))
    wa = sum(l * p for l, p in zip(lam, sup_a))
    wb = sum(l * p for l, p in zip(lam, sup_b))
    dist = core_dist - r_total
    if dist <= 0.0:
        return DistanceResult(0.0, wa, wb, converged)
    n = v / core_dist                      # points from b toward a
    wa_surface = wa - _dilation_radius(a.shape) * n
    wb_surface = wb + _dilation_radius(b.shape) * n
    return DistanceResult(dist, wa_surface, wb_surface, converged)


# --- closed-form core distances (with witness points) ---

def point_segment_closest(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    u = b - a
    uu = float(u @ u)
    t = 0.0 if uu == 0.0 else float(np.clip((p - a) @ u / uu, 0.0, 1.0))
    return a + t * u


def segment_segment_closest(p1, q1, p2, q2) -> tuple[np.ndarray, np.ndarray]:
    """Closest points between segments [p1,q1] and [p2,q2] (Ericson)."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = float(d1 @ d1)
    e = float(d2 @ d2)
    f = float(d2 @ r)
    if a <= 1e-18 and e <= 1e-18:
        return p1, p2
    if a <= 1e-18:
        t = np.clip(f / e, 0.0, 1.0)
        return p1, p2 + t * d2
    c = float(d1 @ r)
    if e <= 1e-18:
        s = np.clip(-c / a, 0.0, 1.0)
        return p1 + s * d1, p2
    b = float(d1 @ d2)
    denom = a * e - b * b
    s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom > 1e-18 else 0.0
    t = (b * s + f) / e
    if t < 0.0:
        t = 0.0
        s = np.clip(-c / a, 0.0, 1.0)
    elif t > 1.0:
        t = 1.0
        s = np.clip((b - c) / a, 0.0, 1.0)
    return p1 + s * d1, p2 + t * d2


def point_box_closest_local(p_local: np.ndarray, half: np.ndarray) -> np.ndarray:
    return np.clip(p_local, -half, half)


def segment_box_distance_batch(a: np.ndarray, b: np.ndarray, half: np.ndarray
                               ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact segment-to-box distances, batched, in the box's local frame.

    The squared distance along the segment is piecewise quadratic with
    breakpoints where a coordinate crosses a slab boundary; each piece is
    minimized in closed form. Returns (distance, witness on segment,
    witness on box), shapes (P,), (P,3), (P,3).
    """
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    half = np.broadcast_to(np.atleast_2d(half), a.shape)
    P = a.shape[0]
    u = b - a

    with np.errstate(divide="ignore", invalid="ignore"):
        t_hi = (half - a) / u
        t_lo = (-half - a) / u
    cand = np.concatenate([t_lo, t_hi], axis=1)
    cand = np.where(np.isfinite(cand), cand, 0.0)
    cand = np.clip(cand, 0.0, 1.0)
    ts = np.sort(np.concatenate([cand,
                                 np.zeros((P, 1)),
                                 np.ones((P, 1))], axis=1), axis=1)   # (P, 8)

    # evaluate all 7 pieces at once: (P, 7) interval bounds, (P, 7, 3) geometry
    lo = ts[:, :-1]
    hi = ts[:, 1:]
    mid = 0.5 * (lo + hi)
    pm = a[:, None, :] + mid[:, :, None] * u[:, None, :]              # (P,7,3)
    hb = half[:, None, :]
    outside = np.abs(pm) > hb
    ca = np.where(outside, a[:, None, :] - np.sign(pm) * hb, 0.0)
    cu = np.where(outside, u[:, None, :], 0.0)
    A = np.sum(cu * cu, axis=2)
    B = 2.0 * np.sum(cu * ca, axis=2)
    C = np.sum(ca * ca, axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_star = np.where(A > 0.0, -B / np.where(A > 0.0, 2.0 * A, 1.0), lo)
    t_star = np.clip(t_star, lo, hi)
    d2 = A * t_star * t_star + B * t_star + C                         # (P,7)
    piece = np.argmin(d2, axis=1)
    rows = np.arange(P)
    best_d2 = d2[rows, piece]
    best_t = t_star[rows, piece]

    w_seg = a + best_t[:, None] * u
    w_box = np.clip(w_seg, -half, half)
    return np.sqrt(np.maximum(best_d2, 0.0)), w_seg, w_box


def _capsule_segment(placed: PlacedShape) -> tuple[np.ndarray, np.ndarray]:
    axis = placed.rotation[:, 2]
    h = placed.shape.half_length
    return placed.position - h * axis, placed.position + h * axis


def distance(a: PlacedShape, b: PlacedShape) -> float:
    """Euclidean surface separation; 0 when touching or penetrating."""
    return distance_report(a, b).distance


def distance_report(a: PlacedShape, b: PlacedShape) -> DistanceResult:
    """Distance with witness points; closed forms where available, else GJK."""
    sa, sb = a.shape, b.shape
    if isinstance(sa, Cuboid) and not isinstance(sb, Cuboid):
        res = distance_report(b, a)
        return DistanceResult(res.distance, res.witness_b, res.witness_a, res.converged)

    if isinstance(sa, Sphere) and isinstance(sb, Sphere):
        ca, cb = a.position, b.position
        gap = float(np.linalg.norm(ca - cb))
        d = gap - sa.radius - sb.radius
        n = (ca - cb) / gap if gap > 1e-15 else np.array([1.0, 0.0, 0.0])
        return DistanceResult(max(d, 0.0), ca - sa.radius * n, cb + sb.radius * n)

    if isinstance(sa, Sphere) and isinstance(sb, Capsule):
        res = distance_report(b, a)
        return DistanceResult(res.distance, res.witness_b, res.witness_a, res.converged)

    if isinstance(sa, Capsule) and isinstance(sb, Sphere):
        p1, p2 = _capsule_segment(a)
        w = point_segment_closest(b.position, p1, p2)
        gap = float(np.linalg.norm(w - b.position))
        d = gap - sa.radius - sb.radius
        n = (w - b.position) / gap if gap > 1e-15 else np.array([1.0, 0.0, 0.0])
        return DistanceResult(max(d, 0.0), w - sa.radius * n, b.position + sb.radius * n)

    if isinstance(sa, Capsule) and isinstance(sb, Capsule):
        a1, a2 = _capsule_segment(a)
        b1, b2 = _capsule_segment(b)
        w1, w2 = segment_segment_closest(a1, a2, b1, b2)
        gap = float(np.linalg.norm(w1 - w2))
        d = gap - sa.radius - sb.radius
        n = (w1 - w2) / gap if gap > 1e-15 else np.array([1.0, 0.0, 0.0])
        return DistanceResult(max(d, 0.0), w1 - sa.radius * n, w2 + sb.radius * n)

    if not isinstance(sa, Cuboid) and isinstance(sb, Cuboid):
        R = b.rotation
        h = sb.half_extents
        if isinstance(sa, Sphere):
            pl = R.T @ (a.position - b.position)
            wl = point_box_closest_local(pl, h)
            gap = float(np.linalg.norm(pl - wl))
            d = gap - sa.radius
            w_box = b.position + R @ wl
            n = (a.position - w_box) / gap if gap > 1e-15 else np.array([1.0, 0.0, 0.0])
            return DistanceResult(max(d, 0.0), a.position - sa.radius * n, w_box)
        p1, p2 = _capsule_segment(a)
        l1 = R.T @ (p1 - b.position)
        l2 = R.T @ (p2 - b.position)
        dist, w_seg, w_box = segment_box_distance_batch(l1[None, :], l2[None, :], h[None, :])
        gap = float(dist[0])
        d = gap - sa.radius
        w_box_w = b.position + R @ w_box[0]
        w_seg_w = b.position + R @ w_seg[0]
        n = (w_seg_w - w_box_w) / gap if gap > 1e-15 else np.array([1.0, 0.0, 0.0])
        return DistanceResult(max(d, 0.0), w_seg_w - sa.radius * n, w_box_w)

    return gjk_distance(a, b)


# --- raycasting ---

def _ray_sphere(origin, direction, center, radius) -> float | None:
    m = origin - center
    b = float(m @ direction)
    c = float(m @ m) - radius * radius
    if c <= 0.0:
        return 0.0
    disc = b * b - c
    if disc < 0.0:
        return None
    t = -b - np.sqrt(disc)
    return t if t >= 0.0 else None

def _ray_box(origin, direction, placed: PlacedShape) -> float | None:
    R = placed.rotation
    o = R.T @ (origin - placed.position)
    d = R.T @ direction
    h = placed.shape.half_extents
    if np.all(np.abs(o) <= h):
        return 0.0
    t_near, t_far = -np.inf, np.inf
    for i in range(3):
        if abs(d[i]) < 1e-15:
            if abs(o[i]) > h[i]:
                return None
            continue
        t1 = (-h[i] - o[i]) / d[i]
        t2 = (h[i] - o[i]) / d[i]
        if t1 > t2:
            t1, t2 = t2, t1
        t_near = max(t_near, t1)
        t_far = min(t_far, t2)
    if t_near > t_far or t_far < 0.0:
        return None
    return max(t_near, 0.0)

def _ray_capsule(origin, direction, placed: PlacedShape) -> float | None:
    shape = placed.shape
    axis = placed.rotation[:, 2]
    p1 = placed.position - shape.half_length * axis
    p2 = placed.position + shape.half_length * axis
    if np.linalg.norm(point_segment_closest(origin, p1, p2) - origin) <= shape.radius:
        return 0.0
    hits = []
    for cap in (p1, p2):
        t = _ray_sphere(origin, direction, cap, shape.radius)
        if t is not None:
            hits.append(t)
    # cylindrical side: project out the axis component
    m = origin - p1
    d_perp = direction - (direction @ axis) * axis
    m_perp = m - (m @ axis) * axis
    a2 = float(d_perp @ d_perp)
    if a2 > 1e-15:
        b2 = float(m_perp @ d_perp)
        c2 = float(m_perp @ m_perp) - shape.radius ** 2
        disc = b2 * b2 - a2 * c2
        if disc >= 0.0:
            t = (-b2 - np.sqrt(disc)) / a2
            if t >= 0.0:
                axial = float((m + t * direction) @ axis)
                if 0.0 <= axial <= 2.0 * shape.half_length:
                    hits.append(t)
    return min(hits) if hits else None


@dataclass(frozen=True)
class RayHit:
    point: np.ndarray
    shape_index: int
    shape_id: str | None
    range: float


def raycast(shapes: list[PlacedShape], origin: np.ndarray,
            direction: np.ndarray) -> RayHit | None:
    """Nearest ray intersection over a shape list, or None.

    A ray starting inside a shape hits it at range 0 so clicks on occluding
    geometry still resolve.
    """
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    n = np.linalg.norm(direction)
    if n == 0.0:
        raise InvalidInputError("ray direction must be nonzero")
    direction = direction / n

    best: RayHit | None = None
    for idx, placed in enumerate(shapes):
        shape = placed.shape
        if isinstance(shape, Sphere):
            t = _ray_sphere(origin, direction, placed.position, shape.radius)
        elif isinstance(shape, Cuboid):
            t = _ray_box(origin, direction, placed)
        else:
            t = _ray_capsule(origin, direction, placed)
        if t is None:
            continue
        if best is None or t < best.range:
            best = RayHit(origin + t * direction, idx, placed.shape_id, float(t))
    return best
