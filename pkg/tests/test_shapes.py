"""Support mapping, GJK distance vs closed-form oracles, and raycasting."""
import numpy as np
import pytest

from camshare.geometry import quat_normalize, quat_to_matrix
from camshare.kinematics import InvalidInputError
from camshare.shapes import (Capsule, Cuboid, PlacedShape, Sphere, distance,
                             distance_report, gjk_distance, raycast, support)


def random_placed(rng, kinds=("sphere", "capsule", "cuboid"), span=1.0):
    kind = kinds[rng.integers(len(kinds))]
    pos = rng.uniform(-span, span, 3)
    R = quat_to_matrix(quat_normalize(rng.normal(size=4)))
    if kind == "sphere":
        shape = Sphere(rng.uniform(0.05, 0.3))
    elif kind == "capsule":
        shape = Capsule(rng.uniform(0.1, 0.5), rng.uniform(0.05, 0.2))
    else:
        shape = Cuboid(rng.uniform(0.05, 0.4, 3))
    return PlacedShape(shape, pos, R)


class TestSupport:
    def test_sphere_support(self):
        s = PlacedShape(Sphere(1.0), np.zeros(3))
        np.testing.assert_allclose(support(s, [0, 0, 1]), [0, 0, 1], atol=1e-15)

    def test_cuboid_vertex_support(self):
        s = PlacedShape(Cuboid([1.0, 2.0, 3.0]), np.zeros(3))
        d = np.array([1.0, 1.0, 1.0]) / np.sqrt(3)
        np.testing.assert_allclose(support(s, d), [1, 2, 3], atol=1e-12)

    def test_capsule_lateral_support(self):
        s = PlacedShape(Capsule(0.5, 0.1), np.zeros(3))
        pt = support(s, [1, 0, 0])
        assert pt[0] == pytest.approx(0.1, abs=1e-12)
        assert abs(pt[2]) <= 0.5 + 1e-12

    def test_zero_direction_rejected(self):
        s = PlacedShape(Sphere(1.0), np.zeros(3))
        with pytest.raises(InvalidInputError):
            support(s, [0.0, 0.0, 0.0])

    def test_support_is_extreme_point(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            placed = random_placed(rng)
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            sp = support(placed, d)
            for _ in range(10):
                other = support(placed, rng.normal(size=3))
                assert other @ d <= sp @ d + 1e-9


class TestDistanceOracles:
    def test_sphere_pair_frozen_example(self):
        a = PlacedShape(Sphere(0.1), [0.0, 0.0, 0.0])
        b = PlacedShape(Sphere(0.1), [0.4, 0.0, 0.0])
        assert distance(a, b) == pytest.approx(0.2, abs=1e-12)
        assert gjk_distance(a, b).distance == pytest.approx(0.2, abs=1e-9)

    def test_identical_cuboids_overlap(self):
        a = PlacedShape(Cuboid([0.2, 0.2, 0.2]), [0.1, 0.0, 0.3])
        b = PlacedShape(Cuboid([0.2, 0.2, 0.2]), [0.1, 0.0, 0.3])
        assert distance(a, b) == 0.0
        assert gjk_distance(a, b).distance == 0.0

    def test_axis_aligned_cuboid_gap(self):
        a = PlacedShape(Cuboid([0.5, 0.5, 0.5]), [0.0, 0.0, 0.0])
        b = PlacedShape(Cuboid([0.5, 0.5, 0.5]), [2.0, 0.0, 0.0])
        assert gjk_distance(a, b).distance == pytest.approx(1.0, abs=1e-9)

    def test_gjk_vs_sphere_sphere_oracle(self):
        rng = np.random.default_rng(10)
        for _ in range(300):
            ra, rb = rng.uniform(0.05, 0.4, 2)
            ca, cb = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
            expected = max(np.linalg.norm(ca - cb) - ra - rb, 0.0)
            got = gjk_distance(PlacedShape(Sphere(ra), ca),
                               PlacedShape(Sphere(rb), cb)).distance
            assert got == pytest.approx(expected, abs=1e-6)

    def test_gjk_vs_aligned_cuboid_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            ha, hb = rng.uniform(0.05, 0.4, 3), rng.uniform(0.05, 0.4, 3)
            ca, cb = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
            gaps = np.abs(ca - cb) - ha - hb
            expected = float(np.linalg.norm(np.maximum(gaps, 0.0)))
            got = gjk_distance(PlacedShape(Cuboid(ha), ca),
                               PlacedShape(Cuboid(hb), cb)).distance
            assert got == pytest.approx(expected, abs=1e-6)

    def test_gjk_vs_parallel_capsule_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(300):
            ha, hb = rng.uniform(0.1, 0.5, 2)
            ra, rb = rng.uniform(0.05, 0.2, 2)
            ca, cb = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
            # both axes along +z: closest core distance via interval gap in z
            z_gap = max(abs(ca[2] - cb[2]) - ha - hb, 0.0)
            planar = np.linalg.norm(ca[:2] - cb[:2])
            expected = max(np.hypot(planar, z_gap) - ra - rb, 0.0)
            got = gjk_distance(PlacedShape(Capsule(ha, ra), ca),
                               PlacedShape(Capsule(hb, rb), cb)).distance
            assert got == pytest.approx(expected, abs=1e-6)

    def test_fast_path_matches_gjk_all_combos(self):
        rng = np.random.default_rng(13)
        for _ in range(400):
            a, b = random_placed(rng), random_placed(rng)
            assert distance(a, b) == pytest.approx(gjk_distance(a, b).distance,
                                                   abs=1e-6)


class TestDistanceProperties:
    def test_symmetry(self):
        rng = np.random.default_rng(14)
        for _ in range(1000):
            a, b = random_placed(rng), random_placed(rng)
            assert distance(a, b) == pytest.approx(distance(b, a), abs=1e-9)

    def test_translation_invariance(self):
        rng = np.random.default_rng(15)
        for _ in range(200):
            a, b = random_placed(rng), random_placed(rng)
            shift = rng.uniform(-5, 5, 3)
            a2 = PlacedShape(a.shape, a.position + shift, a.rotation)
            b2 = PlacedShape(b.shape, b.position + shift, b.rotation)
            assert distance(a, b) == pytest.approx(distance(a2, b2), abs=1e-8)

    def test_nonnegative(self):
        rng = np.random.default_rng(16)
        for _ in range(500):
            a, b = random_placed(rng, span=0.3), random_placed(rng, span=0.3)
            assert distance(a, b) >= 0.0

    def test_witness_points_realize_distance(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            a, b = random_placed(rng), random_placed(rng)
            rep = distance_report(a, b)
            if rep.distance > 1e-9:
                gap = np.linalg.norm(rep.witness_a - rep.witness_b)
                assert gap == pytest.approx(rep.distance, abs=1e-6)


class TestRaycast:
    def test_sphere_hit_frozen(self):
        shapes = [PlacedShape(Sphere(0.5), [0, 0, 2.0], shape_id="ball")]
        hit = raycast(shapes, [0, 0, 0], [0, 0, 1])
        assert hit is not None
        np.testing.assert_allclose(hit.point, [0, 0, 1.5], atol=1e-12)
        assert hit.range == pytest.approx(1.5, abs=1e-12)
        assert hit.shape_id == "ball"

    def test_miss_returns_none(self):
        shapes = [PlacedShape(Sphere(0.5), [0, 0, 2.0])]
        assert raycast(shapes, [0, 0, 0], [0, 0, -1]) is None

    def test_origin_inside_hits_at_zero(self):
        for shape in (Sphere(0.5), Cuboid([0.5, 0.5, 0.5]), Capsule(0.5, 0.3)):
            shapes = [PlacedShape(shape, [0, 0, 0])]
            hit = raycast(shapes, [0.0, 0.0, 0.1], [1, 0, 0])
            assert hit is not None and hit.range == 0.0

    def test_nearest_of_several(self):
        shapes = [PlacedShape(Sphere(0.2), [0, 0, 3.0], shape_id="far"),
                  PlacedShape(Sphere(0.2), [0, 0, 1.0], shape_id="near")]
        hit = raycast(shapes, [0, 0, 0], [0, 0, 1])
        assert hit.shape_id == "near"

    def test_box_slab_oracle(self):
        shapes = [PlacedShape(Cuboid([0.5, 0.5, 0.5]), [2.0, 0, 0])]
        hit = raycast(shapes, [0, 0, 0], [1, 0, 0])
        assert hit.range == pytest.approx(1.5, abs=1e-12)

    def test_capsule_side_hit(self):
        shapes = [PlacedShape(Capsule(0.5, 0.25), [2.0, 0.0, 0.0])]
        hit = raycast(shapes, [0, 0, 0], [1, 0, 0])
        assert hit.range == pytest.approx(1.75, abs=1e-9)

    def test_raycast_agrees_with_sampled_distance(self):
        rng = np.random.default_rng(18)
        for _ in range(100):
            placed = random_placed(rng, span=0.5)
            origin = rng.uniform(-3, -2, 3)
            direction = placed.position - origin
            direction = direction / np.linalg.norm(direction)
            hit = raycast([placed], origin, direction)
            assert hit is not None     # aimed at the center, must hit
            probe = PlacedShape(Sphere(1e-9), hit.point)
            assert distance(placed, probe) < 1e-5
