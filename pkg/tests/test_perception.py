"""Pointing rule, hand centroid, median filter, body wrappers, scripted actor."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from camshare.geometry import axis_angle_matrix
from camshare.kinematics import InvalidInputError
from camshare.perception import (BODY_KEYPOINTS, FINGER_BASES, HAND_LANDMARKS,
                                 HEAD_KP, INDEX_TIP, LIMB_SEGMENTS, THUMB_BASE,
                                 ActorKeyframe, ActorScript, BodyFrame,
                                 BodyStreamFilter, LandmarkFrame, body_wrappers,
                                 detect_pointing, hand_target, make_body,
                                 make_hand, median_filter, script_from_dict)
from camshare.shapes import Capsule, Cuboid, Sphere


def frame(points, t=0.0):
    return LandmarkFrame(np.asarray(points, float), t)


class TestDetectPointing:
    def test_extended_index_detected(self):
        pts = make_hand([0.5, 0.0, 0.2], pointing=True)
        f = frame(pts)
        tip = detect_pointing(f)
        assert tip is not None
        np.testing.assert_allclose(tip, pts[INDEX_TIP])
        base = pts[THUMB_BASE]
        assert np.linalg.norm(pts[INDEX_TIP] - base) > 0.10

    def test_fist_not_detected(self):
        pts = make_hand([0.5, 0.0, 0.2], pointing=False)
        assert detect_pointing(frame(pts)) is None

    def test_exact_tie_is_negative(self):
        pts = make_hand([0.0, 0.0, 0.0], pointing=True)
        base = pts[THUMB_BASE]
        d = np.linalg.norm(pts[INDEX_TIP] - base)
        # place the middle fingertip at exactly the index distance
        direction = pts[12] - base
        pts[12] = base + direction / np.linalg.norm(direction) * d
        assert detect_pointing(frame(pts)) is None

    @settings(max_examples=200, deadline=None)
    @given(st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3)),
           st.floats(0, 2 * np.pi), st.booleans())
    def test_rigid_invariance(self, shift, angle, pointing):
        pts = make_hand([0.4, 0.1, 0.3], pointing=pointing)
        base = detect_pointing(frame(pts)) is not None
        R = axis_angle_matrix(np.array([0.0, 0.0, 1.0]), angle)
        moved = pts @ R.T + np.asarray(shift)
        assert (detect_pointing(frame(moved)) is not None) == base

    def test_wrong_shape_rejected(self):
        with pytest.raises(InvalidInputError):
            LandmarkFrame(np.zeros((20, 3)), 0.0)


class TestHandTarget:
    def test_coincident_landmarks(self):
        pts = np.tile(np.array([0.3, -0.1, 0.2]), (HAND_LANDMARKS, 1))
        np.testing.assert_allclose(hand_target(frame(pts)), [0.3, -0.1, 0.2])

    def test_frozen_symmetric_mean(self):
        pts = np.zeros((HAND_LANDMARKS, 1)) * np.zeros(3)
        pts = np.zeros((HAND_LANDMARKS, 3))
        pts[0] = [0.0, 0.0, 0.0]
        bases = [[0.05, 0.05, 0.1], [0.05, -0.05, 0.1],
                 [-0.05, 0.05, 0.1], [-0.05, -0.05, 0.1]]
        for idx, p in zip(FINGER_BASES, bases):
            pts[idx] = p
        np.testing.assert_allclose(hand_target(frame(pts)), [0.0, 0.0, 0.08],
                                   atol=1e-12)

    def test_translation_equivariance(self):
        pts = make_hand([0.2, 0.3, 0.1])
        v = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(hand_target(frame(pts + v)),
                                   hand_target(frame(pts)) + v, atol=1e-12)

    def test_ignores_non_averaged_landmarks(self):
        pts = make_hand([0.2, 0.3, 0.1])
        base = hand_target(frame(pts))
        pts2 = pts.copy()
        pts2[INDEX_TIP] += 5.0      # fingertip moves, centroid must not
        np.testing.assert_allclose(hand_target(frame(pts2)), base)


def body(points, valid=None, t=0.0):
    pts = np.asarray(points, float)
    if valid is None:
        valid = np.ones(BODY_KEYPOINTS, dtype=bool)
    return BodyFrame(pts, valid, t)


class TestMedianFilter:
    def test_constant_stream_identity(self):
        pts = make_body([1.2, 0.0, 0.0])
        pts = np.nan_to_num(pts)
        stream = [body(pts, t=k) for k in range(6)]
        out = median_filter(stream, 5)
        np.testing.assert_allclose(out[-1].points, pts)

    def test_single_spike_rejected(self):
        pts = np.nan_to_num(make_body([1.2, 0.0, 0.0]))
        frames = []
        for k in range(5):
            p = pts.copy()
            if k == 2:
                p[HEAD_KP, 2] += 1.0      # one-frame spike
            frames.append(body(p, t=k))
        out = median_filter(frames, 5)
        assert out[-1].points[HEAD_KP, 2] == pytest.approx(pts[HEAD_KP, 2])

    def test_window_three_median(self):
        base = np.zeros((BODY_KEYPOINTS, 3))
        frames = []
        for k, v in enumerate((0.1, 0.3, 0.2)):
            p = base.copy()
            p[0, 0] = v
            frames.append(body(p, t=k))
        out = median_filter(frames, 3)
        assert out[-1].points[0, 0] == pytest.approx(0.2)

    def test_invalid_samples_excluded_and_quorum(self):
        filt = BodyStreamFilter(5)
        valid = np.zeros(BODY_KEYPOINTS, dtype=bool)
        valid[0] = True
        out = None
        for k in range(5):
            p = np.zeros((BODY_KEYPOINTS, 3))
            p[0, 0] = float(k)
            v = valid.copy()
            if k >= 3:
                v[0] = False      # last two samples invalid
            out = filt.push(BodyFrame(p, v, float(k)))
        # three valid samples (0, 1, 2) meet the quorum of 3; median is 1
        assert out.valid[0]
        assert out.points[0, 0] == pytest.approx(1.0)
        assert not out.valid[1]

    def test_output_within_window_extremes(self):
        rng = np.random.default_rng(50)
        filt = BodyStreamFilter(5)
        history = []
        for k in range(12):
            p = rng.uniform(-1, 1, (BODY_KEYPOINTS, 3))
            history.append(p)
            out = filt.push(body(p, t=k))
            window = np.stack(history[-5:])
            sel = out.valid
            if k >= 2:
                assert sel.all()      # full quorum once three frames arrived
            assert np.all(out.points[sel] >= window.min(axis=0)[sel] - 1e-12)
            assert np.all(out.points[sel] <= window.max(axis=0)[sel] + 1e-12)

    def test_even_window_rejected(self):
        with pytest.raises(InvalidInputError):
            BodyStreamFilter(4)


class TestBodyWrappers:
    def test_head_only_gives_one_sphere(self):
        pts = np.zeros((BODY_KEYPOINTS, 3))
        valid = np.zeros(BODY_KEYPOINTS, dtype=bool)
        valid[HEAD_KP] = True
        shapes = body_wrappers(BodyFrame(pts, valid, 0.0))
        assert len(shapes) == 1
        assert isinstance(shapes[0].shape, Sphere)

    def test_full_frame_wrapper_census(self):
        pts = np.nan_to_num(make_body([1.2, 0.0, 0.1]))
        shapes = body_wrappers(body(pts))
        kinds = [type(s.shape) for s in shapes]
        assert kinds.count(Sphere) == 1          # head
        assert kinds.count(Cuboid) == 1          # torso
        assert kinds.count(Capsule) == len(LIMB_SEGMENTS)

    def test_degenerate_limb_becomes_sphere(self):
        pts = np.nan_to_num(make_body([1.2, 0.0, 0.1]))
        pts[3] = pts[2]      # zero-length upper arm
        shapes = body_wrappers(body(pts))
        limb_ids = [s.shape_id for s in shapes if isinstance(s.shape, Sphere)]
        assert "body:limb2-3" in limb_ids

    def test_all_shapes_valid(self):
        rng = np.random.default_rng(51)
        for _ in range(50):
            pts = np.nan_to_num(make_body(rng.uniform([0.8, -0.5, 0.0],
                                                      [1.5, 0.5, 0.3])))
            for s in body_wrappers(body(pts)):
                if isinstance(s.shape, Sphere):
                    assert s.shape.radius > 0
                elif isinstance(s.shape, Capsule):
                    assert s.shape.radius > 0 and s.shape.half_length > 0
                else:
                    assert np.all(s.shape.half_extents > 0)


class TestScriptedActor:
    def test_single_keyframe_constant(self):
        hand = make_hand([0.5, 0.0, 0.2])
        script = ActorScript([ActorKeyframe(0.0, hand, None)])
        for t in (0.0, 1.0, 100.0):
            got, _ = script.sample(t)
            np.testing.assert_allclose(got.points, hand)

    def test_midpoint_interpolation(self):
        h0 = make_hand([0.4, 0.0, 0.2])
        h1 = make_hand([0.6, 0.0, 0.2])
        script = ActorScript([ActorKeyframe(0.0, h0, None),
                              ActorKeyframe(2.0, h1, None)])
        got, _ = script.sample(1.0)
        np.testing.assert_allclose(got.points, 0.5 * (h0 + h1), atol=1e-12)

    def test_clamped_after_last_keyframe(self):
        h0 = make_hand([0.4, 0.0, 0.2])
        h1 = make_hand([0.6, 0.0, 0.2])
        script = ActorScript([ActorKeyframe(0.0, h0, None),
                              ActorKeyframe(2.0, h1, None)])
        got, _ = script.sample(10.0)
        np.testing.assert_allclose(got.points, h1)

    def test_hand_absence_spans(self):
        h0 = make_hand([0.4, 0.0, 0.2])
        script = ActorScript([ActorKeyframe(0.0, h0, None),
                              ActorKeyframe(1.0, None, None),
                              ActorKeyframe(2.0, h0, None)])
        assert script.sample(0.5)[0] is None
        assert script.sample(1.5)[0] is None
        assert script.sample(0.0)[0] is not None

    def test_empty_script_rejected(self):
        with pytest.raises(InvalidInputError):
            ActorScript([])

    def test_round_trip_through_dict(self):
        hand = make_hand([0.5, 0.1, 0.2])
        bodyp = make_body([1.2, 0.0, 0.1])
        data = {"keyframes": [
            {"t": 0.0, "hand": hand.tolist(),
             "body": [None if np.isnan(p).any() else list(p) for p in bodyp]},
            {"t": 1.0, "hand": None, "body": None},
        ]}
        script = script_from_dict(data)
        got_hand, got_body = script.sample(0.0)
        np.testing.assert_allclose(got_hand.points, hand, atol=1e-12)
        assert got_body.valid.sum() == (~np.isnan(bodyp).any(axis=1)).sum()
