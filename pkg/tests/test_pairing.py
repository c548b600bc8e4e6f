"""Pseudo-depth pairing, unit formation, and anchor scheduling."""

import math

import numpy as np
import pytest

from exemvad.errors import ConfigError
from exemvad.geometry import BBox
from exemvad.ingest import Detection, VideoMeta
from exemvad.pairing import (
    PAIR,
    SINGLE,
    PairingConfig,
    Unit,
    build_units,
    pseudo_depth_distance,
    schedule_anchors,
)

META = VideoMeta(video_id="v0", width=1280, height=720, frames=100, fps=30.0)


def det(oid, cx, cy, cls="person", frame=0):
    return Detection(frame_idx=frame, object_id=oid, class_label=cls, bbox=BBox(cx, cy, 40, 80))


class TestPseudoDepthDistance:
    def test_identical_points(self):
        assert pseudo_depth_distance((100, 200), (100, 200)) == 0.0

    def test_equal_y_is_planar(self):
        assert pseudo_depth_distance((100, 200), (130, 200)) == pytest.approx(30.0)

    def test_worked_example(self):
        # dx=30, dy=40, z=40 -> sqrt(900 + 1600 + 1600) = sqrt(4100)
        d = pseudo_depth_distance((100, 200), (130, 240))
        assert d == pytest.approx(math.sqrt(4100), abs=1e-9)
        assert d == pytest.approx(64.031, abs=1e-3)

    def test_symmetric_and_nonnegative(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            p1 = tuple(rng.uniform(-500, 500, size=2))
            p2 = tuple(rng.uniform(-500, 500, size=2))
            d12 = pseudo_depth_distance(p1, p2)
            assert d12 >= 0.0
            assert d12 == pytest.approx(pseudo_depth_distance(p2, p1), abs=1e-12)

    def test_equals_planar_whenever_y_matches(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            x1, x2, y = rng.uniform(0, 1000, size=3)
            assert pseudo_depth_distance((x1, y), (x2, y)) == pytest.approx(abs(x1 - x2))


class TestBuildUnits:
    def test_two_objects_within_threshold_pair(self):
        cfg = PairingConfig(h=100.0)
        units = build_units([det("a", 100, 200), det("b", 130, 240)], cfg)
        assert [u.kind for u in units] == [PAIR]
        assert units[0].members == ("a", "b")

    def test_two_objects_beyond_threshold_stay_single(self):
        cfg = PairingConfig(h=50.0)
        units = build_units([det("a", 100, 200), det("b", 130, 240)], cfg)
        assert [u.kind for u in units] == [SINGLE, SINGLE]

    def test_tie_at_exactly_h_not_paired(self):
        cfg = PairingConfig(h=30.0)
        units = build_units([det("a", 100, 200), det("b", 130, 200)], cfg)
        assert all(u.kind == SINGLE for u in units)

    def test_single_object(self):
        units = build_units([det("a", 5, 5)], PairingConfig(h=10.0))
        assert len(units) == 1 and units[0].kind == SINGLE

    def test_empty_frame(self):
        assert build_units([], PairingConfig(h=10.0)) == []

    def test_object_can_join_multiple_pairs(self):
        cfg = PairingConfig(h=50.0)
        units = build_units([det("a", 100, 200), det("b", 120, 200), det("c", 80, 200)], cfg)
        pairs = [u for u in units if u.kind == PAIR]
        assert {u.members for u in pairs} == {("a", "b"), ("a", "c"), ("b", "c")}

    def test_partition_property(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            n = rng.integers(1, 9)
            dets = [det(f"o{i}", rng.uniform(0, 1280), rng.uniform(0, 720)) for i in range(n)]
            units = build_units(dets, PairingConfig(h=float(rng.uniform(10, 600))))
            paired = {m for u in units if u.kind == PAIR for m in u.members}
            singles = [u.members[0] for u in units if u.kind == SINGLE]
            assert paired.isdisjoint(singles)
            assert paired | set(singles) == {d.object_id for d in dets}
            assert len(singles) == len(set(singles))

    def test_pair_count_monotone_in_h(self):
        rng = np.random.default_rng(10)
        dets = [det(f"o{i}", rng.uniform(0, 1280), rng.uniform(0, 720)) for i in range(8)]
        counts = []
        for h in (25.0, 100.0, 400.0, 1600.0):
            units = build_units(dets, PairingConfig(h=h))
            counts.append(sum(1 for u in units if u.kind == PAIR))
        assert counts == sorted(counts)

    def test_mixed_frames_rejected(self):
        with pytest.raises(ValueError):
            build_units([det("a", 1, 1, frame=0), det("b", 1, 1, frame=1)], PairingConfig(h=10))

    def test_default_h_is_scene_relative(self):
        cfg = PairingConfig()
        assert cfg.resolved_h(META) == pytest.approx(0.25 * math.hypot(1280, 720))
        with pytest.raises(ConfigError):
            cfg.resolved_h(None)


class TestScheduleAnchors:
    def test_stride_thirty(self):
        cfg = PairingConfig(h=10, delta=30, stride=30)
        assert schedule_anchors(META, cfg) == [0, 30, 60]

    def test_single_anchor_boundary(self):
        meta = VideoMeta(video_id="v", width=10, height=10, frames=31, fps=1.0)
        assert schedule_anchors(meta, PairingConfig(h=10, delta=30)) == [0]

    def test_no_valid_future_frame(self):
        meta = VideoMeta(video_id="v", width=10, height=10, frames=30, fps=1.0)
        assert schedule_anchors(meta, PairingConfig(h=10, delta=30)) == []

    def test_stride_defaults_to_delta(self):
        cfg = PairingConfig(h=10, delta=25)
        assert cfg.resolved_stride() == 25

    def test_all_anchors_have_future_frame(self):
        cfg = PairingConfig(h=10, delta=30, stride=7)
        for t in schedule_anchors(META, cfg):
            assert t + cfg.delta < META.frames


class TestConfigValidation:
    def test_bad_h(self):
        with pytest.raises(ConfigError):
            PairingConfig(h=0.0)

    def test_bad_delta(self):
        with pytest.raises(ConfigError):
            PairingConfig(h=1.0, delta=0)

    def test_unit_invariants(self):
        with pytest.raises(ValueError):
            Unit(unit_id="u", kind=PAIR, members=("a",), anchor_frame=0, delta=30, class_labels=("x",))
        with pytest.raises(ValueError):
            Unit(unit_id="u", kind=PAIR, members=("a", "a"), anchor_frame=0, delta=30, class_labels=("x", "x"))
