from __future__ import annotations

import math

import numpy as np
import pytest

from tracklite.errors import EmptyGroundTruth, NoOverlap
from tracklite.metrics import (
    MOT_COLUMNS,
    MotObject,
    Trajectory,
    bucket_by_distance,
    clear_mot,
    dominant_track,
    finite_difference_velocity,
    format_table,
    iou,
    rmse,
    to_csv,
    trajectories_from_outputs,
)
from tracklite.tracker import TrackerOutput, TrackSnapshot


def gt_obj(frame, oid=1, x=0.0):
    return MotObject(frame, oid, "pedestrian", (x, 0.0, 0.0))


def id_switch_fixture():
    """One object for 10 frames; the hypothesis id changes from 7 to 8 at frame 6."""
    gt = [gt_obj(f) for f in range(10)]
    hyp = [MotObject(f, 7 if f < 6 else 8, "pedestrian", (0.1, 0.0, 0.0)) for f in range(10)]
    return gt, hyp


def straight(obj_id=0, n=50, dt=0.1, v=(1.0, 0.5), offset=(0.0, 0.0, 0.0)):
    t = np.arange(n) * dt
    p = np.column_stack([v[0] * t, v[1] * t, np.zeros(n)]) + offset
    return Trajectory(obj_id, "pedestrian", t, p, np.tile(v, (n, 1)))


class TestClearMot:
    def test_id_switch_hand_case(self):
        gt, hyp = id_switch_fixture()
        r = clear_mot(gt, hyp)
        assert r.mota == pytest.approx(0.9, abs=0.0)
        assert r.ids == 1
        assert r.frag >= 1
        assert r.motp == pytest.approx(0.1)
        assert (r.tp, r.fp, r.fn) == (10, 0, 0)

    def test_perfect(self):
        gt = [gt_obj(f) for f in range(5)]
        hyp = [MotObject(f, 3, "pedestrian", (0.0, 0.0, 0.0)) for f in range(5)]
        r = clear_mot(gt, hyp)
        assert (r.mota, r.motp, r.ids, r.frag, r.mt, r.ml) == (1.0, 0.0, 0, 0, 100.0, 0.0)

    def test_all_missed(self):
        r = clear_mot([gt_obj(f) for f in range(5)], [])
        assert r.mota == 0.0 and r.fn == 5 and r.ml == 100.0
        assert math.isnan(r.motp)

    def test_false_positives(self):
        gt = [gt_obj(f) for f in range(4)]
        hyp = [MotObject(f, 1, "pedestrian", (0.0, 0.0, 0.0)) for f in range(4)]
        hyp += [MotObject(f, 9, "pedestrian", (50.0, 0.0, 0.0)) for f in range(4)]
        r = clear_mot(gt, hyp)
        assert r.fp == 4 and r.mota == 0.0 and r.precision == 0.5

    def test_threshold_is_inclusive(self):
        gt = [gt_obj(0)]
        assert clear_mot(gt, [MotObject(0, 1, position=(1.0, 0.0, 0.0))]).tp == 1
        assert clear_mot(gt, [MotObject(0, 1, position=(1.0001, 0.0, 0.0))]).tp == 0

    def test_persistent_pairing_preferred(self):
        # hypothesis 2 comes closer at frame 2 but 1 is still valid, so no switch
        gt = [gt_obj(f) for f in range(3)]
        hyp = [MotObject(f, 1, position=(0.5, 0.0, 0.0)) for f in range(3)]
        hyp.append(MotObject(2, 2, position=(0.1, 0.0, 0.0)))
        r = clear_mot(gt, hyp)
        assert r.ids == 0 and r.fp == 1

    def test_fragmentation_counts_resume(self):
        gt = [gt_obj(f) for f in range(6)]
        hyp = [MotObject(f, 1, position=(0.0, 0.0, 0.0)) for f in (0, 1, 4, 5)]
        r = clear_mot(gt, hyp)
        assert r.frag == 1 and r.ids == 0 and r.fn == 2

    def test_mostly_tracked_and_lost(self):
        gt = [gt_obj(f, 1) for f in range(10)] + [gt_obj(f, 2, x=100.0) for f in range(10)]
        hyp = [MotObject(f, 5, position=(0.0, 0.0, 0.0)) for f in range(8)]
        hyp += [MotObject(0, 6, position=(100.0, 0.0, 0.0))]
        r = clear_mot(gt, hyp)
        assert r.mt == 50.0 and r.ml == 50.0

    def test_iou_mode(self):
        gt = [MotObject(f, 1, box=(0.0, 0.0, 10.0, 10.0)) for f in range(4)]
        hyp = [MotObject(f, 1, box=(0.0, 0.0, 10.0, 8.0)) for f in range(4)]
        r = clear_mot(gt, hyp, mode="iou2d")
        assert r.mota == 1.0 and r.motp == pytest.approx(0.8)
        assert clear_mot(gt, hyp, threshold=0.9, mode="iou2d").tp == 0

    def test_relabelling_invariant(self):
        rng = np.random.default_rng(0)
        gt, hyp = [], []
        for f in range(30):
            for oid in range(4):
                x = oid * 3.0 + 0.1 * f
                gt.append(MotObject(f, oid, position=(x, 0.0, 0.0)))
                if rng.random() < 0.85:
                    hid = oid + 10 * int(f > 15 and oid == 2)
                    hyp.append(MotObject(f, hid, position=(x + rng.normal(0, 0.3), 0.0, 0.0)))
            if rng.random() < 0.3:
                hyp.append(MotObject(f, 99, position=(rng.uniform(0, 10), 0.0, 0.0)))
        base = clear_mot(gt, hyp)
        ids = sorted({h.obj_id for h in hyp})
        for seed in range(5):
            perm = dict(zip(ids, np.random.default_rng(seed).permutation(1000)[: len(ids)].tolist()))
            relabelled = [MotObject(h.frame, perm[h.obj_id], h.cls, h.position) for h in hyp]
            assert clear_mot(gt, relabelled) == base

    def test_fp_injection_never_raises_mota(self):
        gt = [gt_obj(f) for f in range(10)]
        hyp = [MotObject(f, 1, position=(0.0, 0.0, 0.0)) for f in range(10)]
        prev = clear_mot(gt, hyp).mota
        rng = np.random.default_rng(1)
        for k in range(10):
            hyp.append(MotObject(int(rng.integers(10)), 100 + k, position=(rng.uniform(-3, 3), 0.0, 0.0)))
            cur = clear_mot(gt, hyp).mota
            assert cur <= prev
            prev = cur

    def test_empty_ground_truth(self):
        with pytest.raises(EmptyGroundTruth):
            clear_mot([], [MotObject(0, 1, position=(0.0, 0.0, 0.0))])

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            clear_mot([gt_obj(0)], [], mode="bev")

    def test_iou_values(self):
        assert iou((0, 0, 2, 2), (1, 1, 3, 3)) == pytest.approx(1 / 7)
        assert iou((0, 0, 1, 1), (2, 2, 3, 3)) == 0.0


class TestRmse:
    def test_zero_error(self):
        t = straight()
        r = rmse(t, t)
        assert (r.position_rmse, r.velocity_rmse, r.n_samples) == (0.0, 0.0, 50)

    def test_constant_offset(self):
        r = rmse(straight(), straight(offset=(0.3, 0.4, 0.0)))
        assert r.position_rmse == pytest.approx(0.5, abs=1e-12)

    def test_sinusoid_closed_form(self):
        # mean of sin^2 over whole periods is 1/2, so the RMS is A / sqrt(2)
        amplitude, n = 0.7, 400
        t = np.arange(n) * 0.01
        gt = Trajectory(0, "pedestrian", t, np.zeros((n, 3)), np.zeros((n, 2)))
        wave = amplitude * np.sin(2 * np.pi * t)
        est = Trajectory(0, "pedestrian", t, np.column_stack([wave, np.zeros(n), np.zeros(n)]),
                         np.column_stack([wave, np.zeros(n)]))
        r = rmse(gt, est)
        assert r.position_rmse == pytest.approx(amplitude / math.sqrt(2), abs=1e-6)
        assert r.velocity_rmse == pytest.approx(amplitude / math.sqrt(2), abs=1e-6)

    def test_interpolates_onto_gt_times(self):
        gt = straight(n=11)
        est = straight(n=21, dt=0.05)
        est_shift = Trajectory(0, "pedestrian", est.timestamps, est.positions + [0.2, 0, 0], est.velocities)
        assert rmse(gt, est_shift).position_rmse == pytest.approx(0.2)

    def test_only_overlap_counts(self):
        gt = straight(n=20)
        est = gt.subset(np.arange(20) >= 10)
        assert rmse(gt, est).n_samples == 10

    def test_no_overlap(self):
        with pytest.raises(NoOverlap):
            rmse(straight(n=10), straight(n=10).shifted(100.0))

    def test_buckets(self):
        gt = straight(n=100, v=(1.0, 0.0), offset=(1.0, 0.0, 0.0))  # range 1 .. 10.9 m
        est = Trajectory(0, "pedestrian", gt.timestamps, gt.positions + [0.0, 0.1, 0.0], gt.velocities)
        out = bucket_by_distance(gt, est, [0.0, 5.0, 10.0, 20.0, 30.0])
        assert list(out) == [(0.0, 5.0), (5.0, 10.0), (10.0, 20.0)]
        assert out[(0.0, 5.0)].n_samples == 40
        assert all(r.position_rmse == pytest.approx(0.1) for r in out.values())

    def test_buckets_relative_to_sensor(self):
        gt = straight(n=10, v=(0.0, 0.0), offset=(20.0, 0.0, 0.0))
        sensor = np.tile([18.0, 0.0, 0.0], (10, 1))
        assert list(bucket_by_distance(gt, gt, [0.0, 5.0, 25.0], sensor)) == [(0.0, 5.0)]

    def test_trajectory_validates(self):
        with pytest.raises(ValueError):
            Trajectory(0, "car", [0.0, 0.0], np.zeros((2, 3)), np.zeros((2, 2)))


class TestHelpers:
    def test_finite_difference_linear(self):
        t = np.arange(20) * 0.1
        p = np.column_stack([2.0 * t, -t, np.zeros(20)])
        np.testing.assert_allclose(finite_difference_velocity(t, p), np.tile([2.0, -1.0], (20, 1)), atol=1e-12)

    def _outputs(self):
        outs = []
        for k in range(5):
            t = 0.1 * k
            snaps = (
                TrackSnapshot(3, "pedestrian", 0.9, (t, 0.0, 0.0), (1.0, 0.0), (30.0, 80.0), k),
                TrackSnapshot(4, "pedestrian", 0.9, (t + 5.0, 0.0, 0.0), (1.0, 0.0), (30.0, 80.0), k),
            )
            outs.append(TrackerOutput(t, snaps if k < 4 else snaps[1:]))
        return outs

    def test_trajectories_from_outputs(self):
        trajs = trajectories_from_outputs(self._outputs())
        assert sorted(trajs) == [3, 4]
        assert len(trajs[3]) == 4 and len(trajs[4]) == 5

    def test_dominant_track(self):
        gt = straight(n=5, v=(1.0, 0.0))
        est = dominant_track(gt, self._outputs())
        assert est.obj_id == 3

    def test_tables(self):
        gt, hyp = id_switch_fixture()
        row = {"class": "pedestrian", **clear_mot(gt, hyp).as_row()}
        text = to_csv([row])
        assert text.splitlines()[0].split(",") == ["class", *MOT_COLUMNS]
        assert "0.9" in text.splitlines()[1]
        assert "mota" in format_table([row])
