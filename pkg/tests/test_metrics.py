import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irpseudo.core import BinaryMask, DimensionMismatchError, EvalConfig
from irpseudo.metrics import (
    CATEGORIES,
    category_overlaps,
    evaluate_dataset,
    false_alarm_rate,
    iou,
    probability_of_detection,
    size_category,
)
from irpseudo.pmu import connected_components


def overlap_fixture(inter, union, gt_area):
    """Masks on a 64x64 grid with the given intersection/union counts."""
    pred_only = union - gt_area
    flat_gt = np.zeros(64 * 64, bool)
    flat_pred = np.zeros(64 * 64, bool)
    flat_gt[:gt_area] = True
    flat_pred[gt_area - inter:gt_area + pred_only] = True
    return BinaryMask(flat_pred.reshape(64, 64)), BinaryMask(flat_gt.reshape(64, 64))


class TestIoU:
    def test_identity_and_disjoint(self):
        a = BinaryMask(np.eye(5, dtype=bool))
        assert iou(a, a) == 1.0
        assert iou(a, BinaryMask(np.fliplr(np.eye(5, dtype=bool)) & ~np.eye(5, dtype=bool))) == 0.0

    @pytest.mark.parametrize("inter, union, expected", [(226, 312, 0.724), (226, 496, 0.456)])
    def test_reference_ratios(self, inter, union, expected):
        pred, gt = overlap_fixture(inter, union, 250)
        assert iou(pred, gt) == pytest.approx(inter / union)
        assert round(iou(pred, gt), 3) == expected

    def test_both_empty(self):
        assert iou(BinaryMask.zeros(3, 3), BinaryMask.zeros(3, 3)) == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            iou(BinaryMask.zeros(3, 3), BinaryMask.zeros(3, 4))


class TestFalseAlarm:
    def test_identity(self):
        gt = BinaryMask(np.eye(8, dtype=bool))
        assert false_alarm_rate(gt, gt) == 0.0

    def test_one_pixel_in_512(self):
        pred = np.zeros((512, 512), bool)
        pred[3, 3] = True
        fa = false_alarm_rate(BinaryMask(pred), BinaryMask.zeros(512, 512))
        assert fa == 1 / 262144
        assert abs(fa * 1e6 - 3.81) / 3.81 < 0.01

    def test_saturation(self):
        assert false_alarm_rate(BinaryMask(np.ones((4, 4), bool)), BinaryMask.zeros(4, 4)) == 1.0


class TestPd:
    def test_identity(self):
        gt = np.zeros((40, 40), bool)
        gt[5:8, 5:8] = gt[20:25, 30:33] = True
        m = BinaryMask(gt)
        assert probability_of_detection(m, m) == (2, 2)

    def test_merged_adjacent_targets(self):
        gt = np.zeros((30, 30), bool)
        gt[10:13, 5:8] = True
        gt[10:13, 9:12] = True  # one-pixel gap keeps them separate
        pred = np.zeros_like(gt)
        pred[10:13, 5:12] = True  # bridged into one blob
        assert probability_of_detection(BinaryMask(pred), BinaryMask(gt)) == (1, 2)

    def test_empty_prediction(self):
        gt = np.zeros((10, 10), bool)
        gt[4, 4] = True
        assert probability_of_detection(BinaryMask.zeros(10, 10), BinaryMask(gt)) == (0, 1)

    def test_one_to_one(self):
        # one prediction near two targets may only claim one
        gt = np.zeros((10, 10), bool)
        gt[5, 3] = gt[5, 7] = True
        pred = np.zeros_like(gt)
        pred[5, 5] = True
        assert probability_of_detection(BinaryMask(pred), BinaryMask(gt)) == (1, 2)

    def test_distance_threshold(self):
        gt = np.zeros((10, 10), bool)
        gt[0, 0] = True
        pred = np.zeros_like(gt)
        pred[2, 1] = True  # L1 = 3
        assert probability_of_detection(BinaryMask(pred), BinaryMask(gt))[0] == 1
        assert probability_of_detection(BinaryMask(pred), BinaryMask(gt), EvalConfig(d_match=2.9))[0] == 0

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.sampled_from([4, 8]))
    def test_hits_bounded_by_both_component_counts(self, seed, conn):
        rng = np.random.default_rng(seed)
        gt, pred = BinaryMask(rng.random((20, 20)) < 0.1), BinaryMask(rng.random((20, 20)) < 0.1)
        cfg = EvalConfig(connectivity=conn)
        hits, targets = probability_of_detection(pred, gt, cfg)
        assert targets == len(connected_components(gt, conn))
        assert hits <= min(targets, len(connected_components(pred, conn)))
        assert probability_of_detection(gt, gt, cfg) == (targets, targets)


@pytest.mark.parametrize("area, cat", [(1, "Point"), (9, "Point"), (10, "Spot"), (81, "Spot"), (82, "Extended")])
def test_size_category(area, cat):
    assert size_category(area) == cat


def test_category_crop_ignores_other_targets():
    gt = np.zeros((40, 40), bool)
    gt[10, 10] = True            # Point
    gt[10:15, 14:19] = True      # Spot (25 px), within the Point's margin
    pred = gt.copy()
    cats = category_overlaps(BinaryMask(pred), BinaryMask(gt))
    assert sorted(cats) == [("Point", 1, 1), ("Spot", 25, 25)]


class TestEvaluateDataset:
    def test_perfect_pair(self):
        gt = np.zeros((16, 16), bool)
        gt[4:7, 4:7] = True
        r = evaluate_dataset([(BinaryMask(gt), BinaryMask(gt))])
        assert (r.iou, r.pd, r.fa) == (1.0, 1.0, 0.0)
        assert r.headline().startswith("IoU 100.00  Pd 100.00  Fa 0.00")
        assert set(r.per_category) == set(CATEGORIES)
        assert r.per_category["Point"]["count"] == 1 and r.per_category["Spot"]["iou"] is None

    def test_micro_average(self):
        # intersections (3, 1), unions (4, 4)
        g1, p1, g2, p2 = (np.zeros((4, 4), bool) for _ in range(4))
        g1[0, :3] = True
        p1[0, :4] = True
        g2[0, :2] = True
        p2[0, 1:4] = True
        r = evaluate_dataset([(BinaryMask(p1), BinaryMask(g1)), (BinaryMask(p2), BinaryMask(g2))])
        assert (r.totals["intersection"], r.totals["union"]) == (4, 8)
        assert r.iou == 0.5

    def test_empty_input(self):
        with pytest.raises(ValueError):
            evaluate_dataset([])

    def test_no_targets_pd_is_one(self):
        r = evaluate_dataset([(BinaryMask.zeros(5, 5), BinaryMask.zeros(5, 5))])
        assert r.pd == 1.0 and r.n_targets == 0
