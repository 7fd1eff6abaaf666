import numpy as np
import pytest

from irpseudo.core import BinaryMask, PointLabel, UpdateConfig
from irpseudo.metrics import iou
from irpseudo.b2m import point_to_mask
from irpseudo.pmu import connected_components, update_mask
from irpseudo.synth import (
    CorruptionSpec,
    SceneSpec,
    TargetSpec,
    centroid_labels,
    corrupt_prediction,
    generate_scene,
    jitter_labels,
    make_rng,
    random_scene_spec,
    round_half_up,
)


def one_rect(**kw):
    return SceneSpec(64, 64, 30, targets=(TargetSpec((20, 20), (3, 3), 200),), **kw)


def test_empty_scene():
    img, gt, labels = generate_scene(SceneSpec(16, 16, 30))
    assert gt.area == 0 and labels == []
    assert np.all(img.data == 30)


def test_rectangle_construction():
    img, gt, labels = generate_scene(one_rect())
    assert gt.area == 49 and labels == [PointLabel(20, 20)]
    assert img.data[20, 20] == 200 and img.data[0, 0] == 30


def test_determinism_bit_exact():
    spec = one_rect(noise_std=4.0, seed=7)
    a, b = generate_scene(spec), generate_scene(spec)
    assert np.array_equal(a[0].data, b[0].data) and a[1] == b[1] and a[2] == b[2]
    c = generate_scene(one_rect(noise_std=4.0, seed=8))
    assert not np.array_equal(a[0].data, c[0].data)


def test_noise_is_integer_and_clipped():
    img, _, _ = generate_scene(SceneSpec(40, 40, 2, noise_std=30, seed=1))
    assert np.array_equal(img.data, np.rint(img.data))
    assert img.data.min() >= 0 and img.data.max() <= 255


def test_blob_support_is_threshold_ellipse():
    spec = SceneSpec(64, 64, 0, targets=(TargetSpec((30, 30), (4, 2), 100, "gaussian_blob"),))
    img, gt, _ = generate_scene(spec)
    ys, xs = np.nonzero(gt.data)
    assert xs.min() == 26 and xs.max() == 34 and ys.min() == 28 and ys.max() == 32


def test_spec_dict_round_trip():
    spec = one_rect(noise_std=2.5, gradient=(0.1, 0.2), seed=3)
    assert SceneSpec.from_dict(spec.to_dict()) == spec


def test_round_half_up():
    assert [round_half_up(v) for v in (0.5, 1.5, 2.49, -0.5)] == [1, 2, 2, 0]


def test_centroid_labels_even_rect():
    gt = np.zeros((10, 10), bool)
    gt[2:4, 2:4] = True  # centroid (2.5, 2.5)
    assert centroid_labels(BinaryMask(gt)) == [PointLabel(3, 3)]


class TestJitter:
    def setup_method(self):
        _, self.gt, self.labels = generate_scene(one_rect())
        self.comps = connected_components(self.gt)

    def test_zero_fraction(self):
        assert jitter_labels(self.labels, self.comps, 0.0) == self.labels

    def test_same_seed(self):
        assert jitter_labels(self.labels, self.comps, 0.5, seed=4) == jitter_labels(self.labels, self.comps, 0.5, seed=4)

    def test_stays_inside_component(self):
        for seed in range(50):
            (p,) = jitter_labels(self.labels, self.comps, 2.0, seed=seed, shape=self.gt.shape)
            assert self.gt.data[p.y, p.x]

    def test_label_component_count_mismatch(self):
        with pytest.raises(ValueError):
            jitter_labels(self.labels, [], 0.1)


class TestCorruption:
    def setup_method(self):
        spec = random_scene_spec(make_rng(11), width=256, height=256, n_targets=3, margin=40, seed=5)
        _, self.gt, self.labels = generate_scene(spec)

    def test_identity(self):
        assert corrupt_prediction(self.gt, self.labels, CorruptionSpec()) == self.gt

    def test_full_drop_leaves_only_false_components(self):
        out = corrupt_prediction(self.gt, self.labels, CorruptionSpec(drop_probability=1, false_component_count=2))
        assert not np.any(out.data & self.gt.data)
        assert len(connected_components(out)) == 2

    def test_faf_removes_exactly_injected(self):
        spec = CorruptionSpec(false_component_count=3, false_component_distance=100, seed=2)
        pred = corrupt_prediction(self.gt, self.labels, spec)
        assert len(connected_components(pred)) == len(self.labels) + 3
        res = update_mask(BinaryMask.zeros(256, 256), pred, self.labels, UpdateConfig(r=30))
        assert res.erased_components == 3
        assert res.filtered == self.gt

    def test_dilation_grows_targets(self):
        pred = corrupt_prediction(self.gt, self.labels, CorruptionSpec(dilation=1))
        assert self.gt.issubset(pred) and pred.area > self.gt.area

    def test_crowded_scene_errors(self):
        gt = BinaryMask.zeros(10, 10)
        with pytest.raises(RuntimeError):
            corrupt_prediction(gt, [PointLabel(5, 5)], CorruptionSpec(false_component_count=1, max_tries=50))


def test_noise_free_rectangles_recovered_exactly():
    rng = make_rng(0)
    for _ in range(10):
        img, gt, labels = generate_scene(random_scene_spec(rng))
        assert iou(point_to_mask(img, labels), gt) == 1.0
