import numpy as np
import pytest

from analysis_fixture import PALETTE, REGION, make_case
from gazecap.analysis import (
    ConstantClassifier,
    ImportanceMap,
    LabelRecord,
    RegionBrightnessClassifier,
    RegionOracleClassifier,
    masked_accuracy_curve,
    mean_importance_overlay,
    occlusion_importance,
    positive_mass_in_region,
    rank_equalize,
    read_labels,
    top_k,
    unmasked_accuracy,
    write_labels,
)
from gazecap.gaze import center_map

RATIOS = [round(0.05 * i, 2) for i in range(1, 20)]


def test_top_k_tie_break():
    np.testing.assert_array_equal(top_k(np.array([0.2, 0.5, 0.5, 0.1]), 2), [1, 2])
    np.testing.assert_array_equal(top_k(np.zeros(4), 3), [0, 1, 2])


def test_full_visibility_equals_unmasked():
    images, labels, on, _ = make_case()
    clf = RegionOracleClassifier(REGION, PALETTE)
    curve = masked_accuracy_curve(images, on, labels, clf, [1.0])
    assert curve[0].accuracy == unmasked_accuracy(images, labels, clf) == 1.0


def test_constant_classifier_flat_curve():
    images, labels, on, _ = make_case()
    clf = ConstantClassifier([0.1, 0.3, 0.3, 0.0])
    accs = {p.accuracy for p in masked_accuracy_curve(images, on, labels, clf, [0.0] + RATIOS + [1.0])}
    assert len(accs) == 1


def test_on_target_dominates_off_target():
    images, labels, on, off = make_case()
    clf = RegionOracleClassifier(REGION, PALETTE)
    on_curve = masked_accuracy_curve(images, on, labels, clf, RATIOS)
    off_curve = masked_accuracy_curve(images, off, labels, clf, RATIOS)
    assert all(a.accuracy >= b.accuracy for a, b in zip(on_curve, off_curve))
    assert on_curve[0].accuracy > off_curve[0].accuracy
    assert all(p.n_images == 24 for p in on_curve)


def test_missing_map_or_labels():
    images, labels, on, _ = make_case(3)
    clf = ConstantClassifier([1.0])
    with pytest.raises(KeyError):
        masked_accuracy_curve(images, {}, labels, clf, [0.5])
    with pytest.raises(KeyError):
        masked_accuracy_curve(images, on, {}, clf, [0.5])


def test_occlusion_ignoring_classifier_zero():
    img = make_case(1)[0]["im000"]
    imp = occlusion_importance(img, 1, ConstantClassifier([0.2, 0.9]), window=8, stride=4)
    np.testing.assert_array_equal(imp.values, 0.0)
    assert imp.values.shape == (7, 7)


def test_occlusion_brightness_region():
    img = np.full((16, 16, 3), 50.0)
    img[4:10, 4:10] = 250.0
    region = (4, 10, 4, 10)
    imp = occlusion_importance(img, 0, RegionBrightnessClassifier(region), window=2, stride=2, fill=0.0)
    py, px = imp.positions()
    for a, y in enumerate(py):
        for b, x in enumerate(px):
            inside = 4 <= y and y + 2 <= 10 and 4 <= x and x + 2 <= 10
            outside = y + 2 <= 4 or y >= 10 or x + 2 <= 4 or x >= 10
            if inside:
                assert imp.values[a, b] > 0
            if outside:
                assert imp.values[a, b] == 0


def test_occlusion_matches_brute_force_8x8():
    rng = np.random.default_rng(2)
    img = rng.integers(0, 256, size=(8, 8, 3)).astype(float)

    def clf(x):
        return np.array([x[2:6, 1:5].mean(), x[:, :, 0].sum() * 1e-3, x[5, 5, 2]])

    imp = occlusion_importance(img, 1, clf, window=3, stride=2, fill=7.0)
    expected = np.zeros((3, 3))
    for a, y in enumerate(range(0, 6, 2)):
        for b, x in enumerate(range(0, 6, 2)):
            occ = img.copy()
            occ[y:y + 3, x:x + 3] = 7.0
            expected[a, b] = clf(img)[1] - clf(occ)[1]
    np.testing.assert_array_equal(imp.values, expected)


def test_occlusion_mass_concentrates_on_region():
    images, labels, _, _ = make_case(6)
    clf = RegionOracleClassifier(REGION, PALETTE)
    for iid, img in images.items():
        imp = occlusion_importance(img, labels[iid][0], clf, window=6, stride=2, fill=118.0)
        assert imp.values.max() > 0
        assert positive_mass_in_region(imp, REGION) >= 0.9


def test_occluder_too_large():
    with pytest.raises(ValueError):
        occlusion_importance(np.zeros((4, 4, 3)), 0, ConstantClassifier([1.0]), window=5, stride=1)


def _imp(values):
    return ImportanceMap(np.asarray(values, dtype=float), 4, 2, (10, 10))


def test_overlay_mean_and_equalization():
    mean, render = mean_importance_overlay([_imp([[1, 2], [3, 4]]), _imp([[3, 2], [1, 0]])])
    np.testing.assert_array_equal(mean, [[2, 2], [2, 2]])
    np.testing.assert_array_equal(render, 0.5)
    mean, render = mean_importance_overlay([_imp([[0.3, -1.0], [5.0, 0.2]])])
    np.testing.assert_allclose(render, [[2 / 3, 0], [1, 1 / 3]])


def test_equalization_preserves_order(rng):
    x = rng.normal(size=(5, 6))
    r = rank_equalize(x)
    assert r.min() == 0.0 and r.max() == 1.0
    order = np.argsort(x.reshape(-1))
    assert np.all(np.diff(r.reshape(-1)[order]) > 0)


def test_overlay_geometry_mismatch():
    with pytest.raises(ValueError):
        mean_importance_overlay([_imp([[1, 2]]), ImportanceMap(np.zeros((1, 2)), 3, 2, (10, 10))])


def test_labels_round_trip(tmp_path):
    recs = [LabelRecord("a", [1, 2], [1], [2]), LabelRecord("b", [0])]
    write_labels(tmp_path / "l.jsonl", recs)
    back = read_labels(tmp_path / "l.jsonl")
    assert back["a"] == recs[0] and back["b"].labels == [0]


def test_center_map_as_importance():
    images, labels, _, _ = make_case(4)
    maps = {i: center_map(32, 32) for i in images}
    curve = masked_accuracy_curve(images, maps, labels, RegionOracleClassifier(REGION, PALETTE), [0.05, 1.0])
    assert curve[-1].accuracy == 1.0
