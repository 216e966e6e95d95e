import filecmp
import json

import numpy as np
import pytest

from gazecap.data import (
    FEATURE_DIM,
    Dataset,
    FeatureFile,
    RunConfig,
    SynthConfig,
    read_features,
    render_scene,
    synth_generate,
    toy_extract,
    write_features,
)
from gazecap.data.features import HIST_BINS
from gazecap.data.synth import SIZE, relation


def dir_files(root):
    return sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file())


def test_synth_deterministic(tmp_path):
    cfg = SynthConfig(train=6, val=2, test=2, seed=5)
    synth_generate(tmp_path / "a", cfg)
    synth_generate(tmp_path / "b", cfg)
    files = dir_files(tmp_path / "a")
    assert files == dir_files(tmp_path / "b") and len(files) == 17
    for f in files:
        assert filecmp.cmp(tmp_path / "a" / f, tmp_path / "b" / f, shallow=False), f
    synth_generate(tmp_path / "c", SynthConfig(train=6, val=2, test=2, seed=6))
    assert (tmp_path / "a" / "captions.jsonl").read_bytes() != (tmp_path / "c" / "captions.jsonl").read_bytes()


def test_single_image_dataset(tmp_path):
    synth_generate(tmp_path, SynthConfig(train=1, val=0, test=0))
    for name in ("captions.jsonl", "fixations.jsonl", "labels.jsonl", "shapes.jsonl"):
        assert len((tmp_path / name).read_text().splitlines()) == 1
    assert len(read_features(tmp_path / "features.gfc").records) == 1
    assert len(list((tmp_path / "images").iterdir())) == 1
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 0


def test_fixations_land_on_mentioned_shapes():
    inside = total = 0
    for i in range(1000):
        s = render_scene(f"x{i}", np.random.default_rng([9, i]), difficulty=1, p_fix=0.8)
        boxes = [sh.bbox for sh in s.shapes if sh.mentioned]
        for x, y, _ in s.fixations * [SIZE, SIZE, 1]:
            total += 1
            inside += any(x0 <= x <= x1 and y0 <= y <= y1 for x0, y0, x1, y1 in boxes)
    assert inside / total >= 0.8


def test_captions_mention_exactly_the_mentioned_shapes():
    for i in range(50):
        s = render_scene(f"x{i}", np.random.default_rng([1, i]))
        a, b = [sh for sh in s.shapes if sh.mentioned]
        assert s.captions[0] == f"a {a.color} {a.kind} {relation(a, b)} a {b.color} {b.kind}"
        assert len(s.shapes) == 3 and len({sh.cell for sh in s.shapes}) == 3


def test_constant_image_features_identical():
    f = toy_extract(np.full((32, 32, 3), 128, dtype=np.uint8), (4, 4))
    assert f.shape == (16, FEATURE_DIM)
    np.testing.assert_array_equal(f, np.broadcast_to(f[0], f.shape))


def test_feature_unit_norm(rng):
    f = toy_extract(rng.integers(0, 256, size=(40, 36, 3)), (4, 3))
    np.testing.assert_allclose(np.linalg.norm(f, axis=1), 1.0, atol=1e-12)


def test_half_red_half_blue_histograms():
    img = np.zeros((8, 6, 3), dtype=np.uint8)
    img[:4] = (250, 0, 0)
    img[4:] = (0, 0, 250)
    f = toy_extract(img, (2, 1))
    # oracle: hand counts, top cell all red (R bin 7, G bin 0, B bin 0), bottom all blue;
    # both colours have intensity 250/3, so the boundary is no intensity edge
    def expected(r_bin, b_bin, edge_rows):
        v = np.zeros(FEATURE_DIM)
        v[r_bin] = 1.0
        v[HIST_BINS + 0] = 1.0
        v[2 * HIST_BINS + b_bin] = 1.0
        v[-2] = edge_rows / 4
        v[-1] = 250 / 3 / 255
        return v / np.linalg.norm(v)
    np.testing.assert_allclose(f[0], expected(7, 0, 0), atol=1e-15)
    np.testing.assert_allclose(f[1], expected(0, 7, 0), atol=1e-15)


def test_feature_file_round_trip(tmp_path, rng):
    recs = {f"i{k}": rng.normal(size=(6, 5)).astype(np.float32).astype(np.float64) for k in range(3)}
    write_features(tmp_path / "f.gfc", FeatureFile((2, 3), 5, recs, {"seed": 1}))
    back = read_features(tmp_path / "f.gfc")
    assert back.grid == (2, 3) and back.dim == 5 and back.meta == {"seed": 1}
    for k, v in recs.items():
        np.testing.assert_array_equal(back.records[k], v)
    write_features(tmp_path / "g.gfc", back)
    assert (tmp_path / "f.gfc").read_bytes() == (tmp_path / "g.gfc").read_bytes()


def test_feature_file_rejects_bad_records(tmp_path):
    with pytest.raises(ValueError):
        write_features(tmp_path / "x.gfc", FeatureFile((1, 1), 2, {"a": np.array([[np.nan, 0.0]])}))
    with pytest.raises(ValueError):
        write_features(tmp_path / "x.gfc", FeatureFile((1, 1), 2, {"a": np.zeros((2, 2))}))


def test_run_config_merge(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nvariant = split\nlam=0.5\nseed=3\ntie_gaze_weights=yes\n")
    cfg = RunConfig.load(p, {"seed": 7, "lr": None})
    assert (cfg.variant, cfg.lam, cfg.seed, cfg.tie_gaze_weights, cfg.lr) == ("split", 0.5, 7, True, RunConfig().lr)
    p.write_text("variant=split\nbogus=1\n")
    with pytest.raises(ValueError, match="bogus"):
        RunConfig.load(p)
    p.write_text("lam=abc\n")
    with pytest.raises(ValueError):
        RunConfig.load(p)


def test_dataset_examples(tmp_path):
    synth_generate(tmp_path, SynthConfig(train=4, val=2, test=1))
    ds = Dataset.load(tmp_path)
    from gazecap.captioner import Vocabulary
    vocab = Vocabulary.build(ds.training_captions(), min_freq=1)
    gaze = ds.gaze(ds.splits["train"], "fixations")
    ex = ds.examples("train", vocab, gaze)
    assert len(ex) == 8 and ex[0].tokens[-1] == vocab.eos
    assert all(e.gaze.max() == 1.0 for e in ex)
    assert len(ds.examples("val", vocab, None, per_caption=False)) == 2
    sal = ds.gaze(ds.splits["test"], "saliency")
    g = next(iter(sal.values()))
    assert g.shape == (16,) and 0 <= g.min() and g.max() <= 1
