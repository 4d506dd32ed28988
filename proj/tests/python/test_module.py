import json

import numpy as np
import pytest

fm = pytest.importorskip("filmetric")


@pytest.fixture(scope="module")
def cmap():
    return fm.build_colormap()


def test_zero_thickness_is_bare_interface():
    assert fm.reflectance(550.0, 0.0) == pytest.approx(((1 - 1.42) / (1 + 1.42)) ** 2, abs=1e-12)


def test_colormap_shape(cmap, tmp_path):
    assert len(cmap) == 5001
    assert cmap.rgb.shape == (5001, 3)
    assert cmap.rgb.max() == 1.0
    assert cmap.thickness_nm[-1] == 5000.0
    assert "global_max" in cmap.note
    cmap.save(tmp_path / "cm.txt")
    back = fm.Colormap.load(tmp_path / "cm.txt")
    assert np.allclose(back.rgb, cmap.rgb, rtol=1e-8, atol=1e-12)
    assert np.allclose(cmap.lookup(1234.0), cmap.rgb[1234])


def test_round_trip(cmap):
    unit = fm.gen_perlin(96, 96, octaves=2, scale_px=120.0, seed=3)
    assert unit.shape == (96, 96) and unit.min() == 0.0 and unit.max() == 1.0
    gt = fm.apply_range(unit, seed=11, span_min_nm=500.0, span_max_nm=1500.0)
    img = fm.render(gt, cmap)
    assert img.shape == (96, 96, 3) and img.dtype == np.uint8
    res = fm.reconstruct_regularized(img, cmap)
    assert np.sqrt(np.mean((res["field"] - gt) ** 2)) < 30.0
    assert res["energy_trace"] == sorted(res["energy_trace"], reverse=True)
    naive = fm.reconstruct_naive(fm.add_gaussian_noise(img, 10.0, seed=1), cmap)
    assert naive.shape == gt.shape


def test_masked_reconstruction(cmap):
    gt = fm.apply_range(fm.gen_gaussian(48, 48, seed=4), seed=5)
    img = fm.render(gt, cmap)
    mask = np.ones((48, 48), dtype=bool)
    mask[:8, :8] = False
    res = fm.reconstruct_regularized(img, cmap, mask=mask)
    assert res["mean_nm"] == pytest.approx(res["field"][mask].mean())


def test_evaluate_closed_form():
    gt = np.linspace(100.0, 3000.0, 256).reshape(16, 16)
    r = fm.evaluate(1.1 * gt, gt)
    assert r["abs_rel"] == pytest.approx(0.1, abs=1e-12)
    assert r["silog"] == pytest.approx(0.15 * np.log(1.1) ** 2, abs=1e-12)
    assert r["rms"] == r["rmse"]


def test_errors_map_to_python_types():
    gt = np.full((16, 16), 100.0)
    bad = gt.copy()
    bad[0, 0] = -1.0
    with pytest.raises(fm.NumericalError):
        fm.evaluate(gt, bad)
    with pytest.raises(ArithmeticError):
        fm.evaluate(gt, bad)
    with pytest.raises(ValueError):
        fm.evaluate(gt, gt, clamp_lo_um=5.0, clamp_hi_um=1.0)
    with pytest.raises(fm.IoError):
        fm.load_dataset("/nonexistent/dataset")


def test_dataset_round_trip(tmp_path):
    assert fm.family_counts(10, [0.3, 0.3, 0.4]) == [3, 3, 4]
    spec = {"total_count": 4, "field_size": 32, "augment": {"preset": "none"}}
    man = fm.generate_dataset(spec, tmp_path / "ds")
    assert man["format"] == "filmetric-dataset/1"
    assert len(man["items"]) == 4
    entries = fm.load_dataset(tmp_path / "ds")
    assert [e["id"] for e in entries] == [it["id"] for it in man["items"]]
    for e in entries:
        assert e["image"].shape == (32, 32, 3)
        assert e["field"].min() >= 0.0 and e["field"].max() <= 4000.0
        assert e["mask"].all()
    # Same spec, same bytes.
    again = fm.generate_dataset(json.dumps(spec), tmp_path / "ds2")
    assert again["items"] == man["items"]
