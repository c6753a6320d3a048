import math
import os
import pathlib

import numpy as np
import pytest

import compaug

FIXTURES = pathlib.Path(os.environ.get("COMPAUG_FIXTURES", pathlib.Path(__file__).resolve().parents[1] / "fixtures"))


def test_kernel_weights():
    k = compaug.gaussian_kernel(3, 0.8)
    assert k.shape == (3, 3)
    assert math.isclose(k.sum(), 1.0, abs_tol=1e-9)
    assert abs(k[1, 1] - 0.2725) < 1e-4
    assert compaug.auto_sigma(3) == pytest.approx(0.8)


def test_image_ops_round_trip():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(9, 13, 4), dtype=np.uint8)
    assert np.array_equal(compaug.hflip(compaug.hflip(img)), img)
    assert np.array_equal(compaug.rotate_rgba(img, 0.0), img)
    assert np.array_equal(compaug.adjust_exposure(img, 1.0), img)
    rotated = compaug.rotate_rgba(img, 90.0)
    assert rotated.shape == (13, 9, 4)


def test_blur_matches_scipy_on_interior():
    ndimage = pytest.importorskip("scipy.ndimage")
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, size=(20, 20), dtype=np.uint8)
    ours = compaug.gaussian_blur(img, 3, 0.8).astype(int)
    ref = ndimage.convolve(img.astype(float), compaug.gaussian_kernel(3, 0.8), mode="nearest")
    assert np.max(np.abs(ours - np.floor(ref + 0.5))) <= 1


def test_canny_step():
    img = np.zeros((10, 20), dtype=np.uint8)
    img[:, 10:] = 255
    edges = compaug.canny(img, 50, 150)
    assert set(np.unique(edges)) <= {0, 255}
    assert set(np.nonzero(edges)[1]) <= {9, 10}


def test_tight_bbox_and_errors():
    mask = np.zeros((10, 10), dtype=np.uint8)
    mask[7, 3] = 200
    assert compaug.tight_bbox(mask) == (3, 7, 4, 8)
    with pytest.raises(compaug.Error):
        compaug.tight_bbox(np.zeros((4, 4), dtype=np.uint8))


def test_metrics():
    assert compaug.iou((0.25, 0.25, 0.5, 0.5), (0.5, 0.5, 0.5, 0.5)) == pytest.approx(1 / 7)
    kept = compaug.nms([(0, 0.9, (0.4, 0.5, 0.4, 0.4)), (0, 0.8, (0.5, 0.5, 0.4, 0.4))], 0.5)
    assert len(kept) == 1 and kept[0][1] == 0.9
    assert compaug.average_precision([(0.9, False), (0.8, True)], 2) == pytest.approx(0.25)


def test_labels_round_trip():
    text = compaug.write_yolo_labels([(1, (0.1953125, 0.21875, 0.078125, 0.1041667))])
    assert text == "1 0.195312 0.218750 0.078125 0.104167\n"
    assert compaug.parse_yolo_labels(text, 2)[0][0] == 1


def test_fixture_counts_and_golden_eval():
    counts = compaug.summarize(FIXTURES / "split_counts_baseline" / "data.yaml")
    assert counts == {"commercial": (218, 62, 36), "military": (22, 9, 6)}
    report = compaug.evaluate(FIXTURES / "eval_golden" / "preds", FIXTURES / "eval_golden" / "data.yaml")
    assert report["map50"] == pytest.approx((5 / 6 + 0.25) / 2)


def test_compose_deterministic():
    fg = np.zeros((12, 20, 4), dtype=np.uint8)
    fg[2:10, 2:18] = (220, 220, 230, 255)
    bg = np.full((60, 80, 3), 150, dtype=np.uint8)
    a = compaug.compose([fg], [1], [bg], 6, seed=3, threads=1)
    b = compaug.compose([fg], [1], [bg], 6, seed=3, threads=4)
    assert len(a) == 6
    for (ia, ca, ba), (ib, cb, bb) in zip(a, b):
        assert np.array_equal(ia, ib) and ca == cb == 1 and ba == bb


def test_train_toy_snapshot():
    result = compaug.train_toy(epochs=40, patience=5, seed=2)
    assert result["best_val_loss"] == min(result["val_loss"])
