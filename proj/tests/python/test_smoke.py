"""Smoke tests for the compiled python module."""

import math

import numpy as np
import pytest

import boxseg


def test_project_and_back_project():
    mask = np.array([[0.2, 0.8], [0.5, 0.1]])
    row, col = boxseg.project(mask)
    assert row == [0.5, 0.8]
    assert col == [0.8, 0.5]
    back = boxseg.back_project(row, col)
    np.testing.assert_array_equal(back, [[0.5, 0.8], [0.5, 0.5]])


def test_m2b_dominates_and_is_idempotent():
    rng = np.random.default_rng(0)
    p = rng.random((9, 7))
    t = boxseg.m2b(p)
    assert (t >= p).all()
    np.testing.assert_array_equal(boxseg.m2b(t), t)


def test_m2b_rectangle_fixed_point():
    p = np.zeros((8, 8))
    p[2:6, 3:7] = 1.0
    np.testing.assert_array_equal(boxseg.m2b(p), p)


def test_m2b_backward_routes_to_argmax():
    p = np.array([[0.2, 0.8], [0.5, 0.1]])
    g = boxseg.m2b_backward(p, np.ones((2, 2)))
    # T = [[0.5, 0.8], [0.5, 0.5]]: three outputs trace back to p[1,0], one to p[0,1]
    np.testing.assert_array_equal(g, [[0.0, 1.0], [3.0, 0.0]])


def test_losses_match_reference_values():
    target = np.ones((2, 2))
    assert boxseg.bce_loss(np.full((2, 2), 0.5), target) == pytest.approx(math.log(2), rel=1e-12)
    assert boxseg.bce_loss(np.full((2, 2), 0.9), target) == pytest.approx(-math.log(0.9), rel=1e-12)
    assert boxseg.dice_loss(np.zeros((3, 3)), _three_ones()) == pytest.approx(0.75)

    box = boxseg.render_boxes(2, 2, [(0, 0, 0, 1)])
    p1 = np.array([[1.0, 0.0], [0.0, 0.0]])
    p2 = np.array([[0.5, 0.0], [0.0, 1.0]])
    assert boxseg.sc_loss(p1, p2, box) == pytest.approx(0.25)

    report = boxseg.total_loss(p1, p2, box)
    assert report["total"] == pytest.approx(report["sum"] + report["sc"], rel=1e-15)


def _three_ones():
    t = np.zeros((3, 3))
    t[0, 0] = t[1, 1] = t[2, 0] = 1.0
    return t


def test_total_loss_grads_shapes():
    rng = np.random.default_rng(1)
    p1, p2 = rng.random((6, 6)), rng.random((6, 6))
    box = boxseg.render_boxes(6, 6, [(1, 1, 4, 4)])
    report, d1, d2 = boxseg.total_loss_grads(p1, p2, box)
    assert d1.shape == (6, 6) and d2.shape == (6, 6)
    assert report["total"] > 0


def test_metrics_identity():
    rng = np.random.default_rng(2)
    pred = rng.random((10, 10))
    gt = (rng.random((10, 10)) > 0.5).astype(float)
    dice = boxseg.dice_metric(pred, gt)
    iou = boxseg.iou_metric(pred, gt)
    assert dice == pytest.approx(2 * iou / (1 + iou), abs=1e-12)
    assert dice >= iou


def test_mask_to_boxes_and_render():
    m = np.zeros((6, 6))
    m[1:3, 1:3] = 1
    m[4, 5] = 1
    boxes = boxseg.mask_to_boxes(m)
    assert boxes == [(1, 1, 2, 2), (4, 5, 4, 5)]
    np.testing.assert_array_equal(boxseg.render_boxes(6, 6, boxes), m)


def test_generate_synthetic_deterministic():
    a = boxseg.generate_synthetic(count=2, image_size=64, seed=11)
    b = boxseg.generate_synthetic(count=2, image_size=64, seed=11)
    for sa, sb in zip(a, b):
        np.testing.assert_array_equal(sa["image"], sb["image"])
        np.testing.assert_array_equal(sa["mask"], sb["mask"])
        assert sa["boxes"] == sb["boxes"]
    sample = a[0]
    assert sample["image"].shape == (3, 64, 64)
    assert set(np.unique(sample["mask"])) <= {0.0, 1.0}
    assert boxseg.mask_to_boxes(sample["mask"]) == sample["boxes"]


def test_errors_are_raised():
    with pytest.raises(ValueError):
        boxseg.bce_loss(np.zeros((2, 2)), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        boxseg.m2b(np.full((2, 2), 2.0))
