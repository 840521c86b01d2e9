import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import rangesr as rs
from rangesr.errors import EmptyInputError
from rangesr.labeling import (
    CostParams,
    LabelSet,
    assign_median_segment,
    assign_planar_segment,
    build_label_set,
    context_weight,
    lower_median,
    median_cost,
    median_label,
    planar_cost,
)
from rangesr.planefit import Plane

from oracles import (
    lower_weighted_median,
    scan_assign_median,
    scan_assign_planar,
    scan_planar_label,
)


def _mask_pair(observed_2d):
    state = np.where(observed_2d, rs.OBSERVED, rs.MISSING).astype(np.uint8)
    return rs.VisibilityMask(state)


def test_build_label_set_examples():
    vals = np.array([[10.0, 20.0]], dtype=np.float32)
    mask = _mask_pair(np.array([[True, True]]))
    ls = build_label_set(rs.RangeImage(vals), mask, quant=10.0)
    np.testing.assert_array_equal(ls.values, [10, 20])

    vals = np.array([[0.0, 255.0]], dtype=np.float32)
    ls = build_label_set(rs.RangeImage(vals), _mask_pair(np.array([[True, True]])), quant=1.0)
    assert len(ls) == 256
    np.testing.assert_array_equal(ls.values, np.arange(256, dtype=np.float32))


def test_build_label_set_contains_every_observed_value():
    rng = np.random.default_rng(0)
    vals = rng.uniform(3.0, 90.0, size=(8, 8)).astype(np.float32)
    observed = rng.random((8, 8)) < 0.4
    observed.flat[0] = True
    ls = build_label_set(rs.RangeImage(vals), _mask_pair(observed), quant=2.5)
    assert set(vals[observed].tolist()) <= set(ls.values.tolist())
    assert (np.diff(ls.values) > 0).all()


def test_build_label_set_needs_observed():
    with pytest.raises(EmptyInputError):
        build_label_set(
            rs.RangeImage(np.zeros((2, 2), np.float32)),
            _mask_pair(np.zeros((2, 2), bool)),
            quant=1.0,
        )


def test_planar_cost_examples():
    assert planar_cost(20.0, 20.0, [10.0, 30.0], 0.5) == 10.0
    assert planar_cost(5.0, 5.0, [], 0.5) == 0.0
    costs = [planar_cost(z, 20.0, [10.0, 30.0], 0.5) for z in (10.0, 20.0, 30.0)]
    assert costs == [20.0, 10.0, 20.0]
    labels = np.array([10.0, 20.0, 30.0])
    assert scan_planar_label(labels, 20.0, [10.0, 30.0], 0.5) == 20.0


def test_context_weight_examples():
    assert context_weight((100, 150, 200), (110, 140, 195), 1.0) == pytest.approx(0.04)
    assert context_weight((7, 7, 7), (7, 7, 7), 1.0, color_eps=1.0) == 1.0
    assert context_weight((0, 0, 0), (4, 0, 0), 2.0) == 0.5


def test_median_cost_examples():
    assert median_cost(15.0, 15.0, []) == 0.0
    assert median_cost(15.0, 15.0, [(10.0, 0.5), (20.0, 0.5)]) == 5.0


def test_lower_median():
    assert lower_median([5.0, 9.0, 30.0]) == 9.0
    assert lower_median([4.0, 8.0]) == 4.0
    assert lower_median([3.0]) == 3.0


def _random_instance(seed, h=16, w=16, n_labels=24):
    """Random segmentation + visibility + integer range data + label set."""
    rng = np.random.default_rng(seed)
    sites = rng.integers(0, [h, w], size=(3, 2))
    ys, xs = np.mgrid[0:h, 0:w]
    d = (ys[..., None] - sites[:, 0]) ** 2 + (xs[..., None] - sites[:, 1]) ** 2
    ids = np.argmin(d, axis=2).astype(np.int32)
    ids = np.unique(ids, return_inverse=True)[1].reshape(h, w).astype(np.int32)
    visible = rng.random((h, w)) < 0.35
    missing = ~visible
    values = rng.integers(0, 50, size=(h, w)).astype(np.float32)
    labels = LabelSet(np.unique(rng.integers(0, 64, size=n_labels)).astype(np.float32))
    color = rs.ColorImage(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))
    state = np.where(visible, rs.OBSERVED, rs.MISSING).astype(np.uint8)
    segmap = rs.segment_stats(ids, color, rs.VisibilityMask(state))
    return rng, ids, visible, missing, values, labels, segmap


def test_assign_planar_constant_plane_no_neighbors():
    h = w = 6
    seg = np.ones((h, w), dtype=bool)
    missing = np.ones((h, w), dtype=bool)
    visible = np.zeros((h, w), dtype=bool)
    values = np.zeros((h, w), dtype=np.float32)
    labels = LabelSet(np.array([10.0, 42.0, 60.0], dtype=np.float32))
    ys, xs, got = assign_planar_segment(
        seg, missing, visible, values, Plane(0, 0, 42, 3), labels, lambda_p=0.5
    )
    assert ys.size == h * w
    assert (got == 42.0).all()


def test_assign_planar_lambda_zero_takes_nearest_plane_value():
    h = w = 5
    seg = np.ones((h, w), dtype=bool)
    missing = np.ones((h, w), dtype=bool)
    visible = np.zeros((h, w), dtype=bool)
    values = np.zeros((h, w), dtype=np.float32)
    labels = LabelSet(np.arange(0.0, 30.0, 2.0, dtype=np.float32))
    plane = Plane(0.5, 0.25, 3.0, 3)
    ys, xs, got = assign_planar_segment(seg, missing, visible, values, plane, labels, 0.0)
    z_pl = 0.5 * xs + 0.25 * ys + 3.0
    expect = labels.values[np.argmin(np.abs(labels.values[None, :] - z_pl[:, None]), axis=1)]
    np.testing.assert_array_equal(got, expect)


def test_assign_planar_matches_scan_oracle():
    for seed in range(8):
        rng, ids, visible, missing, values, labels, _ = _random_instance(seed)
        plane = Plane(
            float(rng.integers(-8, 9)) / 4.0,
            float(rng.integers(-8, 9)) / 4.0,
            float(rng.integers(0, 200)) / 4.0,
            3,
        )
        lam = float(rng.choice([0.25, 0.5, 1.0, 2.0]))
        seg_mask = ids == 0
        ys, xs, got = assign_planar_segment(
            seg_mask, missing, visible, values, plane, labels, lam,
            seg_ids=ids, seg_id=0,
        )
        expect = scan_assign_planar(
            seg_mask, missing, visible, values, (plane.a, plane.b, plane.c),
            labels.values, lam,
        )
        assert len(expect) == ys.size
        for y, x, v in zip(ys, xs, got):
            assert expect[(int(y), int(x))] == float(v)


def test_assign_planar_never_touches_visible_pixels():
    _, ids, visible, missing, values, labels, _ = _random_instance(99)
    plane = Plane(0.0, 0.0, 25.0, 3)
    ys, xs, _ = assign_planar_segment(
        ids == 1, missing, visible, values, plane, labels, 0.5, seg_ids=ids, seg_id=1
    )
    assert not visible[ys, xs].any()
    assert (ids[ys, xs] == 1).all()


def test_assign_planar_outputs_subset_of_label_set():
    _, ids, visible, missing, values, labels, _ = _random_instance(123)
    plane = Plane(1.0, -1.0, 20.0, 3)
    _, _, got = assign_planar_segment(
        ids == 2, missing, visible, values, plane, labels, 0.5, seg_ids=ids, seg_id=2
    )
    assert set(np.asarray(got).tolist()) <= set(labels.values.tolist())


def test_assign_median_single_visible_value():
    ids = np.zeros((3, 3), dtype=np.int32)
    visible = np.zeros((3, 3), dtype=bool)
    visible[1, 1] = True
    missing = ~visible
    values = np.zeros((3, 3), dtype=np.float32)
    values[1, 1] = 7.0
    color = rs.ColorImage(np.zeros((3, 3, 3), dtype=np.uint8))
    state = np.where(visible, rs.OBSERVED, rs.MISSING).astype(np.uint8)
    segmap = rs.segment_stats(ids, color, rs.VisibilityMask(state))
    labels = LabelSet(np.array([0.0, 6.0, 20.0], dtype=np.float32))
    ys, xs, got = assign_median_segment(
        0, segmap, missing, visible, values, labels, CostParams()
    )
    assert (got == 6.0).all()  # nearest label to the lone visible value 7


def test_assign_median_matches_scan_oracle():
    params = CostParams(lambda_m=1.0, color_eps=1.0)
    for seed in range(8):
        _, ids, visible, missing, values, labels, segmap = _random_instance(seed + 50)
        for seg_id in range(segmap.n_segments):
            if segmap.visible_count[seg_id] == 0:
                continue
            ys, xs, got = assign_median_segment(
                seg_id, segmap, missing, visible, values, labels, params
            )
            expect = scan_assign_median(
                seg_id, ids, visible, values, segmap.mean_rgb,
                [set(a) for a in segmap.adjacency], labels.values,
                params.lambda_m, params.color_eps,
            )
            if ys.size:
                assert (got == expect).all()


def test_median_label_skips_adjacent_without_visible():
    ids = np.array([[0, 1, 2]], dtype=np.int32)
    visible = np.array([[True, False, True]])
    values = np.array([[10.0, 0.0, 30.0]], dtype=np.float32)
    color = rs.ColorImage(np.zeros((1, 3, 3), dtype=np.uint8))
    state = np.where(visible, rs.OBSERVED, rs.MISSING).astype(np.uint8)
    segmap = rs.segment_stats(ids, color, rs.VisibilityMask(state))
    labels = LabelSet(np.array([10.0, 20.0, 30.0], dtype=np.float32))
    # segment 0 is adjacent only to segment 1, which has no visible pixels:
    # its median term is skipped and the label is segment 0's own median.
    assert median_label(0, segmap, visible, values, labels, CostParams()) == 10.0


def test_weighted_median_agrees_with_cost_argmin():
    rng = np.random.default_rng(4)
    for _ in range(300):
        k = int(rng.integers(0, 9))
        lam = float(rng.choice([0.25, 0.5, 1.0, 2.0]))
        pool = rng.integers(0, 40, size=16)
        z_pl = float(rng.choice(pool))
        neighbors = [float(rng.choice(pool)) for _ in range(k)]
        labels = np.unique(np.concatenate([pool, [z_pl], neighbors])).astype(np.float64)
        costs = [planar_cost(float(z), z_pl, neighbors, lam) for z in labels]
        argmin = float(labels[int(np.argmin(costs))])
        wm = lower_weighted_median([z_pl] + neighbors, [1.0] + [lam] * k)
        assert argmin == wm


def test_cost_scaling_leaves_argmin_unchanged():
    rng = np.random.default_rng(8)
    labels = np.unique(rng.integers(0, 60, 30)).astype(np.float64)
    for _ in range(50):
        z_pl = float(rng.choice(labels))
        nbs = [float(rng.choice(labels)) for _ in range(4)]
        lam = 0.5
        scale = float(rng.choice([0.25, 2.0, 8.0]))
        base = [planar_cost(float(z), z_pl, nbs, lam) for z in labels]
        scaled = [scale * c for c in base]
        assert int(np.argmin(base)) == int(np.argmin(scaled))


def test_costs_are_nonnegative_property():
    rng = np.random.default_rng(14)
    for _ in range(200):
        z, zp = rng.uniform(0, 100, 2)
        nbs = rng.uniform(0, 100, rng.integers(0, 8)).tolist()
        assert planar_cost(z, zp, nbs, 0.7) >= 0.0
        assert median_cost(z, zp, [(v, 0.3) for v in nbs]) >= 0.0
    assert planar_cost(13.0, 13.0, [], 1.0) == 0.0


@settings(max_examples=100, derandomize=True)
@given(
    z=st.integers(0, 60),
    zp=st.integers(0, 60),
    nbs=st.lists(st.integers(0, 60), max_size=8),
    lam_q=st.sampled_from([1, 2, 4, 8]),
)
def test_planar_cost_definition_property(z, zp, nbs, lam_q):
    lam = lam_q / 4.0
    expect = abs(z - zp) + lam * sum(abs(z - q) for q in nbs)
    assert planar_cost(float(z), float(zp), [float(q) for q in nbs], lam) == expect


def test_cost_params_validation():
    with pytest.raises(ValueError):
        CostParams(lambda_p=-0.1)
    with pytest.raises(ValueError):
        CostParams(n_pl=2)
    with pytest.raises(ValueError):
        CostParams(color_eps=0.0)
    with pytest.raises(ValueError):
        LabelSet(np.array([3.0, 3.0], dtype=np.float32))
