"""Critical exponents, shrink-box trees, and dimension estimators."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latlab.dimension import (
    DEFAULT_EPSILON,
    EMPTY_SET,
    TreeLevel,
    box_counting_dim,
    cantor_build,
    critical_dimension,
    dim_full_space,
    dim_upper_bound,
    disjoint_shrink_boxes,
    family_exponents,
    treelike_lower_bound,
)
from latlab.lie import FlowParams
from latlab.ratpoints import CoordBox, CountSpec, RationalPointCanon, enumerate_band

from util import assert_boxes_interior_disjoint, centered_intervals

FLOW = FlowParams(1, 0, -1)
FLOWS = (FLOW, FlowParams(3, 1, -4), FlowParams(5, -1, -4))
U0 = CoordBox(
    Fraction(1, 5), Fraction(7, 10),
    Fraction(1, 5), Fraction(7, 10),
    Fraction(1, 5), Fraction(7, 10),
)


def defined_families(gamma, flow):
    fams = [3, 4, 5]
    if gamma < float(flow.beta0):
        fams.append(1)
    if gamma < float(flow.alpha0):
        fams.append(2)
    return fams


@given(st.floats(0.0, 0.999), st.sampled_from(FLOWS))
def test_critical_dimension_max_matches_upper_bound(frac_gamma, flow):
    top = float(flow.highest)
    gamma = frac_gamma * top
    best = max(
        critical_dimension(f, gamma, flow) for f in defined_families(gamma, flow)
    )
    assert abs(best - (3.0 - 2.0 * gamma / top)) <= 1e-12


@given(st.floats(0.0, 0.999), st.sampled_from(FLOWS))
def test_series_exponent_vanishes_at_critical(frac_gamma, flow):
    gamma = frac_gamma * float(flow.highest)
    for f in defined_families(gamma, flow):
        ex = family_exponents(f, gamma, flow)
        assert abs(ex.series_exponent(ex.critical_s)) <= 1e-9
        assert ex.slope < 0  # the series exponent falls as s grows
        assert ex.series_exponent(ex.critical_s + 0.5) < -1e-9


def test_family_exponents_guards():
    with pytest.raises(ValueError):
        family_exponents(0, 0.5, FLOW)
    with pytest.raises(ValueError):
        family_exponents(3, 2.0, FLOW)  # gamma at lambda1 - lambda3
    with pytest.raises(ValueError):
        family_exponents(3, -0.1, FLOW)
    with pytest.raises(ValueError):
        family_exponents(1, 1.0, FLOW)  # gamma not below beta0 = 1
    with pytest.raises(ValueError):
        family_exponents(2, 1.0, FLOW)  # gamma not below alpha0 = 1
    skew = FlowParams(3, 1, -4)  # alpha0 = 2, beta0 = 5
    assert family_exponents(1, 3.0, skew).family == 1
    with pytest.raises(ValueError):
        family_exponents(2, 3.0, skew)


def test_dim_upper_bound_shape():
    assert dim_upper_bound(0.0, FLOW) == 3.0
    assert dim_upper_bound(2.0, FLOW) == EMPTY_SET
    assert dim_upper_bound(5.0, FLOW) == EMPTY_SET
    grid = np.linspace(0.0, 1.999, 40)
    vals = [dim_upper_bound(float(g), FLOW) for g in grid]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert dim_full_space(1.0, FLOW) == 7.0
    assert dim_full_space(2.0, FLOW) == EMPTY_SET
    with pytest.raises(ValueError):
        dim_upper_bound(-0.5, FLOW)


def band_points(l, box=None):
    spec = CountSpec(box=box or CoordBox.unit(), l=l)
    return list(enumerate_band(spec))


def test_disjoint_shrink_boxes_separates_band():
    pts = band_points(8)
    boxes, eps = disjoint_shrink_boxes(pts, 0.55, FLOW)
    assert 0 < eps <= Fraction(1, 4)
    assert len(boxes) == len(pts)
    intervals = [
        centered_intervals(pt.coords(), (box.r1, box.r2, box.r3))
        for pt, box in boxes
    ]
    checked = assert_boxes_interior_disjoint(intervals)
    assert checked >= 0


def test_disjoint_shrink_boxes_halves_for_crowded_band():
    # x23 = x13 = 0 slice: Farey-close centers force epsilon0 down, and the
    # first axis alone must then separate every pair
    pts = [
        RationalPointCanon(a=a, b=b, p1=0, p2=0, q=1)
        for b in range(32, 65)
        for a in range(b)
        if math.gcd(a, b) == 1
    ]
    assert all(32 <= p.d_p <= 64 for p in pts)
    boxes, eps = disjoint_shrink_boxes(pts, 0.55, FLOW)
    assert eps < Fraction(1, 4)
    assert eps >= Fraction(1, 2**20)
    intervals = [
        centered_intervals(pt.coords(), (box.r1, box.r2, box.r3))
        for pt, box in boxes
    ]
    assert_boxes_interior_disjoint(intervals)


def test_disjoint_shrink_boxes_validation():
    pt = RationalPointCanon(a=0, b=1, p1=1, p2=1, q=2)
    with pytest.raises(ValueError):
        disjoint_shrink_boxes([], 0.5, FLOW)
    with pytest.raises(ValueError):
        disjoint_shrink_boxes([pt, pt], 0.5, FLOW)
    mixed = [pt, RationalPointCanon(a=0, b=1, p1=0, p2=0, q=1)]  # d_p 4 and 1
    with pytest.raises(ValueError):
        disjoint_shrink_boxes(mixed, 0.5, FLOW)
    with pytest.raises(ValueError):
        disjoint_shrink_boxes([pt], 2.0, FLOW)
    with pytest.raises(ValueError):
        disjoint_shrink_boxes([pt], 0.5, FLOW, epsilon0=0)


def test_cantor_build_level_structure():
    levels = cantor_build(U0, 0.5, DEFAULT_EPSILON, 0.8, [6, 256], FLOW,
                          epsilon0=Fraction(1, 2))
    assert len(levels) == 2
    first, last = levels
    assert first.index == 1 and first.l == 6
    assert first.parents == (U0,)
    assert len(first.children) == 3
    assert first.cube_count == 24
    assert len(first.cubes) == first.cube_count
    assert abs(float(first.delta) - 0.1034) <= 5e-4
    assert first.paper_faithful
    # children carry (point, clipped box, side) with the box inside the parent
    for pt, clipped, side in first.children:
        assert U0.contains(*pt.coords())
        assert clipped.lo1 >= U0.lo1 and clipped.hi1 <= U0.hi1
        assert clipped.lo3 >= U0.lo3 and clipped.hi3 <= U0.hi3
        assert 0 < side <= clipped.hi1 - clipped.lo1
    assert last.index == 2 and last.l == 256
    assert last.parents == first.cubes
    assert last.cubes == ()  # deepest level reports only the count
    assert len(last.children) == 227
    assert last.cube_count == 339314
    assert 0 < last.delta <= 1
    assert 0 < last.diameter < first.diameter
    bound = treelike_lower_bound(levels)
    assert abs(bound - 1.1279) <= 5e-4


def test_cantor_schedule_growth_warning():
    with pytest.warns(UserWarning, match="growth condition"):
        levels = cantor_build(CoordBox.unit(), 0.3, 0.05, 0.8, [1, 2, 4], FLOW,
                              epsilon0=Fraction(1, 4))
    assert [lv.paper_faithful for lv in levels] == [True, True, False]
    assert levels[-1].cube_count > 0


def test_cantor_build_validation():
    with pytest.raises(ValueError):
        cantor_build(U0, 0.5, 0.05, 0.8, [], FLOW)
    with pytest.raises(ValueError):
        cantor_build(U0, 0.5, 0.05, 0.8, [4, 4], FLOW)
    with pytest.raises(ValueError):
        cantor_build(U0, 0.5, 0.0, 0.8, [6], FLOW)
    with pytest.raises(ValueError):
        cantor_build(U0, 1.99, 0.05, 0.8, [6], FLOW)  # gamma+epsilon past the top
    sliver = CoordBox(
        Fraction(41, 100), Fraction(42, 100),
        Fraction(41, 100), Fraction(42, 100),
        Fraction(41, 100), Fraction(42, 100),
    )
    with pytest.raises(ValueError, match="no band points"):
        cantor_build(sliver, 0.5, 0.05, 0.8, [2], FLOW)


def synthetic_level(delta, diameter):
    return TreeLevel(
        index=1, l=2, parents=(CoordBox.unit(),), children=(), cubes=(),
        cube_count=4, delta=Fraction(delta), diameter=float(diameter),
        epsilon0=Fraction(1, 4), paper_faithful=True,
    )


def test_treelike_closed_form_oracle():
    # one level keeping a quarter of the volume in cubes of diameter 1/16:
    # 3 - log(1/4)/log(1/16) = 3 - 1/2
    lv = synthetic_level(Fraction(1, 4), 1.0 / 16.0)
    assert abs(treelike_lower_bound([lv]) - 2.5) <= 1e-12
    # two identical levels double the deficit against the same diameter
    lv2 = synthetic_level(Fraction(1, 4), 1.0 / 16.0)
    assert abs(treelike_lower_bound([lv, lv2]) - 2.0) <= 1e-12


def test_treelike_validation():
    with pytest.raises(ValueError):
        treelike_lower_bound([])
    with pytest.raises(ValueError):
        treelike_lower_bound([synthetic_level(Fraction(1, 4), 1.0)])
    with pytest.raises(ValueError):
        treelike_lower_bound([synthetic_level(0, 1.0 / 16.0)])


@pytest.mark.slow
def test_treelike_bound_grows_with_band_depth():
    # deeper second bands sharpen the finite-depth lower bound monotonically
    bounds = []
    for l2 in (1024, 2048, 4096):
        levels = cantor_build(U0, 0.70, DEFAULT_EPSILON, 0.8, [6, l2], FLOW,
                              epsilon0=Fraction(1, 2))
        bounds.append(treelike_lower_bound(levels))
    assert bounds[0] < bounds[1] < bounds[2]
    for got, want in zip(bounds, (1.3531, 1.4333, 1.6067)):
        assert abs(got - want) <= 5e-4


def test_box_counting_dim_oracles():
    rng = np.random.default_rng(0)
    cloud = rng.uniform(0.0, 1.0, size=(20000, 3))
    scales = [0.5, 0.25, 0.125, 0.0625]
    assert abs(box_counting_dim(cloud, scales) - 3.0) <= 0.3
    ts = np.linspace(0.0, 1.0, 5000)
    segment = np.stack([ts, ts, ts], axis=1)
    assert abs(box_counting_dim(segment, scales) - 1.0) <= 0.2
    single = [(0.3, 0.3, 0.3)]
    assert box_counting_dim(single, scales) == 0.0


def test_box_counting_dim_validation():
    pts = [(0.1, 0.2, 0.3), (0.4, 0.5, 0.6)]
    with pytest.raises(ValueError):
        box_counting_dim(pts, [0.1])
    with pytest.raises(ValueError):
        box_counting_dim(pts, [0.1, 0.2])
    with pytest.raises(ValueError):
        box_counting_dim([(0.1, 0.2)], [0.2, 0.1])
