"""Orbit decay, Weyl classification, and the return-time family detectors."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latlab.diophantine import (
    GammaWitness,
    OrbitSample,
    OrbitSeries,
    estimate_type,
    family_membership,
    gamma_condition_check,
    nonemptiness_threshold,
    orbit_eta_series,
    rationality_structure,
    weyl_type,
)
from latlab.exact import mat3, mat_inv, mat_mul, weyl_matrix
from latlab.lie import ConstantsProfile, FlowParams, UnipotentUpper
from latlab.ratpoints import RationalPointCanon, expand

from util import random_unipotent_int

FLOW = FlowParams(1, 0, -1)
CONSTANTS = ConstantsProfile()


def test_orbit_identity_decay():
    p = UnipotentUpper(x12=0, x23=0, x13=0)
    grid = list(range(7))
    series = orbit_eta_series(p, FLOW, grid)
    for s in series.samples:
        want = math.exp(-2.0 * s.t)
        assert abs(s.eta - want) <= 1e-9 * want
        if s.t >= 2:
            assert s.certified
    assert series.flow is FLOW


def test_orbit_rational_point_exact_plateau():
    pt = RationalPointCanon(a=0, b=1, p1=1, p2=1, q=2)
    series = orbit_eta_series(expand(pt), FLOW, np.linspace(2.0, 9.0, 15))
    for s in series.samples:
        assert abs(s.eta * math.exp(2.0 * s.t) - pt.d_p) <= 1e-9 * pt.d_p
        if s.t >= 4:
            assert s.certified and s.gauge == "log"
    slope = estimate_type(series, (2.0, 9.0))
    assert abs(slope - 2.0) <= 1e-9


def test_orbit_grid_validation():
    p = UnipotentUpper(x12=0, x23=0, x13=0)
    with pytest.raises(ValueError):
        orbit_eta_series(p, FLOW, [])
    with pytest.raises(ValueError):
        orbit_eta_series(p, FLOW, [-1.0, 0.0])
    with pytest.raises(ValueError):
        orbit_eta_series(p, FLOW, [0.0, 0.0])


def test_orbit_series_validation_and_window_guard():
    mk = lambda t, e: OrbitSample(t=t, eta=e, gauge="log", certified=False)
    with pytest.raises(ValueError):
        OrbitSeries(
            base_point=UnipotentUpper(0, 0, 0),
            flow=FLOW,
            samples=(mk(0.0, 1.0), mk(0.0, 0.5)),
        )
    with pytest.raises(ValueError):
        OrbitSeries(
            base_point=UnipotentUpper(0, 0, 0),
            flow=FLOW,
            samples=(mk(0.0, 1.0), mk(1.0, -0.5)),
        )
    series = OrbitSeries(
        base_point=UnipotentUpper(0, 0, 0),
        flow=FLOW,
        samples=tuple(mk(float(t), math.exp(-t)) for t in range(6)),
    )
    with pytest.raises(ValueError):
        estimate_type(series, (0.0, 5.0))  # only 6 samples in window


def test_weyl_type_constructed_cells():
    rng = np.random.default_rng(5)
    for idx in range(1, 7):
        w = weyl_matrix(idx)
        for _ in range(12):
            n = random_unipotent_int(rng)
            wn = mat_mul(w, n)
            wn_inv = mat_inv(wn)
            for s in (1, -2, Fraction(1, 3)):
                e31 = ((0, 0, 0), (0, 0, 0), (s, 0, 0))
                core = tuple(
                    tuple((1 if i == j else 0) + e31[i][j] for j in range(3))
                    for i in range(3)
                )
                v = mat_mul(mat_mul(wn_inv, core), wn)
                res = weyl_type(v)
                assert res.index == idx
                assert res.weyl() == w
                vf = np.array([[float(e) for e in row] for row in v])
                assert weyl_type(vf).index == idx


def test_weyl_type_rejections():
    with pytest.raises(ValueError):
        weyl_type(((1, 1, 0), (0, 1, 1), (0, 0, 1)))  # square of v - I is E13
    with pytest.raises(ValueError):
        weyl_type(((1, 0, 0), (0, 1, 0), (0, 0, 1)))  # v - I vanishes
    with pytest.raises(ValueError):
        weyl_type(((2, 0, 0), (0, 1, 0), (0, 0, Fraction(1, 2))))
    # rank-one square-zero with a diagonal pivot cannot exist: the closest
    # attempt v - I = (e1 - e2)(e1 + e2)^T still pivots off-diagonal
    v = ((2, 1, 0), (-1, 0, 0), (0, 0, 1))
    assert weyl_type(v).pivot_pair == (2, 1)
    assert weyl_type(v).index == 2


def test_gamma_condition_check_bands():
    t, gamma = 2.0, 0.5
    thr = math.exp(-gamma * t)  # ~0.368, inside the band [thr/10, 10 thr]
    shear = Fraction(368, 1000)
    inside = ((1, 0, 0), (shear, 1, 0), (0, 0, 1))  # exact nilpotent log
    ok, wit = gamma_condition_check(inside, t, gamma, CONSTANTS)
    assert ok
    assert isinstance(wit, GammaWitness)
    assert wit.v_minus_norm == float(shear)
    assert wit.v_zero_norm == 0.0 and wit.v_plus_norm == 0.0
    too_big = ((1, 0, 0), (4, 1, 0), (0, 0, 1))  # 4 > kappa' * thr
    assert gamma_condition_check(too_big, t, gamma, CONSTANTS)[0] is False
    too_small = ((1, 0, 0), (Fraction(1, 100), 1, 0), (0, 0, 1))
    assert gamma_condition_check(too_small, t, gamma, CONSTANTS)[0] is False
    # an expanded-part coefficient above the band edge also disqualifies;
    # deep time shrinks the edge below what the float log can still read
    t7 = 7.0
    thr7 = math.exp(-gamma * t7)
    assert CONSTANTS.kappa_prime * thr7 < 0.33 < 0.35
    mixed = np.eye(3) + np.array(
        [[0, 0.33, 0], [0.3 * thr7, 0, 0], [0, 0, 0]]
    )
    mixed /= np.linalg.det(mixed) ** (1.0 / 3.0)  # back onto det 1
    assert gamma_condition_check(mixed, t7, gamma, CONSTANTS)[0] is False
    with pytest.raises(ValueError):
        gamma_condition_check(np.diag([10.0, 1.0, 0.1]), t, gamma, CONSTANTS)


@given(st.floats(0.05, 0.4), st.floats(1.0, 3.0))
def test_gamma_condition_wider_kappa_keeps_verdict(scale, t):
    gamma = 0.5
    thr = math.exp(-gamma * t)
    v = np.eye(3) + scale * thr * np.array(
        [[0, 0, 0], [1.0, 0, 0], [0.2, 0.1, 0]]
    )
    tight = ConstantsProfile(kappa_prime=2.0)
    wide = ConstantsProfile(kappa_prime=8.0)
    if gamma_condition_check(v, t, gamma, tight)[0]:
        assert gamma_condition_check(v, t, gamma, wide)[0]


def test_family3_self_membership_at_matching_time():
    gamma = 0.5
    ab = float(FLOW.alpha0 + FLOW.beta0)
    for tup in [(0, 1, 1, 1, 2), (1, 2, 1, 1, 2), (0, 1, 1, 2, 3), (1, 3, 0, 1, 3)]:
        q = RationalPointCanon(a=tup[0], b=tup[1], p1=tup[2], p2=tup[3], q=tup[4])
        t_star = math.log(q.d_p) / (ab - gamma)
        p = expand(q)
        assert family_membership(
            p, q, t_star, 3, CONSTANTS, gamma=gamma, flow=FLOW
        )
        # far past the matching time the denominator falls out of the band
        assert not family_membership(
            p, q, t_star + 6.0, 3, CONSTANTS, gamma=gamma, flow=FLOW
        )


def test_family_w_twisted_witness_harness():
    rng = np.random.default_rng(9)
    q = RationalPointCanon(a=0, b=1, p1=0, p2=0, q=1)
    cases = [
        (1, 3, UnipotentUpper(x12=0, x23=Fraction(1, 3), x13=Fraction(-1, 2))),
        (2, 2, UnipotentUpper(x12=Fraction(2, 5), x23=0, x13=Fraction(1, 4))),
    ]
    for family, widx, b in cases:
        w_inv = mat_inv(weyl_matrix(widx))
        for _ in range(6):
            u = random_unipotent_int(rng)
            p_mat = mat_mul(b.to_matrix(), u)
            p = UnipotentUpper.from_matrix(p_mat)
            wit = mat_mul(mat_inv(u), w_inv)
            assert family_membership(
                p, q, 0.0, family, CONSTANTS, gamma=0.5, flow=FLOW, witness=wit
            )
    # family 1 demands a vanishing (1,2) entry after the twist
    bad = UnipotentUpper(x12=Fraction(1, 2), x23=Fraction(1, 3), x13=0)
    u = random_unipotent_int(rng)
    p = UnipotentUpper.from_matrix(mat_mul(bad.to_matrix(), u))
    wit = mat_mul(mat_inv(u), mat_inv(weyl_matrix(3)))
    assert not family_membership(
        p, q, 0.0, 1, CONSTANTS, gamma=0.5, flow=FLOW, witness=wit
    )
    # an over-long coefficient fails the shrinking box
    long_b = UnipotentUpper(x12=0, x23=Fraction(int(CONSTANTS.C) + 1, 1), x13=0)
    p = UnipotentUpper.from_matrix(long_b.to_matrix())
    assert not family_membership(
        p, q, 0.0, 1, CONSTANTS, gamma=0.5, flow=FLOW,
        witness=mat_inv(weyl_matrix(3)),
    )


def test_family_w_twisted_witness_errors():
    q = RationalPointCanon(a=0, b=1, p1=0, p2=0, q=1)
    p = UnipotentUpper(x12=0, x23=0, x13=0)
    with pytest.raises(ValueError):
        family_membership(p, q, 0.0, 1, CONSTANTS, gamma=0.5, flow=FLOW)
    with pytest.raises(TypeError):
        family_membership(
            p, q, 0.0, 2, CONSTANTS, gamma=0.5, flow=FLOW,
            witness=((0.5, 0, 0), (0, 2.0, 0), (0, 0, 1.0)),
        )
    with pytest.raises(ValueError):
        family_membership(
            p, q, 0.0, 1, CONSTANTS, gamma=0.5, flow=FLOW,
            witness=((1, 0, 0), (0, 1, 0), (0, 0, -1)),  # determinant -1
        )


def test_family_4_and_5_positive_and_banded():
    unit = RationalPointCanon(a=0, b=1, p1=0, p2=0, q=1)
    p = UnipotentUpper(x12=0, x23=0, x13=0)
    for family in (4, 5):
        assert family_membership(p, unit, 0.0, family, CONSTANTS, gamma=0.5, flow=FLOW)
    # a half-integer coordinate offset empties the contracted shift range
    # once the box radius drops below 1/2
    off23 = RationalPointCanon(a=0, b=1, p1=0, p2=1, q=2)  # x23 offset 1/2
    assert not family_membership(p, off23, 12.0, 4, CONSTANTS, gamma=0.5, flow=FLOW)
    off12 = RationalPointCanon(a=1, b=2, p1=0, p2=0, q=1)  # x12 offset 1/2
    assert not family_membership(p, off12, 12.0, 5, CONSTANTS, gamma=0.5, flow=FLOW)


def test_family_validation_and_range_cap():
    q = RationalPointCanon(a=0, b=1, p1=0, p2=0, q=1)
    p = UnipotentUpper(x12=0, x23=0, x13=0)
    with pytest.raises(ValueError):
        family_membership(p, q, 0.0, 0, CONSTANTS, gamma=0.5, flow=FLOW)
    with pytest.raises(TypeError):
        family_membership(
            UnipotentUpper(0.5, 0.0, 0.0), q, 0.0, 3, CONSTANTS, gamma=0.5, flow=FLOW
        )
    with pytest.raises(RuntimeError):
        # gamma = alpha0 + beta0 keeps the band centered while t < 0 blows
        # the shift boxes up past the cap
        family_membership(p, q, -10.0, 3, CONSTANTS, gamma=2.0, flow=FLOW)


def test_rationality_structure_cases():
    r = Fraction(1, 3)
    full = rationality_structure(r, r, r)
    assert (full.rational, full.in_alpha0_coset, full.in_beta0_coset) == (
        True,
        True,
        True,
    )
    no12 = rationality_structure(None, r, r)
    assert (no12.rational, no12.in_alpha0_coset, no12.in_beta0_coset) == (
        False,
        False,
        False,
    )
    no12_zero23 = rationality_structure(None, Fraction(0), r)
    assert no12_zero23.in_alpha0_coset is True
    no23 = rationality_structure(r, None, r)
    assert (no23.rational, no23.in_alpha0_coset, no23.in_beta0_coset) == (
        False,
        False,
        True,
    )
    no13 = rationality_structure(r, r, None)
    assert (no13.rational, no13.in_alpha0_coset, no13.in_beta0_coset) == (
        False,
        False,
        False,
    )
    nothing = rationality_structure(None, None, None)
    assert (nothing.rational, nothing.in_alpha0_coset, nothing.in_beta0_coset) == (
        False,
        False,
        False,
    )
    with pytest.raises(TypeError):
        rationality_structure(0.5, None, None)


def test_nonemptiness_threshold_matches_highest_root():
    assert nonemptiness_threshold(FLOW) == FLOW.highest == 2
    other = FlowParams(3, 1, -4)
    assert nonemptiness_threshold(other) == other.highest == 7
