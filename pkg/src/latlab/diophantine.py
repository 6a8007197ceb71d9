"""Orbit decay, Weyl classification, and shrinking-target family detectors.

Everything here sits downstream of one question: how fast does the
injectivity radius decay along a_t applied to a point of the unipotent
chart, and which algebraic structure is responsible when the decay rate is
extremal.  Rational base points admit a certified fast route because the
relevant stabilizer elements form a computable rank-3 lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .exact import (
    MAT_ID,
    Mat3,
    frac,
    int_matrix,
    integer_kernel,
    is_integer_matrix,
    mat3,
    mat_det,
    mat_inv,
    mat_mul,
    mat_vec,
    rational_kernel,
    vec_cross,
    weyl_matrix,
)
from .latgeom import (
    EnumerationBudgetError,
    InjectivityRadius,
    KAPPA_GAUGE,
    LatticeBasis,
    SearchRadiusError,
    _gauge_floor,
    enumerate_short_vectors,
    injectivity_radius,
    shortest_vector,
    stabilizer_reduction,
)
from .lie import (
    ConstantsProfile,
    FlowParams,
    RootCoords,
    UnipotentUpper,
    flow_exp,
    matrix_log,
)
from .ratpoints import RationalPointCanon, canonicalize, expand


@dataclass(frozen=True)
class OrbitSample:
    """One reading of the flow-displaced injectivity radius."""

    t: float
    eta: float
    gauge: str
    certified: bool
    witness: Optional[Mat3] = None


@dataclass(frozen=True)
class OrbitSeries:
    """Readings of eta(a_t p) along a strictly increasing time grid."""

    base_point: UnipotentUpper
    flow: FlowParams
    samples: tuple

    def __post_init__(self) -> None:
        ts = [s.t for s in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("sample times must be strictly increasing")
        if any(s.eta <= 0 for s in self.samples):
            raise ValueError("eta readings must be positive")


_LOWER_SLOTS = ((1, 0), (2, 1), (2, 0))  # E21, E32, E31 positions


def _full_rank(rows) -> bool:
    if len(rows) == 1:
        return any(e != 0 for e in rows[0])
    if len(rows) == 2:
        return any(e != 0 for e in vec_cross(rows[0], rows[1]))
    return mat_det(mat3(rows)) != 0


def _lower_constraint_lattice(g: Mat3) -> tuple[tuple, int]:
    """Lattice of (x, y, z) making g^{-1} (x E21 + y E32 + z E31) g integral.

    Returns three exact basis vectors together with the lcm of all
    denominators of the conjugated elementary matrices g E_ij g^{-1}; any
    stabilizer element outside the strictly lower branch keeps an unshrunk
    entry of size at least the reciprocal of that lcm, which is what lets a
    small enough lower-branch minimum certify the global one.
    """
    gm = mat3(g)
    g_inv = mat_inv(gm)
    cols = []
    for i, j in _LOWER_SLOTS:
        col = []
        for r in range(3):
            for c in range(3):
                col.append(frac(g_inv[r][i] * gm[j][c]))
        cols.append(col)
    relations = []
    for vec in rational_kernel(cols):
        den = math.lcm(*[e.denominator for e in vec])
        relations.append(tuple(int(e * den) for e in vec))
    saturated = integer_kernel(relations)
    if len(saturated) != 3:
        raise RuntimeError("stabilizer constraint lattice is not rank 3")

    rows9 = [(cols[0][k], cols[1][k], cols[2][k]) for k in range(9)]
    idxs: list[int] = []
    chosen: list = []
    for k in range(9):
        if len(idxs) == 3:
            break
        if _full_rank(chosen + [rows9[k]]):
            idxs.append(k)
            chosen.append(rows9[k])
    m_inv = mat_inv(mat3(chosen))
    basis = []
    for w in saturated:
        rhs = (frac(w[idxs[0]]), frac(w[idxs[1]]), frac(w[idxs[2]]))
        v = mat_vec(m_inv, rhs)
        for k in range(9):
            if rows9[k][0] * v[0] + rows9[k][1] * v[1] + rows9[k][2] * v[2] != w[k]:
                raise RuntimeError("inconsistent stabilizer constraint solve")
        basis.append(tuple(v))

    dden = 1
    for i in range(3):
        for j in range(3):
            for r in range(3):
                for c in range(3):
                    dden = math.lcm(dden, frac(gm[r][i] * g_inv[j][c]).denominator)
    return tuple(basis), dden


def _lower_orbit_minimum(basis, flow: FlowParams, t: float, cap: float):
    """Minimum twisted gauge over the nonzero lattice points, complete below cap.

    The returned value is the true lattice-wide minimum whenever it lands
    below cap; otherwise it is only an upper bound and the caller falls back
    to the generic search.
    """
    t = float(t)
    s1 = math.exp(float(flow.lambda2 - flow.lambda1) * t)
    s2 = math.exp(float(flow.lambda3 - flow.lambda2) * t)
    s3 = math.exp(float(flow.lambda3 - flow.lambda1) * t)
    # exact dyadic scales: float rows go rank-deficient near t ~ 12
    f1, f2, f3 = Fraction(s1), Fraction(s2), Fraction(s3)
    rows = tuple((b[0] * f1, b[1] * f2, b[2] * f3) for b in basis)
    lat = LatticeBasis(vectors=rows)

    def twisted(coeffs):
        x = sum(c * b[0] for c, b in zip(coeffs, basis))
        y = sum(c * b[1] for c, b in zip(coeffs, basis))
        z = sum(c * b[2] for c, b in zip(coeffs, basis))
        val = max(
            s1 * abs(float(x)),
            s2 * abs(float(y)),
            s3 * abs(float(z - x * y / 2)),
        )
        return val, (x, y, z)

    best, best_xyz = twisted(shortest_vector(lat).witness)
    m = min(best, cap)
    # any vector beating m in the twisted gauge fits in this Euclidean ball
    radius = math.sqrt(2 * m * m + (m + m * m / 2) ** 2) * (1 + 1e-9)
    for coeffs, _ in enumerate_short_vectors(lat, radius):
        val, xyz = twisted(coeffs)
        if val < best:
            best, best_xyz = val, xyz
    return best, best_xyz


def _gamma_from_lower(g_inv: Mat3, g: Mat3, xyz) -> Mat3:
    x, y, z = xyz
    lmat = ((0, 0, 0), (x, 0, 0), (z, y, 0))
    inner = mat_mul(mat_mul(g_inv, lmat), g)
    gamma = tuple(
        tuple(MAT_ID[i][j] + inner[i][j] for j in range(3)) for i in range(3)
    )
    if not is_integer_matrix(gamma):
        raise RuntimeError("lower-branch witness failed integrality")
    return int_matrix(gamma)


_ESCALATION_CAP = 4.5  # a radius-r tree costs ~3.3 r^9 nodes; 4.5 fits the budget


def _generic_sample(
    g_np: np.ndarray, flow: FlowParams, t: float, search_radius: float, warm_state: list
):
    """Rank-9 search at one time, threading the reduction along the grid.

    warm_state is a mutable [transform, tau] pair.  The conjugation basis at
    large t is too sheared for a cold float reduction, so the basis is walked
    from the last reduced time in unit steps, each reduction starting from
    the previous transform.

    A lattice deep in the thick part may have no stabilizer element within
    any affordable radius; those samples come back as a "floor" reading, the
    proven lower bound on eta from the largest ball searched empty.
    """
    warm, tau = warm_state
    if warm is None:
        tau = 0.0
        warm = stabilizer_reduction(g_np)
    while abs(t - tau) > 1.0 + 1e-9:
        tau += math.copysign(1.0, t - tau)
        warm = stabilizer_reduction(flow_exp(flow, tau) @ g_np, warm=warm)
    a = flow_exp(flow, float(t)) @ g_np
    warm_state[0] = warm
    warm_state[1] = tau
    radius = float(search_radius)
    covered = 0.0
    while True:
        try:
            res = injectivity_radius(a, search_radius=radius, warm=warm)
            warm_state[0] = res.transform
            warm_state[1] = float(t)
            return res
        except SearchRadiusError:
            # ball fully searched and empty: eta is provably above its floor
            covered = radius
            if radius >= _ESCALATION_CAP:
                break
            radius = min(radius * 1.6, _ESCALATION_CAP)
        except EnumerationBudgetError:
            if covered == 0.0:
                raise
            break
    return InjectivityRadius(
        eta=_gauge_floor(covered),
        witness=None,
        gauge="floor",
        certified=False,
        rejected=0,
        radius=covered,
        transform=warm,
    )


def orbit_eta_series(
    p: UnipotentUpper,
    flow: FlowParams,
    t_grid: Sequence[float],
    search_radius: float = 4.0,
) -> OrbitSeries:
    """Injectivity-radius decay along a_t applied to the lattice of p.

    Exact base points get a certified route: stabilizer elements whose
    conjugate lands in the contracted lower-triangular branch form a rank-3
    lattice computed once, and once the branch minimum drops below the
    certification cutoff it provably is the global minimum.  Samples that
    cannot be certified fall back to the generic rank-9 search with the
    search radius doubled on demand; losing certification at a sample is
    recorded in the sample, not fatal.
    """
    grid = [float(t) for t in t_grid]
    if not grid:
        raise ValueError("t_grid must be nonempty")
    if any(t < 0 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("t_grid must be nonnegative and strictly increasing")
    exact = p.is_exact
    if exact:
        gm = p.to_matrix()
        g_inv = mat_inv(gm)
        lower_basis, dden = _lower_constraint_lattice(gm)
        thresh = 1.0 / (KAPPA_GAUGE * dden)
    g_np = np.array([[float(e) for e in row] for row in p.to_matrix()])
    warm_state: list = [None, 0.0]
    samples = []
    for t in grid:
        if exact:
            eta_minus, xyz = _lower_orbit_minimum(lower_basis, flow, t, thresh)
            if eta_minus < thresh:
                samples.append(
                    OrbitSample(
                        t=t,
                        eta=eta_minus,
                        gauge="log",
                        certified=True,
                        witness=_gamma_from_lower(g_inv, gm, xyz),
                    )
                )
                continue
        res = _generic_sample(g_np, flow, t, search_radius, warm_state)
        if exact and eta_minus < float(res.eta):
            # the lower-branch candidate is a strictly better upper bound
            samples.append(
                OrbitSample(
                    t=t,
                    eta=eta_minus,
                    gauge="log",
                    certified=False,
                    witness=_gamma_from_lower(g_inv, gm, xyz),
                )
            )
        else:
            samples.append(
                OrbitSample(
                    t=t,
                    eta=float(res.eta),
                    gauge=res.gauge,
                    certified=res.certified,
                    witness=res.witness,
                )
            )
    return OrbitSeries(base_point=p, flow=flow, samples=tuple(samples))


def estimate_type(series: OrbitSeries, window: Sequence[float]) -> float:
    """Least-squares slope of -log eta against t inside the window.

    Rational base points approach the sum of the two positive root values of
    the flow; generic points hover near slope zero.
    """
    lo, hi = float(window[0]), float(window[1])
    pts = [(s.t, s.eta) for s in series.samples if lo <= s.t <= hi]
    if len(pts) < 8:
        raise ValueError("need at least 8 samples inside the window")
    xs = [t for t, _ in pts]
    ys = [-math.log(e) for _, e in pts]
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    sxx = sum((x - xbar) ** 2 for x in xs)
    sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    return sxy / sxx


@dataclass(frozen=True)
class GammaWitness:
    """Part norms backing a gamma-condition verdict at one time."""

    t: float
    v_minus_norm: float
    v_zero_norm: float
    v_plus_norm: float


def gamma_condition_check(
    v, t: float, gamma: float, constants: ConstantsProfile
) -> tuple[bool, GammaWitness]:
    """Two-sided decay band on the contracted part, one-sided on the rest.

    The contracted coefficient block must sit inside
    [e^{-gamma t}/kappa', kappa' e^{-gamma t}] while the neutral and expanded
    blocks stay below the upper edge.  Raises when v admits no matrix log.
    """
    logm = matrix_log(v)
    coords = RootCoords.from_matrix(logm)
    nm = float(coords.norm_minus())
    nz = float(coords.norm_zero())
    npl = float(coords.norm_plus())
    kp = float(constants.kappa_prime)
    thr = math.exp(-float(gamma) * float(t))
    ok = (thr / kp <= nm <= kp * thr) and nz <= kp * thr and npl <= kp * thr
    return ok, GammaWitness(t=float(t), v_minus_norm=nm, v_zero_norm=nz, v_plus_norm=npl)


_PIVOT_INDEX = {
    (3, 1): 1,
    (2, 1): 2,
    (3, 2): 3,
    (2, 3): 4,
    (1, 2): 5,
    (1, 3): 6,
}


@dataclass(frozen=True)
class WeylType:
    """Conjugation cell of a rank-1 unipotent: Weyl index and pivot pair."""

    index: int
    pivot_pair: tuple[int, int]

    def weyl(self) -> Mat3:
        return weyl_matrix(self.index)


def weyl_type(v) -> WeylType:
    """Classify which Weyl conjugate carries v into the one-parameter corner.

    v - I must be nilpotent of square zero and rank one; the pivot pair
    (last nonzero row, first nonzero column) determines the cell.  Rank-2
    square-zero matrices conjugate into a plane, not the corner, and are
    rejected alongside everything non-unipotent.
    """
    exact = not isinstance(v, np.ndarray) and all(
        isinstance(e, (int, Fraction)) for row in v for e in row
    )
    if exact:
        m = mat3(v)
        n = [[m[i][j] - MAT_ID[i][j] for j in range(3)] for i in range(3)]

        def nonzero(e) -> bool:
            return e != 0

        n2 = mat_mul(n, n)
        square_zero = all(not nonzero(e) for row in n2 for e in row)
        minors_ok = all(
            n[i1][j1] * n[i2][j2] - n[i1][j2] * n[i2][j1] == 0
            for i1 in range(3)
            for i2 in range(i1 + 1, 3)
            for j1 in range(3)
            for j2 in range(j1 + 1, 3)
        )
    else:
        a = np.asarray(v, dtype=float)
        n = a - np.eye(3)
        scale = max(1.0, float(np.abs(n).max()))
        tol = 1e-9 * scale

        def nonzero(e) -> bool:
            return abs(float(e)) > tol

        n2 = n @ n
        square_zero = float(np.abs(n2).max()) <= 1e-9 * max(1.0, scale * scale)
        minors_ok = all(
            abs(n[i1, j1] * n[i2, j2] - n[i1, j2] * n[i2, j1])
            <= 1e-9 * max(1.0, scale * scale)
            for i1 in range(3)
            for i2 in range(i1 + 1, 3)
            for j1 in range(3)
            for j2 in range(j1 + 1, 3)
        )
        n = [[n[i, j] for j in range(3)] for i in range(3)]
    rows_nz = [i for i in range(3) if any(nonzero(n[i][j]) for j in range(3))]
    cols_nz = [j for j in range(3) if any(nonzero(n[i][j]) for i in range(3))]
    if not square_zero or not minors_ok or not rows_nz:
        raise ValueError("not conjugate into N_nu")
    pair = (max(rows_nz) + 1, min(cols_nz) + 1)
    if pair not in _PIVOT_INDEX:
        # a square-zero rank-1 matrix cannot pivot on the diagonal
        raise ValueError("not conjugate into N_nu")
    return WeylType(index=_PIVOT_INDEX[pair], pivot_pair=pair)


def nonemptiness_threshold(flow: FlowParams):
    """Largest contraction rate the shrinking-target families tolerate."""
    return flow.highest


_FAMILY_RANGE_CAP = 2_000_000


def _int_points(lo: Fraction, hi: Fraction) -> range:
    return range(math.ceil(lo), math.floor(hi) + 1)


def family_membership(
    p,
    q,
    t: float,
    family: int,
    constants: ConstantsProfile,
    *,
    gamma: float,
    flow: FlowParams,
    witness: Optional[Mat3] = None,
) -> bool:
    """Decide whether p lies in one of the five return-time families around q.

    p is an exact upper-unipotent representative; q is a canonical rational
    point (or exact coordinates of one).  Families 3 to 5 quantify over the
    integer upper-unipotent translates, a finite search once the box and the
    gauge band pin the shifts down; families 1 and 2 are twisted by a Weyl
    element and verify an explicitly supplied SL3(Z) witness instead of
    searching.  The boxes shrink at the flow's root rates scaled by time and
    the bands compare the denominator of q against e^{-gamma t} times the
    appropriate expansion factor.
    """
    if family not in (1, 2, 3, 4, 5):
        raise ValueError("family index must be one of 1..5")
    if not isinstance(p, UnipotentUpper) or not p.is_exact:
        raise TypeError("p must be an exact unipotent representative")
    qpt = q if isinstance(q, RationalPointCanon) else canonicalize(q)
    nq = expand(qpt)
    d_q = qpt.d_p
    t = float(t)
    gamma = float(gamma)
    a0 = float(flow.alpha0)
    b0 = float(flow.beta0)
    ab = a0 + b0
    big_c = float(constants.C)
    kpp = float(constants.kappa_double_prime)
    r1 = Fraction(big_c * math.exp(-a0 * t))
    r2 = Fraction(big_c * math.exp(-b0 * t))
    r3 = Fraction(big_c * math.exp(-ab * t))
    p12, p23, p13 = frac(p.x12), frac(p.x23), frac(p.x13)
    q12, q23, q13 = frac(nq.x12), frac(nq.x23), frac(nq.x13)

    def z13_at(m: int, n: int) -> Fraction:
        # third coordinate of n_p (I + m E12 + n E23) n_q^{-1} before k-shifts
        return (p13 + p12 * n) + (-q13 + q12 * q23) + (p12 + m) * (-q23)

    if family in (1, 2):
        if witness is None:
            raise ValueError("missing witness for w-twisted families")
        wit = mat3(witness)
        if not is_integer_matrix(wit) or mat_det(wit) != 1:
            raise ValueError("witness must lie in SL3(Z)")
        rate = b0 if family == 1 else a0
        center = math.exp(rate * t - gamma * t)
        if not (center / kpp <= d_q <= kpp * center):
            return False
        w = weyl_matrix(3 if family == 1 else 2)
        b = mat_mul(mat_mul(mat_mul(p.to_matrix(), wit), mat_inv(nq.to_matrix())), w)
        if any(b[i][j] != 0 for i in range(3) for j in range(3) if i > j):
            return False
        if any(b[i][i] != 1 for i in range(3)):
            return False
        b12, b23, b13 = b[0][1], b[1][2], b[0][2]
        if family == 1:
            return b12 == 0 and abs(b23) <= r2 and abs(b13) <= r3
        return b23 == 0 and abs(b12) <= r1 and abs(b13) <= r3

    center3 = math.exp(ab * t - gamma * t)
    if family == 3:
        if not (center3 / (3.0 * kpp) <= d_q <= kpp * center3):
            return False
        m_rng = _int_points(q12 - p12 - r1, q12 - p12 + r1)
        n_rng = _int_points(q23 - p23 - r2, q23 - p23 + r2)
        if len(m_rng) * len(n_rng) > _FAMILY_RANGE_CAP:
            raise RuntimeError("family detector shift range exceeds the cap")
        for m in m_rng:
            z12 = p12 + m - q12
            for n in n_rng:
                z23 = p23 + n - q23
                tw0 = z13_at(m, n) - z12 * z23 / 2
                if math.ceil(-tw0 - r3) <= math.floor(-tw0 + r3):
                    return True
        return False

    if d_q > kpp * center3:
        return False
    if family == 4:
        band = math.exp(b0 * t - gamma * t)
        lo = Fraction(band / (3.0 * kpp)) / d_q
        hi = Fraction(band * kpp) / d_q
        base = q12 - p12
        m_cands = list(_int_points(base + lo, base + hi)) + list(
            _int_points(base - hi, base - lo)
        )
        n_rng = _int_points(q23 - p23 - r2, q23 - p23 + r2)
        if len(m_cands) * len(n_rng) > _FAMILY_RANGE_CAP:
            raise RuntimeError("family detector shift range exceeds the cap")
        for m in m_cands:
            for n in n_rng:
                z13 = z13_at(m, n)
                if math.ceil(-z13 - r3) <= math.floor(-z13 + r3):
                    return True
        return False

    band = math.exp(a0 * t - gamma * t)
    lo = Fraction(band / (3.0 * kpp)) / d_q
    hi = Fraction(band * kpp) / d_q
    base = q23 - p23
    n_cands = list(_int_points(base + lo, base + hi)) + list(
        _int_points(base - hi, base - lo)
    )
    m_rng = _int_points(q12 - p12 - r1, q12 - p12 + r1)
    if len(n_cands) * len(m_rng) > _FAMILY_RANGE_CAP:
        raise RuntimeError("family detector shift range exceeds the cap")
    for n in n_cands:
        z23 = p23 + n - q23
        for m in m_rng:
            z12 = p12 + m - q12
            offset = z13_at(m, n) - z12 * z23
            if math.ceil(-offset - r3) <= math.floor(-offset + r3):
                return True
    return False


@dataclass(frozen=True)
class RationalityStructure:
    """Coset placement of a point relative to the rational upper unipotents."""

    rational: bool
    in_alpha0_coset: bool
    in_beta0_coset: bool


def rationality_structure(x12, x23, x13) -> RationalityStructure:
    """Coset structure of n(x12, x23, x13) over the rational chart.

    Each coordinate is an exact rational or None, where None marks a
    coordinate with no rational value and no rational relation to the other
    two.  The alpha0 coset absorbs x12 through a one-parameter shift, so
    membership needs x23 and the combination x13 - x12 x23 rational; the
    beta0 coset absorbs x23 and leaves both x12 and x13 untouched.
    """
    for v in (x12, x23, x13):
        if v is not None:
            frac(v)
    have12, have23, have13 = (v is not None for v in (x12, x23, x13))
    if not have23:
        alpha = False
    elif have12:
        alpha = have13
    else:
        alpha = frac(x23) == 0 and have13
    return RationalityStructure(
        rational=have12 and have23 and have13,
        in_alpha0_coset=alpha,
        in_beta0_coset=have12 and have13,
    )
