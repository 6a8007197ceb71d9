"""Shortest-vector machinery: LLL reduction, Fincke-Pohst enumeration,
the systole of a unimodular lattice, and the injectivity radius.

Exact Fraction arithmetic is used end to end when the input basis is
rational, giving certified minima; float inputs get a float pipeline with
a small safety margin on enumeration bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .exact import Mat3, mat3, mat_det, mat_inv, mat_mul
from .lie import GaugeValue, group_distance

# Gauge comparison: for a candidate v = I + w with ||w||_F <= CERT_RADIUS_CAP
# the group distance satisfies d(v, e) >= ||w||_F / KAPPA_GAUGE, and beyond
# the cap d(v, e) >= FAR_DISTANCE_FLOOR.  These bounds drive certification
# and search pruning.
KAPPA_GAUGE = 20.0
CERT_RADIUS_CAP = 11.0
FAR_DISTANCE_FLOOR = 0.55

_DEFAULT_BUDGET = 5_000_000


class EnumerationBudgetError(RuntimeError):
    """Enumeration node budget exhausted; carries the best value seen so far."""

    def __init__(self, message: str, best_value=None, best_witness=None):
        super().__init__(message)
        self.best_value = best_value
        self.best_witness = best_witness


class SearchRadiusError(ValueError):
    """No candidate found inside the requested Frobenius radius."""

    def __init__(self, message: str, bound: float):
        super().__init__(message)
        self.bound = bound


def _is_exact_rows(rows) -> bool:
    if isinstance(rows, np.ndarray):
        return False
    try:
        return all(isinstance(e, (int, Fraction)) for row in rows for e in row)
    except TypeError:
        return False


@dataclass(frozen=True)
class LatticeBasis:
    """Row basis of a lattice of rank 3 or 9.

    ``transform`` records the unimodular integer matrix U with
    vectors = U * source whenever the basis came out of a reduction.
    """

    vectors: tuple
    transform: Optional[tuple] = None

    def __post_init__(self) -> None:
        rows = tuple(tuple(v) for v in self.vectors)
        object.__setattr__(self, "vectors", rows)
        if len(rows) not in (3, 9):
            raise ValueError("lattice rank must be 3 or 9")
        dim = len(rows[0])
        if any(len(r) != dim for r in rows):
            raise ValueError("basis rows must share one dimension")
        if dim < len(rows):
            raise ValueError("ambient dimension below rank")
        if self.transform is not None:
            object.__setattr__(
                self, "transform", tuple(tuple(int(c) for c in r) for r in self.transform)
            )

    @property
    def rank(self) -> int:
        return len(self.vectors)

    @property
    def is_exact(self) -> bool:
        return _is_exact_rows(self.vectors)

    def gram(self):
        n = self.rank
        rows = self.vectors
        return tuple(
            tuple(sum(rows[i][k] * rows[j][k] for k in range(len(rows[0]))) for j in range(n))
            for i in range(n)
        )


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def lll_reduce(basis: LatticeBasis, delta: float = 0.99) -> LatticeBasis:
    """Lenstra-Lenstra-Lovasz reduction; exact for rational bases."""
    if not (0.25 < delta < 1):
        raise ValueError("delta must lie in (0.25, 1)")
    exact = basis.is_exact
    n = basis.rank
    if exact:
        # Fraction coercion up front keeps every division exact
        b = [[Fraction(e) for e in row] for row in basis.vectors]
        dlt = Fraction(delta)
    else:
        b = [[float(e) for e in row] for row in basis.vectors]
        dlt = float(delta)
    u = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def gso():
        mu = [[0] * n for _ in range(n)]
        bstar = []
        norms = []
        for i in range(n):
            v = list(b[i])
            for j in range(i):
                if norms[j] == 0:
                    raise ValueError("rank-deficient basis rejected")
                mij = _dot(b[i], bstar[j]) / norms[j]
                mu[i][j] = mij
                v = [v[k] - mij * bstar[j][k] for k in range(len(v))]
            nv = _dot(v, v)
            if exact:
                if nv == 0:
                    raise ValueError("rank-deficient basis rejected")
            elif nv <= 1e-24 * max(1.0, _dot(b[i], b[i])):
                raise ValueError("rank-deficient basis rejected")
            bstar.append(v)
            norms.append(nv)
        return mu, norms

    k = 1
    mu, norms = gso()
    while k < n:
        for j in range(k - 1, -1, -1):
            r = round(mu[k][j])
            if r != 0:
                b[k] = [b[k][t] - r * b[j][t] for t in range(len(b[k]))]
                u[k] = [u[k][t] - r * u[j][t] for t in range(n)]
                mu, norms = gso()
        if norms[k] >= (dlt - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            u[k], u[k - 1] = u[k - 1], u[k]
            mu, norms = gso()
            k = max(k - 1, 1)
    return LatticeBasis(vectors=tuple(tuple(row) for row in b), transform=tuple(map(tuple, u)))


def _ldl(gram):
    """G = L D L^T with unit lower-triangular L; raises unless positive definite."""
    n = len(gram)
    exact = isinstance(gram[0][0], (int, Fraction))
    if exact:
        gram = tuple(tuple(Fraction(e) for e in row) for row in gram)
    dvec = []
    low = [[0] * n for _ in range(n)]
    for i in range(n):
        low[i][i] = 1
    for i in range(n):
        for j in range(i):
            s = gram[i][j] - sum(low[i][k] * low[j][k] * dvec[k] for k in range(j))
            low[i][j] = s / dvec[j]
        di = gram[i][i] - sum(low[i][k] * low[i][k] * dvec[k] for k in range(i))
        ok = di > 0 if exact else di > 1e-18 * max(1.0, abs(float(gram[i][i])))
        if not ok:
            raise ValueError("Gram matrix is not positive definite")
        dvec.append(di)
    return dvec, low


def _nearest_int(x) -> int:
    if isinstance(x, (int, Fraction)):
        return math.floor(x + Fraction(1, 2))
    return math.floor(x + 0.5)


def _fp_search(dvec, low, bound, budget: int, collect_all: bool, solution_filter=None):
    """Enumerate integer x with Q(x) <= bound for Q given by the LDL data.

    Returns (best_q, best_x, solutions, nodes).  In minimizing mode the
    bound shrinks as better vectors appear and ``solutions`` stays empty;
    in collect mode every nonzero solution is kept, bound fixed.  A
    ``solution_filter`` callback (collect mode) replaces storage: it gets
    each (x, q) and may return a smaller cap to shrink the live search.
    """
    n = len(dvec)
    exact = isinstance(dvec[0], (int, Fraction)) and isinstance(bound, (int, Fraction))
    cap = [bound if exact else float(bound) * (1.0 + 1e-6)]
    x = [0] * n
    sols: list = []
    best = [None, None]  # q, coeffs
    nodes = [0]

    def bump():
        nodes[0] += 1
        if nodes[0] > budget:
            bv = best[0]
            raise EnumerationBudgetError(
                f"enumeration exceeded {budget} nodes",
                best_value=None if bv is None else math.sqrt(float(bv)),
                best_witness=best[1],
            )

    def record(q):
        if not any(x):
            return
        if collect_all:
            if solution_filter is not None:
                nb = solution_filter(tuple(x), q)
                if nb is not None and nb < cap[0]:
                    cap[0] = nb
                return
            sols.append((tuple(x), q))
        elif best[0] is None or q < best[0]:
            best[0] = q
            best[1] = tuple(x)
            cap[0] = q

    def rec(j, acc):
        if j < 0:
            record(acc)
            return
        c = sum(low[i][j] * x[i] for i in range(j + 1, n))
        m = _nearest_int(-c)
        t = m
        while True:
            bump()
            inc = dvec[j] * (t + c) * (t + c)
            if acc + inc > cap[0]:
                break
            x[j] = t
            rec(j - 1, acc + inc)
            t += 1
        t = m - 1
        while True:
            bump()
            inc = dvec[j] * (t + c) * (t + c)
            if acc + inc > cap[0]:
                break
            x[j] = t
            rec(j - 1, acc + inc)
            t -= 1
        x[j] = 0

    rec(n - 1, 0 if exact else 0.0)
    return best[0], best[1], sols, nodes[0]


@dataclass(frozen=True)
class ShortVectorResult:
    """Certified shortest vector data.

    ``witness`` holds integer coefficients in the ORIGINAL basis;
    ``exhaustive_below`` is the radius up to which the search was complete,
    so value <= exhaustive_below certifies global optimality.  ``value_sq``
    keeps the exact squared length when the input was rational.
    """

    value: float
    witness: tuple
    exhaustive_below: float
    value_sq: object = None


def _map_witness(x, transform):
    if transform is None:
        return tuple(int(c) for c in x)
    n = len(transform)
    return tuple(sum(x[j] * transform[j][k] for j in range(n)) for k in range(n))


def shortest_vector(basis: LatticeBasis, budget: int = _DEFAULT_BUDGET) -> ShortVectorResult:
    """Shortest nonzero lattice vector via LLL then Fincke-Pohst."""
    red = lll_reduce(basis)
    gram = red.gram()
    dvec, low = _ldl(gram)
    bound = min(gram[i][i] for i in range(red.rank))
    best_q, best_x, _, _ = _fp_search(dvec, low, bound, budget, collect_all=False)
    # the bound equals a basis vector's squared norm, so a minimum exists
    assert best_q is not None and best_x is not None
    witness = _map_witness(best_x, red.transform)
    return ShortVectorResult(
        value=math.sqrt(float(best_q)),
        witness=witness,
        exhaustive_below=math.sqrt(float(bound)),
        value_sq=best_q,
    )


def enumerate_short_vectors(
    basis: LatticeBasis, radius: float, budget: int = _DEFAULT_BUDGET
) -> list:
    """All nonzero lattice vectors of Euclidean length <= radius.

    Returns (coefficients in the original basis, squared length) pairs in a
    deterministic order sorted by squared length then coefficients.
    """
    if radius <= 0:
        return []
    red = lll_reduce(basis)
    gram = red.gram()
    dvec, low = _ldl(gram)
    bound = Fraction(radius) ** 2 if red.is_exact else float(radius) ** 2
    _, _, sols, _ = _fp_search(dvec, low, bound, budget, collect_all=True)
    out = [(_map_witness(x, red.transform), q) for x, q in sols]
    out.sort(key=lambda s: (s[1], s[0]))
    return out


def _columns_as_rows(g) -> tuple:
    return tuple(tuple(g[i][k] for i in range(3)) for k in range(3))


def systole(g, budget: int = _DEFAULT_BUDGET) -> float:
    """Length of the shortest nonzero vector of the lattice spanned by g's columns."""
    if _is_exact_rows(g):
        gm = mat3(g)
        if mat_det(gm) != 1:
            raise ValueError("matrix must have determinant 1")
        rows = _columns_as_rows(gm)
    else:
        a = np.asarray(g, dtype=float)
        if abs(float(np.linalg.det(a)) - 1.0) > 1e-9:
            raise ValueError("matrix must have determinant 1 within 1e-9")
        rows = _columns_as_rows(a.tolist())
    return shortest_vector(LatticeBasis(vectors=rows), budget=budget).value


def _det3_int(rows) -> int:
    (a, b, c), (d, e, f), (g, h, i) = rows
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


@dataclass(frozen=True)
class InjectivityRadius:
    """Injectivity radius reading; iterates as (eta, witness)."""

    eta: object
    witness: Mat3
    gauge: str
    certified: bool
    rejected: int
    radius: float
    transform: tuple = ()

    def __iter__(self):
        yield self.eta
        yield self.witness


def _conj_basis_rows(g, g_inv):
    """Rows: g E_ij g^{-1} flattened row-major, E_ij running row-major."""
    rows = []
    for i in range(3):
        for j in range(3):
            flat = []
            for r in range(3):
                for c in range(3):
                    flat.append(g[r][i] * g_inv[j][c])
            rows.append(tuple(flat))
    return tuple(rows)


def _frobenius_reach(m: float) -> float:
    """Largest ||v - I||_F an element with group distance <= m can have.

    The coefficient gauge bounds the log: eight coefficients of size m give
    ||log v||_F <= sqrt(18) m, so a nilpotent log reaches at most
    sqrt(18) m + 9 m^2 in Frobenius norm, the convergent-series branch is
    confined to the 0.35 ball and distances >= 0.172 r there, and the
    Frobenius fallback reaches m itself.  Everything farther out is
    provably at distance > m.
    """
    nil = 4.2427 * m + 9.0 * m * m
    near = min(0.36, 5.82 * m)
    return max(nil, near) * (1.0 + 1e-9)


def _gauge_floor(r: float) -> float:
    """Smallest group distance an element at Frobenius distance >= r can have.

    Inverse of _frobenius_reach: a ball of radius r searched empty proves
    eta is at least this value.
    """
    if r <= 0:
        return 0.0
    nil = (math.sqrt(18.0 + 36.0 * r) - 4.2427) / 18.0
    out = min(r, nil)
    if r <= 0.36:
        out = min(out, r / 5.82)
    return out * (1.0 - 1e-9)


def _conj_setup(g):
    """Conjugation-basis rows for the stabilizer search, exact or float."""
    exact = _is_exact_rows(g)
    if exact:
        gm = mat3(g)
        if mat_det(gm) != 1:
            raise ValueError("matrix must have determinant 1")
        g_inv = mat_inv(gm)
        return _conj_basis_rows(gm, g_inv), True, gm, g_inv
    a = np.asarray(g, dtype=float)
    if abs(float(np.linalg.det(a)) - 1.0) > 1e-6:
        raise ValueError("matrix must have determinant 1")
    a_inv = np.linalg.inv(a)
    return _conj_basis_rows(a.tolist(), a_inv.tolist()), False, a, a_inv


def _apply_transform(rows, warm):
    n = len(rows)
    return tuple(
        tuple(sum(warm[i][k] * rows[k][j] for k in range(n)) for j in range(len(rows[0])))
        for i in range(n)
    )


def _compose_transform(t2, t1):
    n = len(t2)
    return tuple(
        tuple(sum(t2[i][k] * t1[k][j] for k in range(n)) for j in range(n)) for i in range(n)
    )


def stabilizer_reduction(g, warm=None):
    """Integer transform that LLL-reduces the conjugation basis of g.

    Feeding the transform of a nearby group element back in as ``warm``
    keeps the float Gram-Schmidt numerically tame, which is what makes
    walking a basis along a one-parameter flow viable; a fresh heavily
    sheared basis would lose all precision at once.
    """
    rows, _, _, _ = _conj_setup(g)
    if warm is not None:
        rows = _apply_transform(rows, warm)
    red = lll_reduce(LatticeBasis(vectors=rows))
    if warm is None:
        return red.transform
    return _compose_transform(red.transform, warm)


def injectivity_radius(
    g,
    search_radius: float = 4.0,
    budget: int = _DEFAULT_BUDGET,
    warm=None,
) -> InjectivityRadius:
    """Minimal group distance from identity over the stabilizer of the lattice of g.

    Enumerates gamma = I + E with ||g E g^{-1}||_F at most search_radius by
    rank-9 short-vector search, post-filters by det(gamma) = 1 (rejections
    within the enumerated region are counted), and takes the minimum group
    distance.  The search is self-shrinking: everything beyond
    _frobenius_reach(best) is provably farther than the current best, so
    each improvement collapses the remaining enumeration ball, and a seed
    candidate built from the shortest direction usually collapses it before
    the main sweep starts.  The result is certified global when
    eta < min(search_radius, CERT_RADIUS_CAP) / KAPPA_GAUGE.

    ``warm`` is an optional starting transform from stabilizer_reduction
    of a nearby element; the composed transform is returned on the result.
    """
    if search_radius <= 0:
        raise ValueError("search_radius must be positive")
    rows, exact, gmat, gmat_inv = _conj_setup(g)
    if warm is not None:
        rows = _apply_transform(rows, warm)

    basis = LatticeBasis(vectors=rows)
    red = lll_reduce(basis)
    total = red.transform if warm is None else _compose_transform(red.transform, warm)
    gram = red.gram()
    dvec, low = _ldl(gram)

    best_eta = None
    best_witness = None
    best_gauge = ""

    def consider(coeffs) -> bool:
        """Group distance of gamma = I + coeffs; False when det rejects it."""
        nonlocal best_eta, best_witness, best_gauge
        gamma = tuple(
            tuple(coeffs[3 * i + j] + (1 if i == j else 0) for j in range(3))
            for i in range(3)
        )
        if _det3_int(gamma) != 1:
            return False
        if exact:
            v = mat_mul(mat_mul(gmat, mat3(gamma)), gmat_inv)
        else:
            v = gmat @ np.array(gamma, dtype=float) @ gmat_inv
        gd: GaugeValue = group_distance(v)
        if best_eta is None or gd.value < best_eta:
            best_eta = gd.value
            best_witness = gamma
            best_gauge = gd.gauge
        return True

    # seed with a unimodular multiple of the shortest direction: a small best
    # clamps the main collection radius through _frobenius_reach up front
    full_bound = Fraction(search_radius) ** 2 if exact else search_radius * search_radius
    seed_q, seed_x, _, _ = _fp_search(dvec, low, full_bound, budget, collect_all=False)
    if seed_x is not None:
        base = _map_witness(seed_x, total)
        base_len = math.sqrt(float(seed_q))
        k = 1
        while k * base_len <= search_radius and k <= 64:
            if consider(tuple(k * c for c in base)):
                break
            k += 1

    rejections = [0]

    def stream(xred, q):
        if not consider(_map_witness(xred, total)):
            rejections[0] += 1
            return None
        reach = _frobenius_reach(float(best_eta))
        return Fraction(reach) ** 2 if exact else reach * reach

    start = search_radius
    if best_eta is not None:
        start = min(search_radius, _frobenius_reach(float(best_eta)))
    bound = Fraction(start) ** 2 if exact else start * start
    _fp_search(dvec, low, bound, budget, collect_all=True, solution_filter=stream)
    rejected = rejections[0]

    if best_eta is None:
        raise SearchRadiusError(
            f"no stabilizer candidate within Frobenius radius {search_radius}; "
            "increase search_radius",
            bound=search_radius,
        )
    certified = float(best_eta) < min(search_radius, CERT_RADIUS_CAP) / KAPPA_GAUGE
    return InjectivityRadius(
        eta=best_eta,
        witness=best_witness,
        gauge=best_gauge,
        certified=certified,
        rejected=rejected,
        radius=search_radius,
        transform=total,
    )
