"""Shared test oracles and generators.

Everything here is deliberately literal: brute-force loops, shell scans,
and bucketed interval checks that do not share code paths with the library
routines they are used to judge.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product

import numpy as np

from latlab.ratpoints import RationalPointCanon


def sweep_canonical(b_max: int, q_max: int):
    """Every canonical tuple with b <= b_max and q <= q_max."""
    for b in range(1, b_max + 1):
        for a in range(b):
            if math.gcd(a, b) != 1:
                continue
            for q in range(1, q_max + 1):
                for p1 in range(q):
                    for p2 in range(q):
                        if math.gcd(math.gcd(p1, p2), q) != 1:
                            continue
                        yield RationalPointCanon(a=a, b=b, p1=p1, p2=p2, q=q)


def brute_shortest_rank3(vectors, cmax: int = 6) -> float:
    """Shortest nonzero vector length over |c_i| <= cmax by a literal loop."""
    rows = [[float(e) for e in row] for row in vectors]
    best = math.inf
    rng = range(-cmax, cmax + 1)
    for c1 in rng:
        for c2 in rng:
            for c3 in rng:
                if c1 == 0 and c2 == 0 and c3 == 0:
                    continue
                sq = sum(
                    (c1 * rows[0][k] + c2 * rows[1][k] + c3 * rows[2][k]) ** 2
                    for k in range(len(rows[0]))
                )
                best = min(best, sq)
    return math.sqrt(best)


def brute_enumerate_rank3(vectors, radius: float, cmax: int = 6):
    """All coefficient triples with |c_i| <= cmax and length <= radius.

    Returned as a set of sign-canonical tuples (first nonzero coefficient
    positive), since a vector and its negative have the same length.
    """
    rows = [[float(e) for e in row] for row in vectors]
    out = set()
    rng = range(-cmax, cmax + 1)
    for c in product(rng, rng, rng):
        if c == (0, 0, 0):
            continue
        sq = sum(
            (c[0] * rows[0][k] + c[1] * rows[1][k] + c[2] * rows[2][k]) ** 2
            for k in range(len(rows[0]))
        )
        if math.sqrt(sq) <= radius:
            lead = next(x for x in c if x != 0)
            out.add(c if lead > 0 else tuple(-x for x in c))
    return out


def brute_shortest_rank9(vectors, cmax: int = 6) -> float:
    """Shortest vector over the full |c_i| <= cmax box for a rank-9 basis.

    The box has 13^9 ~ 1e10 points, far beyond a literal loop, so the sum
    c . B is split as (first five coefficients) + (last four): all 13^5
    partial sums go into a KD-tree and each of the 13^4 complements asks for
    its nearest neighbor, which realizes the exact minimum over the whole
    box.  Exact nearest-neighbor queries, no approximation.
    """
    from scipy.spatial import cKDTree

    basis = np.asarray([[float(e) for e in row] for row in vectors])
    assert basis.shape == (9, 9)
    side = np.array(list(product(range(-cmax, cmax + 1), repeat=5)))
    tree_pts = side @ basis[:5]
    tree = cKDTree(tree_pts)
    comp = np.array(list(product(range(-cmax, cmax + 1), repeat=4)))
    queries = -(comp @ basis[5:])
    dists, _ = tree.query(queries, k=2, workers=-1)
    best = math.inf
    for d0, d1 in dists:
        # distance zero is the all-zero coefficient vector; take the runner-up
        d = d0 if d0 > 1e-9 else d1
        best = min(best, d)
    return float(best)


def bareiss_det(mat) -> int:
    """Exact integer determinant by fraction-free elimination."""
    n = len(mat)
    a = [[int(e) for e in row] for row in mat]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def random_unipotent_int(rng, bound: int = 3):
    """Random integer upper unipotent 3x3 matrix."""
    m = int(rng.integers(-bound, bound + 1))
    n = int(rng.integers(-bound, bound + 1))
    k = int(rng.integers(-bound, bound + 1))
    return ((1, m, k), (0, 1, n), (0, 0, 1))


def random_gamma(rng, steps: int = 6):
    """Random SL3(Z) element as a product of elementary shears."""
    g = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    for _ in range(steps):
        i = int(rng.integers(0, 3))
        j = int(rng.integers(0, 3))
        if i == j:
            continue
        c = int(rng.integers(-2, 3))
        for k in range(3):
            g[i][k] += c * g[j][k]
    return tuple(tuple(row) for row in g)


def random_fraction(rng, num_max: int = 9, den_max: int = 9, nonzero: bool = False):
    while True:
        f = Fraction(int(rng.integers(-num_max, num_max + 1)), int(rng.integers(1, den_max + 1)))
        if not nonzero or f != 0:
            return f


def shell_scan(limit: int):
    """Integer vectors ordered by increasing max-abs shell.

    Within a shell each coordinate runs 0, 1, ..., m, -1, ..., -m with the
    first coordinate outermost; only vectors whose max-abs equals the shell
    radius are yielded, so the order is total and duplicate-free.
    """
    order = lambda m: [0] + [s for k in range(1, m + 1) for s in (k,)] + [
        -k for k in range(1, m + 1)
    ]
    for m in range(limit + 1):
        for v in product(order(m), order(m), order(m)):
            if max(abs(c) for c in v) == m:
                yield v


def coordbox_intervals(box):
    """CoordBox -> (lo1, hi1, lo2, hi2, lo3, hi3) exact tuple."""
    return (box.lo1, box.hi1, box.lo2, box.hi2, box.lo3, box.hi3)


def centered_intervals(center, half_widths):
    """Point plus per-axis half-widths -> interval 6-tuple."""
    c1, c2, c3 = center
    r1, r2, r3 = half_widths
    return (c1 - r1, c1 + r1, c2 - r2, c2 + r2, c3 - r3, c3 + r3)


def assert_boxes_interior_disjoint(intervals) -> int:
    """Check no two boxes overlap in their interiors; returns pairs compared.

    intervals are exact (lo1, hi1, lo2, hi2, lo3, hi3) tuples.  Buckets by a
    coarse grid so only geometrically near pairs are compared, floats
    prefilter, and any near pair is decided in exact rational arithmetic.
    Face or edge contact is allowed; positive-volume overlap is not.
    """
    boxes = list(intervals)
    n = len(boxes)
    ctr = np.array(
        [[float(b[0] + b[1]) / 2, float(b[2] + b[3]) / 2, float(b[4] + b[5]) / 2] for b in boxes]
    )
    hw = np.array(
        [[float(b[1] - b[0]) / 2, float(b[3] - b[2]) / 2, float(b[5] - b[4]) / 2] for b in boxes]
    )
    cell = max(2.0 * float(hw.max()), 1e-9)
    buckets: dict = {}
    for i in range(n):
        key = tuple(int(math.floor(c / cell)) for c in ctr[i])
        buckets.setdefault(key, []).append(i)
    checked = 0
    for key, members in buckets.items():
        cand = []
        for dk in product((-1, 0, 1), repeat=3):
            cand.extend(buckets.get((key[0] + dk[0], key[1] + dk[1], key[2] + dk[2]), []))
        for i in members:
            for j in cand:
                if j <= i:
                    continue
                checked += 1
                gaps = np.abs(ctr[i] - ctr[j])
                sums = hw[i] + hw[j]
                if (gaps > sums + 1e-12).any():
                    continue
                bi, bj = boxes[i], boxes[j]
                open_overlap = (
                    min(bi[1], bj[1]) > max(bi[0], bj[0])
                    and min(bi[3], bj[3]) > max(bi[2], bj[2])
                    and min(bi[5], bj[5]) > max(bi[4], bj[4])
                )
                assert not open_overlap, f"boxes {i} and {j} overlap"
    return checked
