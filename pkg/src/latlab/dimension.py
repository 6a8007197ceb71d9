"""Critical exponents, dimension bounds, and the tree-like Cantor builder.

The covering-series side is exact affine arithmetic in the flow's root
values.  The constructive side assembles nested families of disjoint boxes
around band points, subdivides them into cubes, and evaluates the tree-like
lower bound together with an empirical box-counting estimate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .lie import Box3, FlowParams
from .ratpoints import (
    CoordBox,
    CountBudgetError,
    CountSpec,
    RationalPointCanon,
    TruncationMarker,
    enumerate_band,
)

#: Returned by dim_upper_bound when the exceptional set is provably empty.
EMPTY_SET = float("-inf")

#: Default margin added to gamma when shrinking boxes for the construction.
DEFAULT_EPSILON = 0.05


@dataclass(frozen=True)
class FamilyExponents:
    """Affine covering-series exponent s -> slope*s + intercept for one family."""

    family: int
    slope: float
    intercept: float
    critical_s: float

    def series_exponent(self, s: float) -> float:
        return self.slope * float(s) + self.intercept


def family_exponents(family: int, gamma: float, flow: FlowParams) -> FamilyExponents:
    """Exponent data of the covering series attached to one return family.

    The series over dyadic denominator bands has terms l^(slope*s+intercept);
    the critical point critical_s is where the exponent changes sign, hence
    the dimension threshold the covering argument certifies.
    """
    if family not in (1, 2, 3, 4, 5):
        raise ValueError("family index must be one of 1..5")
    gamma = float(gamma)
    a0 = float(flow.alpha0)
    b0 = float(flow.beta0)
    ab = a0 + b0
    if not 0 <= gamma < ab:
        raise ValueError("gamma must lie in [0, lambda1 - lambda3)")
    if family == 1:
        if gamma >= b0:
            raise ValueError("family 1 requires gamma below beta0 of the flow")
        slope = -ab / (b0 - gamma)
        intercept = (2 * a0 + b0) / (b0 - gamma) + 2
        critical = (2 * a0 + 3 * b0 - 2 * gamma) / ab
    elif family == 2:
        if gamma >= a0:
            raise ValueError("family 2 requires gamma below alpha0 of the flow")
        slope = -ab / (a0 - gamma)
        intercept = (a0 + 2 * b0) / (a0 - gamma) + 2
        critical = (3 * a0 + 2 * b0 - 2 * gamma) / ab
    elif family == 3:
        slope = -ab / (ab - gamma)
        intercept = ab / (ab - gamma) + 2
        critical = (3 * ab - 2 * gamma) / ab
    else:
        slope = -ab
        intercept = 3 * ab - 2 * gamma
        critical = (3 * ab - 2 * gamma) / ab
    return FamilyExponents(
        family=family, slope=slope, intercept=intercept, critical_s=critical
    )


def critical_dimension(family: int, gamma: float, flow: FlowParams) -> float:
    """Convergence threshold of the family's covering series."""
    return family_exponents(family, gamma, flow).critical_s


def dim_upper_bound(gamma: float, flow: FlowParams) -> float:
    """Upper bound 3 - 2*gamma/(lambda1 - lambda3) on the chart-level dimension.

    Once gamma reaches lambda1 - lambda3 the exceptional set is empty and the
    EMPTY_SET signal comes back instead of a number.
    """
    gamma = float(gamma)
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    top = float(flow.highest)
    if gamma >= top:
        return EMPTY_SET
    return 3.0 - 2.0 * gamma / top


def dim_full_space(gamma: float, flow: FlowParams) -> float:
    """Full 8-dimensional bound: the transverse directions contribute 5."""
    return 5.0 + dim_upper_bound(gamma, flow)


_EPSILON0_FLOOR = Fraction(1, 2**20)


def disjoint_shrink_boxes(
    points: Sequence[RationalPointCanon],
    gamma_eff: float,
    flow: FlowParams,
    epsilon0=Fraction(1, 4),
) -> tuple[list, Fraction]:
    """Pairwise disjoint boxes around band points, shrunk by denominator power.

    The half-width along each chart axis is epsilon0 * d^e with exponents
    e = -alpha0/(s - gamma_eff), -beta0/(s - gamma_eff), -s/(s - gamma_eff)
    for s = lambda1 - lambda3, matching the family-3 box at the band time of
    the denominator.  Half-widths are rounded outward a relative 1e-12 so
    the disjointness verdict stays conservative under the float powers.
    Returns ((point, Box3) pairs, final epsilon0) after halving epsilon0 as
    often as disjointness demands; an epsilon0 underflow below 2^-20 means
    the band is too dense to separate and raises instead.
    """
    if not points:
        raise ValueError("no points to separate")
    gamma_eff = float(gamma_eff)
    top = float(flow.highest)
    if not 0 <= gamma_eff < top:
        raise ValueError("gamma_eff must lie in [0, lambda1 - lambda3)")
    dens = [pt.d_p for pt in points]
    if max(dens) > 2 * min(dens):
        raise ValueError("points must share one dyadic denominator band")
    centers = [pt.coords() for pt in points]
    if len(set(centers)) < len(centers):
        raise ValueError("duplicate centers can never separate")
    eps = Fraction(epsilon0)
    if eps <= 0:
        raise ValueError("epsilon0 must be positive")
    denom = top - gamma_eff
    exps = (-float(flow.alpha0) / denom, -float(flow.beta0) / denom, -top / denom)
    bases = [
        tuple(Fraction(float(d) ** e * (1 + 1e-12)) for e in exps) for d in dens
    ]
    n = len(points)
    # float shadow of centers and half-widths: a pair whose float gap clears
    # the float width sum by 1e-12 is separated exactly too (all quantities
    # live in [0,1], so the absolute float error is bounded near 1e-15);
    # only the remaining near pairs are compared in exact arithmetic
    fc = np.array([[float(c) for c in ctr] for ctr in centers])
    fbase = np.array([[float(b) for b in base] for base in bases])

    def overlapping_pair(eps_now: Fraction):
        feps = float(eps_now)
        fhw = fbase * feps
        hw_cache: dict = {}

        def hw(i: int):
            if i not in hw_cache:
                hw_cache[i] = tuple(eps_now * b for b in bases[i])
            return hw_cache[i]

        for i0 in range(0, n, 256):
            i1 = min(i0 + 256, n)
            gap = np.abs(fc[i0:i1, None, :] - fc[None, :, :])
            wsum = fhw[i0:i1, None, :] + fhw[None, :, :]
            near = ~(gap > wsum + 1e-12).any(axis=2)
            for a_off, b_idx in np.argwhere(near):
                i, j = i0 + int(a_off), int(b_idx)
                if j <= i:
                    continue
                if not any(
                    abs(centers[i][ax] - centers[j][ax]) > hw(i)[ax] + hw(j)[ax]
                    for ax in range(3)
                ):
                    return i, j
        return None

    while eps >= _EPSILON0_FLOOR:
        if overlapping_pair(eps) is None:
            boxes = [
                (pt, Box3(r1=eps * base[0], r2=eps * base[1], r3=eps * base[2]))
                for pt, base in zip(points, bases)
            ]
            return boxes, eps
        eps /= 2
    raise ValueError(
        "epsilon0 underflow: the band is too dense for disjoint shrink boxes"
    )


@dataclass(frozen=True)
class TreeLevel:
    """One generation of the tree-like collection.

    parents are the cubes subdivided at this level (the seed box at level 1),
    children pair each band point with its clipped shrink box and the cube
    side used to tile it, and cubes are the tiles themselves, which become
    the next level's parents.  The deepest level reports only cube_count and
    leaves cubes empty, since its tiles are never subdivided and their number
    grows too fast to hold.  delta is the worst retained volume fraction over
    parents, diameter the largest cube diameter.
    """

    index: int
    l: int
    parents: tuple
    children: tuple
    cubes: tuple
    cube_count: int
    delta: Fraction
    diameter: float
    epsilon0: Fraction
    paper_faithful: bool


def _collect_band_points(box: CoordBox, l: int, k_halfwidth, flow, budget):
    pts = []
    spec = CountSpec(box=box, l=l, K_halfwidth=k_halfwidth)
    for item in enumerate_band(spec, flow=flow, budget=budget):
        if isinstance(item, TruncationMarker):
            raise CountBudgetError(
                "enumeration budget exhausted while building a level",
                partial_count=len(pts),
                examined=item.examined,
            )
        pts.append(item)
    return pts


def cantor_build(
    u0: CoordBox,
    gamma: float,
    epsilon: float,
    k_halfwidth: float,
    schedule: Sequence[int],
    flow: FlowParams,
    epsilon0=Fraction(1, 4),
    budget: Optional[int] = None,
) -> list[TreeLevel]:
    """Build the nested tree of shrink boxes and cubes along a band schedule.

    Per level and per parent cube: enumerate the band points inside the
    parent, separate them with disjoint_shrink_boxes at gamma + epsilon,
    clip each box to its parent, and tile the clipped box by cubes whose
    side is its smallest width (slivers trimmed, at least one cube per
    axis).  The paper's schedule growth condition l_j >= l_{j-1}^((j-1)^2)
    is checked and recorded; violating it only warns, since the lower-bound
    evaluator is schedule-agnostic at finite depth.
    """
    if not schedule:
        raise ValueError("schedule must be nonempty")
    sched = [int(l) for l in schedule]
    if any(l < 1 for l in sched) or any(b <= a for a, b in zip(sched, sched[1:])):
        raise ValueError("schedule must be strictly increasing and positive")
    gamma = float(gamma)
    epsilon = float(epsilon)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    gamma_eff = gamma + epsilon
    if not 0 <= gamma < float(flow.highest) or gamma_eff >= float(flow.highest):
        raise ValueError("gamma + epsilon must stay below lambda1 - lambda3")

    levels: list[TreeLevel] = []
    parents = [u0]
    prev_l = None
    for j, l in enumerate(sched, start=1):
        faithful = prev_l is None or l >= prev_l ** ((j - 1) ** 2)
        if not faithful:
            warnings.warn(
                f"level {j} band size {l} falls short of the growth condition; "
                "the finite-depth lower bound remains valid",
                stacklevel=2,
            )
        # the deepest level's tiles are never subdivided, so only their count
        # and side lengths matter; materializing them at large l exhausts memory
        keep_cubes = j < len(sched)
        children = []
        cubes = []
        cube_count = 0
        delta: Optional[Fraction] = None
        diameter = 0.0
        eps_final: Optional[Fraction] = None
        for parent in sorted(parents, key=lambda b: (b.lo1, b.lo2, b.lo3)):
            pts = _collect_band_points(parent, l, k_halfwidth, flow, budget)
            if not pts:
                raise ValueError(
                    f"a parent cube at level {j} captured no band points; "
                    "the schedule is too aggressive for this seed box"
                )
            boxes, eps_par = disjoint_shrink_boxes(pts, gamma_eff, flow, epsilon0)
            eps_final = eps_par if eps_final is None else min(eps_final, eps_par)
            vol_children = Fraction(0)
            for pt, box in boxes:
                c1, c2, c3 = pt.coords()
                lo = (
                    max(parent.lo1, c1 - box.r1),
                    max(parent.lo2, c2 - box.r2),
                    max(parent.lo3, c3 - box.r3),
                )
                hi = (
                    min(parent.hi1, c1 + box.r1),
                    min(parent.hi2, c2 + box.r2),
                    min(parent.hi3, c3 + box.r3),
                )
                widths = tuple(h - a for a, h in zip(lo, hi))
                side = min(widths)
                if side <= 0:
                    raise ValueError(
                        "a shrink box degenerated against its parent boundary"
                    )
                counts = tuple(math.floor(w / side) for w in widths)
                clipped = CoordBox(
                    lo1=lo[0], hi1=hi[0], lo2=lo[1], hi2=hi[1], lo3=lo[2], hi3=hi[2]
                )
                children.append((pt, clipped, side))
                cube_count += counts[0] * counts[1] * counts[2]
                if keep_cubes:
                    for i1 in range(counts[0]):
                        for i2 in range(counts[1]):
                            for i3 in range(counts[2]):
                                cubes.append(
                                    CoordBox(
                                        lo1=lo[0] + i1 * side,
                                        hi1=lo[0] + (i1 + 1) * side,
                                        lo2=lo[1] + i2 * side,
                                        hi2=lo[1] + (i2 + 1) * side,
                                        lo3=lo[2] + i3 * side,
                                        hi3=lo[2] + (i3 + 1) * side,
                                    )
                                )
                vol_children += side**3 * counts[0] * counts[1] * counts[2]
                diameter = max(diameter, math.sqrt(3.0) * float(side))
            frac_retained = vol_children / parent.volume()
            delta = frac_retained if delta is None else min(delta, frac_retained)
        levels.append(
            TreeLevel(
                index=j,
                l=l,
                parents=tuple(parents),
                children=tuple(children),
                cubes=tuple(cubes),
                cube_count=cube_count,
                delta=delta,
                diameter=diameter,
                epsilon0=eps_final,
                paper_faithful=faithful,
            )
        )
        parents = cubes
        prev_l = l
    return levels


def treelike_lower_bound(levels: Sequence[TreeLevel], ambient_dim: int = 3) -> float:
    """Finite-depth dimension bound ambient - (sum of log delta)/(log last diameter)."""
    if not levels:
        raise ValueError("need at least one level")
    d_last = float(levels[-1].diameter)
    if d_last >= 1:
        raise ValueError("deepest cube diameter must drop below 1")
    if any(lv.delta <= 0 for lv in levels):
        raise ValueError("every level must retain positive volume")
    acc = sum(math.log(float(lv.delta)) for lv in levels)
    return float(ambient_dim) - acc / math.log(d_last)


def box_counting_dim(points, scales: Sequence[float]) -> float:
    """Least-squares slope of log N(delta) against log(1/delta).

    N counts occupied delta-cells of the ambient grid.  A degenerate cloud
    (all points in one cell at every scale) comes out as 0.
    """
    pts = np.asarray([[float(c) for c in p] for p in points], dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("points must be triples of coordinates")
    ds = [float(s) for s in scales]
    if len(ds) < 2 or any(b >= a for a, b in zip(ds, ds[1:])):
        raise ValueError("need at least two strictly decreasing scales")
    xs = []
    ys = []
    for d in ds:
        cells = np.unique(np.floor(pts / d).astype(np.int64), axis=0)
        xs.append(math.log(1.0 / d))
        ys.append(math.log(float(cells.shape[0])))
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    sxx = sum((x - xbar) ** 2 for x in xs)
    sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    return sxy / sxx
