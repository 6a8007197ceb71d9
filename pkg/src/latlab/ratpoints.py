"""Rational points of the upper-unipotent orbit: canonical coordinates,
the closed-form denominator, an independent stabilizer oracle, the polar
component, and band enumeration/counting.

All point arithmetic is exact.  Counting has two routes: a literal
enumeration and a multiplicative fast path; they are kept separate so the
fast path can be checked against the slow one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Union

from .exact import frac, mat_inv, mat_mul, mat3
from .lie import FlowParams, UnipotentUpper, reduce_mod_gamma

# The ker-nu window applied by the CLI when none is given explicitly.
DEFAULT_K_HALFWIDTH = 10.0


class CountBudgetError(RuntimeError):
    """Counting hit the enumeration budget; carries the partial count."""

    def __init__(self, message: str, partial_count: int, examined: int):
        super().__init__(message)
        self.partial_count = partial_count
        self.examined = examined


@dataclass(frozen=True)
class TruncationMarker:
    """Final stream element signalling that enumeration stopped early."""

    reason: str
    examined: int


@dataclass(frozen=True)
class RationalPointCanon:
    """Canonical tuple (a, b, p1, p2, q) of a rational point, with derived data.

    The point has coordinates x12 = a/b, x23 = p2/q and
    x13 = p1/q + (a/b)(p2/q) taken modulo 1.
    """

    a: int
    b: int
    p1: int
    p2: int
    q: int
    d: int = 0
    d_p: int = 0
    a_p: tuple = ()

    def __post_init__(self) -> None:
        a, b, p1, p2, q = self.a, self.b, self.p1, self.p2, self.q
        for name, v in (("a", a), ("b", b), ("p1", p1), ("p2", p2), ("q", q)):
            if not isinstance(v, int):
                raise ValueError(f"{name} must be an integer")
        if b < 1 or q < 1:
            raise ValueError("b and q must be at least 1")
        if math.gcd(a, b) != 1:
            raise ValueError("a and b must be coprime")
        if math.gcd(p1, p2, q) != 1:
            raise ValueError("p1, p2, q must be jointly coprime")
        if not (0 <= a < b or (a == 0 and b == 1)):
            raise ValueError("a must satisfy 0 <= a < b")
        if not ((0 <= p1 < q and 0 <= p2 < q) or (p1 == 0 and p2 == 0 and q == 1)):
            raise ValueError("p1, p2 must satisfy 0 <= p1, p2 < q")
        d = math.gcd(q, b * p1 + a * p2)
        d_p = b * q * q // d
        a_p = (Fraction(d, b * q), Fraction(b, d), Fraction(q))
        assert a_p[0] * a_p[1] * a_p[2] == 1
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "d_p", d_p)
        object.__setattr__(self, "a_p", a_p)

    def coords(self) -> tuple[Fraction, Fraction, Fraction]:
        """Canonical coordinates in [0,1)^3."""
        x12 = Fraction(self.a, self.b)
        x23 = Fraction(self.p2, self.q)
        x13 = Fraction(self.p1, self.q) + x12 * x23
        return (x12, x23, x13 - math.floor(x13))


def expand(pt: RationalPointCanon) -> UnipotentUpper:
    """The unipotent with the tuple's coordinates (x13 not reduced mod 1)."""
    x12 = Fraction(pt.a, pt.b)
    x23 = Fraction(pt.p2, pt.q)
    return UnipotentUpper(x12=x12, x23=x23, x13=Fraction(pt.p1, pt.q) + x12 * x23)


def canonicalize(g: UnipotentUpper) -> RationalPointCanon:
    """Recover the canonical tuple from exact unipotent coordinates."""
    if not g.is_exact:
        raise TypeError("canonicalize requires exact rational coordinates")
    reduced, _ = reduce_mod_gamma(g)
    x12 = frac(reduced.x12)
    x23 = frac(reduced.x23)
    x13 = frac(reduced.x13)
    a, b = x12.numerator, x12.denominator
    t = x13 - x12 * x23
    t -= math.floor(t)  # the x13 chart is periodic mod 1
    q = math.lcm(x23.denominator, t.denominator)
    return RationalPointCanon(
        a=a, b=b, p1=int(t * q), p2=int(x23 * q), q=q
    )


def denominator_formula(pt: RationalPointCanon) -> int:
    """Closed form b*q^2 / gcd(q, b*p1 + a*p2)."""
    return pt.b * pt.q * pt.q // math.gcd(pt.q, pt.b * pt.p1 + pt.a * pt.p2)


_E31 = ((0, 0, 0), (0, 0, 0), (1, 0, 0))


def denominator_oracle(g: UnipotentUpper) -> Union[int, Fraction]:
    """Least s > 0 with g^{-1} (I + s E31) g integral, found from g^{-1} E31 g.

    With M = g^{-1} E31 g, D the lcm of reduced entry denominators and G
    the gcd of the entries of D*M, the answer is D/G.  Independent of the
    closed-form route: no use of the (a,b,p1,p2,q) parametrization.
    """
    if not g.is_exact:
        raise TypeError("denominator_oracle requires exact rational coordinates")
    gm = g.to_matrix()
    m = mat_mul(mat_mul(mat_inv(gm), mat3(_E31)), gm)
    dd = 1
    for row in m:
        for e in row:
            dd = math.lcm(dd, frac(e).denominator)
    gg = 0
    for row in m:
        for e in row:
            gg = math.gcd(gg, int(frac(e) * dd))
    s_min = Fraction(dd, gg)
    return int(s_min) if s_min.denominator == 1 else s_min


def polar_component(pt: RationalPointCanon) -> tuple[Fraction, Fraction, Fraction]:
    """Diagonal triple (d/(bq), b/d, q); its nu-logarithm exponentiates to d_p."""
    return pt.a_p


def kernu_coordinate_parts(b: int, q: int, d: int, flow: FlowParams) -> float:
    """ker-nu coordinate of log a_p from the data it actually depends on."""
    d_p = b * q * q // d
    c = -math.log(d_p) / float(flow.highest)
    return (math.log(Fraction(d, b)) + c * float(flow.lambda2)) / 2.0


def kernu_coordinate(pt: RationalPointCanon, flow: FlowParams) -> float:
    """Coordinate s with log a_p = diag(s,-2s,s) + c*X0."""
    return kernu_coordinate_parts(pt.b, pt.q, pt.d, flow)


@dataclass(frozen=True)
class CoordBox:
    """Closed coordinate box [lo1,hi1]x[lo2,hi2]x[lo3,hi3] inside [0,1]^3."""

    lo1: Fraction
    hi1: Fraction
    lo2: Fraction
    hi2: Fraction
    lo3: Fraction
    hi3: Fraction

    def __post_init__(self) -> None:
        vals = {}
        for name in ("lo1", "hi1", "lo2", "hi2", "lo3", "hi3"):
            vals[name] = frac(getattr(self, name))
            object.__setattr__(self, name, vals[name])
        for axis in ("1", "2", "3"):
            lo, hi = vals["lo" + axis], vals["hi" + axis]
            if not (0 <= lo <= hi <= 1):
                raise ValueError("box must satisfy 0 <= lo <= hi <= 1 on each axis")

    @classmethod
    def unit(cls) -> "CoordBox":
        return cls(0, 1, 0, 1, 0, 1)

    def volume(self) -> Fraction:
        return (
            (self.hi1 - self.lo1) * (self.hi2 - self.lo2) * (self.hi3 - self.lo3)
        )

    def interval(self, axis: int) -> tuple[Fraction, Fraction]:
        return {
            1: (self.lo1, self.hi1),
            2: (self.lo2, self.hi2),
            3: (self.lo3, self.hi3),
        }[axis]

    def contains(self, x1, x2, x3) -> bool:
        return (
            self.lo1 <= x1 <= self.hi1
            and self.lo2 <= x2 <= self.hi2
            and self.lo3 <= x3 <= self.hi3
        )


@dataclass(frozen=True)
class CountSpec:
    """Band-counting request: box, scale l (band is [l/2, l]), optional K window."""

    box: CoordBox
    l: Fraction
    K_halfwidth: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "l", frac(self.l))
        if self.l < 1:
            raise ValueError("l must be at least 1")
        if self.K_halfwidth is not None and self.K_halfwidth < 0:
            raise ValueError("K_halfwidth must be nonnegative")

    @property
    def band(self) -> tuple[Fraction, Fraction]:
        return (self.l / 2, self.l)


class _Sieve:
    """Growable smallest-prime-factor sieve with derived number theory."""

    def __init__(self) -> None:
        self.spf = [0, 1]

    def grow(self, n: int) -> None:
        if n < len(self.spf):
            return
        size = max(n + 1, 2 * len(self.spf))
        spf = list(range(size))
        for p in range(2, math.isqrt(size - 1) + 1):
            if spf[p] == p:
                for m in range(p * p, size, p):
                    if spf[m] == m:
                        spf[m] = p
        self.spf = spf

    def factorize(self, n: int) -> list[tuple[int, int]]:
        self.grow(n)
        out = []
        while n > 1:
            p = self.spf[n]
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return out

    def phi(self, n: int) -> int:
        r = n
        for p, _ in self.factorize(n):
            r -= r // p
        return r

    def squarefree_divisors(self, n: int) -> list[tuple[int, int]]:
        """Pairs (d, mu(d)) over squarefree divisors d of n."""
        out = [(1, 1)]
        for p, _ in self.factorize(n):
            out += [(d * p, -mu) for d, mu in out]
        return out

    def divisors(self, n: int) -> list[int]:
        out = [1]
        for p, e in self.factorize(n):
            out = [d * p**k for d in out for k in range(e + 1)]
        return sorted(out)


_SIEVE = _Sieve()


def residue_pair_count(q: int, d: int) -> int:
    """Number of (p1, p2) mod q with gcd(p1,p2,q)=1 and gcd(b*p1+a*p2, q)=d.

    Independent of the coprime pair (a, b); multiplicative in q.
    """
    if q % d != 0:
        raise ValueError("d must divide q")
    total = 1
    dv = d
    for p, e in _SIEVE.factorize(q):
        k = 0
        while dv % p == 0:
            dv //= p
            k += 1
        if k == 0:
            f = p ** (2 * e - 1) * (p - 1)
        elif k == e:
            f = p ** (e - 1) * (p - 1)
        else:
            f = p ** (2 * e - k - 2) * (p - 1) * (p - 1)
        total *= f
    return total


def _int_range(lo: Fraction, hi: Fraction, upper: int) -> tuple[int, int]:
    """Integers n with lo <= n <= hi clamped to [0, upper]; empty when start > end."""
    start = max(0, math.ceil(lo))
    end = min(upper, math.floor(hi))
    return start, end


def _coprime_count_interval(b: int, lo: Fraction, hi: Fraction) -> int:
    """#{a in [0, b-1] : gcd(a,b)=1, lo <= a/b <= hi} by Moebius inversion."""
    a0, a1 = _int_range(lo * b, hi * b, b - 1)
    if a1 < a0:
        return 0
    total = 0
    for d, mu in _SIEVE.squarefree_divisors(b):
        cnt = a1 // d - (a0 + d - 1) // d + 1
        if cnt > 0:
            total += mu * cnt
    return total


def _p1_ranges(q: int, lo3: Fraction, hi3: Fraction, shift: Fraction):
    """Integer ranges of p1 with ((p1/q + shift) mod 1) in [lo3, hi3]."""
    if hi3 - lo3 >= 1:
        return [(0, q - 1)]
    lo = (lo3 - shift) * q
    hi = (hi3 - shift) * q
    ranges = []
    r1 = _int_range(lo, hi, q - 1)
    if r1[1] >= r1[0]:
        ranges.append(r1)
    r2 = _int_range(lo + q, hi + q, q - 1)
    if r2[1] >= r2[0]:
        ranges.append(r2)
    return ranges


def enumerate_band(
    spec: CountSpec,
    flow: Optional[FlowParams] = None,
    budget: Optional[int] = None,
) -> Iterator[Union[RationalPointCanon, TruncationMarker]]:
    """All canonical points in the box with d_p in [l/2, l], ascending (b,q,a,p1,p2).

    When the spec carries a K window a flow must be supplied; the window
    constrains the ker-nu coordinate of the polar component.  If a budget
    is given, at most that many candidate tuples are examined and the
    stream ends with a TruncationMarker once it runs out.
    """
    if spec.K_halfwidth is not None and flow is None:
        raise ValueError("K window requires a flow")
    lo_band, hi_band = spec.band
    box = spec.box
    l = spec.l
    examined = 0
    b = 0
    while True:
        b += 1
        if b > l:
            break
        a_lo, a_hi = _int_range(box.lo1 * b, box.hi1 * b, b - 1)
        if a_hi < a_lo:
            continue
        q = 0
        while True:
            q += 1
            if b * q > l:
                break
            bq2 = b * q * q
            if bq2 < lo_band:
                continue
            # admissible divisors d of q keep d_p = b q^2 / d inside the band
            k_ok = {}
            for d in _SIEVE.divisors(q):
                d_p = bq2 // d
                if not (lo_band <= d_p <= hi_band):
                    continue
                ok = True
                if spec.K_halfwidth is not None:
                    ok = abs(kernu_coordinate_parts(b, q, d, flow)) <= spec.K_halfwidth
                k_ok[d] = ok
            if not any(k_ok.values()):
                continue
            p2_lo, p2_hi = _int_range(box.lo2 * q, box.hi2 * q, q - 1)
            for a in range(a_lo, a_hi + 1):
                if math.gcd(a, b) != 1:
                    continue
                x12 = Fraction(a, b)
                # the x13 ranges depend on p2, so gather the group and sort
                # to keep the emitted order ascending in (p1, p2)
                group: list = []
                out_of_budget = False
                for p2 in range(p2_lo, p2_hi + 1):
                    shift = x12 * Fraction(p2, q)
                    for r_lo, r_hi in _p1_ranges(q, box.lo3, box.hi3, shift):
                        for p1 in range(r_lo, r_hi + 1):
                            if budget is not None and examined >= budget:
                                out_of_budget = True
                                break
                            examined += 1
                            if math.gcd(p1, p2, q) != 1:
                                continue
                            d = math.gcd(q, b * p1 + a * p2)
                            if not k_ok.get(d, False):
                                continue
                            group.append((p1, p2))
                        if out_of_budget:
                            break
                    if out_of_budget:
                        break
                for p1, p2 in sorted(group):
                    yield RationalPointCanon(a=a, b=b, p1=p1, p2=p2, q=q)
                if out_of_budget:
                    yield TruncationMarker(
                        reason="candidate budget exhausted", examined=examined
                    )
                    return


def _axes_23_full(box: CoordBox) -> bool:
    return box.lo2 <= 0 and box.hi2 >= 1 and box.lo3 <= 0 and box.hi3 >= 1


def count_band(
    spec: CountSpec,
    flow: Optional[FlowParams] = None,
    budget: Optional[int] = None,
    method: str = "auto",
) -> int:
    """Number of canonical points in the box with d_p in [l/2, l].

    The fast multiplicative route applies when the box restricts only x12,
    because the residue-pair count per divisor class is then independent
    of a.  Otherwise (or when method="slow") the literal enumeration runs.
    """
    if method not in ("auto", "fast", "slow"):
        raise ValueError("method must be auto, fast, or slow")
    use_fast = method == "fast" or (method == "auto" and _axes_23_full(spec.box))
    if use_fast and not _axes_23_full(spec.box):
        raise ValueError("fast counting requires the box to restrict only x12")
    if spec.K_halfwidth is not None and flow is None:
        raise ValueError("K window requires a flow")
    if not use_fast:
        total = 0
        for item in enumerate_band(spec, flow=flow, budget=budget):
            if isinstance(item, TruncationMarker):
                raise CountBudgetError(
                    "counting stopped early: " + item.reason,
                    partial_count=total,
                    examined=item.examined,
                )
            total += 1
        return total

    lo_band, hi_band = spec.band
    box = spec.box
    l = spec.l
    total = 0
    b = 0
    coprime_in_box = {}
    while True:
        b += 1
        if b > l:
            break
        q = 0
        while True:
            q += 1
            if b * q > l:
                break
            bq2 = b * q * q
            if bq2 < lo_band:
                continue
            inner = 0
            for d in _SIEVE.divisors(q):
                d_p = bq2 // d
                if not (lo_band <= d_p <= hi_band):
                    continue
                if spec.K_halfwidth is not None:
                    if abs(kernu_coordinate_parts(b, q, d, flow)) > spec.K_halfwidth:
                        continue
                inner += residue_pair_count(q, d)
            if inner:
                if b not in coprime_in_box:
                    coprime_in_box[b] = _coprime_count_interval(b, box.lo1, box.hi1)
                total += coprime_in_box[b] * inner
    return total


def count_family(family: str, l: int) -> int:
    """Exact count of a coordinate family's points in the unit box with d_r <= l.

    Families: "E1" is (0,1,p1,p2,q) with d_r = q^2/gcd(q,p1); "E2" is
    x23 = 0 points (a,b,p,0,q), gcd(p,q)=1, with d_r = b q^2/gcd(q,b);
    "E3" is every canonical tuple with d_r = the full denominator.
    """
    if l < 1:
        raise ValueError("l must be at least 1")
    l = int(l)
    if family == "E1":
        total = 0
        for q in range(1, l + 1):
            for d in _SIEVE.divisors(q):
                if q * q <= l * d:
                    total += residue_pair_count(q, d)
        return total
    if family == "E2":
        total = 0
        for b in range(1, l + 1):
            for q in range(1, l // b + 1):
                if b * q * q <= l * math.gcd(q, b):
                    total += _SIEVE.phi(b) * _SIEVE.phi(q)
        return total
    if family == "E3":
        total = 0
        for b in range(1, l + 1):
            phi_b = _SIEVE.phi(b)
            for q in range(1, l // b + 1):
                bq2 = b * q * q
                for d in _SIEVE.divisors(q):
                    if bq2 <= l * d:
                        total += phi_b * residue_pair_count(q, d)
        return total
    raise ValueError("family must be E1, E2, or E3")
