"""Root data, diagonal flows, and the unipotent coordinate layer.

Two numeric layers coexist: exact ``fractions.Fraction`` arithmetic for
number-theoretic work and float64 (numpy) for orbit simulation.  Functions
accept either and answer in kind; conversion is one-way, exact to float.

The norm on the Lie algebra is the max of absolute values of the eight
coefficients in the basis

    E21, E32, E31, E12, E23, E13, e1 = diag(1,0,-1), e2 = diag(1,-2,1),

so the generator of the lowest root space has norm exactly 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import NamedTuple, Union

import numpy as np

from .exact import MAT_ID, Mat3, mat3, mat_mul

Real = Union[int, float, Fraction]

# Frobenius radius below which the matrix log series is used for
# non-nilpotent arguments; beyond it the Frobenius gauge takes over.
LOG_NEAR_THRESHOLD = 0.35

_LOG_SERIES_TERMS = 60


def _is_exact_mat(m) -> bool:
    if isinstance(m, np.ndarray):
        return False
    try:
        return all(isinstance(e, (int, Fraction)) for row in m for e in row)
    except TypeError:
        return False


def _as_np(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    return a


class Root(Enum):
    """The six roots of sl3 relative to the diagonal torus."""

    PLUS_A0 = "+a0"
    PLUS_B0 = "+b0"
    PLUS_AB = "+ab"
    MINUS_A0 = "-a0"
    MINUS_B0 = "-b0"
    MINUS_AB = "-ab"


# Lowest root: the direction whose stabilizer intersection detects
# rational points, and the negative of the highest root.
NU = Root.MINUS_AB

POSITIVE_ROOTS = (Root.PLUS_A0, Root.PLUS_B0, Root.PLUS_AB)
NEGATIVE_ROOTS = (Root.MINUS_A0, Root.MINUS_B0, Root.MINUS_AB)


@dataclass(frozen=True)
class FlowParams:
    """Exponents of a regular diagonal flow a_t = diag(e^{l1 t}, e^{l2 t}, e^{l3 t})."""

    lambda1: Real
    lambda2: Real
    lambda3: Real

    def __post_init__(self) -> None:
        l1, l2, l3 = self.lambda1, self.lambda2, self.lambda3
        if not (l1 > l2 > l3):
            raise ValueError("flow exponents must be strictly decreasing")
        s = l1 + l2 + l3
        if self.is_exact:
            if s != 0:
                raise ValueError("flow exponents must sum to zero")
        elif abs(s) > 1e-12:
            raise ValueError("flow exponents must sum to zero within 1e-12")

    @property
    def is_exact(self) -> bool:
        return all(
            isinstance(v, (int, Fraction)) for v in (self.lambda1, self.lambda2, self.lambda3)
        )

    @property
    def alpha0(self) -> Real:
        return self.lambda1 - self.lambda2

    @property
    def beta0(self) -> Real:
        return self.lambda2 - self.lambda3

    @property
    def highest(self) -> Real:
        return self.lambda1 - self.lambda3

    @property
    def nu(self) -> Real:
        return self.lambda3 - self.lambda1

    def diag(self) -> tuple[Real, Real, Real]:
        return (self.lambda1, self.lambda2, self.lambda3)


def root_eval(root: Root, flow: FlowParams, t: Real) -> Real:
    """Evaluate t times the root on the flow generator."""
    base = {
        Root.PLUS_A0: flow.alpha0,
        Root.PLUS_B0: flow.beta0,
        Root.PLUS_AB: flow.highest,
        Root.MINUS_A0: -flow.alpha0,
        Root.MINUS_B0: -flow.beta0,
        Root.MINUS_AB: -flow.highest,
    }[root]
    return t * base


def flow_exp(flow: FlowParams, t: float) -> np.ndarray:
    """The group element a_t as a float diagonal matrix."""
    return np.diag([math.exp(float(l) * t) for l in flow.diag()])


def conjugate_by_flow(m, flow: FlowParams, t: float) -> np.ndarray:
    """a_t m a_{-t}, computed entrywise to avoid forming huge diagonals."""
    a = _as_np(m)
    lams = [float(l) for l in flow.diag()]
    out = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            if a[i, j] == 0.0:
                continue
            try:
                val = a[i, j] * math.exp((lams[i] - lams[j]) * t)
            except OverflowError:
                raise OverflowError(
                    f"conjugation scale exp({(lams[i] - lams[j]) * t:.6g}) "
                    "exceeds float range"
                ) from None
            if math.isinf(val):
                raise OverflowError("conjugated entry exceeds float range")
            out[i, j] = val
    return out


@dataclass(frozen=True)
class RootCoords:
    """Coefficients of a Lie algebra element in the fixed eight-vector basis.

    Field order mirrors the basis: p* are the positive root directions
    (E12, E23, E13), m* the negative ones (E21, E32, E31), e1/e2 the
    traceless diagonal pair.
    """

    c_pa0: Real = 0
    c_pb0: Real = 0
    c_pab: Real = 0
    c_ma0: Real = 0
    c_mb0: Real = 0
    c_mab: Real = 0
    c_e1: Real = 0
    c_e2: Real = 0

    def norm(self) -> Real:
        return max(
            abs(self.c_pa0), abs(self.c_pb0), abs(self.c_pab),
            abs(self.c_ma0), abs(self.c_mb0), abs(self.c_mab),
            abs(self.c_e1), abs(self.c_e2),
        )

    def norm_plus(self) -> Real:
        return max(abs(self.c_pa0), abs(self.c_pb0), abs(self.c_pab))

    def norm_minus(self) -> Real:
        return max(abs(self.c_ma0), abs(self.c_mb0), abs(self.c_mab))

    def norm_zero(self) -> Real:
        return max(abs(self.c_e1), abs(self.c_e2))

    def coefficient(self, root: Root) -> Real:
        return {
            Root.PLUS_A0: self.c_pa0,
            Root.PLUS_B0: self.c_pb0,
            Root.PLUS_AB: self.c_pab,
            Root.MINUS_A0: self.c_ma0,
            Root.MINUS_B0: self.c_mb0,
            Root.MINUS_AB: self.c_mab,
        }[root]

    @property
    def is_exact(self) -> bool:
        return all(
            isinstance(v, (int, Fraction))
            for v in (
                self.c_pa0, self.c_pb0, self.c_pab,
                self.c_ma0, self.c_mb0, self.c_mab,
                self.c_e1, self.c_e2,
            )
        )

    def to_matrix(self):
        """Matrix of the element; exact when every coefficient is exact."""
        y1 = self.c_e1 + self.c_e2
        y2 = -2 * self.c_e2
        y3 = -self.c_e1 + self.c_e2
        rows = (
            (y1, self.c_pa0, self.c_pab),
            (self.c_ma0, y2, self.c_pb0),
            (self.c_mab, self.c_mb0, y3),
        )
        if self.is_exact:
            return mat3(rows)
        return np.array(rows, dtype=float)

    @classmethod
    def from_matrix(cls, m) -> "RootCoords":
        if _is_exact_mat(m):
            tr = m[0][0] + m[1][1] + m[2][2]
            if tr != 0:
                raise ValueError("matrix must be traceless")
            return cls(
                c_pa0=m[0][1], c_pb0=m[1][2], c_pab=m[0][2],
                c_ma0=m[1][0], c_mb0=m[2][1], c_mab=m[2][0],
                c_e1=Fraction(m[0][0] - m[2][2], 2), c_e2=Fraction(-m[1][1], 1) / 2,
            )
        a = _as_np(m)
        scale = max(1.0, float(np.abs(a).max()))
        if abs(a[0, 0] + a[1, 1] + a[2, 2]) > 1e-9 * scale:
            raise ValueError("matrix must be traceless")
        return cls(
            c_pa0=a[0, 1], c_pb0=a[1, 2], c_pab=a[0, 2],
            c_ma0=a[1, 0], c_mb0=a[2, 1], c_mab=a[2, 0],
            c_e1=(a[0, 0] - a[2, 2]) / 2.0, c_e2=-a[1, 1] / 2.0,
        )


def adjoint_flow(coords: RootCoords, flow: FlowParams, t: float) -> RootCoords:
    """Scale each root coefficient by exp of the root evaluated at time t."""
    scaled = {}
    fields = {
        Root.PLUS_A0: "c_pa0", Root.PLUS_B0: "c_pb0", Root.PLUS_AB: "c_pab",
        Root.MINUS_A0: "c_ma0", Root.MINUS_B0: "c_mb0", Root.MINUS_AB: "c_mab",
    }
    for root, name in fields.items():
        x = float(root_eval(root, flow, t))
        try:
            factor = math.exp(x)
        except OverflowError:
            raise OverflowError(
                f"adjoint scale exp({x:.6g}) exceeds float range"
            ) from None
        val = float(coords.coefficient(root)) * factor
        if math.isinf(val):
            raise OverflowError("adjoint-scaled coefficient exceeds float range")
        scaled[name] = val
    return RootCoords(c_e1=coords.c_e1, c_e2=coords.c_e2, **scaled)


def _triangle_parts(m):
    """Split into (diag, upper strict, lower strict) entry tuples."""
    return (
        (m[0][0], m[1][1], m[2][2]),
        (m[0][1], m[0][2], m[1][2]),
        (m[1][0], m[2][0], m[2][1]),
    )


def log_unipotent(u) -> RootCoords:
    """Nilpotent logarithm of an upper or lower unipotent triangular matrix.

    The series terminates: log(I+N) = N - N^2/2 for strictly triangular N.
    """
    exact = _is_exact_mat(u)
    if not exact:
        u = _as_np(u)
    diag, upper, lower = _triangle_parts(u)
    if exact:
        unit = all(d == 1 for d in diag)
        upper_zero = all(e == 0 for e in upper)
        lower_zero = all(e == 0 for e in lower)
    else:
        unit = all(abs(float(d) - 1.0) <= 1e-9 for d in diag)
        upper_zero = all(abs(float(e)) <= 1e-9 for e in upper)
        lower_zero = all(abs(float(e)) <= 1e-9 for e in lower)
    if not unit or not (upper_zero or lower_zero):
        raise ValueError("input is not a unipotent triangular matrix")
    if lower_zero:
        x12, x23, x13 = u[0][1], u[1][2], u[0][2]
        if exact:
            return RootCoords(c_pa0=x12, c_pb0=x23, c_pab=x13 - Fraction(x12 * x23, 2))
        return RootCoords(c_pa0=x12, c_pb0=x23, c_pab=x13 - x12 * x23 / 2.0)
    x21, x32, x31 = u[1][0], u[2][1], u[2][0]
    if exact:
        return RootCoords(c_ma0=x21, c_mb0=x32, c_mab=x31 - Fraction(x21 * x32, 2))
    return RootCoords(c_ma0=x21, c_mb0=x32, c_mab=x31 - x21 * x32 / 2.0)


def exp_nilpotent(x):
    """exp of a nilpotent matrix: I + X + X^2/2, checked via X^3 = 0."""
    if _is_exact_mat(x):
        x = mat3(x)
        x2 = mat_mul(x, x)
        x3 = mat_mul(x2, x)
        if any(e != 0 for row in x3 for e in row):
            raise ValueError("matrix is not nilpotent")
        return mat3(
            tuple(
                tuple(MAT_ID[i][j] + x[i][j] + Fraction(x2[i][j], 2) for j in range(3))
                for i in range(3)
            )
        )
    a = _as_np(x)
    a2 = a @ a
    a3 = a2 @ a
    scale = max(1.0, float(np.abs(a).max()) ** 3)
    if float(np.abs(a3).max()) > 1e-9 * scale:
        raise ValueError("matrix is not nilpotent")
    return np.eye(3) + a + a2 / 2.0


def log_near_identity(v) -> np.ndarray:
    """Matrix log by power series; requires ||v - I||_F at most the near threshold."""
    a = _as_np(v)
    n = a - np.eye(3)
    r = float(np.linalg.norm(n))
    if r > LOG_NEAR_THRESHOLD:
        raise ValueError(
            f"||v - I||_F = {r:.6g} exceeds series threshold {LOG_NEAR_THRESHOLD}"
        )
    out = np.zeros((3, 3))
    power = np.eye(3)
    for k in range(1, _LOG_SERIES_TERMS + 1):
        power = power @ n
        out += ((-1) ** (k + 1) / k) * power
    return out


class GaugeValue(NamedTuple):
    """A distance-to-identity reading together with the gauge that produced it."""

    value: Real
    gauge: str  # "log" or "frobenius"


def matrix_log(v):
    """Matrix logarithm of a group element that admits one here.

    Exact input with nilpotent v - I yields an exact tuple matrix via the
    terminating series; float input close to the identity goes through the
    convergent series.  Anything farther away raises ValueError.
    """
    if _is_exact_mat(v):
        m = mat3(v)
        n = tuple(
            tuple(m[i][j] - MAT_ID[i][j] for j in range(3)) for i in range(3)
        )
        n2 = mat_mul(n, n)
        n3 = mat_mul(n2, n)
        if all(e == 0 for row in n3 for e in row):
            # log(I+N) = N - N^2/2 + N^3/3 with the last term vanishing
            return tuple(
                tuple(n[i][j] - Fraction(n2[i][j], 2) for j in range(3))
                for i in range(3)
            )
        v = np.array([[float(e) for e in row] for row in m])
    a = _as_np(v)
    n = a - np.eye(3)
    n2 = n @ n
    n3 = n2 @ n
    scale = max(1.0, float(np.abs(n).max()) ** 3)
    if float(np.abs(n3).max()) <= 1e-9 * scale:
        return n - n2 / 2.0 + n3 / 3.0
    if float(np.linalg.norm(n)) <= LOG_NEAR_THRESHOLD:
        return log_near_identity(a)
    raise ValueError("input is too far from the identity for a matrix log")


def group_distance(v) -> GaugeValue:
    """Distance from v to the identity.

    Uses the max-coefficient norm of log v when v is unipotent-shaped
    (nilpotent v - I) or close enough for the log series; otherwise falls
    back to the Frobenius gauge ||v - I||_F and says so.
    """
    try:
        logm = matrix_log(v)
    except ValueError:
        r = float(np.linalg.norm(_as_np(v) - np.eye(3)))
        return GaugeValue(r, "frobenius")
    if isinstance(logm, np.ndarray):
        return GaugeValue(RootCoords.from_matrix(_traceless(logm)).norm(), "log")
    return GaugeValue(RootCoords.from_matrix(logm).norm(), "log")


def _traceless(m: np.ndarray) -> np.ndarray:
    """Strip float round-off from the trace before coordinate extraction."""
    tr = float(np.trace(m))
    return m - (tr / 3.0) * np.eye(3)


@dataclass(frozen=True)
class UnipotentUpper:
    """Coordinates (x12, x23, x13) of an upper unipotent matrix."""

    x12: Real
    x23: Real
    x13: Real

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for v in (self.x12, self.x23, self.x13))

    def to_matrix(self):
        rows = ((1, self.x12, self.x13), (0, 1, self.x23), (0, 0, 1))
        if self.is_exact:
            return mat3(rows)
        return np.array(rows, dtype=float)

    @classmethod
    def from_matrix(cls, m) -> "UnipotentUpper":
        exact = _is_exact_mat(m)
        a = m if exact else _as_np(m)
        diag, _, lower = _triangle_parts(a)
        if exact:
            ok = all(d == 1 for d in diag) and all(e == 0 for e in lower)
        else:
            ok = all(abs(float(d) - 1.0) <= 1e-9 for d in diag) and all(
                abs(float(e)) <= 1e-9 for e in lower
            )
        if not ok:
            raise ValueError("matrix is not upper unipotent")
        return cls(x12=a[0][1], x23=a[1][2], x13=a[0][2])


def _wrap_unit(x: Real) -> tuple[Real, int]:
    """Return (x + k, k) with the result in [0, 1); loops to absorb float edge cases."""
    k = 0
    while True:
        f = math.floor(x)
        if f == 0 and 0 <= x < 1:
            return x, k
        x = x - f
        k -= f
        if 0 <= x < 1:
            return x, k


def reduce_mod_gamma(n: UnipotentUpper) -> tuple[UnipotentUpper, Mat3]:
    """Canonical representative of n modulo the integer upper unipotents.

    Reduction order is x23, then x12, then x13; reducing x23 by an integer
    shift also moves x13 by x12 times the shift.  The witness w is integral,
    upper unipotent, and satisfies n * w = reduced exactly in the exact layer.
    """
    x12, x23, x13 = n.x12, n.x23, n.x13
    x23r, kn = _wrap_unit(x23)
    x13 = x13 + x12 * kn
    x12r, km = _wrap_unit(x12)
    x13r, kk = _wrap_unit(x13)
    witness = ((1, km, kk), (0, 1, kn), (0, 0, 1))
    reduced = UnipotentUpper(x12=x12r, x23=x23r, x13=x13r)
    if n.is_exact:
        assert mat_mul(n.to_matrix(), mat3(witness)) == reduced.to_matrix()
    return reduced, witness


def project_ker_nu(y, flow: FlowParams) -> tuple[tuple[Real, Real, Real], Real]:
    """Split a traceless diagonal element as Y_perp + c * X0 with nu(Y_perp) = 0."""
    if hasattr(y, "__len__") and len(y) == 3 and not hasattr(y[0], "__len__"):
        d = tuple(y)
    else:
        m = y if _is_exact_mat(y) else _as_np(y)
        d = (m[0][0], m[1][1], m[2][2])
    exact = all(isinstance(v, (int, Fraction)) for v in d) and flow.is_exact
    tr = d[0] + d[1] + d[2]
    if exact:
        if tr != 0:
            raise ValueError("element must be traceless")
    elif abs(float(tr)) > 1e-9 * max(1.0, *(abs(float(v)) for v in d)):
        raise ValueError("element must be traceless")
    nu_y = d[2] - d[0]
    nu_x0 = flow.nu
    c = Fraction(nu_y) / Fraction(nu_x0) if exact else float(nu_y) / float(nu_x0)
    lams = flow.diag()
    y_perp = tuple(d[i] - c * lams[i] for i in range(3))
    return y_perp, c


@dataclass(frozen=True)
class Box3:
    """Axis box in the three positive root directions, measured on log coordinates."""

    r1: Real
    r2: Real
    r3: Real

    def __post_init__(self) -> None:
        if self.r1 < 0 or self.r2 < 0 or self.r3 < 0:
            raise ValueError("box half-widths must be nonnegative")

    def contains_log(self, x1: Real, x2: Real, x3: Real) -> bool:
        return abs(x1) <= self.r1 and abs(x2) <= self.r2 and abs(x3) <= self.r3

    def contains_group(self, x12: Real, x23: Real, x13: Real) -> bool:
        # log of the unipotent with these group coordinates
        if all(isinstance(v, (int, Fraction)) for v in (x12, x23, x13)):
            third = x13 - Fraction(x12 * x23, 2)
        else:
            third = x13 - x12 * x23 / 2.0
        return self.contains_log(x12, x23, third)

    def scaled(self, f1: Real, f2: Real, f3: Real) -> "Box3":
        """Per-axis dilation of the half-widths."""
        return Box3(self.r1 * f1, self.r2 * f2, self.r3 * f3)


@dataclass(frozen=True)
class ConstantsProfile:
    """The auxiliary constants used across the estimate machinery."""

    kappa: float = 2.0
    kappa_prime: float = 10.0
    kappa_double_prime: float = 10.0
    C: float = 4.0
    r0: float = 0.5
    epsilon0: float = 0.25

    def __post_init__(self) -> None:
        for name in ("kappa", "kappa_prime", "kappa_double_prime", "C"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        for name in ("r0", "epsilon0"):
            v = getattr(self, name)
            if not (0 < v <= 1):
                raise ValueError(f"{name} must lie in (0, 1]")
