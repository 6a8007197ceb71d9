"""Exact rational linear algebra on 3x3 matrices.

Everything here operates on immutable tuples of ints and Fractions, so all
results are reproducible bit for bit and every claimed identity is exact.
The module provides the primitive-vector and flag machinery (completing a
line-in-plane integer flag to a unimodular basis), triangularization of a
rational upper-unipotent matrix by an integer unimodular right factor, and
the Bruhat factorization of an exact determinant-one matrix through one of
the six permutation representatives.

Floats are rejected everywhere: this is the exact layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterator, Sequence

Rational = int | Fraction
IVec3 = tuple[int, int, int]
Vec3 = tuple[Rational, Rational, Rational]
Mat3 = tuple[tuple[Rational, ...], ...]


def frac(x: Rational | str) -> Fraction:
    """Coerce to Fraction, rejecting floats to preserve exactness."""
    if isinstance(x, float):
        raise TypeError("float entries are not accepted in the exact layer")
    return Fraction(x)


def mat3(rows: Sequence[Sequence[Rational | str]]) -> Mat3:
    """Build an exact 3x3 matrix from any nested sequence of rationals."""
    if len(rows) != 3 or any(len(r) != 3 for r in rows):
        raise ValueError("expected a 3x3 matrix")
    return tuple(tuple(frac(x) for x in row) for row in rows)


MAT_ID: Mat3 = mat3([[1, 0, 0], [0, 1, 0], [0, 0, 1]])


def mat_mul(a: Mat3, b: Mat3) -> Mat3:
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(3)) for j in range(3))
        for i in range(3)
    )


def mat_vec(m: Mat3, v: Vec3) -> Vec3:
    return tuple(sum(m[i][k] * v[k] for k in range(3)) for i in range(3))


def mat_transpose(m: Mat3) -> Mat3:
    return tuple(tuple(m[j][i] for j in range(3)) for i in range(3))


def mat_det(m: Mat3) -> Rational:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def mat_inv(m: Mat3) -> Mat3:
    """Exact inverse via the adjugate; raises on singular input."""
    m = mat3(m)
    det = mat_det(m)
    if det == 0:
        raise ZeroDivisionError("matrix is singular")
    cof = [
        [
            (m[(i + 1) % 3][(j + 1) % 3] * m[(i + 2) % 3][(j + 2) % 3]
             - m[(i + 1) % 3][(j + 2) % 3] * m[(i + 2) % 3][(j + 1) % 3])
            for j in range(3)
        ]
        for i in range(3)
    ]
    return tuple(tuple(cof[j][i] / det for j in range(3)) for i in range(3))


def mat_scale_cols(m: Mat3, s: Sequence[Rational]) -> Mat3:
    return tuple(tuple(m[i][j] * s[j] for j in range(3)) for i in range(3))


def is_integer_matrix(m: Mat3) -> bool:
    return all(Fraction(x).denominator == 1 for row in m for x in row)


def int_matrix(m: Mat3) -> tuple[tuple[int, ...], ...]:
    if not is_integer_matrix(m):
        raise ValueError("matrix has non-integer entries")
    return tuple(tuple(int(x) for x in row) for row in m)


def vec_dot(u: Sequence[Rational], v: Sequence[Rational]) -> Rational:
    return sum(a * b for a, b in zip(u, v))


def vec_cross(u: IVec3, v: IVec3) -> IVec3:
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def vec_neg(v: IVec3) -> IVec3:
    return (-v[0], -v[1], -v[2])


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Extended gcd: returns (g, x, y) with a*x + b*y = g = gcd(a,b) >= 0."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r != 0:
        qt = old_r // r
        old_r, r = r, old_r - qt * r
        old_x, x = x, old_x - qt * x
        old_y, y = y, old_y - qt * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def primitive_part(v: IVec3) -> IVec3:
    """Divide an integer vector by its content, preserving signs."""
    if v == (0, 0, 0):
        raise ValueError("zero vector has no primitive part")
    c = gcd(gcd(abs(v[0]), abs(v[1])), abs(v[2]))
    return (v[0] // c, v[1] // c, v[2] // c)


def rational_kernel(rows) -> list[tuple[Fraction, ...]]:
    """Basis of {x : rows . x = 0} over the rationals, one vector per free column."""
    a = [[frac(e) for e in row] for row in rows]
    if not a:
        raise ValueError("empty constraint system")
    n = len(a[0])
    pivots: list[int] = []
    r = 0
    for c in range(n):
        pr = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if pr is None:
            continue
        a[r], a[pr] = a[pr], a[r]
        pv = a[r][c]
        a[r] = [e / pv for e in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [a[i][k] - f * a[r][k] for k in range(n)]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * n
        v[fc] = Fraction(1)
        for ri, pc in enumerate(pivots):
            v[pc] = -a[ri][fc]
        basis.append(tuple(v))
    return basis


def integer_kernel(rows) -> list[tuple[int, ...]]:
    """Basis of the saturated lattice {x in Z^n : rows . x = 0}.

    Row-reduces the transpose with unimodular operations mirrored on an
    identity companion; companion rows facing zero rows span the kernel.
    """
    m = len(rows)
    if m == 0:
        raise ValueError("empty constraint system")
    n = len(rows[0])
    t = [[int(rows[i][j]) for i in range(m)] for j in range(n)]
    comp = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    r = 0
    for c in range(m):
        live = [i for i in range(r, n) if t[i][c] != 0]
        while len(live) > 1:
            live.sort(key=lambda i: abs(t[i][c]))
            i0 = live[0]
            for i in live[1:]:
                f = t[i][c] // t[i0][c]
                t[i] = [t[i][k] - f * t[i0][k] for k in range(m)]
                comp[i] = [comp[i][k] - f * comp[i0][k] for k in range(n)]
            live = [i for i in live if t[i][c] != 0]
        if not live:
            continue
        i0 = live[0]
        t[r], t[i0] = t[i0], t[r]
        comp[r], comp[i0] = comp[i0], comp[r]
        r += 1
        if r == n:
            break
    return [tuple(comp[i]) for i in range(r, n)]


@dataclass(frozen=True)
class RationalFlag:
    """An oriented integer line inside an integer plane through the origin.

    `direction` generates the line, `normal` cuts out the plane, both are
    primitive; `orientation` picks which of the two primitive generators of
    the line is used.
    """

    direction: IVec3
    normal: IVec3
    orientation: int = 1

    def __post_init__(self) -> None:
        if self.direction == (0, 0, 0) or self.normal == (0, 0, 0):
            raise ValueError("flag vectors must be nonzero")
        if primitive_part(self.direction) != self.direction:
            raise ValueError("direction must be primitive")
        if primitive_part(self.normal) != self.normal:
            raise ValueError("normal must be primitive")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if vec_dot(self.normal, self.direction) != 0:
            raise ValueError("degenerate flag: line does not lie in the plane")


def _scan_coords(m: int) -> list[int]:
    # Nonnegative values first, then negatives, which realizes the
    # smallest-nonnegative tie-break deterministically.
    return list(range(0, m + 1)) + list(range(-1, -m - 1, -1))


def _shell_vectors(m: int) -> Iterator[IVec3]:
    coords = _scan_coords(m)
    for c1 in coords:
        for c2 in coords:
            for c3 in coords:
                if max(abs(c1), abs(c2), abs(c3)) == m:
                    yield (c1, c2, c3)


def _solve_dot_one(n: IVec3) -> IVec3:
    """Some integer w with n . w = 1, for primitive n (existence witness)."""
    n1, n2, n3 = n
    if n1 == 0 and n2 == 0:
        return (0, 0, 1 if n3 > 0 else -1)
    g12, x, y = xgcd(n1, n2)
    g, u, v = xgcd(g12, n3)
    if g != 1:
        raise ValueError("normal is not primitive")
    return (x * u, y * u, v)


def _plane_lattice_basis(n: IVec3) -> tuple[IVec3, IVec3]:
    """A basis (b1, b2) of the integer points of the plane n.w = 0 with
    cross(b1, b2) = n exactly."""
    n1, n2, n3 = n
    if n1 == 0 and n2 == 0:
        return ((1, 0, 0), (0, 1, 0)) if n3 > 0 else ((0, 1, 0), (1, 0, 0))
    g, x, y = xgcd(n1, n2)
    b1 = (-n2 // g, n1 // g, 0)
    b2 = (-x * n3, -y * n3, g)
    assert vec_cross(b1, b2) == n
    return b1, b2


def _completion_in_plane(v1: IVec3, n: IVec3) -> IVec3:
    """Some u with {v1, u} a basis of the plane lattice and cross(v1,u) = n."""
    b1, b2 = _plane_lattice_basis(n)
    t, rem = divmod(v1[2], b2[2]) if b2[2] != 0 else (0, 0)
    if b2[2] != 0 and rem != 0:
        raise ValueError("direction does not lie in the plane lattice")
    if b2[2] == 0:
        # Degenerate-normal case: b2 = e1 or e2, solve coordinatewise.
        idx2 = 0 if b2[0] != 0 else 1
        t = v1[idx2] // b2[idx2]
    idx = 0 if b1[0] != 0 else 1
    num = v1[idx] - t * b2[idx]
    if num % b1[idx] != 0:
        raise ValueError("direction does not lie in the plane lattice")
    s = num // b1[idx]
    if tuple(s * a + t * b for a, b in zip(b1, b2)) != v1:
        raise ValueError("direction does not lie in the plane lattice")
    g, pp, qq = xgcd(s, t)
    if g != 1:
        raise ValueError("direction is not primitive in the plane lattice")
    # s*pp + t*qq = 1, so u = -qq*b1 + pp*b2 satisfies cross(v1, u) = n.
    u = tuple(-qq * a + pp * b for a, b in zip(b1, b2))
    assert vec_cross(v1, u) == n
    return u


def flag_adapted_basis(flag: RationalFlag) -> tuple[IVec3, IVec3, IVec3]:
    """Complete a flag to a positively oriented basis of the integer lattice.

    Returns (v1, v2, v3) with determinant exactly +1, v1 the oriented
    primitive generator of the line, {v1, v2} a basis of the plane lattice,
    and v3 chosen as the first completion vector in a canonical
    shell-by-shell scan (so the output is deterministic).
    """
    n = flag.normal
    v1 = flag.direction if flag.orientation == 1 else vec_neg(flag.direction)

    cap2 = max(abs(c) for c in _completion_in_plane(v1, n))
    v2: IVec3 | None = None
    for m in range(cap2 + 1):
        for w in _shell_vectors(m):
            if vec_dot(n, w) == 0 and vec_cross(v1, w) in (n, vec_neg(n)):
                v2 = w
                break
        if v2 is not None:
            break
    assert v2 is not None, "plane completion must exist within the witness shell"

    cap3 = max(abs(c) for c in _solve_dot_one(n))
    v3: IVec3 | None = None
    for m in range(cap3 + 1):
        for w in _shell_vectors(m):
            if abs(vec_dot(n, w)) == 1:
                v3 = w
                break
        if v3 is not None:
            break
    assert v3 is not None, "lattice completion must exist within the witness shell"

    det = vec_dot(vec_cross(v1, v2), v3)
    if det == -1:
        v3 = vec_neg(v3)
    elif det != 1:
        raise AssertionError("adapted completion must be unimodular")
    return v1, v2, v3


def columns_matrix(c1: Sequence[Rational], c2: Sequence[Rational],
                   c3: Sequence[Rational]) -> Mat3:
    return tuple((c1[i], c2[i], c3[i]) for i in range(3))


def _den_lcm(values: Sequence[Fraction]) -> int:
    out = 1
    for v in values:
        d = v.denominator
        out = out * d // gcd(out, d)
    return out


def is_upper_unipotent(g: Mat3) -> bool:
    return (
        g[0][0] == 1 and g[1][1] == 1 and g[2][2] == 1
        and g[1][0] == 0 and g[2][0] == 0 and g[2][1] == 0
    )


def lower_triangularize(g: Mat3) -> tuple[Mat3, Mat3]:
    """Right-multiply an upper-unipotent rational matrix into lower
    triangular form by an integer matrix of determinant one.

    Returns (gamma, L) with L = g * gamma exactly lower triangular,
    det(gamma) = 1, and the diagonal of L positive except possibly nowhere:
    the first two diagonal entries are normalized positive, the third is the
    common denominator of the last column's coordinates and is positive by
    construction.
    """
    g = mat3(g)
    if not is_upper_unipotent(g):
        raise ValueError("input must be upper unipotent")
    x12, x13 = g[0][1], g[0][2]
    x23 = g[1][2]

    # The last column of gamma must annihilate rows one and two of g; the
    # integer solutions form a line with primitive generator c3.
    kernel = (x12 * x23 - x13, -x23, Fraction(1))
    dk = _den_lcm([Fraction(k) for k in kernel])
    c3 = primitive_part(tuple(int(k * dk) for k in kernel))
    last_nonzero = next(c for c in reversed(c3) if c != 0)
    if last_nonzero < 0:
        c3 = vec_neg(c3)

    # Columns two and three must annihilate row one: they span the integer
    # points of the plane with normal proportional to (1, x12, x13).
    row1 = (Fraction(1), Fraction(x12), Fraction(x13))
    dn = _den_lcm(list(row1))
    normal = primitive_part(tuple(int(r * dn) for r in row1))

    v1, v2, v3 = flag_adapted_basis(RationalFlag(direction=c3, normal=normal))
    gamma = columns_matrix(vec_neg(v3), v2, v1)
    assert mat_det(gamma) == 1

    ell = mat_mul(g, mat3(gamma))
    assert ell[0][1] == 0 and ell[0][2] == 0 and ell[1][2] == 0
    if ell[0][0] < 0:
        flip = (-1, -1, 1)
        gamma = mat_scale_cols(mat3(gamma), flip)
        ell = mat_scale_cols(ell, flip)
    assert ell[0][0] > 0 and ell[1][1] > 0 and ell[2][2] > 0
    assert mat_det(ell) == 1
    return mat3(gamma), ell


# The six Weyl representatives: signed permutation matrices of determinant
# one, ordered so that the column-to-row permutations run through all of S3.
WEYL: tuple[Mat3, ...] = (
    mat3([[1, 0, 0], [0, 1, 0], [0, 0, 1]]),
    mat3([[1, 0, 0], [0, 0, -1], [0, 1, 0]]),
    mat3([[0, -1, 0], [1, 0, 0], [0, 0, 1]]),
    mat3([[0, 0, 1], [1, 0, 0], [0, 1, 0]]),
    mat3([[0, 1, 0], [0, 0, 1], [1, 0, 0]]),
    mat3([[0, 0, 1], [0, -1, 0], [1, 0, 0]]),
)

# Column-to-row permutation of each representative: sigma[j-1] is the row
# holding the nonzero entry of column j.
_SIGMA_OF_CELL: dict[int, tuple[int, int, int]] = {
    1: (1, 2, 3),
    2: (1, 3, 2),
    3: (2, 1, 3),
    4: (2, 3, 1),
    5: (3, 1, 2),
    6: (3, 2, 1),
}
_CELL_OF_SIGMA = {v: k for k, v in _SIGMA_OF_CELL.items()}


def weyl_matrix(cell_index: int) -> Mat3:
    return WEYL[cell_index - 1]


@dataclass(frozen=True)
class BruhatCell:
    """Factorization g = d * n_minus * w * n_plus through cell `cell_index`."""

    cell_index: int
    d: Mat3
    n_minus: Mat3
    n_plus: Mat3

    @property
    def weyl(self) -> Mat3:
        return weyl_matrix(self.cell_index)

    def recompose(self) -> Mat3:
        return mat_mul(mat_mul(self.d, self.n_minus), mat_mul(self.weyl, self.n_plus))


def _rank(rows: list[list[Fraction]]) -> int:
    rows = [list(r) for r in rows]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    col = 0
    while rank < len(rows) and col < ncols:
        pivot = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            col += 1
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(rank + 1, len(rows)):
            if rows[i][col] != 0:
                f = rows[i][col] / rows[rank][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
        col += 1
    return rank


def _pivot_permutation(g: Mat3) -> tuple[int, int, int]:
    # r(i, j) = rank of the submatrix on rows 1..i and columns 1..j; the
    # permutation entry sigma(j) is the unique row where the second
    # difference of r equals one.  Top-left ranks are the quantities left
    # unchanged by a lower-triangular factor on the left and an upper
    # unipotent one on the right, so they see only the Weyl part.
    def r(i: int, j: int) -> int:
        if i < 1 or j < 1:
            return 0
        return _rank([[Fraction(g[a][b]) for b in range(j)] for a in range(i)])

    sigma = []
    for j in range(1, 4):
        hit = [i for i in range(1, 4)
               if r(i, j) - r(i - 1, j) - r(i, j - 1) + r(i - 1, j - 1) == 1]
        assert len(hit) == 1
        sigma.append(hit[0])
    return tuple(sigma)


def bruhat_decompose(g: Mat3) -> BruhatCell:
    """Factor an exact determinant-one matrix as d * n_minus * w_i * n_plus.

    The cell index is read off the rank pattern of trailing submatrices, so
    detection never touches floating point; the factors are then obtained by
    exact column elimination and verified by bit-exact recomposition.
    """
    g = mat3(g)
    if mat_det(g) != 1:
        raise ValueError("determinant must be exactly one")
    sigma = _pivot_permutation(g)
    cell = _CELL_OF_SIGMA[sigma]
    s1, s2, s3 = (s - 1 for s in sigma)

    col = [tuple(g[i][j] for i in range(3)) for j in range(3)]
    piv1 = col[0][s1]
    assert piv1 != 0 and all(col[0][i] == 0 for i in range(s1))

    u12 = col[1][s1] / piv1 if sigma[0] < sigma[1] else Fraction(0)
    m2 = tuple(col[1][i] - u12 * col[0][i] for i in range(3))
    piv2 = m2[s2]
    assert piv2 != 0 and all(m2[i] == 0 for i in range(s2))

    u13 = Fraction(0)
    u23 = Fraction(0)
    need1 = sigma[0] < sigma[2]
    need2 = sigma[1] < sigma[2]
    if need1 and need2:
        if sigma[0] < sigma[1]:
            # m2 vanishes on row sigma(1), so that row pins u13 first.
            u13 = col[2][s1] / piv1
            u23 = (col[2][s2] - u13 * col[0][s2]) / piv2
        else:
            # col[0] vanishes on row sigma(2), so that row pins u23 first.
            u23 = col[2][s2] / piv2
            u13 = (col[2][s1] - u23 * m2[s1]) / piv1
    elif need2:
        u23 = col[2][s2] / piv2
    elif need1:
        u13 = col[2][s1] / piv1
    m3 = tuple(col[2][i] - u23 * m2[i] - u13 * col[0][i] for i in range(3))
    assert m3[s3] != 0 and all(m3[i] == 0 for i in range(s3))

    m = columns_matrix(col[0], m2, m3)
    ell = mat_mul(m, mat_inv(weyl_matrix(cell)))
    assert ell[0][1] == 0 and ell[0][2] == 0 and ell[1][2] == 0
    diag = (ell[0][0], ell[1][1], ell[2][2])
    assert all(x != 0 for x in diag)
    d = mat3([[diag[0], 0, 0], [0, diag[1], 0], [0, 0, diag[2]]])
    # ell = d * n_minus, so each row of ell is its own diagonal times the
    # unipotent row: divide by the row diagonal, not the column one.
    n_minus = mat3([
        [1, 0, 0],
        [ell[1][0] / diag[1], 1, 0],
        [ell[2][0] / diag[2], ell[2][1] / diag[2], 1],
    ])
    n_plus = mat3([[1, u12, u13], [0, 1, u23], [0, 0, 1]])
    result = BruhatCell(cell_index=cell, d=d, n_minus=n_minus, n_plus=n_plus)
    assert result.recompose() == g
    return result
