"""Matrices, linear operators on M_n and the Rota-Baxter identity.

A :class:`LinearOperator` on M_n is stored as the tuple of images of the
matrix units e11, e12, ..., enn (row-major).  Entries may be rationals,
quadratic-extension or prime-field scalars, or :class:`~rbmat.polyring.MPoly`
values; arithmetic is duck-typed so the same code serves all of them.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import reduce
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from gmpy2 import mpq, lcm

from .exactscalar import QQ, ScalarDomain, _RATLIKE, format_scalar, parse_domain, parse_scalar
from .polyring import MPoly, PolyRing

__all__ = [
    "SquareMatrix", "LinearOperator", "AutoDescriptor", "RBCheck",
    "unit", "unit_name", "parse_unit", "identity", "zeros",
    "apply", "rb_residual", "rb_check", "unit_image", "nilpotency_index",
    "matrix_nilindex", "factorial_unit_check", "scale", "conjugate",
    "skew_symmetric_check", "graded_projection", "restrict_to_block",
    "permutation_matrix", "transpose_descriptor", "inner", "matrix", "unit_pairs",
    "operator_power",
]

_ZERO = mpq(0)
_ONE = mpq(1)
_MPQ = type(_ZERO)


class SquareMatrix:
    """Immutable n x n matrix over a commutative ring."""

    __slots__ = ("n", "rows")

    def __init__(self, rows: Sequence[Sequence]):
        rows = tuple(tuple(r) for r in rows)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("matrix must be square and nonempty")
        self.n = n
        self.rows = rows

    @classmethod
    def from_flat(cls, n: int, entries: Sequence) -> SquareMatrix:
        return cls([entries[i * n:(i + 1) * n] for i in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def flat(self) -> list:
        return [x for r in self.rows for x in r]

    def map(self, f) -> SquareMatrix:
        return SquareMatrix([[f(x) for x in r] for r in self.rows])

    def _check(self, other: SquareMatrix):
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, SquareMatrix):
            return NotImplemented
        self._check(other)
        return SquareMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __sub__(self, other):
        if not isinstance(other, SquareMatrix):
            return NotImplemented
        self._check(other)
        return SquareMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)])

    def __neg__(self):
        return SquareMatrix([[-a for a in r] for r in self.rows])

    def __mul__(self, other):
        if isinstance(other, SquareMatrix):
            self._check(other)
            cols = list(zip(*other.rows))
            out = []
            for r in self.rows:
                nz = [(k, a) for k, a in enumerate(r) if a]
                row = []
                for c in cols:
                    acc = _ZERO
                    for k, a in nz:
                        b = c[k]
                        if b:
                            acc = a * b + acc
                    row.append(acc)
                out.append(tuple(row))
            return _fast_matrix(self.n, tuple(out))
        return SquareMatrix([[a * other for a in r] for r in self.rows])

    def __rmul__(self, other):
        return SquareMatrix([[other * a for a in r] for r in self.rows])

    def __pow__(self, k: int) -> SquareMatrix:
        if k < 0:
            return self.inverse() ** (-k)
        result = identity(self.n)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, SquareMatrix):
            return NotImplemented
        return self.n == other.n and all(
            a == b for r, s in zip(self.rows, other.rows) for a, b in zip(r, s))

    def __hash__(self):
        return hash(tuple(format_scalar(x) if not isinstance(x, MPoly) else str(x)
                          for x in self.flat()))

    def is_zero(self) -> bool:
        return not any(x for r in self.rows for x in r)

    def transpose(self) -> SquareMatrix:
        return SquareMatrix(list(zip(*self.rows)))

    T = property(transpose)

    def trace(self):
        return reduce(lambda a, b: a + b, (self.rows[i][i] for i in range(self.n)), _ZERO)

    def rank(self) -> int:
        from .structure import rref
        return len(rref([list(r) for r in self.rows]))

    def det(self):
        """Determinant; Gaussian elimination over a field, Leibniz for polynomials."""
        flat = self.flat()
        if any(isinstance(x, MPoly) for x in flat):
            return _leibniz_det(self)
        a = [list(r) for r in self.rows]
        n = self.n
        det = _ONE
        for c in range(n):
            p = next((r for r in range(c, n) if a[r][c]), None)
            if p is None:
                return _ZERO
            if p != c:
                a[c], a[p] = a[p], a[c]
                det = -det
            det = det * a[c][c]
            inv = 1 / a[c][c]
            for r in range(c + 1, n):
                if a[r][c]:
                    f = a[r][c] * inv
                    a[r] = [x - f * y for x, y in zip(a[r], a[c])]
        return det

    def inverse(self) -> SquareMatrix:
        n = self.n
        a = [list(r) + [_ONE if i == j else _ZERO for j in range(n)]
             for i, r in enumerate(self.rows)]
        for c in range(n):
            p = next((r for r in range(c, n) if a[r][c]), None)
            if p is None:
                raise ZeroDivisionError("singular matrix")
            a[c], a[p] = a[p], a[c]
            inv = 1 / a[c][c]
            a[c] = [x * inv for x in a[c]]
            for r in range(n):
                if r != c and a[r][c]:
                    f = a[r][c]
                    a[r] = [x - f * y for x, y in zip(a[r], a[c])]
        return SquareMatrix([r[n:] for r in a])

    def to_json(self) -> list[list[str]]:
        return [[str(x) if isinstance(x, MPoly) else format_scalar(x) for x in r]
                for r in self.rows]

    def __repr__(self):
        return f"SquareMatrix({self.to_json()})"


def _fast_matrix(n: int, rows: tuple) -> SquareMatrix:
    # rows already validated as an n-tuple of n-tuples
    m = SquareMatrix.__new__(SquareMatrix)
    m.n, m.rows = n, rows
    return m


def _leibniz_det(m: SquareMatrix):
    from itertools import permutations
    n = m.n
    total = _ZERO
    for perm in permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = _ONE
        for i in range(n):
            term = term * m.rows[i][perm[i]]
            if not term:
                break
        if term:
            total = total - term if inversions % 2 else total + term
    return total


def zeros(n: int) -> SquareMatrix:
    return SquareMatrix([[_ZERO] * n for _ in range(n)])


def identity(n: int) -> SquareMatrix:
    return SquareMatrix([[_ONE if i == j else _ZERO for j in range(n)] for i in range(n)])


def unit(n: int, i: int, j: int) -> SquareMatrix:
    """Matrix unit e_ij with 1-based indices."""
    rows = [[_ZERO] * n for _ in range(n)]
    rows[i - 1][j - 1] = _ONE
    return SquareMatrix(rows)


def unit_name(i: int, j: int) -> str:
    return f"e{i}{j}"


def parse_unit(name: str) -> tuple[int, int]:
    m = re.fullmatch(r"e(\d)(\d)", name)
    if not m:
        raise ValueError(f"bad matrix unit {name!r}")
    return int(m.group(1)), int(m.group(2))


def unit_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)]


def matrix(rows: Sequence[Sequence]) -> SquareMatrix:
    """Build a matrix from ints, rationals or strings (parsed as rationals)."""
    return SquareMatrix([[parse_scalar(x) if isinstance(x, str) else
                          (mpq(x) if isinstance(x, _RATLIKE) else x) for x in r] for r in rows])


@dataclass(frozen=True)
class LinearOperator:
    """Linear map on M_n given by the images of the n^2 matrix units."""

    n: int
    images: tuple
    weight: object = _ZERO
    domain: object = field(default=QQ, compare=False)

    def __post_init__(self):
        if not 2 <= self.n <= 8:
            raise ValueError("n must be between 2 and 8")
        if len(self.images) != self.n * self.n:
            raise ValueError(f"need {self.n * self.n} images, got {len(self.images)}")
        if any(m.n != self.n for m in self.images):
            raise ValueError("image dimension mismatch")

    @classmethod
    def from_dict(cls, n: int, images: dict, weight=_ZERO, domain=QQ) -> LinearOperator:
        """Images keyed by ``"e12"`` or ``(1, 2)``; missing units map to zero."""
        table = {}
        for key, img in images.items():
            ij = parse_unit(key) if isinstance(key, str) else tuple(key)
            table[ij] = img if isinstance(img, SquareMatrix) else matrix(img)
        return cls(n, tuple(table.get(ij, zeros(n)) for ij in unit_pairs(n)), weight, domain)

    @classmethod
    def zero(cls, n: int, domain=QQ) -> LinearOperator:
        return cls(n, tuple(zeros(n) for _ in range(n * n)), _ZERO, domain)

    @classmethod
    def identity_map(cls, n: int, weight=_ZERO) -> LinearOperator:
        return cls(n, tuple(unit(n, i, j) for i, j in unit_pairs(n)), mpq(weight))

    def image(self, i: int, j: int) -> SquareMatrix:
        return self.images[(i - 1) * self.n + (j - 1)]

    def __call__(self, x: SquareMatrix) -> SquareMatrix:
        return apply(self, x)

    def is_zero(self) -> bool:
        return all(m.is_zero() for m in self.images)

    def with_images(self, images) -> LinearOperator:
        return LinearOperator(self.n, tuple(images), self.weight, self.domain)

    def compose(self, other: LinearOperator) -> LinearOperator:
        """self after other."""
        return self.with_images(apply(self, m) for m in other.images)

    def matrix_form(self) -> list[list]:
        """n^2 x n^2 matrix whose column u is the flattened image of unit u."""
        cols = [m.flat() for m in self.images]
        return [list(r) for r in zip(*cols)]

    def entries(self) -> Iterable:
        for m in self.images:
            yield from m.flat()

    def is_rational(self) -> bool:
        return all(isinstance(x, _RATLIKE) for x in self.entries()) and isinstance(self.weight, _RATLIKE)

    def __neg__(self):
        return scale(self, -1)

    def differences(self, other: LinearOperator) -> list[str]:
        """Names of the units on which the two operators disagree."""
        return [unit_name(i, j) for (i, j), a, b in zip(unit_pairs(self.n), self.images, other.images)
                if a != b]

    def to_json(self) -> dict:
        dom = self.domain.label if isinstance(self.domain, ScalarDomain) else "poly"
        out = {"n": self.n, "domain": dom, "weight": _fmt(self.weight), "images": {}}
        if isinstance(self.domain, PolyRing):
            out["variables"] = list(self.domain.names)
        for (i, j), m in zip(unit_pairs(self.n), self.images):
            out["images"][unit_name(i, j)] = m.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict) -> LinearOperator:
        n = int(data["n"])
        if data.get("domain", "Q") == "poly":
            ring = PolyRing(data["variables"])
            conv = ring.parse
            domain = ring
        else:
            domain = parse_domain(data.get("domain", "Q"))
            conv = domain.parse
        images = {k: SquareMatrix([[conv(x) for x in r] for r in v])
                  for k, v in data["images"].items()}
        if set(images) - {unit_name(i, j) for i, j in unit_pairs(n)}:
            raise ValueError("unknown unit names in images")
        if len(images) != n * n:
            raise ValueError("operator JSON must list all n^2 images")
        return cls.from_dict(n, images, conv(data.get("weight", "0")), domain)


def _fmt(x) -> str:
    return str(x) if isinstance(x, MPoly) else format_scalar(x)


def apply(L: LinearOperator, X: SquareMatrix) -> SquareMatrix:
    """Sum over units of X[i][j] * L(e_ij)."""
    if X.n != L.n:
        raise ValueError(f"dimension mismatch: operator on M_{L.n}, matrix of size {X.n}")
    n = L.n
    acc = None
    for u, x in enumerate(X.flat()):
        if not x:
            continue
        img = L.images[u]
        if img.is_zero():
            continue
        term = img * x if not isinstance(x, _RATLIKE) or x != 1 else img
        acc = term if acc is None else acc + term
    return acc if acc is not None else zeros(n)


def rb_residual(L: LinearOperator, X: SquareMatrix, Y: SquareMatrix) -> SquareMatrix:
    """R(X)R(Y) - R(R(X)Y + XR(Y) + weight*XY)."""
    RX, RY = apply(L, X), apply(L, Y)
    inner = RX * Y + X * RY
    if L.weight:
        inner = inner + (X * Y) * L.weight
    return RX * RY - apply(L, inner)


@dataclass(frozen=True)
class RBCheck:
    ok: bool
    first_failure: tuple | None = None  # ((unit x, unit y), residual matrix)

    def __bool__(self):
        return self.ok


def _integer_tensor(L: LinearOperator):
    """Images scaled by the common denominator D as an integer 4-tensor, and D."""
    dens = [int(mpq(x).denominator) for x in L.entries() if x]
    if L.weight:
        dens.append(int(mpq(L.weight).denominator))
    D = int(reduce(lcm, dens, 1))
    n = L.n
    data = [int(mpq(x) * D) for x in L.entries()]
    big = max((abs(v) for v in data), default=0)
    w = int(mpq(L.weight) * D)
    dtype = np.int64 if max(big, abs(w)) ** 2 * 4 * n < 2 ** 62 else object
    T = np.array(data, dtype=dtype).reshape(n, n, n, n)
    return T, w, D


def _rb_residual_tensor(L: LinearOperator):
    """All pair residuals at once, indexed [i, j, k, l, a, b] (scaled by D^2)."""
    T, w, _ = _integer_tensor(L)
    n = L.n
    lhs = np.einsum("ijax,klxb->ijklab", T, T)
    term1 = np.einsum("ijmk,mlab->ijklab", T, T)
    term2 = np.einsum("kljc,icab->ijklab", T, T)
    res = lhs - term1 - term2
    if w:
        delta = np.eye(n, dtype=T.dtype)
        res = res - w * np.einsum("jk,ilab->ijklab", delta, T)
    return res


def rb_check(L: LinearOperator) -> RBCheck:
    """Check the identity on all ordered pairs of matrix units (lexicographic order)."""
    n = L.n
    if L.is_rational():
        res = _rb_residual_tensor(L)
        bad = np.argwhere(res.reshape(n, n, n, n, n * n).any(axis=-1))
        if len(bad) == 0:
            return RBCheck(True)
        i, j, k, l = (int(t) + 1 for t in bad[0])
        r = rb_residual(L, unit(n, i, j), unit(n, k, l))
        return RBCheck(False, ((unit_name(i, j), unit_name(k, l)), r))
    for (i, j), (k, l) in product(unit_pairs(n), repeat=2):
        r = rb_residual(L, unit(n, i, j), unit(n, k, l))
        if not r.is_zero():
            return RBCheck(False, ((unit_name(i, j), unit_name(k, l)), r))
    return RBCheck(True)


def unit_image(L: LinearOperator) -> SquareMatrix:
    return apply(L, identity(L.n))


def _operator_power_zero_index(L: LinearOperator, bound: int):
    n2 = L.n * L.n
    if L.is_rational():
        T, _, _ = _integer_tensor(L)
        M = np.array(T.reshape(n2, n2).T.tolist(), dtype=object)
        P = M.copy()
        for k in range(1, bound + 1):
            if not P.any():
                return k
            P = M.dot(P)
        return None
    P = L
    for k in range(1, bound + 1):
        if P.is_zero():
            return k
        P = L.compose(P)
    return None


def nilpotency_index(L: LinearOperator, bound: int | None = None) -> int | None:
    """Least k <= bound with L^k = 0; None when the bound is exceeded.

    The default bound is 2n + 1, the rb-index of M_n.  The zero operator has
    index 1.
    """
    bound = 2 * L.n + 1 if bound is None else bound
    if bound < 1:
        raise ValueError("bound must be >= 1")
    return _operator_power_zero_index(L, bound)


def matrix_nilindex(X: SquareMatrix) -> int | None:
    """Least k with X^k = 0, or None if X is not nilpotent."""
    P = X
    for k in range(1, X.n + 1):
        if P.is_zero():
            return k
        P = P * X
    return None


def operator_power(L: LinearOperator, k: int) -> LinearOperator:
    P = LinearOperator(L.n, tuple(unit(L.n, i, j) for i, j in unit_pairs(L.n)), L.weight, L.domain)
    for _ in range(k):
        P = L.compose(P)
    return P


def factorial_unit_check(L: LinearOperator, k: int) -> bool:
    """(R(1))^k == k! * R^k(1)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    one = unit_image(L)
    rk = identity(L.n)
    for _ in range(k):
        rk = apply(L, rk)
    return one ** k == rk * mpq(math.factorial(k))


def scale(L: LinearOperator, alpha) -> LinearOperator:
    if L.weight:
        raise ValueError("scaling changes the weight; only weight-zero operators can be scaled")
    return L.with_images(m * alpha for m in L.images)


@dataclass(frozen=True)
class AutoDescriptor:
    """(Anti)automorphism X -> A^-1 X A, or X -> A^-1 X^T A when ``transpose_first``."""

    conjugator: SquareMatrix
    transpose_first: bool = False
    tag: str | None = None
    _inv: SquareMatrix = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self._inv is None:
            try:
                inv = self.conjugator.inverse()
            except ZeroDivisionError:
                raise ValueError("conjugator is singular") from None
            object.__setattr__(self, "_inv", inv)

    @property
    def n(self) -> int:
        return self.conjugator.n

    def __call__(self, X: SquareMatrix) -> SquareMatrix:
        if self.transpose_first:
            X = X.transpose()
        return self._inv * X * self.conjugator

    def inverse_map(self, Y: SquareMatrix) -> SquareMatrix:
        X = self.conjugator * Y * self._inv
        return X.transpose() if self.transpose_first else X

    def inverse(self) -> AutoDescriptor:
        if self.transpose_first:
            return AutoDescriptor(self.conjugator.transpose(), True,
                                  f"({self.tag})^-1" if self.tag else None)
        return AutoDescriptor(self._inv, False, f"({self.tag})^-1" if self.tag else None)

    def then(self, other: AutoDescriptor) -> AutoDescriptor:
        """The map X -> other(self(X))."""
        A, B = other.conjugator, self.conjugator
        tag = f"{other.tag}*{self.tag}" if self.tag and other.tag else None
        if not other.transpose_first:
            return AutoDescriptor(B * A, self.transpose_first, tag)
        return AutoDescriptor(self._inv.transpose() * A, not self.transpose_first, tag)

    def to_json(self) -> dict:
        return {"conjugator": self.conjugator.to_json(),
                "transposeFirst": self.transpose_first, "tag": self.tag}


def inner(A: SquareMatrix, tag: str | None = None) -> AutoDescriptor:
    return AutoDescriptor(A, False, tag)


def permutation_matrix(n: int, perm: dict[int, int]) -> SquareMatrix:
    """Matrix P with P^-1 e_ij P = e_{perm(i) perm(j)} (1-based, missing = fixed)."""
    rows = [[_ZERO] * n for _ in range(n)]
    for i in range(1, n + 1):
        rows[i - 1][perm.get(i, i) - 1] = _ONE
    return SquareMatrix(rows)


def transpose_descriptor(n: int) -> AutoDescriptor:
    return AutoDescriptor(identity(n), True, "T")


def conjugate(L: LinearOperator, psi: AutoDescriptor) -> LinearOperator:
    """The operator x -> psi^-1(R(psi(x)))."""
    if psi.n != L.n:
        raise ValueError("dimension mismatch")
    return L.with_images(psi.inverse_map(apply(L, psi(unit(L.n, i, j))))
                         for i, j in unit_pairs(L.n))


def skew_symmetric_check(L: LinearOperator) -> bool:
    """tr(R(x) y) + tr(x R(y)) == 0 on all pairs of units."""
    if L.weight:
        raise ValueError("skew-symmetry is checked for weight-zero operators")
    n = L.n
    for (i, j), (k, l) in product(unit_pairs(n), repeat=2):
        # tr(M e_kl) = M[l][k] and tr(e_ij M) = M[j][i]
        if L.image(i, j)[l - 1, k - 1] + L.image(k, l)[j - 1, i - 1]:
            return False
    return True


_EVEN = {(1, 1), (1, 2), (2, 1), (2, 2), (3, 3)}


def _project(X: SquareMatrix, keep) -> SquareMatrix:
    return SquareMatrix([[x if (i + 1, j + 1) in keep else _ZERO for j, x in enumerate(r)]
                         for i, r in enumerate(X.rows)])


def graded_projection(L: LinearOperator) -> tuple[LinearOperator, bool]:
    """A0-part of L restricted to A0 = span{e11, e12, e21, e22, e33} of M_3.

    The flag reports whether the odd part of Im R squares to zero and R(R(x)y),
    R(yR(x)) stay even for even units x, y.
    """
    if L.n != 3:
        raise ValueError("graded projection is defined on M_3")
    odd = {ij for ij in unit_pairs(3)} - _EVEN
    images = [_project(L.image(i, j), _EVEN) if (i, j) in _EVEN else zeros(3)
              for i, j in unit_pairs(3)]
    P0 = L.with_images(images)
    odd_parts = [_project(m, odd) for m in L.images]
    valid = all((a * b).is_zero() for a in odd_parts for b in odd_parts)
    evens = [unit(3, i, j) for i, j in sorted(_EVEN)]
    for x in evens:
        rx = apply(L, x)
        for y in evens:
            for z in (apply(L, rx * y), apply(L, y * rx)):
                if not _project(z, odd).is_zero():
                    valid = False
    return P0, valid


def restrict_to_block(L: LinearOperator, size: int = 2) -> LinearOperator:
    """Compress an operator on M_n to the upper-left M_size block."""
    images = {}
    for i, j in unit_pairs(size):
        img = L.image(i, j)
        images[(i, j)] = SquareMatrix([r[:size] for r in img.rows[:size]])
    return LinearOperator.from_dict(size, images, L.weight, L.domain)
