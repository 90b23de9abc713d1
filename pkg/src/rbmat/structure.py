"""Subalgebras of M_n: images and kernels, radicals, idempotents, fingerprints.

Subspaces are kept in reduced echelon form over the flattened entries
(e11 < e12 < ... < enn), so equal subspaces have identical bases.  Everything
here assumes characteristic zero; the radical is the kernel of the trace
form, which is exact in that setting.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache
from itertools import combinations

import sympy
from gmpy2 import mpq

from .exactscalar import ModElem, _RATLIKE
from .matop import (LinearOperator, SquareMatrix, apply, identity, matrix_nilindex,
                    nilpotency_index, unit_image, zeros)
from .polyring import MPoly, PolyRing

__all__ = [
    "Subspace", "AlgebraProfile", "Fingerprint", "Inconclusive",
    "rref", "nullspace", "solve_linear",
    "image_and_kernel", "closure_check", "bimodule_check", "radical_basis",
    "idempotent_ranks", "primitive_idempotents", "nondegenerate_exists",
    "determinant_polynomial", "algebra_profile", "fingerprint", "central_radical_ratio",
]


class Inconclusive(ArithmeticError):
    """The idempotent search could not split the algebra over its scalar domain."""


def rref(rows: list[list]) -> list[list]:
    """Nonzero rows of the reduced row echelon form (pivots equal to 1)."""
    rows = [list(r) for r in rows if any(r)]
    if not rows:
        return []
    ncols = len(rows[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((k for k in range(r, len(rows)) if rows[k][c]), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for k in range(len(rows)):
            if k != r and rows[k][c]:
                f = rows[k][c]
                rows[k] = [x - f * y for x, y in zip(rows[k], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return [row for row in rows[:r]]


def _pivot_cols(echelon: list[list]) -> list[int]:
    return [next(i for i, x in enumerate(row) if x) for row in echelon]


def nullspace(rows: list[list], ncols: int) -> list[list]:
    """Basis of {v : rows . v = 0}, itself in reduced echelon form."""
    ech = rref(rows)
    pivots = _pivot_cols(ech)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [mpq(0)] * ncols
        v[f] = mpq(1)
        for row, p in zip(ech, pivots):
            v[p] = -row[f]
        basis.append(v)
    return rref(basis)


def solve_linear(rows: list[list], rhs: list):
    """One solution x of rows . x = rhs, or None when inconsistent."""
    ncols = len(rows[0]) if rows else 0
    ech = rref([list(r) + [b] for r, b in zip(rows, rhs)])
    pivots = _pivot_cols(ech)
    if ncols in pivots:
        return None
    x = [mpq(0)] * ncols
    for row, p in zip(ech, pivots):
        x[p] = row[-1]
    return x


@dataclass(frozen=True)
class Subspace:
    """Subspace of M_n with a canonical echelon basis."""

    n: int
    basis: tuple = ()

    @classmethod
    def span(cls, n: int, mats) -> Subspace:
        ech = rref([m.flat() for m in mats])
        return cls(n, tuple(SquareMatrix.from_flat(n, r) for r in ech))

    @classmethod
    def full(cls, n: int) -> Subspace:
        return cls.span(n, [identity(n)] + [
            SquareMatrix.from_flat(n, [mpq(int(k == u)) for k in range(n * n)])
            for u in range(n * n)])

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coords(self, X: SquareMatrix):
        """Coordinates of X in the echelon basis, or None if X is not in the span."""
        flat = X.flat()
        pivots = _pivot_cols([b.flat() for b in self.basis])
        c = [flat[p] for p in pivots]
        recon = [mpq(0)] * (self.n * self.n)
        for ci, b in zip(c, self.basis):
            if ci:
                recon = [r + ci * x for r, x in zip(recon, b.flat())]
        return c if recon == flat else None

    def __contains__(self, X: SquareMatrix) -> bool:
        return self.coords(X) is not None

    def contains_all(self, mats) -> bool:
        return all(m in self for m in mats)

    def __add__(self, other: Subspace) -> Subspace:
        return Subspace.span(self.n, self.basis + other.basis)

    def intersect(self, other: Subspace) -> Subspace:
        if not self.basis or not other.basis:
            return Subspace(self.n)
        cols = [b.flat() for b in self.basis] + [[-x for x in b.flat()] for b in other.basis]
        rows = [list(r) for r in zip(*cols)]
        sols = nullspace(rows, len(cols))
        mats = []
        for s in sols:
            acc = zeros(self.n)
            for c, b in zip(s[:self.dim], self.basis):
                if c:
                    acc = acc + b * c
            mats.append(acc)
        return Subspace.span(self.n, mats)

    def products(self, other: Subspace) -> Subspace:
        return Subspace.span(self.n, [a * b for a in self.basis for b in other.basis])

    def generic_element(self, prefix: str = "t"):
        ring = PolyRing(f"{prefix}{k + 1}" for k in range(self.dim))
        acc = SquareMatrix([[ring.zero()] * self.n for _ in range(self.n)])
        for t, b in zip(ring.gens(), self.basis):
            acc = acc + b.map(lambda x, t=t: t * x)
        return acc, ring

    def to_json(self) -> list:
        return [b.to_json() for b in self.basis]


def _char_zero(mats) -> None:
    for m in mats:
        if any(isinstance(x, ModElem) for x in m.flat()):
            raise ValueError("structure computations need characteristic zero")


def image_and_kernel(L: LinearOperator) -> tuple[Subspace, Subspace]:
    n = L.n
    im = Subspace.span(n, L.images)
    ker_vecs = nullspace(L.matrix_form(), n * n)
    ker = Subspace(n, tuple(SquareMatrix.from_flat(n, v) for v in ker_vecs))
    return im, ker


def _rational(S: Subspace) -> bool:
    return all(isinstance(x, _RATLIKE) for b in S.basis for x in b.flat())


def closure_check(S: Subspace) -> bool:
    # memoized only over Q: equal-looking bases over other fields compare equal
    return _closure_cached(S) if _rational(S) else _closure(S)


@lru_cache(maxsize=4096)
def _closure_cached(S: Subspace) -> bool:
    return _closure(S)


def _closure(S: Subspace) -> bool:
    return all(a * b in S for a in S.basis for b in S.basis)


def bimodule_check(im: Subspace, ker: Subspace) -> bool:
    return all(a * k in ker and k * a in ker for a in im.basis for k in ker.basis)


def _require_algebra(A: Subspace) -> None:
    _char_zero(A.basis)
    if not closure_check(A):
        raise ValueError("subspace is not closed under multiplication")


def radical_basis(A: Subspace) -> Subspace:
    """Kernel of the trace form tr(xy) on A (the Jacobson radical in char 0)."""
    _require_algebra(A)
    return _radical(A) if _rational(A) else _radical.__wrapped__(A)


@lru_cache(maxsize=4096)
def _radical(A: Subspace) -> Subspace:
    gram = [[(a * b).trace() for b in A.basis] for a in A.basis]
    return _combine(A, nullspace(gram, A.dim))


def _combine(A: Subspace, coeff_vectors) -> Subspace:
    mats = []
    for v in coeff_vectors:
        acc = zeros(A.n)
        for c, b in zip(v, A.basis):
            if c:
                acc = acc + b * c
        mats.append(acc)
    return Subspace.span(A.n, mats)


# -- idempotents -------------------------------------------------------------

_X = sympy.Symbol("x")


def _to_sympy(q):
    q = mpq(q)
    return sympy.Rational(int(q.numerator), int(q.denominator))


def _minimal_polynomial(a: SquareMatrix, unit_elt: SquareMatrix) -> sympy.Poly:
    """Monic minimal polynomial of a in the algebra whose unit is ``unit_elt``."""
    powers = [unit_elt]
    while True:
        powers.append(powers[-1] * a)
        cols = [p.flat() for p in powers]
        rows = [list(r) for r in zip(*cols)]
        sol = nullspace(rows, len(powers))
        if sol:
            v = sol[0]
            lead = v[-1]
            coeffs = [_to_sympy(c / lead) for c in reversed(v)]
            return sympy.Poly(coeffs, _X, domain=sympy.QQ)
        if len(powers) > a.n * a.n + 1:
            raise ArithmeticError("minimal polynomial search did not terminate")


def _eval_poly(p: sympy.Poly, a: SquareMatrix, unit_elt: SquareMatrix) -> SquareMatrix:
    acc = zeros(a.n)
    power = unit_elt
    for k, c in enumerate(reversed(p.all_coeffs())):
        if c:
            acc = acc + power * mpq(int(c.p), int(c.q))
        power = power * a
    return acc


def _spectral_idempotents(a: SquareMatrix, unit_elt: SquareMatrix):
    """Idempotents of a's primary decomposition, one per irreducible factor.

    Returns (list of (factor, idempotent), all_factors_linear).
    """
    m = _minimal_polynomial(a, unit_elt)
    _, factors = m.factor_list()
    linear = all(g.degree() == 1 for g, _ in factors)
    if len(factors) == 1:
        return [(factors[0][0], unit_elt)], linear
    out = []
    for g, k in factors:
        q = g ** k
        cofactor = m.quo(q)
        p = (cofactor.invert(q) * cofactor).rem(m)
        out.append((g, _eval_poly(p, a, unit_elt)))
    return out, linear


def _corner(A: Subspace, e: SquareMatrix) -> Subspace:
    return Subspace.span(A.n, [e * b * e for b in A.basis])


def _complement_corner(A: Subspace, u: SquareMatrix) -> Subspace:
    return Subspace.span(A.n, [b - u * b - b * u + u * b * u for b in A.basis])


def _probes(S: Subspace, extra=()):
    base = list(S.basis)
    out = base + list(extra)
    for a, b in combinations(base, 2):
        out.append(a + b)
        out.append(a - b)
    return out


def _one_sided_units(A: Subspace):
    """Left and right units of A when they exist."""
    units = []
    k = A.dim
    for side in ("left", "right"):
        rows, rhs = [], []
        for b in A.basis:
            prods = [(x * b) if side == "left" else (b * x) for x in A.basis]
            for pos in range(A.n * A.n):
                rows.append([p.flat()[pos] for p in prods])
                rhs.append(b.flat()[pos])
        sol = solve_linear(rows, rhs) if k else None
        if sol is not None:
            units.append(_combine_elt(A, sol))
    return units


def _combine_elt(A: Subspace, coeffs) -> SquareMatrix:
    acc = zeros(A.n)
    for c, b in zip(coeffs, A.basis):
        if c:
            acc = acc + b * c
    return acc


def _is_nil(S: Subspace) -> bool:
    return S.dim == 0 or radical_basis(S).dim == S.dim


def _fitting_idempotent(A: Subspace, probes) -> SquareMatrix | None:
    """Idempotent p(a) with p = 0 mod x^k and 1 mod the rest, for the first non-nilpotent probe."""
    I = identity(A.n)
    for a in probes:
        if matrix_nilindex(a) is not None:
            continue
        parts, _ = _spectral_idempotents(a, I)
        e = zeros(A.n)
        for g, idem in parts:
            if g.as_expr() != _X:
                e = e + idem
        if e in A and not e.is_zero():
            return e
    return None


def _split(A: Subspace, e: SquareMatrix) -> list[SquareMatrix]:
    """Refine idempotent e into primitive orthogonal idempotents using the corner eAe."""
    corner = _corner(A, e)
    rad = radical_basis(corner)
    if corner.dim - rad.dim == 1:
        return [e]
    nonsplit = False
    for a in _probes(corner):
        parts, linear = _spectral_idempotents(a, e)
        if len(parts) > 1:
            out = []
            for _, idem in parts:
                if not idem.is_zero():
                    out.extend(_split(A, idem))
            return out
        if not linear:
            nonsplit = True
    raise Inconclusive("corner algebra not split by probes" +
                       (" (irreducible nonlinear minimal polynomial)" if nonsplit else ""))


def primitive_idempotents(A: Subspace) -> list[SquareMatrix]:
    """A complete set of orthogonal primitive idempotents of A (empty for nil A)."""
    _require_algebra(A)
    if _is_nil(A):
        return []
    u = zeros(A.n)
    found = []
    while True:
        comp = _complement_corner(A, u) if found else A
        if _is_nil(comp):
            break
        extra = _one_sided_units(comp) if not found else ()
        f = _fitting_idempotent(comp, _probes(comp, extra))
        if f is None:
            raise Inconclusive("no non-nilpotent probe element found")
        found.append(f)
        u = u + f
    prims = []
    for f in found:
        prims.extend(_split(A, f))
    return prims


def idempotent_ranks(A: Subspace) -> frozenset[int]:
    """Matrix ranks of the nonzero idempotents of A."""
    prims = primitive_idempotents(A)
    ranks = [int(mpq(p.trace())) for p in prims]
    sums = set()
    for k in range(1, len(ranks) + 1):
        for combo in combinations(ranks, k):
            sums.add(sum(combo))
    return frozenset(sums)


# -- nondegeneracy and profiles -----------------------------------------------

def determinant_polynomial(S: Subspace):
    """det of the generic element sum t_k b_k, as a polynomial in t_1..t_dim."""
    if S.dim == 0:
        return PolyRing(["t1"]).zero()
    g, ring = S.generic_element()
    d = g.det()
    return d if isinstance(d, MPoly) else ring.const(d)


def nondegenerate_exists(S: Subspace) -> bool:
    """Whether S contains an invertible matrix (exact over an infinite field)."""
    _char_zero(S.basis)
    return not determinant_polynomial(S).is_zero()


@dataclass(frozen=True)
class AlgebraProfile:
    """Invariants of a matrix subalgebra up to isomorphism and anti-isomorphism.

    One-sided data is recorded without the side, since transposition swaps
    left and right.
    """
    dim: int
    radical_dim: int
    radical_squared_dim: int
    has_unit: bool
    one_sided_unit: bool
    commutative: bool
    radical_annihilator_dims: tuple[int, int, int]  # smaller side, larger side, two-sided


def _annihilator_dim(A: Subspace, R: Subspace, side: str) -> int:
    rows = []
    for r in R.basis:
        prods = [(x * r) if side == "left" else (r * x) for x in A.basis]
        for pos in range(A.n * A.n):
            rows.append([p.flat()[pos] for p in prods])
    if not rows:
        return A.dim
    return len(nullspace(rows, A.dim))


def _unit_exists(A: Subspace, side: str) -> bool:
    if A.dim == 0:
        return False
    rows, rhs = [], []
    for b in A.basis:
        prods = [(x * b) if side == "left" else (b * x) for x in A.basis]
        for pos in range(A.n * A.n):
            rows.append([p.flat()[pos] for p in prods])
            rhs.append(b.flat()[pos])
    return solve_linear(rows, rhs) is not None


def algebra_profile(A: Subspace) -> AlgebraProfile:
    _require_algebra(A)
    rad = radical_basis(A)
    left = _unit_exists(A, "left")
    right = _unit_exists(A, "right")
    both = []
    for r in rad.basis:
        for side in ("left", "right"):
            prods = [(x * r) if side == "left" else (r * x) for x in A.basis]
            for pos in range(A.n * A.n):
                both.append([p.flat()[pos] for p in prods])
    two_sided = A.dim if not both else len(nullspace(both, A.dim))
    return AlgebraProfile(
        dim=A.dim,
        radical_dim=rad.dim,
        radical_squared_dim=rad.products(rad).dim,
        has_unit=left and right,
        one_sided_unit=left != right,
        commutative=all(a * b == b * a for a, b in combinations(A.basis, 2)),
        radical_annihilator_dims=(*sorted((_annihilator_dim(A, rad, "left"),
                                           _annihilator_dim(A, rad, "right"))), two_sided),
    )


@dataclass(frozen=True)
class Fingerprint:
    dim_im: int
    dim_ker: int
    dim_im_cap_ker: int
    radical_dim: int
    idempotent_ranks: tuple | str
    nil_index: int | None
    unit_image_rank: int
    unit_image_square_zero: bool
    ker_contains_nondegenerate: bool
    image_profile: AlgebraProfile
    im_cap_ker_profile: AlgebraProfile
    r_squared_zero: bool

    def to_json(self) -> dict:
        d = asdict(self)
        d["idempotent_ranks"] = list(self.idempotent_ranks) \
            if isinstance(self.idempotent_ranks, tuple) else self.idempotent_ranks
        for key in ("image_profile", "im_cap_ker_profile"):
            d[key]["radical_annihilator_dims"] = list(d[key]["radical_annihilator_dims"])
        return d

    def differing_fields(self, other: Fingerprint) -> list[str]:
        return [f for f in self.__dataclass_fields__ if getattr(self, f) != getattr(other, f)]


def fingerprint(L: LinearOperator) -> Fingerprint:
    im, ker = image_and_kernel(L)
    try:
        ranks: tuple | str = tuple(sorted(idempotent_ranks(im)))
    except Inconclusive:
        ranks = "inconclusive"
    one = unit_image(L)
    both = im.intersect(ker)
    return Fingerprint(
        dim_im=im.dim,
        dim_ker=ker.dim,
        dim_im_cap_ker=both.dim,
        radical_dim=radical_basis(im).dim,
        idempotent_ranks=ranks,
        nil_index=nilpotency_index(L),
        unit_image_rank=one.rank(),
        unit_image_square_zero=(one * one).is_zero(),
        ker_contains_nondegenerate=nondegenerate_exists(ker),
        image_profile=algebra_profile(im),
        im_cap_ker_profile=algebra_profile(both),
        r_squared_zero=L.compose(L).is_zero(),
    )


def central_radical_ratio(L: LinearOperator, e: SquareMatrix, f: SquareMatrix):
    """l/k where R(e) = k v and R(f) = l v for the central element v of Rad(Im R)."""
    im, _ = image_and_kernel(L)
    rad = radical_basis(im)
    rows = []
    for r in rad.basis:
        prods = [x * r - r * x for x in rad.basis]
        for pos in range(L.n * L.n):
            rows.append([p.flat()[pos] for p in prods])
    center = _combine(rad, nullspace(rows, rad.dim)) if rows else rad
    if center.dim != 1:
        raise ValueError(f"center of the radical has dimension {center.dim}, expected 1")
    k, l = center.coords(apply(L, e)), center.coords(apply(L, f))
    if k is None or l is None or not k[0]:
        raise ValueError("R(e), R(f) are not nonzero multiples of the central element")
    return l[0] / k[0]
