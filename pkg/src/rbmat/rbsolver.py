"""Templates of operators with symbolic entries and the quadratic systems they induce.

A template is a :class:`LinearOperator` whose entries are polynomials in a
:class:`PolyRing`.  Expanding the Rota-Baxter identity on every ordered pair
of matrix units gives a system of (at most quadratic) polynomial equations
in the template variables; an assignment of scalars solves the system exactly
when the instantiated operator is Rota-Baxter.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

from gmpy2 import mpq

from .exactscalar import QQ, ScalarDomain, quadratic
from .matop import (LinearOperator, SquareMatrix, conjugate, parse_unit, rb_residual, scale,
                    transpose_descriptor, unit, unit_image, unit_name, unit_pairs)
from .polyring import MPoly, PolyRing
from .structure import solve_linear

__all__ = [
    "OperatorTemplate", "QuadraticSystem", "Substitution", "Fit", "NoFit",
    "section3_template", "section4_stage1", "section4_21par", "TEMPLATES", "template",
    "pair_residual", "generate_system", "substitute_solution", "fit_template",
    "RELATION_GROUPS", "CASE1_LINEAR", "CASE1_QUADRATIC", "relation_group_check",
    "relation_group_report",
    "case1_normalize", "section3_checkpoints",
]


@dataclass(frozen=True)
class OperatorTemplate:
    name: str
    ring: PolyRing
    operator: LinearOperator

    @property
    def variables(self) -> tuple[str, ...]:
        return self.ring.names

    def instantiate(self, assignment: Mapping[str, object],
                    domain: ScalarDomain = QQ) -> LinearOperator:
        missing = [v for v in self.ring.names if v not in assignment]
        if missing:
            raise KeyError(f"no value for {missing}")
        vals = {k: domain(v) for k, v in assignment.items()}
        imgs = tuple(m.map(lambda p: domain(p.eval(vals))) for m in self.operator.images)
        return LinearOperator(self.operator.n, imgs, mpq(0), domain)

    def subs(self, mapping: Mapping[str, object], ring: PolyRing | None = None) -> OperatorTemplate:
        """Partially substitute variables (polynomials or scalars)."""
        ring = ring or self.ring
        imgs = tuple(m.map(lambda p: p.subs(mapping, ring)) for m in self.operator.images)
        return OperatorTemplate(self.name, ring, LinearOperator(self.operator.n, imgs, mpq(0), ring))

    def to_json(self) -> dict:
        return self.operator.to_json()


def _template(name: str, names, images: Mapping[str, list]) -> OperatorTemplate:
    ring = PolyRing(names)
    mats = {k: SquareMatrix([[ring(x) for x in row] for row in v]) for k, v in images.items()}
    full = {}
    for i, j in unit_pairs(3):
        full[(i, j)] = mats.get(unit_name(i, j), SquareMatrix([[ring.zero()] * 3 for _ in range(3)]))
    return OperatorTemplate(name, ring, LinearOperator(3, tuple(full[ij] for ij in unit_pairs(3)),
                                                       mpq(0), ring))


def section3_template() -> OperatorTemplate:
    """Upper-triangular normal form with R(1) = e12 + e23 and three unknown images."""
    names = [f"{c}{i}{j}" for c in "abc" for i in (1, 2, 3) for j in (1, 2, 3)] + ["r13", "p13"]
    A = [[f"a{i}{j}" for j in (1, 2, 3)] for i in (1, 2, 3)]
    B = [[f"b{i}{j}" for j in (1, 2, 3)] for i in (1, 2, 3)]
    C = [[f"c{i}{j}" for j in (1, 2, 3)] for i in (1, 2, 3)]
    return _template("section3", names, {
        "e12": [[0, 0, "1/2"], [0, 0, 0], [0, 0, 0]],
        "e11": [[0, 1, "r13"], [0, 0, "1/2"], [0, 0, 0]],
        "e22": [[0, 0, "p13"], [0, 0, "1/2"], [0, 0, 0]],
        "e33": [[0, 0, "-r13-p13"], [0, 0, 0], [0, 0, 0]],
        "e21": A, "e32": B, "e31": C,
    })


_STAGE1_VARS = ("a12 a13 a32 b12 b13 b32 c12 c13 c32 d11 d12 d13 d32 d33 f11 f12 f13 f32 f33 "
                "s12 s13 s22 s32 s33 t12 t13 t22 t32 t33").split()


def section4_stage1() -> OperatorTemplate:
    """R(1) = e12 with e12 in the kernel, before the d/c/a eliminations."""
    C = [[0, "c12", "c13"], [0, 0, 0], [0, "c32", 0]]
    D = [["d11", "d12", "d13"], [0, "d11", 0], [0, "d32", "d33"]]
    t = _template("section4-stage1", _STAGE1_VARS, {
        "e13": [[0, "a12", "a13"], [0, 0, 0], [0, "a32", 0]],
        "e32": [[0, "b12", "b13"], [0, 0, 0], [0, "b32", 0]],
        "e11": D,
        "e21": [["t22+c12", "t12", "t13"], [0, "t22", "-c13"], ["c32", "t32", "t33"]],
        "e23": [["f11", "f12", "f13"], [0, "f11+a12", "a13"], ["-a32", "f32", "f33"]],
        "e31": [["s22+b12", "s12", "s13"], [0, "s22", "-b13"], ["b32", "s32", "s33"]],
    })
    ring = t.ring
    Cm = SquareMatrix([[ring(x) for x in r] for r in C])
    Dm = t.operator.image(1, 1)
    e12 = unit(3, 1, 2).map(ring.const)
    imgs = list(t.operator.images)
    imgs[4] = Cm + Dm                       # e22
    imgs[8] = e12 - Cm - Dm - Dm            # e33, so that R(1) = e12
    return OperatorTemplate(t.name, ring, t.operator.with_images(imgs))


_21PAR_VARS = ("b12 b13 c12 c13 d12 d13 f11 f12 f13 f32 f33 "
               "s12 s13 s22 s32 s33 t12 t13 t22 t32 t33").split()


def section4_21par() -> OperatorTemplate:
    """R(1) = e12 with e12, e13 in the kernel; 21 free parameters."""
    return _template("section4-21par", _21PAR_VARS, {
        "e32": [[0, "b12", "b13"], [0, 0, 0], [0, 0, 0]],
        "e11": [[0, "d12", "d13"], [0, 0, 0], [0, 0, 0]],
        "e22": [[0, "c12+d12", "c13+d13"], [0, 0, 0], [0, 0, 0]],
        "e33": [[0, "1-2*d12-c12", "-2*d13-c13"], [0, 0, 0], [0, 0, 0]],
        "e23": [["f11", "f12", "f13"], [0, "f11", 0], [0, "f32", "f33"]],
        "e31": [["s22+b12", "s12", "s13"], [0, "s22", "-b13"], [0, "s32", "s33"]],
        "e21": [["t22+c12", "t12", "t13"], [0, "t22", "-c13"], [0, "t32", "t33"]],
    })


TEMPLATES = {
    "section3": section3_template,
    "section4-stage1": section4_stage1,
    "section4-21par": section4_21par,
}


def template(name: str) -> OperatorTemplate:
    try:
        return TEMPLATES[name]()
    except KeyError:
        raise KeyError(f"unknown template {name!r}; choose from {sorted(TEMPLATES)}") from None


# -- systems -----------------------------------------------------------------------

def _as_unit(x) -> SquareMatrix:
    if isinstance(x, SquareMatrix):
        return x
    return unit(3, *parse_unit(x))


def pair_residual(T: OperatorTemplate, x, y) -> SquareMatrix:
    """Residual of the identity on a pair of matrices (or unit names) as a polynomial matrix."""
    ring = T.ring
    lift = lambda m: m if isinstance(m, MPoly) else ring.const(m)
    X, Y = _as_unit(x).map(lift), _as_unit(y).map(lift)
    return rb_residual(T.operator, X, Y).map(lift)


@dataclass
class QuadraticSystem:
    template: str
    ring: PolyRing
    equations: list[MPoly]
    provenance: list[list[tuple[str, str, int, int]]] = field(default_factory=list)

    def __len__(self):
        return len(self.equations)

    def to_json(self) -> dict:
        return {
            "template": self.template,
            "variables": list(self.ring.names),
            "equations": [
                {"poly": str(p), "pair": [src[0][0], src[0][1]], "entry": [src[0][2], src[0][3]],
                 "duplicates": [{"pair": [x, y], "entry": [i, j]} for x, y, i, j in src[1:]]}
                for p, src in zip(self.equations, self.provenance)
            ],
        }


def generate_system(T: OperatorTemplate) -> QuadraticSystem:
    """All nonzero residual entries over ordered unit pairs, deduplicated up to scalar multiples."""
    seen: dict[MPoly, int] = {}
    eqs, prov = [], []
    names = [unit_name(i, j) for i, j in unit_pairs(T.operator.n)]
    for x, y in itertools.product(names, repeat=2):
        r = pair_residual(T, x, y)
        for i, row in enumerate(r.rows, 1):
            for j, p in enumerate(row, 1):
                if p.is_zero():
                    continue
                key = p.monic()
                if key in seen:
                    prov[seen[key]].append((x, y, i, j))
                    continue
                seen[key] = len(eqs)
                eqs.append(key)
                prov.append([(x, y, i, j)])
    return QuadraticSystem(T.name, T.ring, eqs, prov)


@dataclass(frozen=True)
class Substitution:
    all_zero: bool
    nonzero: tuple  # (equation index, value) pairs
    system: QuadraticSystem | None = field(default=None, compare=False, repr=False)

    def __bool__(self):
        return self.all_zero

    @property
    def first_nonzero(self) -> MPoly | None:
        if self.all_zero or self.system is None:
            return None
        return self.system.equations[self.nonzero[0][0]]

    def to_json(self) -> dict:
        first = self.first_nonzero
        return {"allZero": self.all_zero, "nonzeroCount": len(self.nonzero),
                "firstNonzero": None if first is None else str(first)}


def substitute_solution(system: QuadraticSystem, assignment: Mapping[str, object]) -> Substitution:
    missing = [v for v in system.ring.names if v not in assignment]
    if missing:
        raise KeyError(f"no value for {missing}")
    bad = []
    for k, p in enumerate(system.equations):
        v = p.eval(assignment)
        if v:
            bad.append((k, v))
    return Substitution(not bad, tuple(bad), system)


# -- fitting -----------------------------------------------------------------------

class NoFit(ValueError):
    pass


@dataclass(frozen=True)
class Fit:
    assignment: dict
    step: str  # "as-is", "scaled" or "scaled+Theta12T"
    operator: LinearOperator


def _solve_against(T: OperatorTemplate, L: LinearOperator) -> dict | None:
    names = T.ring.names
    rows, rhs = [], []
    for tm, lm in zip(T.operator.images, L.images):
        for p, v in zip(tm.flat(), lm.flat()):
            coeffs, const = p.linear_part()
            rows.append([coeffs.get(n, mpq(0)) for n in names])
            rhs.append(v - const)
    sol = solve_linear(rows, rhs)
    if sol is None:
        return None
    return dict(zip(names, sol))


def fit_template(L: LinearOperator, T: OperatorTemplate) -> Fit:
    """Find template parameters reproducing L exactly.

    Tries L itself, then L scaled so that R(1) = e12, then that operator
    conjugated by Theta12 after transpose.  Entries of the template must be
    affine-linear in its variables.  Free variables are set to zero.
    """
    if L.n != T.operator.n:
        raise NoFit("dimension mismatch")
    candidates = [("as-is", L)]
    one = unit_image(L)
    c = one[0, 1]
    others = [x for k, x in enumerate(one.flat()) if k != 1]
    if c and not any(others):
        S = scale(L, 1 / c)
        t12T = transpose_descriptor(L.n).then(_theta12(L.n))
        candidates += [("scaled", S), ("scaled+Theta12T", conjugate(S, t12T))]
    for step, M in candidates:
        sol = _solve_against(T, M)
        if sol is not None:
            return Fit(sol, step, M)
    raise NoFit("operator does not match the template after scaling and Theta12 o T")


def _theta12(n):
    from .matop import AutoDescriptor, permutation_matrix
    return AutoDescriptor(permutation_matrix(n, {1: 2, 2: 1}), False, "Theta12")


# -- relation groups for the 21-parameter template -------------------------------------

RELATION_GROUPS = [
    ("f-block", ["b12", "b13", "c13", "d13", "s13", "s22", "s33", "f13+t22-t33", "2*d12+c12-1"],
     ["f11", "f33", "f32"]),
    ("b12-c13", ["b13", "c13", "d13", "d12", "t32", "s22-s33", "t22-t33", "s32", "f13"],
     ["b12-c13"]),
    ("case1-generators", ["b13", "c13", "d13"],
     ["s12", "s13", "t12", "t13", "f12+t32", "3*d12+c12-1+f13"]),
    ("3d13", ["b13", "c13", "d13", "b12"], ["3*d13+2*c13+s22-s33"]),
    ("c12+t22", ["b13", "c13", "d13", "s33-s22"], ["c12+t22-t33+s32"]),
    ("f13+s32", ["b13", "c13", "d13", "2*d12+c12-1", "b12"], ["f13+s32"]),
    ("f11", ["f11"], ["f33", "t33"]),
]

# valid once b13 != 0 and c13 has been cleared
CASE1_LINEAR = ["b12", "f11", "f33", "f32", "s12", "s13", "t12", "t13", "f12", "s32+c12", "t32",
                "t22-t33", "3*d12+2*c12-1", "f13-c12", "s22-s33+3*d13"]

# valid once moreover b13 = 1; expanded from
# (2c12-1)(c12+1), d13(c12+1), 6d13^2+2c12-1, s33(s33-3d13)-c12-t33, t33(s33-3d13), t33(t33+c12)
CASE1_QUADRATIC = [
    "2*c12^2+c12-1", "d13*c12+d13", "6*d13^2+2*c12-1",
    "s33^2-3*s33*d13-c12-t33", "t33*s33-3*t33*d13", "t33^2+t33*c12",
]


def _phi(alpha, beta, lam, delta, domain):
    from .catalog import phi
    return phi(alpha, beta, lam, delta, domain=domain)


def case1_normalize(assignment: Mapping[str, object], domain: ScalarDomain = QQ):
    """Clear c13 and then scale b13 to 1 by conjugations fixing e12.

    Returns (assignment, domain) for the normalized operator, extending Q by
    sqrt(b13) when needed, or None when b13 = 0.
    """
    T = section4_21par()
    a = {k: domain(v) for k, v in assignment.items()}
    b13, c13 = a["b13"], a["c13"]
    if not b13:
        return None
    L = T.instantiate(a, domain)
    L = conjugate(L, _phi(0, 0, 1, -c13 / b13, domain))
    a = _solve_against(T, L)
    b13 = a["b13"]
    try:
        root = domain.sqrt(b13)
    except ArithmeticError:
        if domain != QQ:
            raise
        num, den = int(mpq(b13).numerator), int(mpq(b13).denominator)
        d = _squarefree_part(num * den)
        domain = quadratic(d)
        root = domain.sqrt(b13)
        L = L.with_images(m.map(domain) for m in L.images)
    # conjugation by phi(0,0,l,0) divides b13 by l^2
    L = conjugate(L, _phi(0, 0, root, 0, domain))
    return _solve_against(T, L), domain


def _squarefree_part(m: int) -> int:
    import sympy
    sign = -1 if m < 0 else 1
    out = 1
    for p, k in sympy.factorint(abs(m)).items():
        if k % 2:
            out *= p
    return sign * out


def relation_group_report(fits: Mapping[str, Mapping[str, object]]) -> list[tuple[str, str]]:
    """(label, relation group) for every violation over a collection of fitted assignments."""
    return [(label, group) for label, a in fits.items()
            for group, ok in relation_group_check(a).items() if not ok]


def relation_group_check(assignment: Mapping[str, object]) -> dict[str, bool]:
    """Evaluate the product relations (and the Case 1 ones where they apply)."""
    ring = section4_21par().ring
    out = {}
    for name, left, right in RELATION_GROUPS:
        ok = True
        for l, r in itertools.product(left, right):
            if (ring.parse(l) * ring.parse(r)).eval(assignment):
                ok = False
        out[name] = ok
    norm = case1_normalize(assignment)
    if norm is not None:
        a, dom = norm
        a = {k: dom(v) for k, v in a.items()}
        out["case1-linear"] = all(not ring.parse(p).eval(a) for p in CASE1_LINEAR)
        out["case1-quadratic"] = all(not ring.parse(p).eval(a)
                                     for p in CASE1_QUADRATIC)
    return out


# -- upper-triangular checkpoints --------------------------------------------------

def _entries(m: SquareMatrix) -> list[MPoly]:
    return [p for p in m.flat() if not p.is_zero()]


def _commutator_residuals(T: OperatorTemplate, x: str) -> list[MPoly]:
    """Entries of residual(x, E) - residual(E, x) for the identity E."""
    n = T.operator.n
    E = SquareMatrix([[T.ring.const(1 if i == j else 0) for j in range(n)] for i in range(n)])
    return _entries(pair_residual(T, x, E) - pair_residual(T, E, x))


def _in_span(target: MPoly, polys: list[MPoly]) -> bool:
    """Whether target is a Q-linear combination of polys (coefficientwise)."""
    monos = sorted({e for p in polys + [target] for e in p.terms})
    rows = [[p.terms.get(e, mpq(0)) for p in polys] for e in monos]
    rhs = [target.terms.get(e, mpq(0)) for e in monos]
    return solve_linear(rows, rhs) is not None


def section3_checkpoints() -> dict[str, bool]:
    """Reproduce the successive eliminations for the R(1) = e12 + e23 normal form."""
    T = section3_template()
    ring = T.ring
    v = ring.var
    res = {}
    # step A: linear consequences for A = R(e21)
    lin = _commutator_residuals(T, "e21")
    A_rel = [v("a21"), v("a31"), v("a32"), v("a22") - v("a33"), v("a22") - v("a11") - 1,
             v("a12") - v("a23") + v("r13") - v("p13")]
    res["A-linear"] = all(_in_span(p, lin) for p in A_rel)
    TA = T.subs({"a21": 0, "a31": 0, "a32": 0, "a33": v("a22"), "a11": v("a22") - 1,
                 "a12": v("a23") - v("r13") + v("p13")})
    rA = _entries(pair_residual(TA, "e21", "e21"))
    res["r13=p13"] = _in_span(v("r13") - v("p13"), rA)
    res["a23=0"] = _in_span(v("a23") - v("r13") + v("p13"), rA)
    # step B: with p13 = r13 and a23 = 0, then B = R(e32) in its linear shape
    TB = TA.subs({"p13": v("r13"), "a23": 0})
    linB = _commutator_residuals(TB, "e32")
    B_rel = [v("b21"), v("b31"), v("b32"), v("b11") - v("b22"), v("b33") - v("b22") - mpq(1, 2),
             v("b12") - v("b23") + 3 * v("r13")]
    res["B-linear"] = all(_in_span(p, linB) for p in B_rel)
    TB = TB.subs({"b21": 0, "b31": 0, "b32": 0, "b22": v("b11"), "b33": v("b11") + mpq(1, 2),
                  "b12": v("b23") - 3 * v("r13")})
    rB = pair_residual(TB, "e32", "e32")
    res["b23=0"] = rB[1, 2] == -v("b23") / 2
    rB = pair_residual(TB.subs({"b23": 0}), "e32", "e32")
    res["r13=0"] = _proportional(rB[0, 1], v("r13"))
    rB = pair_residual(TB.subs({"b23": 0, "r13": 0}), "e32", "e32")
    res["b13=0"] = _proportional(rB[0, 2], v("b13"))
    # step C: A and B in their reduced shape
    B = {f"b{i}{j}": 0 for i in (1, 2, 3) for j in (1, 2, 3)}
    B.update({"b11": v("b11"), "b22": v("b11"), "b33": v("b11") + mpq(1, 2)})
    A = {"a12": 0, "a23": 0, "a21": 0, "a31": 0, "a32": 0, "a11": v("a22") - 1, "a33": v("a22"),
         "r13": 0, "p13": 0}
    TC = T.subs({**A, **B})
    linC = _commutator_residuals(TC, "e31")
    res["b11-a22+1/2"] = _in_span(v("b11") - v("a22") + mpq(1, 2), linC)
    TD = TC.subs({"a22": 0, "b11": mpq(-1, 2), "c31": 0, "c21": mpq(-1, 2), "c22": v("c11"),
                  "c33": v("c11"), "c12": v("c23") - v("a13"), "c32": 0})
    rD = pair_residual(TD, "e31", "e31")
    c11, c13, c23 = v("c11"), v("c13"), v("c23")
    res["c11=0"] = rD[2, 2] == -(c11 * c11)
    res["c13=0"] = _proportional(rD[1, 2], c13)
    res["c23=0"] = _proportional(pair_residual(TD.subs({"c11": 0}), "e31", "e31")[0, 0], c23)
    return res


def _proportional(p: MPoly, q: MPoly) -> bool:
    if p.is_zero() or len(p.terms) != len(q.terms):
        return False
    ratio = None
    for e, c in q.terms.items():
        if e not in p.terms:
            return False
        r = p.terms[e] / c
        if ratio is None:
            ratio = r
        elif r != ratio:
            return False
    return True
