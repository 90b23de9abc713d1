"""Named Rota-Baxter operators and (anti)automorphisms of matrix algebras.

Operators are listed by their nonzero unit images only; every unlisted unit
maps to zero.  Parameters: ``kappa``/``mu`` take values in {0, -1};
``alpha``, ``beta``, ``gamma`` are free scalars with beta, gamma != -1.
"""
from __future__ import annotations

import fnmatch
import itertools
import json
from dataclasses import dataclass

from gmpy2 import mpq

from .exactscalar import QQ, QQi, ScalarDomain, format_scalar
from .matop import (AutoDescriptor, LinearOperator, SquareMatrix, conjugate, factorial_unit_check,
                    identity, matrix, matrix_nilindex, nilpotency_index, permutation_matrix,
                    rb_check, scale, skew_symmetric_check, transpose_descriptor, unit, unit_image,
                    unit_pairs, zeros)

__all__ = [
    "CatalogEntry", "SamplingGrid", "CATALOG", "catalog_manifest", "load_manifest", "entry", "build_operator", "build_automorphism",
    "verify_entry", "select", "sample_params", "samples", "theta", "psi_rs", "phi",
    "example1", "section3_final", "section_p", "param_label", "DEFAULT_GRID",
    "MappingClaim", "ClaimStep", "mapping_claims", "run_claim", "parse_ref", "r6_intermediate",
    "lift_operator", "lift_descriptor", "STATED_SQUARE_ZERO", "stated_nil_index",
    "nilindex_partition", "block_projections",
]


def _e(n: int, **coeffs) -> SquareMatrix:
    """Linear combination of units, e.g. _e(3, e12=1, e23=mpq(1, 2), E=-1)."""
    acc = zeros(n)
    for name, c in coeffs.items():
        if not c:
            continue
        m = identity(n) if name == "E" else unit(n, int(name[1]), int(name[2]))
        acc = acc + m * mpq(c)
    return acc


def _op(n: int, images: dict, domain: ScalarDomain = QQ) -> LinearOperator:
    return LinearOperator.from_dict(n, images, domain=domain)


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    n: int
    params: tuple[str, ...]
    label: str
    domain: ScalarDomain = QQ
    group: str = ""

    def to_json(self) -> dict:
        return {"id": self.id, "n": self.n, "parameterSpec": [
            {"name": p, "constraint": _CONSTRAINTS[p]} for p in self.params],
            "requiredDomain": self.domain.label, "label": self.label}


_CONSTRAINTS = {
    "kappa": "in {0,-1}", "mu": "in {0,-1}", "alpha": "any", "beta": "!= -1",
    "gamma": "!= -1", "n": "integer 2..8", "a": "any", "q": "any",
}


def _check_params(entry_id: str, spec: tuple, params: dict) -> dict:
    missing = [p for p in spec if p not in params]
    if missing:
        raise ValueError(f"{entry_id}: missing parameters {missing}")
    extra = set(params) - set(spec)
    if extra:
        raise ValueError(f"{entry_id}: unexpected parameters {sorted(extra)}")
    out = {}
    for p in spec:
        v = params[p]
        if p == "n":
            v = int(v)
            if not 2 <= v <= 8:
                raise ValueError(f"{entry_id}: n must be in 2..8")
        else:
            v = mpq(v) if not isinstance(v, str) else QQ.parse(v)
        if p in ("kappa", "mu") and v not in (0, -1):
            raise ValueError(f"{entry_id}: {p} must be 0 or -1, got {format_scalar(v)}")
        if p in ("beta", "gamma") and v == -1:
            raise ValueError(f"{entry_id}: {p} must differ from -1")
        out[p] = v
    return out


# -- Theorem-level entries -----------------------------------------------------

def _L(images):
    return lambda p: _op(2, images(p))


def _Q(images):
    return lambda p: _op(3, images(p))


def _q15(p):
    k = p["kappa"]
    imgs = {
        "e32": _e(3, e13=2), "e22": _e(3, e13=1), "e11": _e(3, e12=1, e13=1),
        "e23": _e(3, e13=-1),
        "e31": _e(3, E=k - 1, e23=-2, e32=1, e33=3), "e21": _e(3, e11=-1),
    }
    # R(1) = e12 is given; the e33 image is whatever completes it
    imgs["e33"] = _e(3, e12=1) - imgs["e11"] - imgs["e22"]
    return _op(3, imgs)


_BUILDERS = {
    "L1": _L(lambda p: {"e21": _e(2, e12=1)}),
    "L2": _L(lambda p: {"e21": _e(2, e11=1)}),
    "L3": _L(lambda p: {"e21": _e(2, e11=1), "e22": _e(2, e12=1)}),
    "L4": _L(lambda p: {"e21": _e(2, e11=-1), "e11": _e(2, e12=1)}),
    "L34": _L(lambda p: {"e22": _e(2, e12=1), "e21": _e(2, E=p["kappa"], e11=1)}),
    "Q1": _Q(lambda p: {
        "e12": _e(3, e13=1), "e11": _e(3, e12=1, e23=1), "e22": _e(3, e23=1),
        "e21": _e(3, e11=-1), "e32": _e(3, e11=-1, e22=-1), "e31": _e(3, e21=-1)}),
    "Q2": _Q(lambda p: {"e33": _e(3, e12=1)}),
    "Q3": _Q(lambda p: {
        "e32": _e(3, e12=1), "e33": _e(3, e12=1), "e23": _e(3, e12=p["alpha"]),
        "e31": _e(3, E=p["kappa"], e11=1)}),
    "Q4": _Q(lambda p: {
        "e22": _e(3, e12=1), "e33": _e(3, e12=1), "e23": _e(3, e12=1),
        "e21": _e(3, E=p["kappa"], e11=1)}),
    "Q5": _Q(lambda p: {
        "e22": _e(3, e12=1), "e33": _e(3, e12=p["beta"]), "e21": _e(3, E=p["kappa"], e11=1)}),
    "Q6": _Q(lambda p: {
        "e22": _e(3, e12=1), "e31": _e(3, e13=-p["mu"]),
        "e21": _e(3, E=p["kappa"] + 1, e22=-1)}),
    "Q7": _Q(lambda p: {"e11": _e(3, e12=1), "e31": _e(3, e33=1), "e21": _e(3, e22=1)}),
    "Q8": _Q(lambda p: {
        "e22": _e(3, e12=1), "e31": _e(3, e33=1), "e21": _e(3, E=p["kappa"] + 1, e22=-1)}),
    "Q9": _Q(lambda p: {
        "e22": _e(3, e12=1), "e23": _e(3, e13=1), "e21": _e(3, E=p["kappa"] + 1, e22=-1)}),
    "Q10": _Q(lambda p: {
        "e22": _e(3, e12=1), "e31": _e(3, e11=1, e22=1), "e21": _e(3, e22=-1)}),
    "Q11": _Q(lambda p: {
        "e11": _e(3, e12=1), "e31": _e(3, e11=1, e22=1, e32=1), "e21": _e(3, e11=-1)}),
    "Q12": _Q(lambda p: {
        "e11": _e(3, e12=1), "e31": _e(3, e32=1, e33=1), "e21": _e(3, e11=-1)}),
    "Q13": _Q(lambda p: {
        "e22": _e(3, e12=1), "e23": _e(3, e13=1), "e21": _e(3, E=p["kappa"], e11=1)}),
    "Q14": _Q(lambda p: {
        "e32": _e(3, e13=1), "e23": _e(3, e13=1), "e22": _e(3, e12=1), "e33": _e(3, e12=1),
        "e31": _e(3, e23=-1, e32=-1), "e21": _e(3, e22=-1, e33=-1)}),
    "Q15": _q15,
    "Q16": _Q(lambda p: {
        "e21": _e(3, e11=mpq(1, 2)), "e22": _e(3, e12=mpq(1, 2)), "e23": _e(3, e13=mpq(1, 2)),
        "e32": _e(3, e13=2), "e33": _e(3, e12=mpq(1, 2)),
        "e31": _e(3, E=1, e23=-2, e32=mpq(-1, 2))}),
    "Q17": _Q(lambda p: {
        "e32": _e(3, e13=2, e12=-1), "e11": _e(3, e12=mpq(1, 2), e13=1),
        "e21": _e(3, e22=mpq(1, 2), e23=1), "e33": _e(3, e12=mpq(1, 2), e13=-1),
        "e31": _e(3, e23=-2, e22=1, e33=2)}),
    "Q18": _Q(lambda p: {
        "e21": _e(3, e11=1), "e22": _e(3, e12=1), "e23": _e(3, e13=1),
        "e31": _e(3, e11=1, e22=1, e32=-1)}),
    "Q19": _Q(lambda p: {
        "e22": _e(3, e12=1), "e23": _e(3, e13=1), "e31": _e(3, e33=1),
        "e21": _e(3, E=p["kappa"] + 1, e22=-1)}),
    "Q20": _Q(lambda p: {
        "e11": _e(3, e12=1), "e21": _e(3, e11=-1), "e23": _e(3, e13=-1),
        "e31": _e(3, e11=1, e22=1, e32=1)}),
    "Q21": _Q(lambda p: {
        "e11": _e(3, e12=1), "e23": _e(3, e13=-1), "e31": _e(3, e32=1, e33=1),
        "e21": _e(3, E=p["kappa"] + 1, e11=-1)}),
    "Q22": _Q(lambda p: {
        "e11": _e(3, e12=1), "e23": _e(3, e13=-1), "e31": _e(3, e32=1, e13=-p["mu"]),
        "e21": _e(3, E=p["kappa"] + 1, e11=-1)}),
    "Q23": _Q(lambda p: {
        "e22": _e(3, e12=1), "e23": _e(3, e13=1), "e33": _e(3, e12=p["gamma"]),
        "e31": _e(3, e32=-1), "e21": _e(3, E=p["kappa"], e11=1)}),
    "Q24": _Q(lambda p: {
        "e22": _e(3, e12=1), "e33": _e(3, e12=1), "e23": _e(3, e13=1),
        "e31": _e(3, e32=-1, e12=1), "e21": _e(3, E=p["kappa"], e11=1)}),
    "R1": _Q(lambda p: {"e31": _e(3, e23=1), "e32": _e(3, e13=-1)}),
    "R2": _Q(lambda p: {
        "e11": _e(3, e21=-1, e32=-1), "e12": _e(3, e11=1, e31=1), "e13": _e(3, e12=1, e21=-1),
        "e21": _e(3, e31=-1), "e22": _e(3, e32=-1), "e23": _e(3, e11=1, e22=1)}),
    "R3": _Q(lambda p: {"e23": _e(3, e22=1), "e22": _e(3, e32=-1)}),
    "R4": _Q(lambda p: {
        "e13": _e(3, e12=1, e21=-1), "e12": _e(3, e31=1), "e21": _e(3, e31=-1),
        "e23": _e(3, e11=1, e22=1), "e11": _e(3, e32=-1), "e22": _e(3, e32=-1)}),
    "R5": _Q(lambda p: {
        "e13": _e(3, e12=1), "e21": _e(3, e31=-1), "e23": _e(3, e11=1, e22=1),
        "e11": _e(3, e32=-1), "e22": _e(3, e32=-1)}),
    "R6": _Q(lambda p: {
        "e33": _e(3, e32=1), "e23": _e(3, e33=-1), "e13": _e(3, e11=1, e12=1),
        "e11": _e(3, e31=-1), "e21": _e(3, e31=-1)}),
    "R7": _Q(lambda p: {"e23": _e(3, e11=-1, e33=-1), "e11": _e(3, e32=1), "e33": _e(3, e32=1)}),
    "R8": _Q(lambda p: {
        "e13": _e(3, e12=1), "e21": _e(3, e31=-1), "e33": _e(3, e32=1), "e23": _e(3, e33=-1)}),
}


def example1(n: int) -> LinearOperator:
    """Operator of maximal nilpotency index 2n - 1 on M_n."""
    images = {}
    for i, j in unit_pairs(n):
        acc = zeros(n)
        if j == n:
            pass
        elif i <= j:
            t = 0
            while j + 1 + t <= n:
                acc = acc + unit(n, i + t, j + 1 + t)
                t += 1
        else:
            t = 0
            while j - t >= 1:
                acc = acc - unit(n, i - 1 - t, j - t)
                t += 1
        images[(i, j)] = acc
    return LinearOperator.from_dict(n, images)


def section3_final(a) -> LinearOperator:
    """The operator with R(1) = e12 + e23 left after the upper-triangular reduction."""
    a = mpq(a)
    h = mpq(1, 2)
    return _op(3, {
        "e12": _e(3, e13=h), "e11": _e(3, e12=1, e23=h), "e22": _e(3, e23=h),
        "e21": _e(3, e11=-1, e13=a), "e32": _e(3, e11=-h, e22=-h),
        "e31": _e(3, e12=-a, e21=-h)})


def section_p(q) -> LinearOperator:
    q = mpq(q)
    return _op(3, {
        "e12": _e(3, e13=1), "e11": _e(3, e12=1, e23=1), "e22": _e(3, e23=1),
        "e21": _e(3, e11=-1, e13=q), "e32": _e(3, e11=-1, e22=-1),
        "e31": _e(3, e21=-1, e12=-q)})


def _entries() -> dict[str, CatalogEntry]:
    out = {}
    for k in ("L1", "L2", "L3", "L4"):
        out[k] = CatalogEntry(k, 2, (), f"({k})", group="M2")
    out["L34"] = CatalogEntry("L34", 2, ("kappa",), "(L3)/(L4) joined", group="M2")
    q_params = {
        "Q3": ("kappa", "alpha"), "Q4": ("kappa",), "Q5": ("kappa", "beta"),
        "Q6": ("kappa", "mu"), "Q8": ("kappa",), "Q9": ("kappa",), "Q13": ("kappa",),
        "Q15": ("kappa",), "Q19": ("kappa",), "Q21": ("kappa",), "Q22": ("kappa", "mu"),
        "Q23": ("kappa", "gamma"), "Q24": ("kappa",),
    }
    for i in range(1, 25):
        k = f"Q{i}"
        out[k] = CatalogEntry(k, 3, q_params.get(k, ()), f"({k})", group="M3")
    for i in range(1, 9):
        k = f"R{i}"
        out[k] = CatalogEntry(k, 3, (), f"({k}) skew-symmetric", group="skew")
    out["Example1"] = CatalogEntry("Example1", 0, ("n",), "maximal rb-index operator",
                                   group="example")
    out["Section3Final"] = CatalogEntry("Section3Final", 3, ("a",),
                                        "R(1) = e12 + e23 reduced form", group="section3")
    out["SectionP"] = CatalogEntry("SectionP", 3, ("q",), "operator P", group="section3")
    return out


CATALOG: dict[str, CatalogEntry] = _entries()


def catalog_manifest() -> list[dict]:
    """Contents of the shipped ``data/catalog.json``."""
    return [e.to_json() for e in CATALOG.values()]


def load_manifest() -> list[dict]:
    from importlib.resources import files
    return json.loads(files("rbmat").joinpath("data/catalog.json").read_text())


def entry(entry_id: str) -> CatalogEntry:
    try:
        return CATALOG[entry_id]
    except KeyError:
        raise KeyError(f"unknown catalog id {entry_id!r}") from None


def build_operator(entry_id: str, params: dict | None = None, **kw) -> LinearOperator:
    """Exact operator for a catalog id, e.g. ``build_operator("Q5", kappa=0, beta=2)``."""
    e = entry(entry_id)
    p = _check_params(entry_id, e.params, {**(params or {}), **kw})
    if entry_id == "Example1":
        return example1(p["n"])
    if entry_id == "Section3Final":
        return section3_final(p["a"])
    if entry_id == "SectionP":
        return section_p(p["q"])
    return _BUILDERS[entry_id](p)


# -- automorphisms -------------------------------------------------------------

def psi_rs(r, s) -> AutoDescriptor:
    """Diagonal automorphism e12 -> r e12, e23 -> s e23."""
    r, s = mpq(r), mpq(s)
    if not r or not s:
        raise ValueError("psi_{r,s} needs r, s != 0")
    A = matrix([[1, 0, 0], [0, r, 0], [0, 0, r * s]])
    d = AutoDescriptor(A, False, f"psi({format_scalar(r)},{format_scalar(s)})")
    expected = {
        (1, 1): unit(3, 1, 1), (2, 2): unit(3, 2, 2), (3, 3): unit(3, 3, 3),
        (1, 2): unit(3, 1, 2) * r, (2, 3): unit(3, 2, 3) * s, (1, 3): unit(3, 1, 3) * (r * s),
        (2, 1): unit(3, 2, 1) * (1 / r), (3, 2): unit(3, 3, 2) * (1 / s),
        (3, 1): unit(3, 3, 1) * (1 / (r * s)),
    }
    _validate(d, expected)
    return d


def phi(alpha, beta, lam, delta, domain: ScalarDomain = QQ) -> AutoDescriptor:
    """Automorphism fixing e12, X -> A^-1 X A with A = [[1,a,b],[0,1,0],[0,-d*l,l]]."""
    a, b, l, d = (domain(x) for x in (alpha, beta, lam, delta))
    if not l:
        raise ValueError("phi needs lambda != 0")
    zero, one = domain(0), domain(1)
    A = SquareMatrix([[one, a, b], [zero, one, zero], [zero, -d * l, l]])
    desc = AutoDescriptor(A, False, "phi({},{},{},{})".format(*map(format_scalar, (a, b, l, d))))
    S = lambda rows: SquareMatrix([[domain(x) for x in r] for r in rows])
    expected = {
        (1, 1): S([[1, a, b], [0, 0, 0], [0, 0, 0]]),
        (2, 2): S([[0, -a - b * d, 0], [0, 1, 0], [0, d, 0]]),
        (3, 3): S([[0, b * d, -b], [0, 0, 0], [0, -d, 1]]),
        (1, 2): S([[0, 1, 0], [0, 0, 0], [0, 0, 0]]),
        (1, 3): S([[0, -d * l, l], [0, 0, 0], [0, 0, 0]]),
        (3, 2): S([[0, -b / l, 0], [0, 0, 0], [0, 1 / l, 0]]),
        (3, 1): S([[-b / l, -a * b / l, -b * b / l], [0, 0, 0], [1 / l, a / l, b / l]]),
        (2, 1): S([[-a - b * d, -a * a - a * b * d, -a * b - b * b * d],
                   [1, a, b], [d, a * d, b * d]]),
        (2, 3): S([[0, d * l * (a + b * d), -l * (a + b * d)],
                   [0, -d * l, l], [0, -d * d * l, l * d]]),
    }
    _validate(desc, expected)
    return desc


def _validate(desc: AutoDescriptor, expected: dict) -> None:
    for (i, j), want in expected.items():
        got = desc(unit(desc.n, i, j))
        if got != want:
            raise AssertionError(f"{desc.tag}: image of e{i}{j} is {got.to_json()}, "
                                 f"expected {want.to_json()}")


def theta(a: int, b: int, n: int = 3) -> AutoDescriptor:
    """Automorphism e_ij -> e_i'j' swapping the indices a and b."""
    if not (1 <= a <= n and 1 <= b <= n) or a == b:
        raise ValueError(f"Theta{a}{b} is not a transposition of 1..{n}")
    return AutoDescriptor(permutation_matrix(n, {a: b, b: a}), False, f"Theta{a}{b}")


def build_automorphism(name: str, *args, n: int = 3, domain: ScalarDomain = QQ) -> AutoDescriptor:
    """Named descriptors: ``psi`` (r, s), ``phi`` (alpha, beta, lambda, delta),
    ``Theta12``/``Theta13``/``Theta23``, ``T``, ``Theta12T`` (Theta12 after transpose),
    ``identity``, ``inner`` (matrix rows)."""
    if name == "psi":
        return psi_rs(*args)
    if name == "phi":
        return phi(*args, domain=domain)
    if name.startswith("Theta") and len(name) in (7, 8):
        t = theta(int(name[5]), int(name[6]), n)
        if name.endswith("T"):
            return transpose_descriptor(n).then(t)
        return t
    if name == "T":
        return transpose_descriptor(n)
    if name == "identity":
        return AutoDescriptor(identity(n), False, "id")
    if name == "inner":
        (rows,) = args
        return AutoDescriptor(matrix(rows), False, "inner")
    raise KeyError(f"unknown automorphism {name!r}")


# -- sampling and verification -----------------------------------------------------

@dataclass(frozen=True)
class SamplingGrid:
    kappa: tuple = (0, -1)
    mu: tuple = (0, -1)
    alpha: tuple = (0, 2, -3)
    beta: tuple = (0, 2, -3)
    gamma: tuple = (0, 2, 5)
    n: tuple = (2, 3, 4, 5, 6)
    a: tuple = (0, 1, mpq(-3, 2))
    q: tuple = (0, 2, -1)


DEFAULT_GRID = SamplingGrid()


def sample_params(entry_id: str, grid: SamplingGrid = DEFAULT_GRID) -> list[dict]:
    names = entry(entry_id).params
    values = [getattr(grid, p) for p in names]
    return [dict(zip(names, combo)) for combo in itertools.product(*values)]


def samples(ids, grid: SamplingGrid = DEFAULT_GRID):
    """(id, params, operator) for every id over the sampling grid."""
    for i in ids:
        for p in sample_params(i, grid):
            yield i, p, build_operator(i, p)


def select(pattern: str) -> list[str]:
    """Catalog ids matching a glob such as ``Q*`` or ``R[2-5]``, in catalog order."""
    ids = [k for k in CATALOG if fnmatch.fnmatchcase(k, pattern)]
    if not ids:
        raise KeyError(f"no catalog entry matches {pattern!r}")
    return ids


def param_label(params: dict) -> str:
    return ",".join(f"{k}={format_scalar(v) if not isinstance(v, int) else v}"
                    for k, v in params.items())


def verify_entry(entry_id: str, params: dict | None = None, *,
                 with_fingerprint: bool = True, domain: ScalarDomain = QQ) -> dict:
    """Run the verification battery on one catalog operator.

    Over a domain other than Q the operator is mapped into it first and the
    fingerprint (a rational invariant) is left out.
    """
    from .structure import fingerprint
    L = lift_operator(build_operator(entry_id, params or {}), domain)
    chk = rb_check(L)
    one = unit_image(L)
    report = {
        "id": entry_id,
        "params": {k: str(v) if isinstance(v, int) else format_scalar(v)
                   for k, v in (params or {}).items()},
        "rb_ok": chk.ok,
        "first_failure": None if chk.ok else list(chk.first_failure[0]),
        "nilpotency_index": nilpotency_index(L),
        "unit_image": one.to_json(),
        "unit_image_zero": one.is_zero(),
        "unit_image_nilindex": matrix_nilindex(one),
        "skew_symmetric": skew_symmetric_check(L),
        "factorial_unit": all(factorial_unit_check(L, k) for k in range(1, 5)),
    }
    report["domain"] = domain.label
    if with_fingerprint and domain == QQ:
        report["fingerprint"] = fingerprint(L).to_json()
    report["passed"] = bool(chk.ok and report["factorial_unit"]
                            and report["unit_image_nilindex"] is not None
                            and report["nilpotency_index"] is not None)
    return report


# -- mapping claims ----------------------------------------------------------------

@dataclass(frozen=True)
class ClaimStep:
    """One conjugation x -> psi^-1(R(psi(x))), optionally checked against a known operator."""
    psi: AutoDescriptor
    expect: LinearOperator | None = None
    expect_label: str = ""


@dataclass(frozen=True)
class MappingClaim:
    name: str
    source: str
    target: str
    sign: int
    steps: tuple
    domain: ScalarDomain = QQ
    sign_first: bool = False  # scale before the chain, so checkpoints see the scaled operator


def lift_operator(L: LinearOperator, domain: ScalarDomain) -> LinearOperator:
    """Map a rational operator into ``domain`` (extension field or F_p)."""
    if domain == QQ:
        return L
    return LinearOperator(L.n, tuple(m.map(domain) for m in L.images), L.weight, domain)


def lift_descriptor(d: AutoDescriptor, domain: ScalarDomain) -> AutoDescriptor:
    if domain == QQ:
        return d
    return AutoDescriptor(d.conjugator.map(domain), d.transpose_first, d.tag)


def r6_intermediate() -> LinearOperator:
    """The operator reached from (R6) by conjugation with E - e12."""
    return _op(3, {
        "e11": _e(3, e31=-1, e32=-1), "e13": _e(3, e11=1, e12=2),
        "e23": _e(3, e11=1, e12=2, e33=-1), "e21": _e(3, e31=-2, e32=-2),
        "e33": _e(3, e32=1)})


def _claims() -> list[MappingClaim]:
    T = transpose_descriptor(3)
    t12, t13, t23 = theta(1, 2), theta(1, 3), theta(2, 3)
    i = QQi.parse("1*i")
    out = []
    for a in (0, 1, mpq(-3, 2), 5):
        q = 2 * a
        out.append(MappingClaim(
            f"Section3Final(a={format_scalar(a)}) -> Q1", f"Section3Final:a={format_scalar(a)}",
            "Q1", 1, (ClaimStep(psi_rs(1, mpq(1, 2)), section_p(q), f"P(q={format_scalar(q)})"),
                      ClaimStep(build_automorphism("inner", [[1, 0, -q], [0, 1, 0], [0, 0, 1]])))))
    # after the transpose, -R2 is exactly P with q = -1
    out.append(MappingClaim(
        "R2 -> Q1", "R2", "Q1", -1,
        (ClaimStep(T, section_p(-1), "P(q=-1)"),
         ClaimStep(build_automorphism("inner", [[1, 0, 1], [0, 1, 0], [0, 0, 1]]))),
        sign_first=True))
    out.append(MappingClaim("R3 -> Q6[kappa=-1,mu=0]", "R3", "Q6:kappa=-1,mu=0", -1,
                            (ClaimStep(t13),)))
    out.append(MappingClaim("R4 -> Q14", "R4", "Q14", -1,
                            (ClaimStep(t13), ClaimStep(phi(0, 0, i, 0, domain=QQi))), domain=QQi))
    out.append(MappingClaim("R5 -> Q23[kappa=-1,gamma=1]", "R5", "Q23:kappa=-1,gamma=1", -1,
                            (ClaimStep(t13),)))
    out.append(MappingClaim(
        "R6 -> Q15[kappa=0]", "R6", "Q15:kappa=0", -1,
        (ClaimStep(build_automorphism("inner", [[1, -1, 0], [0, 1, 0], [0, 0, 1]]),
                   r6_intermediate(), "P"),
         ClaimStep(T.then(t23)), ClaimStep(T.then(t12)), ClaimStep(phi(0, 0, -1, -1)))))
    # Theta12 o T o Theta13 acts as Theta13, then T, then Theta12 read left to right
    out.append(MappingClaim("R7 -> Q5[kappa=-1,beta=1]", "R7", "Q5:kappa=-1,beta=1", 1,
                            (ClaimStep(t12.then(T).then(t13)),)))
    out.append(MappingClaim("R8 -> Q22[kappa=-1,mu=0]", "R8", "Q22:kappa=-1,mu=0", 1,
                            (ClaimStep(t13),)))
    return out


def parse_ref(ref: str) -> tuple[str, dict]:
    """'Q5:kappa=-1,beta=1' -> ('Q5', {'kappa': -1, 'beta': 1})."""
    name, _, rest = ref.partition(":")
    params = {}
    for part in filter(None, rest.split(",")):
        k, _, v = part.partition("=")
        params[k.strip()] = QQ.parse(v.strip())
    return name, params


def run_claim(c: MappingClaim) -> dict:
    src = build_operator(*parse_ref(c.source))
    tgt = build_operator(*parse_ref(c.target))
    cur = lift_operator(scale(src, c.sign) if c.sign_first else src, c.domain)
    checkpoints = []
    for step in c.steps:
        cur = conjugate(cur, lift_descriptor(step.psi, c.domain))
        if step.expect is not None:
            diff = cur.differences(lift_operator(step.expect, c.domain))
            checkpoints.append({"label": step.expect_label, "ok": not diff, "differences": diff})
    if not c.sign_first:
        cur = scale(cur, c.sign)
    diff = cur.differences(lift_operator(tgt, c.domain))
    ok = not diff and all(cp["ok"] for cp in checkpoints)
    first = diff[0] if diff else next((cp["differences"][0] for cp in checkpoints
                                       if cp["differences"]), None)
    return {"claim": c.name, "verdict": ok, "ok": ok, "first_difference": first, "domain": c.domain.label, "sign": c.sign,
            "differences": diff, "checkpoints": checkpoints,
            "chain": [s.psi.tag for s in c.steps]}


def mapping_claims() -> list[dict]:
    """Verify every stated conjugation between catalog operators, image by image."""
    return [run_claim(c) for c in _claims()]


# -- nilpotency classes and block projections --------------------------------------

# Entries asserted to have R^2 = 0, keyed by the kappa value they need (None: no kappa).
STATED_SQUARE_ZERO = {"Q2": None, "Q3": 0, "Q4": 0, "Q5": 0, "Q6": 0, "Q7": None,
                      "Q8": 0, "Q9": 0, "Q13": 0}


def stated_nil_index(entry_id: str, params: dict) -> int:
    """Index the M_3 classification asserts: 5 for Q1, 2 for the listed square-zero
    entries, 3 for everything else."""
    if entry_id == "Q1":
        return 5
    if entry_id in STATED_SQUARE_ZERO:
        k = STATED_SQUARE_ZERO[entry_id]
        if k is None or params.get("kappa") == k:
            return 2
    return 3


def nilindex_partition(grid: SamplingGrid = DEFAULT_GRID) -> dict:
    """Compare computed nilpotency indices of Q1..Q24 with the asserted classes."""
    rows = []
    for i, p, L in samples([k for k in CATALOG if k.startswith("Q")], grid):
        got = nilpotency_index(L)
        want = stated_nil_index(i, p)
        rows.append({"id": i, "params": param_label(p), "index": got, "stated": want,
                     "ok": got == want})
    mismatches = [r for r in rows if not r["ok"]]
    return {"ok": not mismatches, "rows": rows, "mismatches": mismatches,
            "index_four": [r for r in rows if r["index"] == 4]}


def block_projections() -> list[dict]:
    """Even-part projections of the two M_3 operators whose M_2 corner is a known operator."""
    from .matop import graded_projection, restrict_to_block
    cases = [("Q5", {"kappa": 0, "beta": 0}, "L3", None),
             ("Q6", {"kappa": -1, "mu": 0}, "L4", "Theta12T")]
    out = []
    for i, p, target, via in cases:
        P0, valid = graded_projection(build_operator(i, p))
        B = restrict_to_block(P0)
        if via:
            B = conjugate(B, build_automorphism(via, n=2))
        diff = B.differences(build_operator(target))
        out.append({"source": f"{i}[{param_label(p)}]", "target": target, "via": via,
                    "valid": valid, "rb_ok": rb_check(B).ok, "differences": diff,
                    "ok": valid and not diff})
    return out
