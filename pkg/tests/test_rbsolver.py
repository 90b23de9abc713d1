import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from rbmat.catalog import CATALOG, build_operator, samples
from rbmat.matop import rb_check, unit
from rbmat.rbsolver import (CASE1_QUADRATIC, RELATION_GROUPS, NoFit, case1_normalize,
                            fit_template, generate_system, pair_residual,
                            relation_group_check, relation_group_report, section3_checkpoints,
                            substitute_solution, template)

TEMPLATES = ["section3", "section4-stage1", "section4-21par"]


@pytest.fixture(scope="module")
def systems():
    return {name: generate_system(template(name)) for name in TEMPLATES}


@pytest.fixture(scope="module")
def fits():
    T = template("section4-21par")
    out = {}
    for i, p, L in samples([k for k in CATALOG if k.startswith("Q") and k != "Q1"]):
        out[f"{i}{p}"] = fit_template(L, T).assignment
    return out


def e(i, j):
    return unit(3, i, j)


# -- templates ----------------------------------------------------------------------------

def test_section3_template_shape():
    T = template("section3")
    assert T.operator.image(1, 2) == mpq(1, 2) * e(1, 3)
    r, v = T.operator.image(1, 1), T.ring.var
    assert list(r.rows[0]) == [T.ring.zero(), T.ring.one(), v("r13")]
    assert T.operator.image(2, 2)[1, 2] == mpq(1, 2)


def test_21par_template_shape():
    T = template("section4-21par")
    v = T.ring.var
    diff = T.operator.image(2, 2) - T.operator.image(1, 1)
    assert diff == e(1, 2) * v("c12") + e(1, 3) * v("c13")
    assert T.operator.image(1, 2).is_zero()
    assert len(T.variables) == 21
    assert "a13" not in T.variables


def test_unknown_template():
    with pytest.raises(KeyError):
        template("section5")


# -- systems --------------------------------------------------------------------------------

def _find(system, text):
    return [k for k, p in enumerate(system.equations) if str(p) == text]


def test_stage1_contains_product_relations(systems):
    S = systems["section4-stage1"]
    (k,) = _find(S, "a13*b32")
    assert ("e13", "e32", 1, 2) in S.provenance[k]
    assert _find(S, "a32*b13")


def test_stage1_pair_residual():
    T = template("section4-stage1")
    r = pair_residual(T, "e13", "e32")
    nz = [(i, j) for i in range(3) for j in range(3) if not r[i, j].is_zero()]
    assert nz == [(0, 1)]
    assert str(r[0, 1]) == "a13*b32"


def test_section3_pair_residual_raw():
    T = template("section3")
    assert str(pair_residual(T, "e32", "e32")[1, 2]) == "b13*b21-b21*c23-1/2*b23"


def test_pair_residual_zero_case():
    # e12 is killed by R in the 21-parameter form and e12*e12 = 0
    T = template("section4-21par")
    assert all(x.is_zero() for x in pair_residual(T, "e12", "e12").flat())


def test_21par_system_has_no_a_variables(systems):
    S = systems["section4-21par"]
    assert not any(v.startswith("a") for p in S.equations for v in p.variables())


@pytest.mark.parametrize("name", TEMPLATES)
def test_system_degree_and_dedup(systems, name):
    S = systems[name]
    assert all(p.total_degree() <= 2 for p in S.equations)
    assert all(not p.is_zero() for p in S.equations)
    monic = [p.monic() for p in S.equations]
    assert len(set(monic)) == len(monic)
    assert len(S.provenance) == len(S.equations)


def test_system_json(systems):
    data = systems["section4-stage1"].to_json()
    eq = next(x for x in data["equations"] if x["poly"] == "a13*b32")
    assert eq["pair"] == ["e13", "e32"] and eq["entry"] == [1, 2]
    assert data["variables"][0] == "a12"


def test_system_generation_is_deterministic():
    a = generate_system(template("section4-stage1")).to_json()
    b = generate_system(template("section4-stage1")).to_json()
    assert a == b


# -- substitution ---------------------------------------------------------------------------------

def test_all_zero_assignment_is_q2(systems):
    T = template("section4-21par")
    zero = {v: 0 for v in T.variables}
    assert substitute_solution(systems["section4-21par"], zero).all_zero
    assert T.instantiate(zero).differences(build_operator("Q2")) == []


def test_bad_assignment(systems):
    S = systems["section4-21par"]
    sigma = {v: 0 for v in S.ring.names}
    sigma.update(b13=1, c13=1)
    sub = substitute_solution(S, sigma)
    assert not sub.all_zero
    assert sub.to_json()["allZero"] is False
    first = sub.first_nonzero
    assert first is not None and first.eval(sigma) != 0
    assert rb_check(template("section4-21par").instantiate(sigma)).ok is False


def test_missing_variable(systems):
    with pytest.raises(KeyError):
        substitute_solution(systems["section4-21par"], {"b13": 1})


# -- fitting ---------------------------------------------------------------------------------------

def test_fit_q2():
    fit = fit_template(build_operator("Q2"), template("section4-21par"))
    assert set(fit.assignment.values()) == {0}
    assert fit.step == "as-is"


def test_fit_q14():
    fit = fit_template(build_operator("Q14"), template("section4-21par"))
    assert fit.step == "scaled"
    expected = {"c12": mpq(1, 2), "b13": mpq(1, 2), "f13": mpq(1, 2), "t22": mpq(-1, 2),
                "t33": mpq(-1, 2), "s32": mpq(-1, 2)}
    assert {k: v for k, v in fit.assignment.items() if v} == expected


def test_fit_q1_fails():
    with pytest.raises(NoFit):
        fit_template(build_operator("Q1"), template("section4-21par"))


def test_fits_satisfy_system(systems, fits):
    S = systems["section4-21par"]
    for label, sigma in fits.items():
        assert substitute_solution(S, sigma).all_zero, label


def test_fit_roundtrip(fits):
    T = template("section4-21par")
    for sigma in fits.values():
        assert rb_check(T.instantiate(sigma)).ok


def test_section3_fits():
    T = template("section3")
    S = generate_system(T)
    for i, p, L in samples(["Section3Final"]):
        fit = fit_template(L, T)
        assert substitute_solution(S, fit.assignment).all_zero


# -- relation groups ---------------------------------------------------------------------------------

def test_relation_examples(fits):
    T = template("section4-21par")
    q14 = fit_template(build_operator("Q14"), T).assignment
    b12f11 = T.ring.parse("b12*f11")
    assert b12f11.eval(q14) == 0
    q15 = fit_template(build_operator("Q15", kappa=0), T).assignment
    n15, dom = case1_normalize(q15)
    assert T.ring.parse("6*d13^2+2*c12-1").eval(n15) == dom.zero()
    q2 = fit_template(build_operator("Q2"), T).assignment
    assert T.ring.parse("2*d12*f32+c12*f32-f32").eval(q2) == 0


def test_relation_groups_hold_on_all_fits(fits):
    assert relation_group_report(fits) == []
    for sigma in fits.values():
        checks = relation_group_check(sigma)
        assert {g[0] for g in RELATION_GROUPS} <= set(checks)


def test_relation_check_flags_violation():
    sigma = {v: 0 for v in template("section4-21par").variables}
    sigma.update(b12=1, f11=1)
    assert not all(relation_group_check(sigma).values())
    assert relation_group_report({"bad": sigma})


def test_case1_normalization_over_extension():
    T = template("section4-21par")
    fit = fit_template(build_operator("Q17"), T).assignment
    out, dom = case1_normalize(fit)
    assert out["b13"] == dom.one()
    assert all(T.ring.parse(q).eval(out) == dom.zero() for q in CASE1_QUADRATIC)


def test_case1_quadratics_listed():
    assert len(CASE1_QUADRATIC) == 6


def test_section3_checkpoints():
    assert section3_checkpoints() == {k: True for k in section3_checkpoints()}
    assert set(section3_checkpoints()) >= {"r13=p13", "a23=0", "b23=0", "b13=0", "c11=0",
                                           "c13=0", "c23=0", "b11-a22+1/2"}


# -- soundness --------------------------------------------------------------------------------------

def _random_assignments(T, fitted, rng, count=50):
    out = list(fitted)[: count // 5]
    while len(out) < count:
        base = dict(rng.choice(fitted)) if fitted and rng.random() < 0.5 else \
            {v: mpq(0) for v in T.variables}
        for v in rng.sample(list(T.variables), rng.randint(1, 3)):
            base[v] = mpq(rng.randint(-2, 2), rng.randint(1, 2))
        out.append(base)
    return out


@pytest.mark.parametrize("name", TEMPLATES)
def test_soundness(systems, name, rng):
    T, S = template(name), systems[name]
    ids = ["Section3Final"] if name == "section3" else \
        [k for k in CATALOG if k.startswith("Q") and k != "Q1"]
    fitted = []
    for i, p, L in samples(ids):
        try:
            fitted.append(fit_template(L, T).assignment)
        except NoFit:
            pass
    both = 0
    for sigma in _random_assignments(T, fitted, rng):
        lhs = substitute_solution(S, sigma).all_zero
        assert lhs == rb_check(T.instantiate(sigma)).ok
        both += lhs
    assert both >= 1


@given(st.dictionaries(st.sampled_from(template("section4-21par").variables),
                       st.integers(-2, 2), max_size=4))
def test_soundness_property(sparse):
    T = template("section4-21par")
    S = generate_system(T) if not hasattr(test_soundness_property, "S") else \
        test_soundness_property.S
    test_soundness_property.S = S
    sigma = {v: mpq(sparse.get(v, 0)) for v in T.variables}
    assert substitute_solution(S, sigma).all_zero == rb_check(T.instantiate(sigma)).ok
