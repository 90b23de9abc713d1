import json
import random

import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from rbmat.catalog import (CATALOG, build_automorphism, build_operator, samples, section3_final,
                           section_p)
from rbmat.matop import (AutoDescriptor, LinearOperator, apply, conjugate,
                         factorial_unit_check, graded_projection, identity, inner, matrix,
                         matrix_nilindex, nilpotency_index, rb_check, rb_residual,
                         restrict_to_block, scale, skew_symmetric_check, unit, unit_image,
                         unit_pairs, zeros)

from conftest import nonzero_rationals, random_invertible


def e(i, j, n=3):
    return unit(n, i, j)


def rb_check_by_pairs(L):
    """Independent route: plain loop over rb_residual, no tensor fast path."""
    n = L.n
    for i, j in unit_pairs(n):
        for k, l in unit_pairs(n):
            if not rb_residual(L, unit(n, i, j), unit(n, k, l)).is_zero():
                return False
    return True


ALL_RB = [(i, p) for i, p, _ in samples(CATALOG)]


def _id(x):
    i, p = x
    return i + "".join(f"-{k}{v}" for k, v in p.items())


# -- apply / residual / check ----------------------------------------------------------

def test_apply_examples():
    assert apply(build_operator("Q2"), e(3, 3)) == e(1, 2)
    for i, p in [("Q14", {}), ("L1", {}), ("R5", {})]:
        L = build_operator(i, p)
        assert apply(L, zeros(L.n)).is_zero()
    assert apply(build_operator("Q1"), identity(3)) == e(1, 2) + 2 * e(2, 3)


def test_apply_dimension_mismatch():
    with pytest.raises(ValueError):
        apply(build_operator("Q2"), identity(2))


def test_residual_examples():
    assert rb_residual(build_operator("Q2"), e(3, 3), e(3, 3)).is_zero()
    I2 = LinearOperator.identity_map(2)
    assert rb_residual(I2, e(1, 1, 2), e(1, 1, 2)) == -e(1, 1, 2)


def test_rb_check_examples():
    assert rb_check(LinearOperator.zero(3)).ok
    assert rb_check(build_operator("Q14")).ok
    res = rb_check(LinearOperator.identity_map(2))
    assert not res.ok
    assert res.first_failure[0] == ("e11", "e11")
    assert res.first_failure[1] == -e(1, 1, 2)


@pytest.mark.parametrize("item", ALL_RB, ids=_id)
def test_rb_check_matches_pairwise_loop(item):
    L = build_operator(*item)
    assert rb_check(L).ok is rb_check_by_pairs(L) is True


def test_rb_check_detects_perturbation(rng):
    # both routes must agree on non-RB operators too
    for i, p in rng.sample(ALL_RB, 15):
        L = build_operator(i, p)
        k = rng.randrange(L.n * L.n)
        imgs = list(L.images)
        imgs[k] = imgs[k] + identity(L.n)
        M = L.with_images(imgs)
        assert rb_check(M).ok == rb_check_by_pairs(M)


def test_unit_image_examples():
    assert unit_image(build_operator("Q2")) == e(1, 2)
    assert unit_image(build_operator("Q1")) == e(1, 2) + 2 * e(2, 3)
    assert unit_image(build_operator("Q5", kappa=0, beta=2)) == 3 * e(1, 2)


def test_nilpotency_examples():
    assert nilpotency_index(build_operator("Q1")) == 5
    assert nilpotency_index(build_operator("Q2")) == 2
    assert nilpotency_index(build_operator("Q14")) == 3
    assert nilpotency_index(LinearOperator.zero(3)) == 1
    assert nilpotency_index(LinearOperator.identity_map(2)) is None
    assert nilpotency_index(build_operator("Q1"), bound=4) is None


def test_matrix_nilindex_examples():
    assert matrix_nilindex(e(1, 2)) == 2
    assert matrix_nilindex(e(1, 2) + 2 * e(2, 3)) == 3
    assert matrix_nilindex(identity(3)) is None


def test_factorial_examples():
    assert factorial_unit_check(build_operator("Q1"), 2)
    # (e12 + 2e23)^2 = 2 e13 = 2! * R^2(1)
    Q1 = build_operator("Q1")
    assert apply(Q1, unit_image(Q1)) == e(1, 3)
    assert factorial_unit_check(build_operator("Q2"), 2)
    for i, p in ALL_RB[::7]:
        assert factorial_unit_check(build_operator(i, p), 1)


def test_scale_examples():
    assert rb_check(scale(build_operator("Q2"), 3)).ok
    assert scale(build_operator("Q7"), 0).is_zero()
    assert unit_image(scale(build_operator("Q14"), mpq(1, 2))) == e(1, 2)


def test_scale_rejects_nonzero_weight():
    with pytest.raises(ValueError):
        scale(LinearOperator.identity_map(2, weight=1), 2)


def test_conjugation_section3_chain():
    for a in (0, 1, mpq(-3, 2)):
        q = 2 * a
        P = conjugate(section3_final(a), build_automorphism("psi", 1, mpq(1, 2)))
        assert P.differences(section_p(q)) == []
        A = identity(3) - q * e(1, 3)
        assert conjugate(P, inner(A)).differences(build_operator("Q1")) == []


def test_conjugate_by_identity():
    ident = build_automorphism("identity")
    for i, p in [("Q3", {"kappa": -1, "alpha": 2}), ("Q23", {"kappa": 0, "gamma": 5}), ("R6", {})]:
        L = build_operator(i, p)
        assert conjugate(L, ident) == L


def test_singular_conjugator():
    with pytest.raises(ValueError):
        inner(matrix([[1, 1, 0], [1, 1, 0], [0, 0, 1]]))


def test_descriptor_action():
    A = matrix([[1, 2, 0], [0, 1, 0], [0, 0, 3]])
    X = matrix([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    assert inner(A)(X) == A.inverse() * X * A
    anti = AutoDescriptor(A, True, None)
    assert anti(X) == A.inverse() * X.transpose() * A
    # antiautomorphism reverses products
    Y = matrix([[0, 1, 0], [2, 0, 1], [1, 1, 1]])
    assert anti(X * Y) == anti(Y) * anti(X)


def test_skew_examples():
    R1, R3, Q2 = (build_operator(i) for i in ("R1", "R3", "Q2"))
    assert (apply(R1, e(3, 1)) * e(3, 2)).trace() == 1
    assert (e(3, 1) * apply(R1, e(3, 2))).trace() == -1
    assert skew_symmetric_check(R1)
    assert (apply(R3, e(2, 3)) * e(2, 2)).trace() == 1
    assert (e(2, 3) * apply(R3, e(2, 2))).trace() == -1
    assert skew_symmetric_check(R3)
    assert (apply(Q2, e(3, 3)) * e(2, 1)).trace() == 1
    assert (e(3, 3) * apply(Q2, e(2, 1))).trace() == 0
    assert not skew_symmetric_check(Q2)


def test_graded_projection_examples():
    P0, ok = graded_projection(build_operator("Q5", kappa=0, beta=0))
    assert ok
    assert restrict_to_block(P0).differences(build_operator("L3")) == []
    P0, ok = graded_projection(build_operator("Q6", kappa=-1, mu=0))
    assert ok
    B = restrict_to_block(P0)
    assert rb_check(B).ok
    t = build_automorphism("Theta12T", n=2)
    assert conjugate(B, t).differences(build_operator("L4")) == []
    P0, ok = graded_projection(LinearOperator.zero(3))
    assert ok and P0.is_zero()
    with pytest.raises(ValueError):
        graded_projection(build_operator("L1"))


def test_valid_graded_projections_are_rb():
    for i, p, L in samples([k for k in CATALOG if k.startswith("Q")]):
        P0, ok = graded_projection(L)
        if ok:
            assert rb_check(restrict_to_block(P0)).ok, (i, p)


def test_operator_json_roundtrip():
    for i, p in ALL_RB[::5]:
        L = build_operator(i, p)
        data = json.loads(json.dumps(L.to_json()))
        assert LinearOperator.from_json(data) == L


def test_operator_json_schema():
    data = build_operator("Q2").to_json()
    assert data["n"] == 3 and data["domain"] == "Q" and data["weight"] == "0"
    assert data["images"]["e33"] == [["0", "1", "0"], ["0", "0", "0"], ["0", "0", "0"]]
    assert sorted(data["images"]) == sorted(f"e{i}{j}" for i in range(1, 4) for j in range(1, 4))


# -- properties ---------------------------------------------------------------------------

@pytest.mark.parametrize("item", ALL_RB, ids=_id)
def test_lemma_and_factorial(item):
    L = build_operator(*item)
    assert matrix_nilindex(unit_image(L)) is not None
    assert all(factorial_unit_check(L, k) for k in range(1, 5))
    assert nilpotency_index(L) <= 2 * L.n + 1


@given(st.sampled_from(ALL_RB), nonzero_rationals)
def test_scaling_preserves_rb(item, alpha):
    assert rb_check(scale(build_operator(*item), alpha)).ok


@given(st.sampled_from(ALL_RB), st.integers(0, 2**32), st.booleans())
def test_conjugation_preserves_rb(item, seed, transpose):
    L = build_operator(*item)
    psi = AutoDescriptor(random_invertible(random.Random(seed), L.n), transpose, None)
    assert rb_check(conjugate(L, psi)).ok


@given(st.sampled_from(ALL_RB), st.integers(0, 2**32), st.booleans())
def test_conjugation_inverse_roundtrip(item, seed, transpose):
    L = build_operator(*item)
    psi = AutoDescriptor(random_invertible(random.Random(seed), L.n), transpose, None)
    assert conjugate(conjugate(L, psi), psi.inverse()) == L


@given(st.integers(0, 2**32))
def test_then_composes_in_order(seed):
    rng = random.Random(seed)
    a = AutoDescriptor(random_invertible(rng, 3), rng.random() < 0.5, None)
    b = AutoDescriptor(random_invertible(rng, 3), rng.random() < 0.5, None)
    X = random_invertible(rng, 3, bound=5)
    assert a.then(b)(X) == b(a(X))
