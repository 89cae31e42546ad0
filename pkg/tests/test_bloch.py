import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matrix_oracle import mat_of, pauli_coeffs, psd_sqrt, random_ball, random_unit, rho, trace_norm
from qubitjoint.bloch import (
    Axis,
    HermitianOp,
    QubitState,
    is_effect,
    is_positive,
    is_rank_one,
    normalize_state,
    op_add,
    op_scale,
    projection,
    sandwich,
    sqrt_op,
    trace_distance,
    trace_pair,
)
from qubitjoint.errors import NonUnitAxis, NotPositive, ZeroTrace

X, Y, Z = np.eye(3)
finite = st.floats(-2, 2, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)
ops = st.builds(HermitianOp, finite, vec3)


# --- examples --------------------------------------------------------------


def test_add_projections_gives_identity():
    assert op_add(projection(Axis(X), 1), projection(Axis(X), -1)).allclose(HermitianOp.identity())


def test_scale_by_zero_is_zero():
    assert op_scale(0.0, HermitianOp(0.3, [1, 2, 3])).allclose(HermitianOp.zero())


def test_symmetric_pair_sums_to_half_identity():
    g = np.array([0.1, -0.2, 0.05])
    s = HermitianOp(0.25, g) + HermitianOp(0.25, -g)
    assert s.allclose(HermitianOp(0.5, np.zeros(3)))


@pytest.mark.parametrize(
    "a, b, expected",
    [
        (projection(Axis(X)), projection(Axis(Y)), 0.5),
        (HermitianOp.identity(), HermitianOp.identity(), 2.0),
        (projection(Axis(X)), projection(Axis(X)), 1.0),
    ],
)
def test_trace_pair_examples(a, b, expected):
    assert trace_pair(a, b) == pytest.approx(expected, abs=1e-15)


def test_effect_predicate_examples():
    g11 = HermitianOp(0.25, (X + Y) / (4 * np.sqrt(2)))
    assert is_effect(g11)
    assert not is_effect(HermitianOp(0.5, [0.6, 0, 0]))
    assert is_effect(HermitianOp.identity())


def test_rank_one_examples():
    g11 = HermitianOp(0.25, (X + Y) / (4 * np.sqrt(2)))
    assert g11.norm == pytest.approx(0.25)
    assert is_rank_one(g11)
    assert not is_rank_one(HermitianOp.identity())
    smeared = HermitianOp(0.5, X / (2 * np.sqrt(2)))
    assert not is_rank_one(smeared)


def test_trace_distance_examples():
    assert trace_distance(QubitState(X), QubitState(-X)) == pytest.approx(2.0)
    assert trace_distance(QubitState(X), QubitState(X)) == 0.0
    d = trace_distance(QubitState((X + Y) / np.sqrt(2)), QubitState(X))
    assert d == pytest.approx(np.sqrt(2 - np.sqrt(2)), abs=1e-15)


def test_normalize_state_examples():
    p, s = normalize_state(projection(Axis(X)))
    assert p == pytest.approx(1.0) and np.allclose(s.bloch, X)
    p, s = normalize_state(0.5 * projection(Axis(X)))
    assert p == pytest.approx(0.5) and np.allclose(s.bloch, X)
    g11 = HermitianOp(0.25, (X + Y) / (4 * np.sqrt(2)))
    p, s = normalize_state(g11)
    assert p == pytest.approx(0.5) and np.allclose(s.bloch, (X + Y) / np.sqrt(2), atol=1e-15)


def test_normalize_state_errors():
    with pytest.raises(ZeroTrace):
        normalize_state(HermitianOp.zero())
    with pytest.raises(NotPositive):
        normalize_state(HermitianOp(0.5, [0.7, 0, 0]))


def test_state_and_axis_validation():
    with pytest.raises(NotPositive):
        QubitState([1.1, 0, 0])
    with pytest.raises(NonUnitAxis):
        Axis([1.0, 1.0, 0.0])
    with pytest.raises(NonUnitAxis):
        Axis.from_vector([0, 0, 0])
    assert np.allclose(Axis.from_vector([3, 4, 0]).unit, [0.6, 0.8, 0])


def test_sqrt_rejects_negative():
    with pytest.raises(NotPositive):
        sqrt_op(HermitianOp(0.1, [0.5, 0, 0]))


def test_operator_is_immutable():
    a = HermitianOp(0.5, [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        a.vec[0] = 1.0


# --- matrix oracle -----------------------------------------------------------


def test_to_matrix_matches_oracle():
    rng = np.random.default_rng(1)
    for _ in range(100):
        a = HermitianOp(rng.normal(), rng.normal(size=3))
        assert np.allclose(a.to_matrix(), mat_of(a), atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(ops, ops)
def test_trace_pair_matches_matrix_trace(a, b):
    want = np.trace(mat_of(a) @ mat_of(b)).real
    assert trace_pair(a, b) == pytest.approx(want, abs=1e-12)
    assert trace_pair(a, b) == trace_pair(b, a)


@settings(max_examples=200, deadline=None)
@given(ops, ops, finite, ops)
def test_trace_pair_bilinear(a, b, c, d):
    lhs = trace_pair(a + c * b, d)
    rhs = trace_pair(a, d) + c * trace_pair(b, d)
    assert lhs == pytest.approx(rhs, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(ops, ops)
def test_sandwich_matches_matrix_product(s, a):
    m = mat_of(s) @ mat_of(a) @ mat_of(s)
    scalar, vec = pauli_coeffs(m)
    out = sandwich(s, a)
    assert out.scalar == pytest.approx(scalar, abs=1e-10)
    assert np.allclose(out.vec, vec, atol=1e-10)


def test_sqrt_matches_matrix_sqrt():
    rng = np.random.default_rng(2)
    for _ in range(100):
        v = rng.normal(size=3)
        a = HermitianOp(np.linalg.norm(v) + rng.uniform(0, 1), v)
        r = sqrt_op(a)
        assert np.allclose(mat_of(r), psd_sqrt(mat_of(a)), atol=1e-12)
        assert sandwich(r, HermitianOp.identity()).allclose(a, 1e-12)


def test_sqrt_of_rank_one_and_zero():
    p = projection(Axis(Z))
    assert sqrt_op(p).allclose(p, 1e-15)
    assert sqrt_op(HermitianOp.zero()).allclose(HermitianOp.zero())


def test_eigenvalues_match_oracle():
    rng = np.random.default_rng(3)
    for _ in range(100):
        a = HermitianOp(rng.normal(), rng.normal(size=3))
        assert np.allclose(a.eigenvalues(), np.linalg.eigvalsh(mat_of(a)), atol=1e-12)
        assert is_positive(a) == (np.linalg.eigvalsh(mat_of(a))[0] >= -1e-9)


def test_trace_distance_matches_eigenvalue_oracle():
    rng = np.random.default_rng(4)
    for _ in range(200):
        r1, r2 = random_ball(rng), random_ball(rng)
        want = trace_norm(rho(r1) - rho(r2))
        assert trace_distance(QubitState(r1), QubitState(r2)) == pytest.approx(want, abs=1e-12)


def test_trace_distance_pure_states():
    rng = np.random.default_rng(5)
    for _ in range(100):
        r1, r2 = random_unit(rng), random_unit(rng)
        theta = np.arccos(np.clip(r1 @ r2, -1, 1))
        d = trace_distance(QubitState(r1), QubitState(r2))
        assert d == pytest.approx(2 * np.sin(theta / 2), abs=1e-12)
        assert d == pytest.approx(trace_norm(rho(r1) - rho(r2)), abs=1e-12)


def test_trace_distance_metric_axioms():
    rng = np.random.default_rng(6)
    for _ in range(200):
        a, b, c = (QubitState(random_ball(rng)) for _ in range(3))
        assert trace_distance(a, b) == trace_distance(b, a)
        assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-15


def test_complementary_effects_have_eigenvalues_in_unit_interval():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = rng.uniform(0, 0.5)
        a = HermitianOp(0.5, n * random_unit(rng))
        b = HermitianOp.identity() - a
        assert is_effect(a) and is_effect(b)
        for e in (a, b):
            lo, hi = np.linalg.eigvalsh(mat_of(e))
            assert -1e-12 <= lo and hi <= 1 + 1e-12
