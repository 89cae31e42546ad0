import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matrix_oracle import mat_of, random_ball, random_frame, rho
from qubitjoint.bloch import HermitianOp, QubitState, is_rank_one
from qubitjoint.errors import (
    AxesNotOrthogonal,
    BiasedObservable,
    EtaOutOfRange,
    IndexOutOfRange,
    InvalidWitness,
    NotAnEffect,
)
from qubitjoint.observables import (
    BinaryObservable,
    JointObservable,
    JointWitness,
    f_unique_four_outcome,
    has_four_outcome_pattern,
    joint_measurable_pair,
    joint_observable_e,
    joint_observable_f,
    joint_observable_g,
    marginals,
    outcome_distribution,
    parse_signs,
    second_witness,
    sharp_observable,
    sign_tuples,
    smeared_observable,
    witness_unique,
    witness_violation,
)

X, Y, Z = np.eye(3)
RT2, RT3 = np.sqrt(2.0), np.sqrt(3.0)


def pair(eta, x=X, y=Y):
    return smeared_observable(x, eta), smeared_observable(y, eta)


# --- binary observables ----------------------------------------------------


def test_sharp_observable_is_projection():
    obs = sharp_observable(X)
    m = mat_of(obs.plus)
    assert np.allclose(m @ m, m, atol=1e-15)


def test_sharp_expectation_identity():
    rng = np.random.default_rng(10)
    obs = sharp_observable(X)
    for _ in range(100):
        r = random_ball(rng)
        s = QubitState(r)
        diff = 2 * (s.op.scalar * obs.plus.scalar + s.op.vec @ obs.plus.vec) - 2 * (
            s.op.scalar * obs.minus.scalar + s.op.vec @ obs.minus.vec
        )
        assert diff == pytest.approx(r @ X, abs=1e-14)


def test_sharp_outcome_certain_on_eigenstate():
    from qubitjoint.bloch import trace_pair

    assert trace_pair(QubitState(Z).op, sharp_observable(Z).plus) == pytest.approx(1.0)


def test_smeared_limits():
    assert smeared_observable(X, 1.0).allclose(sharp_observable(X))
    coin = smeared_observable(X, 0.0)
    half = HermitianOp(0.5, np.zeros(3))
    assert coin.plus.allclose(half) and coin.minus.allclose(half)


def test_smeared_eigenvalues():
    a = smeared_observable(X, 1 / RT2)
    lo, hi = np.linalg.eigvalsh(mat_of(a.plus))
    assert lo == pytest.approx((1 - 1 / RT2) / 2) and hi == pytest.approx((1 + 1 / RT2) / 2)


def test_smeared_rejects_eta():
    with pytest.raises(EtaOutOfRange):
        smeared_observable(X, 1.2)
    with pytest.raises(EtaOutOfRange):
        smeared_observable(X, -0.1)


def test_binary_observable_must_sum_to_identity():
    with pytest.raises(NotAnEffect):
        BinaryObservable(HermitianOp(0.5, X / 2), HermitianOp(0.4, -X / 2))


# --- G, E, F -----------------------------------------------------------------


def test_g_marginals_and_rank():
    g = joint_observable_g(X, Y)
    a, b = pair(1 / RT2)
    assert (g[(1, 1)] + g[(1, -1)]).allclose(a.plus)
    assert marginals(g, 0).allclose(a) and marginals(g, 1).allclose(b)
    total = HermitianOp.zero()
    for t in sign_tuples(2):
        assert is_rank_one(g[t]) and g[t].scalar == 0.25
        total = total + g[t]
    assert total.allclose(HermitianOp.identity())


def test_g_requires_orthogonal_axes():
    with pytest.raises(AxesNotOrthogonal):
        joint_observable_g(X, (X + Y) / RT2)


def test_e_and_f_marginals():
    e = joint_observable_e(X, Y, Z)
    f = joint_observable_f(X, Y, Z)
    for k, axis in enumerate((X, Y, Z)):
        want = smeared_observable(axis, 1 / RT3)
        assert marginals(e, k).allclose(want)
        assert marginals(f, k).allclose(want)
    assert marginals(f, 0).allclose(marginals(e, 0))


def test_f_structure():
    e = joint_observable_e(X, Y, Z)
    f = joint_observable_f(X, Y, Z)
    assert f[(1, 1, -1)].allclose(HermitianOp.zero())
    assert f[(1, 1, 1)].allclose(2.0 * e[(1, 1, 1)])
    a, b, c = (smeared_observable(v, 1 / RT3) for v in (X, Y, Z))
    assert f[(1, 1, 1)].allclose(0.5 * (a.plus + b.plus + c.plus - HermitianOp.identity()))
    assert has_four_outcome_pattern(f)
    assert not has_four_outcome_pattern(e)


def test_e_exists_at_critical_eta_and_fails_above():
    e = joint_observable_e(X, Y, Z, eta=1 / RT3)
    lo = min(np.linalg.eigvalsh(mat_of(e[t]))[0] for t in sign_tuples(3))
    assert lo == pytest.approx(0.0, abs=1e-15)
    for eta in (1 / RT3 + 1e-6, 0.6, 0.8, 1.0):
        # independent check of the eigenvalue sign before asking the library
        eff = 0.125 * (np.eye(2) + eta * mat_of(HermitianOp(0.0, -(X + Y + Z))))
        assert np.linalg.eigvalsh(eff)[0] < 0
        with pytest.raises(NotAnEffect):
            joint_observable_e(X, Y, Z, eta=eta)


def test_marginal_index_error():
    with pytest.raises(IndexOutOfRange):
        marginals(joint_observable_g(X, Y), 2)


def test_joint_observable_declared_marginals_checked():
    g = joint_observable_g(X, Y)
    with pytest.raises(NotAnEffect):
        JointObservable(g.effects, declared=pair(0.5))


def test_joint_observable_needs_all_outcomes():
    g = joint_observable_g(X, Y)
    partial = {t: e for t, e in g.effects.items() if t != (1, 1)}
    with pytest.raises(IndexOutOfRange):
        JointObservable(partial)


def test_f_unique_standard_and_rotated():
    assert f_unique_four_outcome(X, Y, Z)
    rng = np.random.default_rng(11)
    for _ in range(5):
        x, y, z = random_frame(rng)
        assert f_unique_four_outcome(x, y, z)


def test_rotated_frames_keep_invariants():
    rng = np.random.default_rng(12)
    for _ in range(10):
        x, y, z = random_frame(rng)
        for j in (joint_observable_g(x, y), joint_observable_e(x, y, z), joint_observable_f(x, y, z)):
            total = HermitianOp.zero()
            for e in j.effects.values():
                assert np.linalg.eigvalsh(mat_of(e))[0] >= -1e-12
                total = total + e
            assert total.allclose(HermitianOp.identity())


# --- outcome distributions ---------------------------------------------------


def test_distribution_of_maximally_mixed_state():
    d = outcome_distribution(joint_observable_g(X, Y), QubitState.maximally_mixed())
    assert all(d[t] == pytest.approx(0.25) for t in sign_tuples(2))


def test_distribution_matches_matrix_oracle():
    rng = np.random.default_rng(13)
    for i in range(150):
        frame = random_frame(rng)
        j = [joint_observable_g(*frame[:2]), joint_observable_e(*frame), joint_observable_f(*frame)][i % 3]
        r = random_ball(rng)
        d = outcome_distribution(j, QubitState(r))
        for t, e in j.effects.items():
            want = np.trace(rho(r) @ mat_of(e)).real
            assert d[t] == pytest.approx(want, abs=1e-12)
        assert d.total == pytest.approx(1.0, abs=1e-12)


def test_probability_identities():
    rng = np.random.default_rng(14)
    g = joint_observable_g(X, Y)
    for _ in range(1000):
        r = random_ball(rng)
        d = outcome_distribution(g, QubitState(r))
        assert d[(1, -1)] + d[(-1, 1)] == pytest.approx(0.5, abs=1e-12)
        assert d[(1, 1)] + d[(-1, -1)] == pytest.approx(0.5, abs=1e-12)
        lhs = (d[(1, 1)] - 0.25) ** 2 + (d[(1, -1)] - 0.25) ** 2
        assert lhs <= (np.linalg.norm(r) / 4) ** 2 + 1e-12


# --- four-ball feasibility ---------------------------------------------------


def test_critical_witness():
    w = joint_measurable_pair(*pair(1 / RT2))
    assert w is not None
    assert w.gamma == pytest.approx(0.5, abs=1e-9)
    assert np.allclose(w.g, (X + Y) / (2 * RT2), atol=1e-9)
    assert witness_unique(*pair(1 / RT2), w)


def test_witness_effect_is_g11():
    w = joint_measurable_pair(*pair(1 / RT2))
    assert w.effect().allclose(joint_observable_g(X, Y)[(1, 1)], 1e-9)


@pytest.mark.parametrize("eta, feasible", [(0.70, True), (0.707, True), (0.7071, True), (0.71, False), (0.75, False), (0.8, False)])
def test_feasibility_sweep(eta, feasible):
    assert (joint_measurable_pair(*pair(eta)) is not None) == feasible


def test_threshold_in_rotated_frames():
    rng = np.random.default_rng(15)
    for _ in range(5):
        x, y, _ = random_frame(rng)
        assert joint_measurable_pair(*pair(1 / RT2 - 1e-6, x, y)) is not None
        assert joint_measurable_pair(*pair(1 / RT2 + 1e-6, x, y)) is None


def test_returned_witness_satisfies_operator_inequalities():
    # independent check with matrices: 0 <= G' <= A(1), A(1)+B(1)-I <= G' <= B(1)
    for eta in (0.0, 0.3, 0.5, 0.7, 1 / RT2):
        a, b = pair(eta)
        w = joint_measurable_pair(a, b)
        gp = mat_of(w.effect())
        ma, mb = mat_of(a.plus), mat_of(b.plus)
        for m in (gp, ma - gp, mb - gp, gp - ma - mb + np.eye(2)):
            assert np.linalg.eigvalsh(m)[0] >= -1e-9


def test_equal_observables_are_jointly_measurable():
    a = smeared_observable(X, 1 / RT2)
    a_vec = a.bloch
    assert witness_violation(a, a, JointWitness(float(np.linalg.norm(a_vec)), a_vec)) <= 1e-15
    assert joint_measurable_pair(a, a) is not None


def test_sub_critical_not_unique():
    a, b = pair(0.5)
    w = joint_measurable_pair(a, b)
    assert w is not None
    other = second_witness(a, b, w)
    assert other is not None
    assert np.linalg.norm(np.r_[other.gamma - w.gamma, other.g - w.g]) > 1e-6
    assert witness_violation(a, b, other) <= 1e-12
    assert not witness_unique(a, b, w)


def test_trivial_coins_not_unique():
    a, b = pair(0.0)
    assert not witness_unique(a, b, joint_measurable_pair(a, b))


def test_invalid_witness_rejected():
    a, b = pair(1 / RT2)
    with pytest.raises(InvalidWitness):
        witness_unique(a, b, JointWitness(0.5, np.array([0.5, 0.0, 0.0])))


def test_biased_pair_rejected():
    biased = BinaryObservable(HermitianOp(0.6, X * 0.1), HermitianOp(0.4, -X * 0.1))
    with pytest.raises(BiasedObservable):
        joint_measurable_pair(biased, smeared_observable(Y, 0.5))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_feasibility_matches_closed_criterion(ea, eb):
    # orthogonal unbiased pair: jointly measurable iff ea^2 + eb^2 <= 1
    a, b = smeared_observable(X, ea), smeared_observable(Y, eb)
    margin = ea**2 + eb**2 - 1.0
    if abs(margin) < 1e-6:
        return
    assert (joint_measurable_pair(a, b) is not None) == (margin < 0)


def test_parse_signs():
    assert parse_signs("+-+") == (1, -1, 1)
    with pytest.raises(ValueError):
        parse_signs("+x")
