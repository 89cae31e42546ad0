"""Instruments: von Neumann, Lüders and rank-one joint instruments."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .bloch import (
    DEFAULT_TOL,
    HermitianOp,
    QubitState,
    is_positive,
    is_rank_one,
    normalize_state,
    sandwich,
    sqrt_op,
    trace_pair,
)
from .errors import (
    IndexOutOfRange,
    MixOutOfRange,
    NotRankOne,
    NotSharp,
    TraceMismatch,
    ZeroProbability,
)
from .observables import BinaryObservable, JointObservable, Signs, fmt_signs, sign_tuples

ZERO_PROB = 1e-12

Rule = Callable[[HermitianOp], HermitianOp]


@dataclass(frozen=True, eq=False)
class BinaryInstrument:
    """Two operations, one per outcome, acting on density operators."""

    observable: BinaryObservable
    rules: Mapping[int, Rule]
    kind: str = ""

    def operation(self, sign: int, state: QubitState) -> HermitianOp:
        if sign not in (1, -1):
            raise IndexOutOfRange(f"outcome must be +1 or -1, got {sign}")
        return self.rules[sign](state.op)

    def probability(self, sign: int, state: QubitState) -> float:
        return self.operation(sign, state).trace


def von_neumann(obs: BinaryObservable, tol: float = DEFAULT_TOL) -> BinaryInstrument:
    for sign in (1, -1):
        e = obs[sign]
        if not (is_rank_one(e, tol) and abs(e.scalar - 0.5) <= tol):
            raise NotSharp(f"effect for outcome {sign:+d} is not a rank-one projection")

    def rule(p: HermitianOp) -> Rule:
        return lambda rho: trace_pair(rho, p) * p

    return BinaryInstrument(obs, {1: rule(obs.plus), -1: rule(obs.minus)}, kind="von_neumann")


def luders(obs: BinaryObservable) -> BinaryInstrument:
    """``rho -> sqrt(E) rho sqrt(E)`` for each effect ``E``."""
    roots = {s: sqrt_op(obs[s]) for s in (1, -1)}

    def rule(r: HermitianOp) -> Rule:
        return lambda rho: sandwich(r, rho)

    return BinaryInstrument(obs, {s: rule(r) for s, r in roots.items()}, kind="luders")


def luders_pair_jointly_measurable(a: BinaryObservable, b: BinaryObservable, tol: float = DEFAULT_TOL) -> bool:
    """Joint measurability of the Lüders operations for outcome +1.

    Holds iff ``A(1) + B(1) <= I`` or ``B(1) = c A(1)`` with ``0 <= c <= 1``.
    """
    rest = HermitianOp.identity() - a.plus - b.plus
    if is_positive(rest, tol):
        return True
    pa, pb = a.plus, b.plus
    if pa.scalar <= tol:
        return pb.allclose(HermitianOp.zero(), tol)
    c = pb.scalar / pa.scalar
    return -tol <= c <= 1.0 + tol and pb.allclose(c * pa, tol)


@dataclass(frozen=True, eq=False)
class Rank1Instrument:
    """Instrument whose outcome ``t`` maps ``rho`` to ``tr[rho J(t)] xi_t``."""

    joint: JointObservable
    outputs: Mapping[Signs, QubitState]
    name: str = ""

    def q(self, t: Signs) -> np.ndarray:
        return self.outputs[tuple(t)].bloch

    def probability(self, t: Signs, state: QubitState) -> float:
        return trace_pair(state.op, self.joint[t])

    def operation(self, t: Signs, state: QubitState) -> HermitianOp:
        return self.probability(t, state) * self.outputs[tuple(t)].op

    def output_vectors(self) -> dict:
        return {t: self.q(t) for t in self.joint.nonzero_outcomes()}


def _as_state(v) -> QubitState:
    return v if isinstance(v, QubitState) else QubitState(v)


def rank1_from_joint(j: JointObservable, outputs: Mapping, name: str = "") -> Rank1Instrument:
    states = {}
    for t in sign_tuples(j.arity):
        e = j[t]
        if e.allclose(HermitianOp.zero(), ZERO_PROB):
            states[t] = _as_state(outputs.get(t, np.zeros(3)))
            continue
        if not is_rank_one(e):
            raise NotRankOne(fmt_signs(t))
        if t not in outputs:
            raise KeyError(f"no output state for outcome {fmt_signs(t)}")
        states[t] = _as_state(outputs[t])
    return Rank1Instrument(j, states, name=name)


def luders_of_joint(j: JointObservable) -> Rank1Instrument:
    """Lüders instrument of a rank-one joint observable: ``xi_t = J(t)/tr J(t)``."""
    outputs = {}
    for t in j.nonzero_outcomes():
        if not is_rank_one(j[t]):
            raise NotRankOne(fmt_signs(t))
        outputs[t] = normalize_state(j[t])[1]
    return rank1_from_joint(j, outputs, name=f"luders[{j.name}]")


def worst_case_mixture(j: JointObservable, mix: float) -> Rank1Instrument:
    """Lüders outputs mixed with the maximally mixed state, weight ``mix`` on Lüders."""
    if not 0.0 <= mix <= 1.0:
        raise MixOutOfRange(f"mixing weight must lie in [0, 1], got {mix}")
    base = luders_of_joint(j)
    outputs = {t: QubitState(mix * base.q(t)) for t in j.nonzero_outcomes()}
    return rank1_from_joint(j, outputs, name=f"mixture[{j.name},{mix:.6g}]")


@dataclass(frozen=True, eq=False)
class MarginalOperation:
    """Sum of the instrument operations whose outcome has ``sign`` at ``factor``."""

    instrument: Rank1Instrument
    factor: int
    sign: int
    outcomes: tuple = field(default_factory=tuple)

    def apply(self, state: QubitState) -> HermitianOp:
        total = HermitianOp.zero()
        for t in self.outcomes:
            total = total + self.instrument.operation(t, state)
        return total

    def probability(self, state: QubitState) -> float:
        return sum(self.instrument.probability(t, state) for t in self.outcomes)

    def weights(self, bloch: np.ndarray) -> np.ndarray:
        """Outcome probabilities for a batch of Bloch vectors, shape ``(N, len(outcomes))``."""
        r = np.atleast_2d(bloch)
        e0 = np.array([self.instrument.joint[t].scalar for t in self.outcomes])
        ev = np.array([self.instrument.joint[t].vec for t in self.outcomes])
        return e0 + r @ ev.T

    def output_bloch(self, bloch: np.ndarray) -> np.ndarray:
        """Vectorized normalized output Bloch vectors; NaN rows where the probability vanishes."""
        w = self.weights(bloch)
        qs = np.array([self.instrument.q(t) for t in self.outcomes])
        p = w.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = (w @ qs) / p[:, None]
        out[p <= ZERO_PROB] = np.nan
        return out


def marginal_operation(inst: Rank1Instrument, factor_index: int, sign: int) -> MarginalOperation:
    if not 0 <= factor_index < inst.joint.arity:
        raise IndexOutOfRange(f"factor {factor_index} out of range for arity {inst.joint.arity}")
    if sign not in (1, -1):
        raise IndexOutOfRange(f"sign must be +1 or -1, got {sign}")
    nonzero = set(inst.joint.nonzero_outcomes())
    outcomes = tuple(t for t in sign_tuples(inst.joint.arity) if t[factor_index] == sign and t in nonzero)
    return MarginalOperation(inst, factor_index, sign, outcomes)


def normalized_output(m: MarginalOperation, s: QubitState) -> QubitState:
    op = m.apply(s)
    if op.trace <= ZERO_PROB:
        raise ZeroProbability(f"outcome {m.sign:+d} of factor {m.factor} has probability {op.trace:.3g}")
    return normalize_state(op, tol=ZERO_PROB)[1]


def structure_output(
    rule: Rule, effect: HermitianOp, n_states: int = 20, seed: int = 0, tol: float = DEFAULT_TOL
) -> tuple[QubitState, float]:
    """Normalized output of ``rule`` and its spread over random input states.

    ``rule`` maps a density operator to an unnormalized output and must
    satisfy ``tr[rule(rho)] = tr[rho effect]``; this is checked on the
    maximally mixed state and the six axis eigenstates (an affine spanning
    set), otherwise :class:`TraceMismatch` is raised.
    """
    probes = [np.zeros(3)] + [s * e for e in np.eye(3) for s in (1, -1)]
    for r in probes:
        rho = QubitState(r).op
        got, want = rule(rho).trace, trace_pair(rho, effect)
        if abs(got - want) > tol:
            raise TraceMismatch(f"trace {got:.6g} != tr[rho E] = {want:.6g} at r = {r}")

    rng = np.random.default_rng(seed)
    outs = []
    while len(outs) < n_states:
        r = _uniform_ball(rng)
        rho = QubitState(r).op
        out = rule(rho)
        if out.trace <= ZERO_PROB:
            continue
        outs.append(normalize_state(out, tol=ZERO_PROB)[1].bloch)
    outs = np.array(outs)
    spread = float(np.max(np.linalg.norm(outs - outs[0], axis=1)))
    return QubitState(outs[0]), spread


def structure_check(rule: Rule, effect: HermitianOp, n_states: int = 20, seed: int = 0, tol: float = DEFAULT_TOL) -> bool:
    """True when the normalized output of ``rule`` does not depend on the input."""
    _, spread = structure_output(rule, effect, n_states, seed, tol)
    return spread < tol


def _uniform_ball(rng: np.random.Generator) -> np.ndarray:
    while True:
        r = rng.uniform(-1.0, 1.0, 3)
        if r @ r <= 1.0:
            return r


def rank1_rule(inst: Rank1Instrument, t: Signs) -> Rule:
    """The operation of outcome ``t`` as a rule on density operators."""
    e = inst.joint[t]
    xi = inst.outputs[tuple(t)].op
    return lambda rho: trace_pair(rho, e) * xi


def luders_rule(effect: HermitianOp) -> Rule:
    root = sqrt_op(effect)
    return lambda rho: sandwich(root, rho)


def instrument_outputs(inst: Rank1Instrument) -> dict:
    return {fmt_signs(t): inst.q(t).tolist() for t in inst.joint.nonzero_outcomes()}
