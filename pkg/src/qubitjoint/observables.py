"""Binary and joint qubit observables and joint-measurability tests."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .bloch import (
    DEFAULT_TOL,
    Axis,
    HermitianOp,
    QubitState,
    as_axis,
    is_effect,
    trace_pair,
)
from .errors import (
    AxesNotOrthogonal,
    BiasedObservable,
    EtaOutOfRange,
    IndexOutOfRange,
    InvalidWitness,
    NotAnEffect,
)

SUM_TOL = 1e-12
ORTHO_TOL = 1e-9

Signs = tuple[int, ...]


def sign_tuples(arity: int) -> list[Signs]:
    """All outcome labels of an ``arity``-fold joint observable, ``+`` first."""
    return list(itertools.product((1, -1), repeat=arity))


def parity(t: Signs) -> int:
    return int(np.prod(t))


def fmt_signs(t: Signs) -> str:
    return "".join("+" if s > 0 else "-" for s in t)


def parse_signs(text: str) -> Signs:
    if not text or any(c not in "+-" for c in text):
        raise ValueError(f"bad outcome tag {text!r}; expected e.g. '+-' or '++-'")
    return tuple(1 if c == "+" else -1 for c in text)


@dataclass(frozen=True, eq=False)
class BinaryObservable:
    plus: HermitianOp
    minus: HermitianOp

    def __post_init__(self):
        if not (self.plus + self.minus).allclose(HermitianOp.identity(), SUM_TOL):
            raise NotAnEffect("binary observable effects do not sum to the identity")
        for e in (self.plus, self.minus):
            if not is_effect(e):
                raise NotAnEffect(f"{e!r} is not an effect")

    def __getitem__(self, sign: int) -> HermitianOp:
        if sign == 1:
            return self.plus
        if sign == -1:
            return self.minus
        raise IndexOutOfRange(f"outcome must be +1 or -1, got {sign}")

    @property
    def bias(self) -> float:
        return self.plus.scalar - 0.5

    @property
    def bloch(self) -> np.ndarray:
        """The vector ``a`` with ``plus = (I + a.sigma)/2`` for unbiased observables."""
        return 2.0 * self.plus.vec

    def allclose(self, other: BinaryObservable, tol: float = SUM_TOL) -> bool:
        return self.plus.allclose(other.plus, tol) and self.minus.allclose(other.minus, tol)


@dataclass(frozen=True, eq=False)
class JointObservable:
    """POVM whose outcomes are sign tuples ``(±1, ..., ±1)``.

    ``effects`` must list every tuple of the given arity; zero operators are
    allowed.  ``declared`` optionally records the binary observables this
    POVM is meant to reproduce as marginals; they are checked on creation.
    """

    effects: Mapping[Signs, HermitianOp]
    declared: Optional[tuple[BinaryObservable, ...]] = None
    name: str = ""

    def __post_init__(self):
        effects = {tuple(int(s) for s in t): e for t, e in self.effects.items()}
        arities = {len(t) for t in effects}
        if len(arities) != 1:
            raise IndexOutOfRange("outcome tuples have inconsistent lengths")
        (n,) = arities
        if set(effects) != set(sign_tuples(n)):
            raise IndexOutOfRange(f"expected all {2**n} sign tuples of length {n}")
        object.__setattr__(self, "effects", dict((t, effects[t]) for t in sign_tuples(n)))
        total = HermitianOp.zero()
        for t, e in self.effects.items():
            if not is_effect(e):
                raise NotAnEffect(f"effect {fmt_signs(t)} = {e!r} is not an effect")
            total = total + e
        if not total.allclose(HermitianOp.identity(), SUM_TOL):
            raise NotAnEffect(f"effects sum to {total!r}, not the identity")
        if self.declared is not None:
            if len(self.declared) != n:
                raise IndexOutOfRange("one declared marginal per factor is required")
            for k, obs in enumerate(self.declared):
                if not marginals(self, k).allclose(obs, SUM_TOL):
                    raise NotAnEffect(f"marginal {k} does not match the declared observable")

    @property
    def arity(self) -> int:
        return len(next(iter(self.effects)))

    def __getitem__(self, t: Signs) -> HermitianOp:
        return self.effects[tuple(t)]

    def nonzero_outcomes(self, tol: float = DEFAULT_TOL) -> list[Signs]:
        return [t for t, e in self.effects.items() if e.scalar > tol]


@dataclass(frozen=True)
class OutcomeDistribution:
    probs: dict = field(default_factory=dict)

    def __getitem__(self, t: Signs) -> float:
        return self.probs[tuple(t)]

    @property
    def total(self) -> float:
        return float(sum(self.probs.values()))


@dataclass(frozen=True)
class JointWitness:
    """``G'(1,1) = (gamma I + g.sigma)/2`` for a pair of unbiased observables."""

    gamma: float
    g: np.ndarray

    def effect(self) -> HermitianOp:
        return HermitianOp(0.5 * self.gamma, 0.5 * np.asarray(self.g))


def check_orthogonal(*axes: Axis, tol: float = ORTHO_TOL) -> None:
    for u, v in itertools.combinations(axes, 2):
        if abs(float(u.unit @ v.unit)) > tol:
            raise AxesNotOrthogonal(f"axes {u} and {v} have overlap {u.unit @ v.unit:.3g}")


def sharp_observable(axis) -> BinaryObservable:
    u = as_axis(axis).unit
    return BinaryObservable(HermitianOp(0.5, 0.5 * u), HermitianOp(0.5, -0.5 * u))


def smeared_observable(axis, eta: float) -> BinaryObservable:
    if not 0.0 <= eta <= 1.0:
        raise EtaOutOfRange(f"eta must lie in [0, 1], got {eta}")
    u = as_axis(axis).unit
    return BinaryObservable(HermitianOp(0.5, 0.5 * eta * u), HermitianOp(0.5, -0.5 * eta * u))


def joint_observable_g(x, y) -> JointObservable:
    """The four-outcome joint observable of the two 1/sqrt(2)-smeared observables."""
    x, y = as_axis(x), as_axis(y)
    check_orthogonal(x, y)
    c = 1.0 / np.sqrt(2.0)
    effects = {(j, k): HermitianOp(0.25, 0.25 * c * (j * x.unit + k * y.unit)) for j, k in sign_tuples(2)}
    declared = (smeared_observable(x, c), smeared_observable(y, c))
    return JointObservable(effects, declared, name="G")


def _e_effects(axes: Sequence[Axis], eta: float) -> dict:
    return {
        t: HermitianOp(0.125, 0.125 * eta * sum(s * a.unit for s, a in zip(t, axes)))
        for t in sign_tuples(3)
    }


def joint_observable_e(x, y, z, eta: float = 1.0 / np.sqrt(3.0)) -> JointObservable:
    """Eight-outcome product-form joint observable of three smeared observables.

    Only ``eta <= 1/sqrt(3)`` gives positive effects; larger values raise
    :class:`NotAnEffect`.
    """
    axes = tuple(as_axis(a) for a in (x, y, z))
    check_orthogonal(*axes)
    if not 0.0 <= eta <= 1.0:
        raise EtaOutOfRange(f"eta must lie in [0, 1], got {eta}")
    declared = tuple(smeared_observable(a, eta) for a in axes)
    return JointObservable(_e_effects(axes, eta), declared, name="E")


def joint_observable_f(x, y, z) -> JointObservable:
    """Four-outcome joint observable: twice E on even-parity outcomes, zero elsewhere."""
    axes = tuple(as_axis(a) for a in (x, y, z))
    check_orthogonal(*axes)
    eta = 1.0 / np.sqrt(3.0)
    e = _e_effects(axes, eta)
    effects = {t: (2.0 * e[t] if parity(t) == 1 else HermitianOp.zero()) for t in sign_tuples(3)}
    declared = tuple(smeared_observable(a, eta) for a in axes)
    return JointObservable(effects, declared, name="F")


def marginals(j: JointObservable, factor_index: int) -> BinaryObservable:
    if not 0 <= factor_index < j.arity:
        raise IndexOutOfRange(f"factor {factor_index} out of range for arity {j.arity}")
    parts = {1: HermitianOp.zero(), -1: HermitianOp.zero()}
    for t, e in j.effects.items():
        parts[t[factor_index]] = parts[t[factor_index]] + e
    return BinaryObservable(parts[1], parts[-1])


def outcome_distribution(j: JointObservable, s: QubitState) -> OutcomeDistribution:
    rho = s.op
    return OutcomeDistribution({t: trace_pair(rho, e) for t, e in j.effects.items()})


def has_four_outcome_pattern(j: JointObservable, tol: float = SUM_TOL) -> bool:
    """True when every odd-parity outcome of a three-fold observable vanishes."""
    if j.arity != 3:
        return False
    return all(j[t].allclose(HermitianOp.zero(), tol) for t in sign_tuples(3) if parity(t) == -1)


# --- four-ball feasibility -------------------------------------------------


def max_violation(g, centers, radii) -> float:
    """``max_i (|g - c_i| - r_i)``; non-positive iff ``g`` lies in every ball."""
    g = np.asarray(g, dtype=float)
    d = np.linalg.norm(np.asarray(centers) - g, axis=-1)
    return float(np.max(d - np.asarray(radii)))


def _balls(a_vec: np.ndarray, b_vec: np.ndarray, gamma: float):
    centers = np.array([np.zeros(3), a_vec, b_vec, a_vec + b_vec])
    radii = np.array([gamma, 1.0 - gamma, 1.0 - gamma, gamma])
    return centers, radii


def _unbiased_vectors(a: BinaryObservable, b: BinaryObservable, tol: float = SUM_TOL):
    for name, obs in (("first", a), ("second", b)):
        if abs(obs.bias) > tol:
            raise BiasedObservable(f"{name} observable has bias {obs.bias:.3g}; only unbiased pairs are supported")
    return a.bloch, b.bloch


def witness_violation(a: BinaryObservable, b: BinaryObservable, w: JointWitness) -> float:
    a_vec, b_vec = _unbiased_vectors(a, b)
    centers, radii = _balls(a_vec, b_vec, w.gamma)
    return max_violation(w.g, centers, radii)


def _center_violation(a_vec, b_vec, gammas: np.ndarray) -> np.ndarray:
    # The four balls are symmetric under g -> (a+b) - g, and the max-violation
    # function is convex in g, so the parallelogram center minimizes it.
    half_sum = 0.5 * np.linalg.norm(a_vec + b_vec)
    half_diff = 0.5 * np.linalg.norm(a_vec - b_vec)
    return np.maximum(half_sum - gammas, half_diff - (1.0 - gammas))


def _gamma_slope(a_vec, b_vec, gamma: float) -> int:
    """Sign of the one-sided slope of the violation at ``gamma`` (0 at the kink)."""
    half_sum = 0.5 * np.linalg.norm(a_vec + b_vec)
    half_diff = 0.5 * np.linalg.norm(a_vec - b_vec)
    lhs, rhs = half_sum - gamma, half_diff - (1.0 - gamma)
    if lhs > rhs:
        return -1
    if rhs > lhs:
        return 1
    return 0


def joint_measurable_pair(
    a: BinaryObservable,
    b: BinaryObservable,
    grid_step: float = 1e-3,
    gamma_tol: float = 1e-9,
    feas_tol: float = 1e-12,
) -> Optional[JointWitness]:
    """Search for ``G'(1,1) = (gamma I + g.sigma)/2`` making ``a``, ``b`` marginals.

    The four operator inequalities ``0 <= G' <= A(1)``,
    ``A(1)+B(1)-I <= G' <= B(1)`` are the ball memberships
    ``g in B(0,gamma) & B(a,1-gamma) & B(b,1-gamma) & B(a+b,gamma)``.
    ``gamma`` is scanned on a grid and refined by bisection on the slope of
    the minimal violation; the most interior witness is returned, or
    ``None`` when no ``gamma`` is feasible.
    """
    a_vec, b_vec = _unbiased_vectors(a, b)
    grid = np.linspace(0.0, 1.0, int(round(1.0 / grid_step)) + 1)
    k = int(np.argmin(_center_violation(a_vec, b_vec, grid)))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    while hi - lo > gamma_tol:
        mid = 0.5 * (lo + hi)
        slope = _gamma_slope(a_vec, b_vec, mid)
        if slope == 0:
            lo = hi = mid
        elif slope < 0:
            lo = mid
        else:
            hi = mid
    gamma = 0.5 * (lo + hi)
    g = 0.5 * (a_vec + b_vec)
    centers, radii = _balls(a_vec, b_vec, gamma)
    if max_violation(g, centers, radii) > feas_tol:
        return None
    return JointWitness(float(gamma), g)


def _probe_directions() -> list[np.ndarray]:
    dirs = []
    for dg in itertools.product((-1, 0, 1), repeat=3):
        for dgam in (-1, 0, 1):
            if dg == (0, 0, 0) and dgam == 0:
                continue
            v = np.array([dgam, *dg], dtype=float)
            dirs.append(v / np.linalg.norm(v))
    return dirs


def second_witness(
    a: BinaryObservable,
    b: BinaryObservable,
    witness: JointWitness,
    min_distance: float = 1e-6,
    probe_tol: float = 1e-14,
) -> Optional[JointWitness]:
    """Look for a feasible ``(gamma', g')`` farther than ``min_distance`` from ``witness``.

    Probes the 26 sign/zero directions in ``g`` combined with moves of
    ``gamma``, plus the direction of the most interior witness.  The
    feasible set is convex, so failing to move in a spanning set is taken
    as evidence that it is a single point.
    """
    a_vec, b_vec = _unbiased_vectors(a, b)
    if witness_violation(a, b, witness) > 1e-9:
        raise InvalidWitness("the supplied witness violates the ball constraints")
    base = np.array([witness.gamma, *np.asarray(witness.g, dtype=float)])

    def feasible(p):
        centers, radii = _balls(a_vec, b_vec, p[0])
        return 0.0 <= p[0] <= 1.0 and max_violation(p[1:], centers, radii) <= probe_tol

    directions = _probe_directions()
    interior = joint_measurable_pair(a, b)
    if interior is not None:
        d = np.array([interior.gamma, *interior.g]) - base
        if np.linalg.norm(d) > 0:
            directions.append(d / np.linalg.norm(d))
    step = 2.0 * min_distance
    for d in directions:
        p = base + step * d
        if feasible(p):
            # push further along d to report a well-separated point
            lo, hi = step, 1.0
            if feasible(base + hi * d):
                lo = hi
            for _ in range(60):
                if hi - lo < 1e-12:
                    break
                mid = 0.5 * (lo + hi)
                if feasible(base + mid * d):
                    lo = mid
                else:
                    hi = mid
            q = base + lo * d
            return JointWitness(float(q[0]), q[1:])
    return None


def witness_unique(a: BinaryObservable, b: BinaryObservable, witness: JointWitness) -> bool:
    return second_witness(a, b, witness) is None


def f_unique_four_outcome(x, y, z, tol: float = 1e-12) -> bool:
    """Check that the even-parity zero pattern plus the marginals pin down F.

    The four unknown nonzero elements (16 real coefficients) are solved from
    the six marginal equations; the system must have full rank and its
    solution must equal :func:`joint_observable_f`.
    """
    axes = tuple(as_axis(a) for a in (x, y, z))
    check_orthogonal(*axes)
    eta = 1.0 / np.sqrt(3.0)
    margs = [smeared_observable(a, eta) for a in axes]
    support = [t for t in sign_tuples(3) if parity(t) == 1]
    rows, rhs = [], []
    for k in range(3):
        for s in (1, -1):
            target = margs[k][s]
            target_coeffs = np.array([target.scalar, *target.vec])
            for comp in range(4):
                row = np.zeros(4 * len(support))
                for i, t in enumerate(support):
                    if t[k] == s:
                        row[4 * i + comp] = 1.0
                rows.append(row)
                rhs.append(target_coeffs[comp])
    m, rhs = np.array(rows), np.array(rhs)
    if np.linalg.matrix_rank(m) < m.shape[1]:
        return False
    sol, *_ = np.linalg.lstsq(m, rhs, rcond=None)
    if np.max(np.abs(m @ sol - rhs)) > tol:
        return False
    f = joint_observable_f(*axes)
    for i, t in enumerate(support):
        op = HermitianOp(sol[4 * i], sol[4 * i + 1 : 4 * i + 4])
        if not op.allclose(f[t], tol):
            return False
    closed = 0.5 * (margs[0].plus + margs[1].plus + margs[2].plus - HermitianOp.identity())
    return closed.allclose(f[(1, 1, 1)], tol)
