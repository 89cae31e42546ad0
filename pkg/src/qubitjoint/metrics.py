"""Distances between approximate marginal operations and von Neumann operations.

For a rank-one joint instrument with output Bloch vectors ``q_t`` the
normalized output of a marginal operation is a probability-weighted mixture
of the ``q_t``.  Its Bloch distance to ``±axis`` is averaged (squared) over
the Bloch ball, or maximized over input states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .bloch import Axis, QubitState, as_axis, trace_distance
from .errors import EtaOutOfRange, IndexOutOfRange, UnsupportedProblem, VectorTooLong
from .instruments import MarginalOperation, Rank1Instrument, marginal_operation, normalized_output
from .integration import IntegrationScheme, ball_estimate, sobol_ball
from .observables import (
    JointObservable,
    Signs,
    check_orthogonal,
    joint_observable_e,
    joint_observable_f,
    joint_observable_g,
    sign_tuples,
)

SQRT2 = np.sqrt(2.0)
SQRT3 = np.sqrt(3.0)
VARIANTS = ("G", "E", "F")
FACTOR_NAMES = "ABC"
TARGET_NAMES = "XYZ"
# radius of the disk swept by the two transverse factors of an E marginal
E_DISK_RADIUS = 1.0 / SQRT2


@dataclass(frozen=True, eq=False)
class AxisConfig:
    axes: tuple
    eta: float

    def __post_init__(self):
        axes = tuple(as_axis(a) for a in self.axes)
        if len(axes) not in (2, 3):
            raise IndexOutOfRange("an axis configuration has 2 or 3 axes")
        if not 0.0 < self.eta <= 1.0:
            raise EtaOutOfRange(f"eta must lie in (0, 1], got {self.eta}")
        check_orthogonal(*axes)
        object.__setattr__(self, "axes", axes)

    @property
    def n(self) -> int:
        return len(self.axes)

    @classmethod
    def standard(cls, n: int) -> AxisConfig:
        eta = 1.0 / SQRT2 if n == 2 else 1.0 / SQRT3
        return cls(tuple(Axis(e) for e in np.eye(3)[:n]), eta)

    def frame(self) -> np.ndarray:
        """Rows are the axes; a third axis is completed for two-axis configs."""
        rows = [a.unit for a in self.axes]
        if len(rows) == 2:
            rows.append(np.cross(rows[0], rows[1]))
        return np.array(rows)


def config_for(variant: str, axes: Optional[Sequence] = None) -> AxisConfig:
    n = 2 if variant == "G" else 3
    if axes is None:
        return AxisConfig.standard(n)
    if len(axes) < n:
        raise IndexOutOfRange(f"variant {variant} needs {n} axes")
    return AxisConfig(tuple(axes[:n]), 1.0 / SQRT2 if n == 2 else 1.0 / SQRT3)


def variant_joint(variant: str, config: AxisConfig) -> JointObservable:
    if variant == "G":
        return joint_observable_g(*config.axes[:2])
    if variant == "E":
        return joint_observable_e(*config.axes[:3])
    if variant == "F":
        return joint_observable_f(*config.axes[:3])
    raise UnsupportedProblem(f"unknown variant {variant!r}")


def variant_of(j: JointObservable) -> str:
    if j.name in VARIANTS:
        return j.name
    raise UnsupportedProblem("joint observable is not one of G, E, F")


def outcome_label(factor: int, sign: int) -> str:
    return f"{FACTOR_NAMES[factor]}{'+' if sign > 0 else '-'}"


@dataclass
class DistanceReport:
    metric: str
    per_outcome: dict = field(default_factory=dict)
    total: float = 0.0
    certificate: Optional[object] = None

    def as_dict(self) -> dict:
        out = {
            "metric": self.metric,
            "per_outcome": {outcome_label(*k): v for k, v in self.per_outcome.items()},
            "total": self.total,
        }
        if self.certificate is not None:
            out["certificate"] = self.certificate.as_dict()
        return out


# --- transverse factor and constants ---------------------------------------


def _coords(r, config: AxisConfig) -> np.ndarray:
    return np.asarray(r, dtype=float) @ config.frame().T


def f_factor(r, config: AxisConfig, factor: int, sign: int, variant: str = "G", transverse: int = 0):
    """Coefficient ``f`` with output ``(q_a+q_b)/2 + f (q_a-q_b)/2``.

    ``q_a`` is the outcome carrying ``+1`` on the first transverse factor.
    For G this is ``(r.y)/(sqrt2 + r.x)`` for the ``A+`` marginal, with the
    sign of ``r.x`` flipped for ``A-``.  For F the numerator is the signed
    sum of both transverse components of ``q_a``'s outcome.  For E the two
    transverse factors are returned separately, selected by ``transverse``.
    Accepts a single vector or an ``(N, 3)`` batch.
    """
    c = _coords(r, config)
    n = 2 if variant == "G" else 3
    if not 0 <= factor < n:
        raise IndexOutOfRange(f"factor {factor} out of range for variant {variant}")
    others = [i for i in range(n) if i != factor]
    root = SQRT2 if n == 2 else SQRT3
    denom = root + sign * c[..., factor]
    if variant == "G":
        return c[..., others[0]] / denom
    if variant == "E":
        return c[..., others[transverse]] / denom
    if variant == "F":
        # the even-parity outcome with +1 on the first transverse factor
        second = sign
        return (c[..., others[0]] + second * c[..., others[1]]) / denom
    raise UnsupportedProblem(f"unknown variant {variant!r}")


def alpha() -> float:
    return 2.0 - 1.5 * SQRT2 * np.log(1.0 + SQRT2)


def beta() -> float:
    return 0.5 * (7.0 - 3.0 * SQRT3 * np.log(2.0 + SQRT3))


def gamma_const() -> float:
    return 2.0 * beta()


def alpha_integrand(r: np.ndarray) -> np.ndarray:
    return (r[:, 1] / (SQRT2 + r[:, 0])) ** 2


def beta_integrand(r: np.ndarray) -> np.ndarray:
    return (r[:, 1] / (SQRT3 + r[:, 0])) ** 2


def gamma_integrand(r: np.ndarray) -> np.ndarray:
    return ((r[:, 1] + r[:, 2]) / (SQRT3 + r[:, 0])) ** 2


# --- pointwise and average distances ----------------------------------------


def _target(config: AxisConfig, factor: int, sign: int) -> np.ndarray:
    return sign * config.axes[factor].unit


def pointwise_distance(inst: Rank1Instrument, config: AxisConfig, factor: int, sign: int, s: QubitState) -> float:
    out = normalized_output(marginal_operation(inst, factor, sign), s)
    return trace_distance(out, QubitState(_target(config, factor, sign)))


def pointwise_distances(m: MarginalOperation, config: AxisConfig, bloch: np.ndarray) -> np.ndarray:
    """Vectorized distances for a batch of input Bloch vectors."""
    out = m.output_bloch(bloch)
    return np.linalg.norm(out - _target(config, m.factor, m.sign), axis=1)


def _check_lengths(q: Mapping) -> None:
    for t, v in q.items():
        if np.linalg.norm(v) > 1.0 + 1e-12:
            raise VectorTooLong(f"output vector for {t} has length {np.linalg.norm(v):.6g} > 1")


def _marginal_outcomes(variant: str, factor: int, sign: int) -> list:
    n = 2 if variant == "G" else 3
    outs = [t for t in sign_tuples(n) if t[factor] == sign]
    if variant == "F":
        outs = [t for t in outs if np.prod(t) == 1]
    return outs


def _pair(variant: str, factor: int, sign: int) -> tuple[Signs, Signs]:
    """``(a, b)`` for a two-term marginal, ``a`` having +1 on the first transverse factor."""
    outs = _marginal_outcomes(variant, factor, sign)
    first = [i for i in range(len(outs[0])) if i != factor][0]
    a = next(t for t in outs if t[first] == 1)
    b = next(t for t in outs if t is not a)
    return a, b


def average_distance_closed(q: Mapping, config: AxisConfig, factor: int, sign: int, variant: str = "G") -> float:
    """Closed-form ball average of the squared distance for one marginal."""
    q = {tuple(t): np.asarray(v, dtype=float) for t, v in q.items()}
    target = _target(config, factor, sign)
    outs = _marginal_outcomes(variant, factor, sign)
    _check_lengths({t: q[t] for t in outs})
    if variant in ("G", "F"):
        a, b = _pair(variant, factor, sign)
        c = alpha() if variant == "G" else gamma_const()
        s, d = q[a] + q[b] - 2.0 * target, q[a] - q[b]
        return 0.25 * float(s @ s) + 0.25 * c * float(d @ d)
    if variant == "E":
        others = [i for i in range(3) if i != factor]
        s = sum(q[t] for t in outs) - 4.0 * target
        p1 = sum(t[others[0]] * q[t] for t in outs)
        p2 = sum(t[others[1]] * q[t] for t in outs)
        b_ = beta()
        return float(s @ s) / 16.0 + b_ / 16.0 * float(p1 @ p1) + b_ / 16.0 * float(p2 @ p2)
    raise UnsupportedProblem(f"unknown variant {variant!r}")


def average_distance_numeric_estimate(
    inst: Rank1Instrument, config: AxisConfig, factor: int, sign: int, scheme: Optional[IntegrationScheme] = None
):
    m = marginal_operation(inst, factor, sign)

    def integrand(r):
        d = pointwise_distances(m, config, r)
        # zero-probability inputs form a null set; drop them
        return np.nan_to_num(d**2, nan=0.0)

    return ball_estimate(integrand, scheme)


def average_distance_numeric(
    inst: Rank1Instrument, config: AxisConfig, factor: int, sign: int, scheme: Optional[IntegrationScheme] = None
) -> float:
    return average_distance_numeric_estimate(inst, config, factor, sign, scheme).value


# --- worst case -------------------------------------------------------------


def worst_case_distance(q_a, q_b, target_axis, target_sign: int) -> float:
    """Supremum over inputs of the distance for a two-term marginal.

    The normalized output runs over the segment between ``q_a`` and
    ``q_b``, and the transverse factor reaches both ends on pure states,
    so the supremum is the larger endpoint distance.
    """
    t = target_sign * as_axis(target_axis).unit
    return float(max(np.linalg.norm(np.asarray(q_a) - t), np.linalg.norm(np.asarray(q_b) - t)))


def _disk_sup(center: np.ndarray, p1: np.ndarray, p2: np.ndarray, radius: float) -> float:
    """``max |center + u p1 + v p2|`` over ``u^2 + v^2 <= radius^2``.

    The squared norm is convex in ``(u, v)`` so the max sits on the circle;
    a dense angle scan is refined by a bounded scalar search.
    """

    def h(th):
        return -float(np.linalg.norm(center + radius * (np.cos(th) * p1 + np.sin(th) * p2)))

    grid = np.linspace(0.0, 2.0 * np.pi, 721)
    vals = np.array([h(t) for t in grid])
    k = int(np.argmin(vals))
    step = grid[1] - grid[0]
    res = minimize_scalar(h, bounds=(grid[k] - step, grid[k] + step), method="bounded", options={"xatol": 1e-12})
    return max(-res.fun, -vals[k], float(np.linalg.norm(center)))


def worst_case_marginal(inst: Rank1Instrument, config: AxisConfig, factor: int, sign: int) -> float:
    """Worst-case distance of one marginal of a G, E or F instrument."""
    variant = variant_of(inst.joint)
    target = _target(config, factor, sign)
    if variant in ("G", "F"):
        a, b = _pair(variant, factor, sign)
        return worst_case_distance(inst.q(a), inst.q(b), config.axes[factor], sign)
    outs = _marginal_outcomes(variant, factor, sign)
    others = [i for i in range(3) if i != factor]
    center = sum(inst.q(t) for t in outs) / 4.0 - target
    p1 = sum(t[others[0]] * inst.q(t) for t in outs) / 4.0
    p2 = sum(t[others[1]] * inst.q(t) for t in outs) / 4.0
    return _disk_sup(center, p1, p2, E_DISK_RADIUS)


def sampled_sup(
    inst: Rank1Instrument, config: AxisConfig, factor: int, sign: int, n: int = 100_000, seed: int = 0
) -> float:
    """Largest pointwise distance over low-discrepancy sample states."""
    m = marginal_operation(inst, factor, sign)
    d = pointwise_distances(m, config, sobol_ball(n, seed))
    return float(np.nanmax(d))


# --- reports ----------------------------------------------------------------


def marginal_keys(n: int) -> list:
    """``(factor, sign)`` pairs in report order: all ``+`` first, then ``-``."""
    return [(k, s) for s in (1, -1) for k in range(n)]


def distance_report(
    inst: Rank1Instrument,
    config: AxisConfig,
    metric: str = "average",
    method: str = "closed",
    scheme: Optional[IntegrationScheme] = None,
) -> DistanceReport:
    variant = variant_of(inst.joint)
    per = {}
    for k, s in marginal_keys(inst.joint.arity):
        if metric == "average":
            if method == "closed":
                per[(k, s)] = average_distance_closed(inst.output_vectors(), config, k, s, variant)
            else:
                per[(k, s)] = average_distance_numeric(inst, config, k, s, scheme)
        elif metric == "worst_case":
            per[(k, s)] = worst_case_marginal(inst, config, k, s)
        else:
            raise UnsupportedProblem(f"unknown metric {metric!r}")
    return DistanceReport(metric, per, float(sum(per.values())))

