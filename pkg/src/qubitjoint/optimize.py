"""Optimal output states of rank-one joint instruments.

The free variables are the output Bloch vectors ``q_t`` of the nonzero
outcomes, each confined to the unit ball.  The average distance is a convex
quadratic in the stacked ``q``; it is minimized by projected gradient descent
and certified with the first-order optimality condition over the product of
unit balls.  The worst-case distance is handled in epigraph form.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize as scipy_minimize

from .errors import InfeasiblePoint, MaxIterations, UnsupportedProblem
from .instruments import Rank1Instrument, rank1_from_joint
from .metrics import (
    AxisConfig,
    DistanceReport,
    _marginal_outcomes,
    _pair,
    _target,
    alpha,
    beta,
    distance_report,
    gamma_const,
    marginal_keys,
    variant_joint,
)
from .observables import Signs, fmt_signs, sign_tuples

log = logging.getLogger(__name__)

METRICS = ("average", "worst_case")


@dataclass(frozen=True)
class OptimizerParams:
    max_iter: int = 100_000
    kkt_tol: float = 1e-9
    accelerate: bool = False
    worst_tol: float = 1e-12
    equal_distance: bool = True


@dataclass(frozen=True, eq=False)
class OptimizationProblem:
    config: AxisConfig
    variant: str = "G"
    metric: str = "average"

    def __post_init__(self):
        if self.variant not in ("G", "E", "F"):
            raise UnsupportedProblem(f"unknown variant {self.variant!r}")
        if self.metric not in METRICS:
            raise UnsupportedProblem(f"unknown metric {self.metric!r}")
        need = 2 if self.variant == "G" else 3
        if self.config.n < need:
            raise UnsupportedProblem(f"variant {self.variant} needs {need} axes")

    @property
    def arity(self) -> int:
        return 2 if self.variant == "G" else 3

    @property
    def outcomes(self) -> list[Signs]:
        ts = sign_tuples(self.arity)
        if self.variant == "F":
            ts = [t for t in ts if np.prod(t) == 1]
        return ts

    @property
    def n_vars(self) -> int:
        return 3 * len(self.outcomes)

    def unstack(self, q) -> dict:
        q = np.asarray(q, dtype=float).reshape(-1, 3)
        return {t: q[i] for i, t in enumerate(self.outcomes)}

    def stack(self, qmap) -> np.ndarray:
        return np.array([np.asarray(qmap[t], dtype=float) for t in self.outcomes])

    def instrument(self, q) -> Rank1Instrument:
        joint = variant_joint(self.variant, self.config)
        return rank1_from_joint(joint, self.unstack(q), name=f"optimal[{self.variant},{self.metric}]")


@dataclass
class OptimalityCertificate:
    gradient: list = field(default_factory=list)
    kkt_residual: float = float("inf")
    vi_gap: float = float("inf")
    satisfied: bool = False
    tol: float = 0.0

    def as_dict(self) -> dict:
        return {
            "gradient": [list(map(float, g)) for g in self.gradient],
            "kkt_residual": self.kkt_residual,
            "vi_gap": self.vi_gap,
            "satisfied": self.satisfied,
            "tol": self.tol,
        }


@dataclass
class OptimizeResult:
    problem: OptimizationProblem
    q: np.ndarray
    value: float
    certificate: OptimalityCertificate
    iterations: int
    report: Optional[DistanceReport] = None

    def q_map(self) -> dict:
        return self.problem.unstack(self.q)

    def q_labels(self) -> dict:
        return {fmt_signs(t): v.tolist() for t, v in self.q_map().items()}


# --- quadratic model of the average distance --------------------------------


def _terms(problem: OptimizationProblem):
    """Yield ``(weight, coeffs, target)`` with the objective ``sum w |sum_i a_i q_i - v|^2``."""
    idx = {t: i for i, t in enumerate(problem.outcomes)}
    cfg, variant = problem.config, problem.variant
    for k, s in marginal_keys(problem.arity):
        target = _target(cfg, k, s)
        if variant in ("G", "F"):
            a, b = _pair(variant, k, s)
            c = alpha() if variant == "G" else gamma_const()
            yield 0.25, {idx[a]: 1.0, idx[b]: 1.0}, 2.0 * target
            yield 0.25 * c, {idx[a]: 1.0, idx[b]: -1.0}, np.zeros(3)
        else:
            outs = _marginal_outcomes(variant, k, s)
            others = [i for i in range(3) if i != k]
            yield 1.0 / 16.0, {idx[t]: 1.0 for t in outs}, 4.0 * target
            for o in others:
                yield beta() / 16.0, {idx[t]: float(t[o]) for t in outs}, np.zeros(3)


@dataclass(frozen=True)
class Quadratic:
    """``0.5 x.H x + c.x + d`` on the flattened variables."""

    H: np.ndarray
    c: np.ndarray
    d: float

    @property
    def lipschitz(self) -> float:
        return float(np.linalg.eigvalsh(self.H)[-1])


def quadratic_model(problem: OptimizationProblem) -> Quadratic:
    m = len(problem.outcomes)
    H = np.zeros((3 * m, 3 * m))
    c = np.zeros(3 * m)
    d = 0.0
    eye = np.eye(3)
    for w, coeffs, v in _terms(problem):
        for i, ai in coeffs.items():
            c[3 * i : 3 * i + 3] += -2.0 * w * ai * v
            for j, aj in coeffs.items():
                H[3 * i : 3 * i + 3, 3 * j : 3 * j + 3] += 2.0 * w * ai * aj * eye
        d += w * float(v @ v)
    return Quadratic(H, c, d)


def objective_and_gradient(problem: OptimizationProblem, q, model: Optional[Quadratic] = None):
    """Total average distance and its gradient, shaped like ``q`` as ``(m, 3)``."""
    if problem.metric != "average":
        raise UnsupportedProblem("the analytic gradient exists for the average metric only")
    model = model or quadratic_model(problem)
    x = np.asarray(q, dtype=float).reshape(-1)
    hx = model.H @ x
    value = 0.5 * float(x @ hx) + float(model.c @ x) + model.d
    return value, (hx + model.c).reshape(-1, 3)


def project_balls(q: np.ndarray) -> np.ndarray:
    q = np.array(q, dtype=float).reshape(-1, 3)
    n = np.linalg.norm(q, axis=1)
    scale = np.where(n > 1.0, 1.0 / np.maximum(n, 1e-300), 1.0)
    return q * scale[:, None]


def _natural_residual(q: np.ndarray, grad: np.ndarray) -> np.ndarray:
    return np.linalg.norm(q - project_balls(q - grad), axis=1)


def certify(problem: OptimizationProblem, q, tol: float = 1e-8, model: Optional[Quadratic] = None) -> OptimalityCertificate:
    """Check ``grad.(p - q) >= 0`` for all ``p`` in the product of unit balls.

    Block by block this holds iff the gradient vanishes or ``q_k`` is the
    unit vector opposite to it.  ``vi_gap`` is ``max_k (grad_k.q_k + |grad_k|)``
    and ``kkt_residual`` the projected-gradient residual; both vanish exactly
    at the optimum.
    """
    q = np.asarray(q, dtype=float).reshape(-1, 3)
    if np.any(np.linalg.norm(q, axis=1) > 1.0 + 1e-12):
        raise InfeasiblePoint("some output vector lies outside the unit ball")
    _, grad = objective_and_gradient(problem, q, model)
    ok = True
    for qk, gk in zip(q, grad):
        gn = np.linalg.norm(gk)
        if gn > tol and np.linalg.norm(qk + gk / gn) > tol:
            ok = False
    gap = float(np.max(np.einsum("ij,ij->i", grad, q) + np.linalg.norm(grad, axis=1)))
    res = float(np.max(_natural_residual(q, grad)))
    return OptimalityCertificate(list(grad), res, gap, ok, tol)


def _minimize_average(problem, init, params: OptimizerParams):
    model = quadratic_model(problem)
    step = 1.0 / model.lipschitz
    x = project_balls(init)
    y, x_prev, theta = x.copy(), x.copy(), 1.0
    for it in range(1, params.max_iter + 1):
        base = y if params.accelerate else x
        _, g = objective_and_gradient(problem, base, model)
        x_new = project_balls(base - step * g)
        if params.accelerate:
            theta_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
            y = x_new + ((theta - 1.0) / theta_new) * (x_new - x_prev)
            x_prev, theta = x_new, theta_new
        x = x_new
        _, g = objective_and_gradient(problem, x, model)
        if np.max(_natural_residual(x, g)) < params.kkt_tol:
            value, _ = objective_and_gradient(problem, x, model)
            return x, value, it, model
    raise MaxIterations(f"projected gradient did not reach residual {params.kkt_tol} in {params.max_iter} steps")


# --- worst case --------------------------------------------------------------


def _endpoint_pairs(problem: OptimizationProblem):
    """``(marginal index, outcome index, target)`` for every endpoint distance."""
    if problem.variant == "E":
        raise UnsupportedProblem("worst-case optimization is implemented for the two-endpoint variants G and F")
    idx = {t: i for i, t in enumerate(problem.outcomes)}
    pairs = []
    for m, (k, s) in enumerate(marginal_keys(problem.arity)):
        target = _target(problem.config, k, s)
        for t in _pair(problem.variant, k, s):
            pairs.append((m, idx[t], target))
    return pairs


def _minimize_worst_case(problem, init, params: OptimizerParams):
    """Epigraph form solved by SLSQP.

    With ``equal_distance`` one level ``t`` bounds every endpoint distance
    and ``t`` is minimized, which forces the marginal distances to a common
    value.  Otherwise each marginal gets its own level and their sum is
    minimized.
    """
    pairs = _endpoint_pairs(problem)
    nq = len(problem.outcomes)
    nm = 2 * problem.arity
    nt = 1 if params.equal_distance else nm
    q0 = project_balls(init).reshape(-1)
    q0m = q0.reshape(-1, 3)
    levels0 = np.zeros(nm)
    for m, i, v in pairs:
        levels0[m] = max(levels0[m], np.linalg.norm(q0m[i] - v))
    t0 = np.array([levels0.max()]) if nt == 1 else levels0
    z0 = np.concatenate([q0, t0 + 0.1])

    def split(z):
        return z[: 3 * nq].reshape(-1, 3), z[3 * nq :]

    def level(t, m):
        return t[0] if nt == 1 else t[m]

    def objective(z):
        return float(np.sum(split(z)[1]))

    def objective_jac(z):
        g = np.zeros_like(z)
        g[3 * nq :] = 1.0
        return g

    def cons(z):
        q, t = split(z)
        out = [level(t, m) ** 2 - float((q[i] - v) @ (q[i] - v)) for m, i, v in pairs]
        out += [1.0 - float(qk @ qk) for qk in q]
        out += list(t)
        return np.array(out)

    def cons_jac(z):
        q, t = split(z)
        rows = []
        for m, i, v in pairs:
            r = np.zeros_like(z)
            r[3 * i : 3 * i + 3] = -2.0 * (q[i] - v)
            r[3 * nq + (0 if nt == 1 else m)] = 2.0 * level(t, m)
            rows.append(r)
        for k, qk in enumerate(q):
            r = np.zeros_like(z)
            r[3 * k : 3 * k + 3] = -2.0 * qk
            rows.append(r)
        for j in range(nt):
            r = np.zeros_like(z)
            r[3 * nq + j] = 1.0
            rows.append(r)
        return np.array(rows)

    res = scipy_minimize(
        objective,
        z0,
        jac=objective_jac,
        constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
        method="SLSQP",
        options={"ftol": params.worst_tol, "maxiter": 1000},
    )
    if not res.success:
        raise MaxIterations(f"worst-case solver failed: {res.message}")
    q, _ = split(res.x)
    q = project_balls(q)
    inst = problem.instrument(q)
    report = distance_report(inst, problem.config, "worst_case")
    value = report.total
    slack = float(-min(0.0, cons(res.x).min()))
    gap = abs(value - (nm * res.fun if nt == 1 else res.fun))
    cert = OptimalityCertificate([], slack, gap, bool(res.success and slack < 1e-8), 1e-8)
    return q, value, int(res.nit), cert, report


def minimize(problem: OptimizationProblem, init=None, params: Optional[OptimizerParams] = None) -> OptimizeResult:
    """Optimal output vectors for ``problem``; start defaults to the ball centers."""
    params = params or OptimizerParams()
    init = np.zeros((len(problem.outcomes), 3)) if init is None else np.asarray(init, dtype=float).reshape(-1, 3)
    if problem.metric == "average":
        q, value, it, model = _minimize_average(problem, init, params)
        cert = certify(problem, q, tol=max(1e-8, 10 * params.kkt_tol), model=model)
        report = distance_report(problem.instrument(q), problem.config, "average")
        log.debug("average %s converged in %d steps, D = %.12g", problem.variant, it, value)
    else:
        q, value, it, cert, report = _minimize_worst_case(problem, init, params)
    report.certificate = cert
    return OptimizeResult(problem, q, value, cert, it, report)


def multistart(problem: OptimizationProblem, n_starts: int = 50, seed: int = 0, params: Optional[OptimizerParams] = None):
    """Run :func:`minimize` from random feasible starts; returns every result."""
    rng = np.random.default_rng(seed)
    out = []
    m = len(problem.outcomes)
    for _ in range(n_starts):
        v = rng.normal(size=(m, 3))
        v *= (rng.uniform(size=m) ** (1.0 / 3.0) / np.linalg.norm(v, axis=1))[:, None]
        out.append(minimize(problem, v, params))
    return out


def equal_distance_check(report: DistanceReport, tol: float = 1e-9) -> bool:
    vals = np.array(list(report.per_outcome.values()))
    return bool(vals.max() - vals.min() <= tol)


def symmetric_candidate(problem: OptimizationProblem) -> np.ndarray:
    """The symmetric candidate optimum used for comparison in reports."""
    frame = problem.config.frame()
    n = problem.arity
    if problem.metric == "average":
        scale = 1.0 / np.sqrt(n)
    else:
        scale = 1.0 / n
    return np.array([scale * np.asarray(t, dtype=float) @ frame[:n] for t in problem.outcomes])
