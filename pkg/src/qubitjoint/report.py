"""Run configurations, report commands and report serialization.

Every command returns a :class:`Report`: a plain nested dict with the
sections ``command``, ``inputs``, ``results``, ``constants`` and ``meta``.
Only ``meta`` carries timing and version data, so two runs with the same
inputs agree byte for byte on everything else.
"""

from __future__ import annotations

import json
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bloch import Axis
from .errors import QubitJointError, VectorTooLong
from .instruments import luders_of_joint, luders_pair_jointly_measurable, rank1_from_joint, worst_case_mixture
from .integration import IntegrationScheme, ball_estimate
from .metrics import (
    SQRT2,
    AxisConfig,
    alpha,
    alpha_integrand,
    average_distance_numeric_estimate,
    beta,
    beta_integrand,
    distance_report,
    gamma_const,
    gamma_integrand,
    sampled_sup,
    marginal_keys,
    outcome_label,
    variant_joint,
)
from .observables import (
    check_orthogonal,
    fmt_signs,
    joint_measurable_pair,
    parity,
    parse_signs,
    second_witness,
    smeared_observable,
)
from .optimize import OptimizationProblem, OptimizerParams, equal_distance_check, minimize

ROUNDED_TOL = 5e-3
CLOSED_TOL = 1e-6
MATCH_TOL = 1e-6


class ReproductionMismatch(Exception):
    """Raised by the reproduce command when a comparison row fails."""

    def __init__(self, report):
        super().__init__("one or more reproduction rows failed")
        self.report = report


@dataclass
class RunConfig:
    axes: str = "standard"
    eta: Optional[float] = None
    variant: str = "g"
    metric: str = "average"
    scheme: str = "mc"
    samples: int = 1_000_000
    nodes: int = 64
    seed: int = 42
    eta_min: float = 0.6
    eta_max: float = 0.8
    eta_step: float = 1e-3
    max_iter: int = 100_000
    kkt_tol: float = 1e-9
    out: Optional[str] = None
    format: str = "text"
    frame: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.variant = self.variant.lower()
        self.metric = self.metric.replace("-", "_")
        if self.variant not in ("g", "e", "f"):
            raise QubitJointError(f"variant must be g, e or f, got {self.variant!r}")
        if self.metric not in ("average", "worst_case"):
            raise QubitJointError(f"metric must be average or worst-case, got {self.metric!r}")
        if self.format not in ("text", "json"):
            raise QubitJointError(f"format must be text or json, got {self.format!r}")
        if self.eta is not None and not 0.0 <= self.eta <= 1.0:
            raise QubitJointError(f"eta must lie in [0, 1], got {self.eta}")
        if not (0.0 <= self.eta_min <= self.eta_max <= 1.0 and self.eta_step > 0):
            raise QubitJointError("need 0 <= eta_min <= eta_max <= 1 and eta_step > 0")
        if self.samples < 2 or self.nodes < 2 or self.max_iter < 1 or self.kkt_tol <= 0:
            raise QubitJointError("samples, nodes, max_iter and kkt_tol must be positive")
        self.frame = parse_axes(self.axes)
        IntegrationScheme(self.scheme, self.samples, self.nodes, self.seed)

    @property
    def integration(self) -> IntegrationScheme:
        return IntegrationScheme(self.scheme, self.samples, self.nodes, self.seed)

    @property
    def params(self) -> OptimizerParams:
        return OptimizerParams(max_iter=self.max_iter, kkt_tol=self.kkt_tol)

    def axis_config(self, variant: Optional[str] = None) -> AxisConfig:
        n = 2 if (variant or self.variant).upper() == "G" else 3
        eta = 1.0 / np.sqrt(n)
        return AxisConfig(tuple(Axis.from_vector(v) for v in self.frame[:n]), eta)

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("frame")
        d.pop("out")
        d["frame"] = self.frame.tolist()
        return d


def parse_axes(text: str) -> np.ndarray:
    """``"standard"`` or three ``;``-separated comma triples, normalized."""
    if text == "standard":
        return np.eye(3)
    try:
        rows = [[float(c) for c in part.split(",")] for part in text.split(";")]
    except ValueError as exc:
        raise QubitJointError(f"cannot parse axes {text!r}: {exc}") from None
    if len(rows) not in (2, 3) or any(len(r) != 3 for r in rows):
        raise QubitJointError("axes must be 'standard' or two/three comma triples separated by ';'")
    axes = [Axis.from_vector(r) for r in rows]
    check_orthogonal(*axes)
    return AxisConfig(tuple(axes), 1.0 / np.sqrt(3)).frame()


def _meta(started: float) -> dict:
    return {
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "elapsed_s": round(time.perf_counter() - started, 6),
    }


def _vec(v) -> list:
    return [float(c) for c in np.asarray(v)]


def constants_block() -> dict:
    return {"alpha": alpha(), "beta": beta(), "gamma": gamma_const()}


# --- commands ---------------------------------------------------------------


def cmd_check_joint(cfg: RunConfig) -> dict:
    """Sweep the smearing parameter for the first two axes."""
    started = time.perf_counter()
    x, y = cfg.frame[0], cfg.frame[1]
    etas = np.round(np.arange(cfg.eta_min, cfg.eta_max + 0.5 * cfg.eta_step, cfg.eta_step), 12)
    sweep = []
    for eta in etas:
        a, b = smeared_observable(x, eta), smeared_observable(y, eta)
        w = joint_measurable_pair(a, b)
        sweep.append({"eta": float(eta), "feasible": w is not None})
    feasible = [s["eta"] for s in sweep if s["feasible"]]
    infeasible = [s["eta"] for s in sweep if not s["feasible"]]
    results = {"sweep": sweep}
    if feasible and infeasible and max(feasible) < min(infeasible):
        lo, hi = max(feasible), min(infeasible)
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            if joint_measurable_pair(smeared_observable(x, mid), smeared_observable(y, mid)) is None:
                hi = mid
            else:
                lo = mid
        results["threshold"] = {"last_feasible_grid": max(feasible), "first_infeasible_grid": min(infeasible), "refined": lo}
    else:
        results["threshold"] = None
    probe = cfg.eta if cfg.eta is not None else 1.0 / SQRT2
    a, b = smeared_observable(x, probe), smeared_observable(y, probe)
    w = joint_measurable_pair(a, b)
    point = {"eta": float(probe), "feasible": w is not None}
    if w is not None:
        other = second_witness(a, b, w)
        point.update(
            gamma=w.gamma,
            g=_vec(w.g),
            unique=other is None,
            second_witness=None if other is None else {"gamma": other.gamma, "g": _vec(other.g)},
        )
    point["luders_pair_jointly_measurable"] = luders_pair_jointly_measurable(a, b)
    results["point"] = point
    return {"command": "check-joint", "inputs": cfg.echo(), "results": results, "meta": _meta(started)}


def _mixture_fit(q: np.ndarray, qref: np.ndarray) -> tuple[float, float]:
    """Best ``w`` with ``q ~ w qref`` and the max residual."""
    w = float(np.sum(q * qref) / np.sum(qref * qref))
    return w, float(np.max(np.abs(q - w * qref)))


def optimal_instrument(cfg: RunConfig, variant: str, metric: str) -> dict:
    config = cfg.axis_config(variant)
    problem = OptimizationProblem(config, variant.upper(), metric)
    res = minimize(problem, params=cfg.params)
    inst = problem.instrument(res.q)
    joint = inst.joint
    lud = luders_of_joint(joint)
    qref = problem.stack(lud.output_vectors())
    closed = distance_report(inst, config, "average")
    out = {
        "variant": problem.variant,
        "metric": metric,
        "q": res.q_labels(),
        "value": res.value,
        "iterations": res.iterations,
        "certificate": res.certificate.as_dict(),
        "per_outcome": {outcome_label(*k): v for k, v in res.report.per_outcome.items()},
        "equal_distances": equal_distance_check(res.report, 1e-9 if metric == "average" else 1e-7),
        "average_closed": closed.as_dict(),
    }
    if metric == "average":
        numeric = {}
        for k, s in marginal_keys(joint.arity):
            est = average_distance_numeric_estimate(inst, config, k, s, cfg.integration)
            numeric[outcome_label(k, s)] = {"value": est.value, "error": est.error}
        out["average_numeric"] = numeric
        out["matches_luders"] = bool(np.max(np.abs(res.q - qref)) <= MATCH_TOL)
    else:
        wc = distance_report(inst, config, "worst_case")
        out["worst_case"] = wc.as_dict()
        w, resid = _mixture_fit(res.q, qref)
        out["mixture_weight"] = w
        out["mixture_residual"] = resid
        out["matches_mixture"] = resid <= MATCH_TOL
        if problem.variant == "G":
            ref = problem.stack(worst_case_mixture(joint, 1.0 / SQRT2).output_vectors())
            out["matches_sqrt_half_mixture"] = bool(np.max(np.abs(res.q - ref)) <= MATCH_TOL)
        sup = {
            outcome_label(k, s): sampled_sup(inst, config, k, s, n=20_000, seed=cfg.seed)
            for k, s in marginal_keys(joint.arity)
        }
        out["worst_case_sampled_sup"] = sup
    return out


def cmd_optimal_instrument(cfg: RunConfig) -> dict:
    started = time.perf_counter()
    results = optimal_instrument(cfg, cfg.variant, cfg.metric)
    return {
        "command": "optimal-instrument",
        "inputs": cfg.echo(),
        "results": results,
        "constants": constants_block(),
        "meta": _meta(started),
    }


def constants_numeric(scheme: IntegrationScheme) -> dict:
    out = {}
    for name, f, closed in (
        ("alpha", alpha_integrand, alpha()),
        ("beta", beta_integrand, beta()),
        ("gamma", gamma_integrand, gamma_const()),
    ):
        est = ball_estimate(f, scheme)
        out[name] = {"closed": closed, "numeric": est.value, "error": est.error, "delta": abs(est.value - closed)}
    return out


def cmd_constants(cfg: RunConfig) -> dict:
    started = time.perf_counter()
    quad = IntegrationScheme("quad", nodes=cfg.nodes)
    mc = IntegrationScheme("mc", samples=cfg.samples, seed=cfg.seed)
    results = {
        "closed": constants_block(),
        "quad": constants_numeric(quad),
        "mc": constants_numeric(mc),
        "gamma_is_twice_beta": gamma_const() == 2.0 * beta(),
    }
    return {"command": "constants", "inputs": cfg.echo(), "results": results, "meta": _meta(started)}


def _row(name, computed, closed, rounded=None) -> dict:
    """One comparison row: 1e-6 against the closed form, 5e-3 against a two-digit value."""
    row = {"name": name, "computed": computed, "closed": closed, "delta_closed": abs(computed - closed)}
    ok = row["delta_closed"] <= CLOSED_TOL
    if rounded is not None:
        row["rounded"] = rounded
        row["delta_rounded"] = abs(computed - rounded)
        ok = ok and row["delta_rounded"] <= ROUNDED_TOL
    row["pass"] = bool(ok)
    return row


def cmd_reproduce(cfg: RunConfig) -> dict:
    started = time.perf_counter()
    rt2 = np.sqrt(2.0)
    c3 = (1.0 - 1.0 / np.sqrt(3.0)) ** 2
    g = optimal_instrument(cfg, "g", "average")
    e = optimal_instrument(cfg, "e", "average")
    f = optimal_instrument(cfg, "f", "average")
    w = optimal_instrument(cfg, "g", "worst_case")
    per = lambda r: float(np.mean(list(r["per_outcome"].values())))  # noqa: E731
    rows = [
        _row("2-axis average per outcome", per(g), 0.5 * (3 - 2 * rt2 + alpha()), 0.15),
        _row("2-axis average total", g["value"], 2 * (3 - 2 * rt2 + alpha())),
        _row("3-axis E average per outcome", per(e), 2 / 3 * beta() + c3, 0.23),
        _row("3-axis F average per outcome", per(f), 2 / 3 * gamma_const() + c3, 0.28),
        _row("2-axis worst-case per outcome", per(w), 1.0 / rt2),
        _row("2-axis worst-case total", w["value"], 2.0 * rt2),
    ]
    checks = {
        "ordering_G_lt_E_lt_F": per(g) < per(e) < per(f),
        "G_average_is_luders": g["matches_luders"],
        "E_average_is_luders": e["matches_luders"],
        "F_average_is_luders": f["matches_luders"],
        "G_worst_case_is_sqrt_half_mixture": w["matches_sqrt_half_mixture"],
        "all_certified": all(r["certificate"]["satisfied"] for r in (g, e, f, w)),
    }
    results = {
        "rows": rows,
        "checks": checks,
        "optimal_vectors": {"G_average": g["q"], "E_average": e["q"], "F_average": f["q"], "G_worst_case": w["q"]},
        "pass": all(r["pass"] for r in rows) and all(checks.values()),
    }
    report = {
        "command": "reproduce",
        "inputs": cfg.echo(),
        "results": results,
        "constants": constants_block(),
        "meta": _meta(started),
    }
    if not results["pass"]:
        raise ReproductionMismatch(report)
    return report


# --- instrument files -------------------------------------------------------


def read_instrument_file(path) -> dict:
    """Parse ``tag x y z`` lines (or a JSON object of tag -> vector).

    Blank lines and ``#`` comments are ignored.  Errors name the file, the
    line and the offending field.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise QubitJointError(f"{path}: cannot read instrument file: {exc.strerror}") from None
    entries = {}
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise QubitJointError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        items = [(None, k, v) for k, v in data.items()]
    else:
        items = []
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise QubitJointError(f"{path}:{n}: expected 'tag x y z', got {len(parts)} fields")
            items.append((n, parts[0], parts[1:]))
    for n, tag, vec in items:
        where = f"{path}:{n}" if n is not None else f"{path}[{tag!r}]"
        try:
            t = parse_signs(tag)
        except ValueError as exc:
            raise QubitJointError(f"{where}: field 'tag': {exc}") from None
        try:
            v = np.array([float(c) for c in vec])
        except (TypeError, ValueError):
            raise QubitJointError(f"{where}: field 'vector': not three numbers") from None
        if v.shape != (3,):
            raise QubitJointError(f"{where}: field 'vector': expected 3 components")
        if np.linalg.norm(v) > 1.0 + 1e-12:
            raise VectorTooLong(f"{where}: field 'vector': length {np.linalg.norm(v):.6g} exceeds 1")
        if t in entries:
            raise QubitJointError(f"{where}: duplicate tag {tag!r}")
        entries[t] = v
    if not entries:
        raise QubitJointError(f"{path}: no entries")
    return entries


def infer_variant(entries: dict) -> str:
    arity = {len(t) for t in entries}
    if arity == {2} and len(entries) == 4:
        return "g"
    if arity == {3} and len(entries) == 8:
        return "e"
    if arity == {3} and len(entries) == 4 and all(parity(t) == 1 for t in entries):
        return "f"
    raise QubitJointError("instrument file must list the 4 G outcomes, 8 E outcomes or 4 even-parity F outcomes")


def write_instrument_file(path, q: dict) -> None:
    lines = [f"{tag} {v[0]!r} {v[1]!r} {v[2]!r}" for tag, v in q.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_evaluate(cfg: RunConfig, instrument_file) -> dict:
    started = time.perf_counter()
    entries = read_instrument_file(instrument_file)
    variant = infer_variant(entries)
    config = cfg.axis_config(variant)
    joint = variant_joint(variant.upper(), config)
    try:
        inst = rank1_from_joint(joint, entries)
    except KeyError as exc:
        raise QubitJointError(f"{instrument_file}: {exc.args[0]}") from None
    avg = distance_report(inst, config, "average")
    numeric = distance_report(inst, config, "average", method="numeric", scheme=cfg.integration)
    wc = distance_report(inst, config, "worst_case")
    results = {
        "variant": variant.upper(),
        "q": {fmt_signs(t): _vec(v) for t, v in entries.items()},
        "average_closed": avg.as_dict(),
        "average_numeric": numeric.as_dict(),
        "worst_case": wc.as_dict(),
    }
    inputs = cfg.echo()
    inputs["instrument_file"] = str(instrument_file)
    return {"command": "evaluate", "inputs": inputs, "results": results, "meta": _meta(started)}


# --- serialization ----------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def to_json(report: dict) -> str:
    return json.dumps(_clean(report), indent=2, sort_keys=False) + "\n"


def _flatten(prefix: str, obj, out: list) -> None:
    if isinstance(obj, dict) and obj:
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    else:
        out.append(f"{prefix} = {json.dumps(obj)}")


def to_text(report: dict) -> str:
    """One ``dotted.key = json-value`` line per leaf."""
    lines: list = []
    _flatten("", _clean(report), lines)
    return "\n".join(lines) + "\n"


def from_text(text: str) -> dict:
    out: dict = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition(" = ")
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = json.loads(value)
    return out


def dumps(report: dict, fmt: str = "text") -> str:
    return to_json(report) if fmt == "json" else to_text(report)


def loads(text: str) -> dict:
    return json.loads(text) if text.lstrip().startswith("{") else from_text(text)


def payload(report: dict) -> dict:
    """Everything except the ``meta`` section."""
    return {k: v for k, v in _clean(report).items() if k != "meta"}


def config_from_inputs(inputs: dict) -> RunConfig:
    """Rebuild the :class:`RunConfig` echoed in a report."""
    fields_ = {k: v for k, v in inputs.items() if k in RunConfig.__dataclass_fields__ and k != "frame"}
    return RunConfig(**fields_)


__all__ = [
    "RunConfig",
    "cmd_check_joint",
    "cmd_optimal_instrument",
    "cmd_constants",
    "cmd_reproduce",
    "cmd_evaluate",
    "dumps",
    "loads",
]
