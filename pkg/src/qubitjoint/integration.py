"""Normalized averages over the Bloch ball.

Two schemes are provided: seeded Monte Carlo with rejection sampling from
the enclosing cube, and a tensor-product Gauss-Legendre rule in spherical
coordinates.  Integrands are vectorized callables mapping an ``(N, 3)``
array of Bloch vectors to ``N`` values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import qmc

Integrand = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class IntegrationScheme:
    name: str = "mc"
    samples: int = 1_000_000
    nodes: int = 64
    seed: int = 42
    chunk: int = 100_000

    def __post_init__(self):
        if self.name not in ("mc", "quad"):
            raise ValueError(f"unknown integration scheme {self.name!r}; use 'mc' or 'quad'")
        if self.samples < 2 or self.nodes < 2 or self.chunk < 1:
            raise ValueError("samples and nodes must be at least 2")


@dataclass(frozen=True)
class Estimate:
    value: float
    error: float
    evaluations: int


def uniform_ball(n: int, rng: np.random.Generator, chunk: int = 100_000) -> np.ndarray:
    """``n`` points uniform in the unit ball, drawn in fixed-size chunks."""
    out = np.empty((n, 3))
    filled = 0
    while filled < n:
        pts = rng.uniform(-1.0, 1.0, size=(chunk, 3))
        pts = pts[np.einsum("ij,ij->i", pts, pts) <= 1.0]
        take = min(len(pts), n - filled)
        out[filled : filled + take] = pts[:take]
        filled += take
    return out


def _monte_carlo(f: Integrand, scheme: IntegrationScheme) -> Estimate:
    rng = np.random.default_rng(scheme.seed)
    total = 0.0
    total_sq = 0.0
    remaining = scheme.samples
    # chunks are reduced in a fixed order so the result depends only on the seed
    while remaining > 0:
        n = min(scheme.chunk, remaining)
        vals = np.asarray(f(uniform_ball(n, rng, scheme.chunk)), dtype=float)
        total += float(vals.sum())
        total_sq += float(vals @ vals)
        remaining -= n
    n = scheme.samples
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return Estimate(mean, float(np.sqrt(var / n)), n)


def spherical_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Points and weights of the ``nodes**3`` product rule, weights summing to 1."""
    xr, wr = np.polynomial.legendre.leggauss(nodes)
    rad = 0.5 * (xr + 1.0)
    wrad = 0.5 * wr * rad**2
    cth, wth = np.polynomial.legendre.leggauss(nodes)
    xp, wp = np.polynomial.legendre.leggauss(nodes)
    phi = np.pi * (xp + 1.0)
    wphi = np.pi * wp
    r, ct, ph = np.meshgrid(rad, cth, phi, indexing="ij")
    st = np.sqrt(1.0 - ct**2)
    pts = np.stack([r * st * np.cos(ph), r * st * np.sin(ph), r * ct], axis=-1).reshape(-1, 3)
    w = (wrad[:, None, None] * wth[None, :, None] * wphi[None, None, :]).reshape(-1)
    return pts, w * 3.0 / (4.0 * np.pi)


def _quadrature(f: Integrand, scheme: IntegrationScheme) -> Estimate:
    pts, w = spherical_rule(scheme.nodes)
    value = float(w @ np.asarray(f(pts), dtype=float))
    half = max(scheme.nodes // 2, 2)
    pts2, w2 = spherical_rule(half)
    coarse = float(w2 @ np.asarray(f(pts2), dtype=float))
    return Estimate(value, abs(value - coarse), len(w) + len(w2))


def ball_estimate(f: Integrand, scheme: IntegrationScheme | None = None) -> Estimate:
    """Average of ``f`` over the Bloch ball with an error estimate.

    The MC error is the standard error of the mean; the quadrature error is
    the difference from the rule with half as many nodes per axis, which
    overstates the true error for smooth integrands.
    """
    scheme = scheme or IntegrationScheme()
    if scheme.name == "mc":
        return _monte_carlo(f, scheme)
    return _quadrature(f, scheme)


def ball_average(f: Integrand, scheme: IntegrationScheme | None = None) -> float:
    return ball_estimate(f, scheme).value


def sobol_ball(n: int, seed: int = 0) -> np.ndarray:
    """Low-discrepancy points in the ball plus their projections onto the sphere.

    Returns ``2 n`` points: ``n`` interior points from a scrambled Sobol
    sequence mapped by the volume-preserving spherical transform, followed
    by the same directions at radius 1.
    """
    m = int(np.ceil(np.log2(max(n, 2))))
    u = qmc.Sobol(d=3, scramble=True, seed=seed).random_base2(m)[:n]
    rad = np.cbrt(u[:, 0])
    ct = 2.0 * u[:, 1] - 1.0
    st = np.sqrt(1.0 - ct**2)
    ph = 2.0 * np.pi * u[:, 2]
    dirs = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=1)
    return np.vstack([rad[:, None] * dirs, dirs])
