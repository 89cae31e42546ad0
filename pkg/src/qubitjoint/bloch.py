"""Qubit operators in the Pauli basis.

Every operator here is a 2x2 Hermitian matrix ``s*I + v.sigma`` stored as the
real pair ``(s, v)``.  Products of two such operators are not Hermitian in
general, so the module only exposes the combinations that stay Hermitian:
linear combinations, the trace pairing ``tr[AB]`` and the sandwich ``S A S``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonUnitAxis, NotPositive, ZeroTrace

DEFAULT_TOL = 1e-9
AXIS_TOL = 1e-12


def _vec3(v) -> np.ndarray:
    arr = np.array(v, dtype=float).reshape(3)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HermitianOp:
    """The operator ``scalar * I + vec . sigma``."""

    scalar: float
    vec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scalar", float(self.scalar))
        object.__setattr__(self, "vec", _vec3(self.vec))

    @classmethod
    def identity(cls) -> HermitianOp:
        return cls(1.0, np.zeros(3))

    @classmethod
    def zero(cls) -> HermitianOp:
        return cls(0.0, np.zeros(3))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    @property
    def trace(self) -> float:
        return 2.0 * self.scalar

    def eigenvalues(self) -> tuple[float, float]:
        """Return ``(smallest, largest)`` eigenvalue."""
        n = self.norm
        return self.scalar - n, self.scalar + n

    def __add__(self, other: HermitianOp) -> HermitianOp:
        return HermitianOp(self.scalar + other.scalar, self.vec + other.vec)

    def __sub__(self, other: HermitianOp) -> HermitianOp:
        return HermitianOp(self.scalar - other.scalar, self.vec - other.vec)

    def __neg__(self) -> HermitianOp:
        return HermitianOp(-self.scalar, -self.vec)

    def __mul__(self, c: float) -> HermitianOp:
        return HermitianOp(c * self.scalar, c * self.vec)

    __rmul__ = __mul__

    def allclose(self, other: HermitianOp, tol: float = 1e-12) -> bool:
        return abs(self.scalar - other.scalar) <= tol and bool(
            np.all(np.abs(self.vec - other.vec) <= tol)
        )

    def to_matrix(self) -> np.ndarray:
        """Dense complex 2x2 matrix, for interop and debugging only."""
        s, (a, b, c) = self.scalar, self.vec
        return np.array([[s + c, a - 1j * b], [a + 1j * b, s - c]])

    def __repr__(self):
        return f"HermitianOp({self.scalar:.6g}, {np.array2string(self.vec, precision=6)})"


@dataclass(frozen=True, eq=False)
class QubitState:
    """Density operator ``(I + bloch . sigma) / 2``."""

    bloch: np.ndarray

    def __post_init__(self):
        r = _vec3(self.bloch)
        if np.linalg.norm(r) > 1.0 + DEFAULT_TOL:
            raise NotPositive(f"Bloch vector of length {np.linalg.norm(r):.6g} > 1")
        object.__setattr__(self, "bloch", r)

    @classmethod
    def maximally_mixed(cls) -> QubitState:
        return cls(np.zeros(3))

    @property
    def op(self) -> HermitianOp:
        return HermitianOp(0.5, 0.5 * self.bloch)

    @property
    def purity_radius(self) -> float:
        return float(np.linalg.norm(self.bloch))

    def __repr__(self):
        return f"QubitState({np.array2string(self.bloch, precision=6)})"


@dataclass(frozen=True, eq=False)
class Axis:
    """A unit vector in R^3."""

    unit: np.ndarray

    def __post_init__(self):
        u = _vec3(self.unit)
        if abs(np.linalg.norm(u) - 1.0) > AXIS_TOL:
            raise NonUnitAxis(f"axis has length {np.linalg.norm(u):.15g}")
        object.__setattr__(self, "unit", u)

    @classmethod
    def from_vector(cls, v) -> Axis:
        """Normalize ``v`` and wrap it; zero vectors are rejected."""
        v = np.asarray(v, dtype=float).reshape(3)
        n = np.linalg.norm(v)
        if n == 0.0:
            raise NonUnitAxis("cannot normalize the zero vector")
        return cls(v / n)

    def __neg__(self) -> Axis:
        return Axis(-self.unit)

    def __repr__(self):
        return f"Axis({np.array2string(self.unit, precision=6)})"


def as_axis(a) -> Axis:
    """Accept an :class:`Axis` or a 3-vector that must already be unit."""
    return a if isinstance(a, Axis) else Axis(a)


def op_add(a: HermitianOp, b: HermitianOp) -> HermitianOp:
    return a + b


def op_scale(c: float, a: HermitianOp) -> HermitianOp:
    return a * c


def trace_pair(a: HermitianOp, b: HermitianOp) -> float:
    """``tr[a b]``, real for Hermitian ``a`` and ``b``."""
    return 2.0 * (a.scalar * b.scalar + float(a.vec @ b.vec))


def is_positive(a: HermitianOp, tol: float = DEFAULT_TOL) -> bool:
    return a.scalar - a.norm >= -tol


def is_effect(a: HermitianOp, tol: float = DEFAULT_TOL) -> bool:
    lo, hi = a.eigenvalues()
    return lo >= -tol and hi <= 1.0 + tol


def is_rank_one(a: HermitianOp, tol: float = DEFAULT_TOL) -> bool:
    return abs(a.scalar - a.norm) <= tol and a.scalar > tol


def trace_distance(s1: QubitState, s2: QubitState) -> float:
    """Trace norm of ``s1 - s2``; for qubits this is the Bloch distance."""
    return float(np.linalg.norm(s1.bloch - s2.bloch))


def normalize_state(op: HermitianOp, tol: float = DEFAULT_TOL) -> tuple[float, QubitState]:
    """Split an unnormalized positive operator into ``(trace, state)``."""
    if op.scalar <= tol:
        raise ZeroTrace(f"operator trace {op.trace:.3g} is not positive")
    if not is_positive(op, tol):
        raise NotPositive(f"operator has eigenvalue {op.eigenvalues()[0]:.3g}")
    r = op.vec / op.scalar
    n = np.linalg.norm(r)
    if n > 1.0:
        # within tolerance of the sphere; clip rounding
        r = r / n
    return op.trace, QubitState(r)


def sqrt_op(a: HermitianOp, tol: float = DEFAULT_TOL) -> HermitianOp:
    """Positive square root of a positive operator.

    With eigenvalues ``l± = s ± |v|`` the root is ``p I + q v/|v| . sigma``
    where ``p = (sqrt(l+) + sqrt(l-))/2`` and ``q = (sqrt(l+) - sqrt(l-))/2``.
    """
    if not is_positive(a, tol):
        raise NotPositive(f"operator has eigenvalue {a.eigenvalues()[0]:.3g}")
    n = a.norm
    hi = np.sqrt(max(a.scalar + n, 0.0))
    small = a.scalar - n
    # a rank-one input leaves rounding noise here, and sqrt would amplify it
    if small <= 8.0 * np.finfo(float).eps * max(abs(a.scalar), n):
        small = 0.0
    lo = np.sqrt(small)
    if n == 0.0:
        return HermitianOp(hi, np.zeros(3))
    return HermitianOp(0.5 * (hi + lo), 0.5 * (hi - lo) * a.vec / n)


def sandwich(s: HermitianOp, a: HermitianOp) -> HermitianOp:
    """``s a s`` for Hermitian ``s`` and ``a``.

    Expanding the Pauli products gives scalar
    ``p^2 a0 + 2 p (u.w) + a0 |u|^2`` and vector
    ``2 p a0 u + 2 (u.w) u + (p^2 - |u|^2) w`` for ``s = (p, u)``, ``a = (a0, w)``.
    """
    p, u = s.scalar, s.vec
    a0, w = a.scalar, a.vec
    uw = float(u @ w)
    uu = float(u @ u)
    scalar = p * p * a0 + 2.0 * p * uw + a0 * uu
    vec = 2.0 * p * a0 * u + 2.0 * uw * u + (p * p - uu) * w
    return HermitianOp(scalar, vec)


def projection(axis: Axis, sign: int = 1) -> HermitianOp:
    """Rank-one projection ``(I + sign * axis . sigma) / 2``."""
    return HermitianOp(0.5, 0.5 * sign * as_axis(axis).unit)
