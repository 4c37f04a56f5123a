"""Dual quaternions ``Q_r + eps Q_c`` and the unit subset encoding rigid poses.

A pose (attitude ``Q``, position ``P`` expressed in the moved frame) is encoded
as ``Q + eps 1/2 Q o aug(P)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .dual_algebra import DualVector3
from .quaternion import UNIT_TOL, UnitInvariantError, UnitQuaternion, qconj, qmul

# -- kernels -----------------------------------------------------------------


@njit
def dqmul(a, b):
    out = np.empty(8)
    out[:4] = qmul(a[:4], b[:4])
    out[4:] = qmul(a[:4], b[4:]) + qmul(a[4:], b[:4])
    return out


@njit
def dqconj(a):
    out = np.empty(8)
    out[:4] = qconj(a[:4])
    out[4:] = qconj(a[4:])
    return out


@njit
def dq_aug(x):
    out = np.zeros(8)
    out[1:4] = x[:3]
    out[5:8] = x[3:]
    return out


@njit
def dq_red(y):
    out = np.empty(6)
    out[:3] = y[1:4]
    out[3:] = y[5:8]
    return out


@njit
def unit_residual(a):
    """(|norm(Q_r)^2 - 1|, |Q_r . Q_c| / max(1, |Q_c|))."""
    nr = a[0] ** 2 + a[1] ** 2 + a[2] ** 2 + a[3] ** 2
    dot = a[0] * a[4] + a[1] * a[5] + a[2] * a[6] + a[3] * a[7]
    nc = np.sqrt(a[4] ** 2 + a[5] ** 2 + a[6] ** 2 + a[7] ** 2)
    return abs(nr - 1.0), abs(dot) / max(1.0, nc)


@njit
def renormalize(a):
    """Normalize the real part, then project the dual part orthogonal to it."""
    out = np.empty(8)
    r = a[:4] / np.sqrt(a[0] ** 2 + a[1] ** 2 + a[2] ** 2 + a[3] ** 2)
    c = a[4:]
    out[:4] = r
    out[4:] = c - (r[0] * c[0] + r[1] * c[1] + r[2] * c[2] + r[3] * c[3]) * r
    return out


@njit
def frame_transform_flat(x, e):
    """``red(e* o aug(x) o e)`` plus the scalar-part residual, scaled by the operands."""
    y = dqmul(dqmul(dqconj(e), dq_aug(x)), e)
    scale_r = max(1.0, np.sqrt(x[0] ** 2 + x[1] ** 2 + x[2] ** 2))
    ec = np.sqrt(e[4] ** 2 + e[5] ** 2 + e[6] ** 2 + e[7] ** 2)
    scale_c = max(1.0, np.sqrt(x[3] ** 2 + x[4] ** 2 + x[5] ** 2) + scale_r * ec)
    resid = max(abs(y[0]) / scale_r, abs(y[4]) / scale_c)
    return dq_red(y), resid


@njit
def pose_to_dq_flat(Q, P):
    out = np.empty(8)
    out[:4] = Q
    p = np.zeros(4)
    p[1:] = P
    out[4:] = 0.5 * qmul(Q, p)
    return out


@njit
def dq_position_flat(a):
    """``red(2 Q_r* o Q_c)``."""
    return 2.0 * qmul(qconj(a[:4]), a[4:])[1:]


# -- value types -------------------------------------------------------------


def _vec4(x, name):
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.shape != (4,):
        raise ValueError(f"{name} must have 4 components, got shape {np.shape(x)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values: {arr}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DualQuaternion:
    """Dual quaternion; ``real`` and ``dual`` are scalar-first length-4 arrays."""

    real: np.ndarray
    dual: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "real", _vec4(self.real, "real part"))
        object.__setattr__(self, "dual", _vec4(self.dual, "dual part"))

    @classmethod
    def identity(cls):
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(4))

    @classmethod
    def from_flat(cls, a):
        a = np.asarray(a, dtype=float)
        return cls(a[:4], a[4:])

    def flat(self) -> np.ndarray:
        return np.concatenate((self.real, self.dual))

    def __neg__(self):
        return type(self)(-self.real, -self.dual)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.real.tolist()} + eps {self.dual.tolist()})"


class UnitDualQuaternion(DualQuaternion):
    """Element of the unit dual quaternion group (checked at construction).

    Orthogonality ``Q_r . Q_c = 0`` is checked relative to ``max(1, |Q_c|)``:
    the dual part carries half the position in metres, which reaches ~3e6 in
    orbit scenarios where the absolute dot product cannot be resolved to 1e-9.
    """

    def __post_init__(self):
        super().__post_init__()
        norm_err, orth_err = unit_residual(self.flat())
        if norm_err > UNIT_TOL or orth_err > UNIT_TOL:
            raise UnitInvariantError(
                f"not a unit dual quaternion: norm error {norm_err:.3e}, "
                f"orthogonality error {orth_err:.3e}"
            )

    @classmethod
    def from_product(cls, a, scale: float) -> "UnitDualQuaternion":
        """Wrap a flat product whose operands had dual parts of size ``scale``.

        Rounding in the dual part of a product grows with the operands, not
        with the result, so orthogonality is checked relative to ``scale`` too.
        """
        a = np.asarray(a, dtype=float)
        norm_err, orth_err = unit_residual(a)
        nc = max(1.0, float(np.linalg.norm(a[4:])))
        if norm_err > UNIT_TOL or orth_err * nc > UNIT_TOL * max(nc, scale):
            raise UnitInvariantError(
                f"not a unit dual quaternion: norm error {norm_err:.3e}, "
                f"orthogonality error {orth_err * nc / max(nc, scale):.3e}"
            )
        out = cls.__new__(cls)
        object.__setattr__(out, "real", a[:4])
        object.__setattr__(out, "dual", a[4:])
        DualQuaternion.__post_init__(out)
        return out


@dataclass(frozen=True, eq=False)
class Pose:
    """Attitude of frame 2 w.r.t. frame 1 and the 1->2 origin offset expressed in frame 2 [m]."""

    attitude: UnitQuaternion
    position: np.ndarray

    def __post_init__(self):
        if not isinstance(self.attitude, UnitQuaternion):
            object.__setattr__(self, "attitude", UnitQuaternion(np.asarray(self.attitude)))
        pos = np.array(self.position, dtype=float).reshape(-1)
        if pos.shape != (3,) or not np.all(np.isfinite(pos)):
            raise ValueError(f"position must be a finite 3-vector, got {self.position}")
        pos.setflags(write=False)
        object.__setattr__(self, "position", pos)


# -- operations --------------------------------------------------------------


def _promote(flat, *operands):
    if all(isinstance(o, UnitDualQuaternion) for o in operands):
        return UnitDualQuaternion.from_flat(flat)
    return DualQuaternion.from_flat(flat)


def dq_mul(a: DualQuaternion, b: DualQuaternion) -> DualQuaternion:
    return _promote(dqmul(a.flat(), b.flat()), a, b)


def dq_conj(a: DualQuaternion) -> DualQuaternion:
    return _promote(dqconj(a.flat()), a)


def is_unit(a: DualQuaternion, tol: float = UNIT_TOL) -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    norm_err, orth_err = unit_residual(a.flat())
    return norm_err <= tol and orth_err <= tol


def pose_to_dq(p: Pose) -> UnitDualQuaternion:
    return UnitDualQuaternion.from_flat(pose_to_dq_flat(p.attitude.components, p.position))


def dq_to_pose(x: DualQuaternion) -> Pose:
    if not is_unit(x):
        raise UnitInvariantError(f"cannot decode a pose from non-unit {x!r}")
    flat = x.flat()
    return Pose(UnitQuaternion(flat[:4]), dq_position_flat(flat))


def error_dq(desired: DualQuaternion, actual: DualQuaternion) -> UnitDualQuaternion:
    """Pose error ``desired* o actual``; no sign canonicalization."""
    scale = float(np.linalg.norm(desired.dual) + np.linalg.norm(actual.dual))
    return UnitDualQuaternion.from_product(dqmul(dqconj(desired.flat()), actual.flat()), scale)


def frame_transform(x: DualVector3, e: DualQuaternion) -> DualVector3:
    """``red(e* o aug(x) o e)``; re-expresses a twist-like dual vector through ``e``."""
    out, resid = frame_transform_flat(x.flat(), e.flat())
    if resid > UNIT_TOL:
        raise UnitInvariantError(f"sandwich product has scalar part {resid:.3e}; is e unit?")
    return DualVector3.from_flat(out)


def error_twist(actual_twist: DualVector3, desired_twist: DualVector3, e: DualQuaternion) -> DualVector3:
    return actual_twist - frame_transform(desired_twist, e)
