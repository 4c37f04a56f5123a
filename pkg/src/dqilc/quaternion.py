"""Hamilton quaternions, scalar-first ``[w, x, y, z]``.

Array kernels (``qmul``, ``qconj``) operate on plain length-4 float arrays and
are shared by the compiled simulation loop; the :class:`Quaternion` value types
wrap them for the public API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import njit

UNIT_TOL = 1e-9
NORM_FLOOR = 1e-12


class UnitInvariantError(ValueError):
    """A quaternion or dual quaternion is not unit to the required tolerance."""


@njit
def qmul(a, b):
    out = np.empty(4)
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + b[0] * a[1] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] + b[0] * a[2] + a[3] * b[1] - a[1] * b[3]
    out[3] = a[0] * b[3] + b[0] * a[3] + a[1] * b[2] - a[2] * b[1]
    return out


@njit
def qconj(a):
    out = np.empty(4)
    out[0] = a[0]
    out[1] = -a[1]
    out[2] = -a[2]
    out[3] = -a[3]
    return out


def _as_vec(x, n: int, name: str) -> np.ndarray:
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have {n} components, got shape {np.shape(x)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values: {arr}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Quaternion:
    """Quaternion ``[scalar, vector]``."""

    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "components", _as_vec(self.components, 4, "quaternion"))

    @classmethod
    def from_parts(cls, scalar: float, vector) -> "Quaternion":
        return cls(np.concatenate(([scalar], np.asarray(vector, dtype=float))))

    @classmethod
    def identity(cls) -> "Quaternion":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]))

    @property
    def scalar(self) -> float:
        return float(self.components[0])

    @property
    def vector(self) -> np.ndarray:
        return self.components[1:]

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    def __array__(self, dtype=None, copy=None):
        return np.array(self.components, dtype=dtype)

    def __neg__(self) -> "Quaternion":
        return type(self)(-self.components)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({np.array2string(self.components, precision=6)})"


class UnitQuaternion(Quaternion):
    """Quaternion with ``w**2 + q.q == 1`` enforced at construction."""

    def __post_init__(self):
        super().__post_init__()
        err = abs(float(self.components @ self.components) - 1.0)
        if err > UNIT_TOL:
            raise UnitInvariantError(f"quaternion norm deviates from 1 by {err:.3e}")


def quat_mul(a: Quaternion, b: Quaternion) -> Quaternion:
    """Hamilton product ``a o b``.

    The result is a :class:`UnitQuaternion` when both factors are unit.
    """
    out = qmul(a.components, b.components)
    if isinstance(a, UnitQuaternion) and isinstance(b, UnitQuaternion):
        return UnitQuaternion(out)
    return Quaternion(out)


def quat_conj(a: Quaternion) -> Quaternion:
    return type(a)(qconj(a.components))


def from_axis_angle(axis, angle: float) -> UnitQuaternion:
    """Unit quaternion for a right-handed rotation of ``angle`` rad about ``axis``."""
    e = np.asarray(axis, dtype=float)
    if e.shape != (3,) or abs(np.linalg.norm(e) - 1.0) > UNIT_TOL:
        raise ValueError(f"rotation axis must be a unit 3-vector, got {e}")
    half = 0.5 * angle
    return UnitQuaternion(np.concatenate(([math.cos(half)], e * math.sin(half))))


def to_angle(q: Quaternion) -> float:
    """Principal rotation angle in ``[0, pi]``; ``q`` and ``-q`` give the same angle."""
    return 2.0 * math.acos(min(1.0, abs(q.scalar)))


def aug(x) -> Quaternion:
    """Pure quaternion ``[0, x]``."""
    return Quaternion(np.concatenate(([0.0], _as_vec(x, 3, "vector"))))


def red(y: Quaternion) -> np.ndarray:
    """Drop the scalar part."""
    return np.array(y.components[1:])


def normalize(a: Quaternion) -> UnitQuaternion:
    n = a.norm()
    if n <= NORM_FLOOR:
        raise ValueError(f"cannot normalize quaternion with norm {n:.3e}")
    return UnitQuaternion(a.components / n)
