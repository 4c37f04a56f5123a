"""Dual vectors ``x_r + eps x_c`` with ``eps**2 = 0``, held as (real, dual) pairs.

Kernels work on flat arrays laid out as ``[real..., dual...]`` (length 6 for
dual 3-vectors, 8 for dual quaternions) so the compiled simulation loop can
use them directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import njit

SYMMETRY_TOL = 1e-9


# -- kernels -----------------------------------------------------------------


@njit
def crs_flat(x, y):
    n = x.shape[0] // 2
    acc = 0.0
    for i in range(n):
        acc += x[i] * y[n + i] + x[n + i] * y[i]
    return acc


@njit
def exch_flat(x):
    n = x.shape[0] // 2
    out = np.empty_like(x)
    out[:n] = x[n:]
    out[n:] = x[:n]
    return out


@njit
def sgn_scalar(z, width):
    # width > 0 replaces the sign by a saturated ramp (boundary layer)
    if width > 0.0:
        r = z / width
        if r > 1.0:
            return 1.0
        if r < -1.0:
            return -1.0
        return r
    if z > 0.0:
        return 1.0
    if z < 0.0:
        return -1.0
    return 0.0


@njit
def cross3(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit
def dual_cross_flat(y, x):
    out = np.empty(6)
    out[:3] = cross3(y[:3], x[:3])
    out[3:] = cross3(y[:3], x[3:]) + cross3(y[3:], x[:3])
    return out


@njit
def inertia_apply_flat(mass, J, w):
    out = np.empty(6)
    out[:3] = mass * w[3:]
    out[3:] = J @ w[:3]
    return out


@njit
def inertia_solve_flat(mass, J_inv, r):
    out = np.empty(6)
    out[:3] = J_inv @ r[3:]
    out[3:] = r[:3] / mass
    return out


@njit
def func_flat(x, y, z, width):
    yc = cross3(y[:3], y[3:]) + z[3:]
    gain_real = np.sqrt(yc[0] ** 2 + yc[1] ** 2 + yc[2] ** 2) + 1.0
    gain_dual = (y[0] ** 2 + y[1] ** 2 + y[2] ** 2) + np.sqrt(z[0] ** 2 + z[1] ** 2 + z[2] ** 2) + 1.0
    out = np.empty(6)
    for i in range(3):
        out[i] = gain_real * sgn_scalar(x[3 + i], width)
        out[3 + i] = gain_dual * sgn_scalar(x[i], width)
    return out


# -- value types -------------------------------------------------------------


def _vec3(x, name):
    arr = np.array(x, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {np.shape(x)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values: {arr}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DualVector3:
    """Dual 3-vector; ``real`` and ``dual`` are read-only float arrays."""

    real: np.ndarray
    dual: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "real", _vec3(self.real, "real part"))
        object.__setattr__(self, "dual", _vec3(self.dual, "dual part"))

    @classmethod
    def zero(cls) -> "DualVector3":
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_flat(cls, a) -> "DualVector3":
        a = np.asarray(a, dtype=float)
        return cls(a[:3], a[3:])

    def flat(self) -> np.ndarray:
        return np.concatenate((self.real, self.dual))

    def __add__(self, other: "DualVector3") -> "DualVector3":
        return DualVector3(self.real + other.real, self.dual + other.dual)

    def __sub__(self, other: "DualVector3") -> "DualVector3":
        return DualVector3(self.real - other.real, self.dual - other.dual)

    def __neg__(self) -> "DualVector3":
        return DualVector3(-self.real, -self.dual)

    def __mul__(self, s: float) -> "DualVector3":
        return DualVector3(s * self.real, s * self.dual)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"DualVector3({self.real.tolist()} + eps {self.dual.tolist()})"


@dataclass(frozen=True, eq=False)
class DualInertia:
    """Mass ``m`` [kg] and inertia ``J`` [kg m^2] acting as ``m d/deps + eps J``."""

    mass: float
    inertia: np.ndarray

    def __post_init__(self):
        m = float(self.mass)
        if not np.isfinite(m) or m <= 0.0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        J = np.array(self.inertia, dtype=float)
        if J.shape != (3, 3) or not np.all(np.isfinite(J)):
            raise ValueError("inertia must be a finite 3x3 matrix")
        asym = np.max(np.abs(J - J.T))
        if asym > SYMMETRY_TOL:
            raise ValueError(f"inertia is not symmetric (max asymmetry {asym:.3e})")
        J = 0.5 * (J + J.T)
        try:
            np.linalg.cholesky(J)
        except np.linalg.LinAlgError:
            raise ValueError("inertia must be positive definite") from None
        J.setflags(write=False)
        J_inv = np.linalg.inv(J)
        J_inv.setflags(write=False)
        object.__setattr__(self, "mass", m)
        object.__setattr__(self, "inertia", J)
        object.__setattr__(self, "inertia_inv", J_inv)


# -- operators ---------------------------------------------------------------


def _parts(x):
    return np.asarray(x.real, dtype=float), np.asarray(x.dual, dtype=float)


def crs(x, y) -> float:
    """``x_r . y_c + x_c . y_r`` for any pair of equal-sized dual objects."""
    xr, xc = _parts(x)
    yr, yc = _parts(y)
    if xr.shape != yr.shape:
        raise ValueError(f"dimension mismatch: {xr.shape} vs {yr.shape}")
    return float(xr @ yc + xc @ yr)


def exch(x: DualVector3) -> DualVector3:
    return DualVector3(x.dual, x.real)


def real_part(x) -> np.ndarray:
    return np.array(x.real)


def comp_part(x) -> np.ndarray:
    return np.array(x.dual)


def sgn_dual(x: DualVector3, width: float = 0.0) -> DualVector3:
    out = np.array([sgn_scalar(v, width) for v in x.flat()])
    return DualVector3.from_flat(out)


def dual_cross(y: DualVector3, x: DualVector3) -> DualVector3:
    """``y^x x`` truncated at ``eps**2``."""
    return DualVector3.from_flat(dual_cross_flat(y.flat(), x.flat()))


def apply_inertia(M: DualInertia, w: DualVector3) -> DualVector3:
    """``m w_c + eps J w_r``."""
    return DualVector3.from_flat(inertia_apply_flat(M.mass, M.inertia, w.flat()))


def invert_inertia(M: DualInertia, r: DualVector3) -> DualVector3:
    """Inverse of :func:`apply_inertia`: ``J^-1 r_c + eps r_r / m``."""
    return DualVector3.from_flat(inertia_solve_flat(M.mass, M.inertia_inv, r.flat()))


def func_op(x: DualVector3, y: DualVector3, z: DualVector3, width: float = 0.0) -> DualVector3:
    """Sign-switching regressor of the adaptive term.

    Real part ``(|y_r x y_c + z_c| + 1) sgn(x_c)``, dual part
    ``(|y_r|^2 + |z_r| + 1) sgn(x_r)``. Note the crossed wiring of the signs.
    ``width > 0`` swaps ``sgn`` for a saturated ramp of that half-width.
    """
    return DualVector3.from_flat(func_flat(x.flat(), y.flat(), z.flat(), float(width)))
