"""Two-loop adaptive ILC: control law, iteration-domain estimate update, and the
segment-based dynamic projection that keeps the estimate profile bounded.

The estimate ``theta_hat`` is a single scalar per control tick. Each iteration
first projects the previous profile segment by segment, then adds a
non-negative learning increment tick by tick before the control law uses it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .dual_algebra import DualVector3, crs_flat, exch_flat, func_flat
from .dual_quaternion import frame_transform_flat
from .quaternion import qconj, qmul
from .rigid_body_sim import DesiredState, ErrorState

BOUNDARY_RTOL = 1e-9


# -- kernels -----------------------------------------------------------------


@njit
def control_flat(e, etw, tr_w, tr_rate, theta, kp, kd, width):
    out = -theta * func_flat(etw, tr_w, tr_rate, width) - kd * exch_flat(etw)
    out[:3] -= kp * qmul(qconj(e[:4]), e[4:])[1:]
    out[3:] -= kp * e[1:4]
    return out


@njit
def increment_flat(etw, tr_w, tr_rate, k_theta, width):
    return k_theta * crs_flat(etw, func_flat(etw, tr_w, tr_rate, width))


@njit
def transformed_reference(e, w_d, rate_d):
    tr_w, _ = frame_transform_flat(w_d, e)
    tr_rate, _ = frame_transform_flat(rate_d, e)
    return tr_w, tr_rate


# -- value types -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SegmentGrid:
    """Segment boundaries ``0 = h_0 < h_1 < ... < h_s = T`` [s]."""

    boundaries: np.ndarray

    def __post_init__(self):
        h = np.array(self.boundaries, dtype=float).reshape(-1)
        if h.size < 2:
            raise ValueError("a segment grid needs at least two boundaries")
        if h[0] != 0.0:
            raise ValueError("first boundary must be 0")
        if np.any(np.diff(h) <= 0):
            raise ValueError("boundaries must be strictly increasing")
        h.setflags(write=False)
        object.__setattr__(self, "boundaries", h)

    @classmethod
    def uniform(cls, duration: float, count: int) -> "SegmentGrid":
        if count < 1:
            raise ValueError("segment count must be >= 1")
        h = np.linspace(0.0, duration, count + 1)
        h[-1] = duration
        return cls(h)

    @property
    def count(self) -> int:
        return self.boundaries.size - 1

    @property
    def duration(self) -> float:
        return float(self.boundaries[-1])

    def indices(self, times) -> np.ndarray:
        """Vectorised :func:`segment_index` (no range check)."""
        h = self.boundaries
        tol = BOUNDARY_RTOL * h[-1]
        # smallest j >= 1 with h_j >= t; t within tol of h_j counts as on it
        j = np.searchsorted(h, np.asarray(times, dtype=float) - tol, side="left")
        return np.clip(j, 1, self.count)


@dataclass(frozen=True)
class ControllerGains:
    k_p: float = 1.0
    k_d: float = 1.0
    k_c: float = 0.01
    k_theta: float = 0.002
    k_l: float | None = 0.02
    sgn_width: float = 0.0  # 0 keeps the exact sign function

    def __post_init__(self):
        for name in ("k_p", "k_d", "k_c", "k_theta"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.k_l is not None and not self.k_l > 0:
            raise ValueError(f"k_l must be positive or None, got {self.k_l}")
        if self.sgn_width < 0:
            raise ValueError("sgn_width must be >= 0")


@dataclass(eq=False)
class EstimateProfile:
    """Estimate samples on the control tick grid for iteration ``k``."""

    times: np.ndarray
    values: np.ndarray
    k: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have the same shape")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("estimate profile contains non-finite values")

    @classmethod
    def zeros(cls, times, k: int = 0) -> "EstimateProfile":
        times = np.asarray(times, dtype=float)
        return cls(times, np.zeros_like(times), k)

    def aligned_with(self, other: "EstimateProfile") -> bool:
        return self.times.shape == other.times.shape and np.array_equal(self.times, other.times)


# -- operations --------------------------------------------------------------


def segment_index(grid: SegmentGrid, t: float) -> int:
    """``min{j in 1..s : h_j >= t}``; ``t = 0`` falls in segment 1."""
    tol = BOUNDARY_RTOL * grid.duration
    if t < -tol or t > grid.duration + tol:
        raise ValueError(f"t={t} outside [0, {grid.duration}]")
    return int(grid.indices([t])[0])


def segment_project(prev: EstimateProfile, grid: SegmentGrid, k_c: float) -> EstimateProfile:
    """Floor each sample at (its segment's maximum - ``k_c``).

    The maximum of segment ``j`` runs over ticks strictly after ``h_{j-1}``
    and up to ``h_j``; the tick at ``t = 0`` is projected with segment 1 but
    does not contribute to its maximum.
    """
    t = prev.times
    seg = grid.indices(t)
    tol = BOUNDARY_RTOL * grid.duration
    in_interval = t > grid.boundaries[seg - 1] + tol
    seg_max = np.full(grid.count + 1, -np.inf)
    np.maximum.at(seg_max, seg[in_interval], prev.values[in_interval])
    # a segment with no interior tick falls back to the samples mapped to it
    empty = ~np.isfinite(seg_max)
    if np.any(empty[1:]):
        np.maximum.at(seg_max, seg, np.where(empty[seg], prev.values, -np.inf))
    floor = seg_max[seg] - k_c
    out = np.where(prev.values > floor, prev.values, floor)
    return EstimateProfile(t.copy(), out, prev.k)


def control_law(err: ErrorState, desired: DesiredState, theta: float, gains: ControllerGains) -> DualVector3:
    """Wrench (force + eps torque) for the current tracking error and estimate."""
    if theta < 0:
        raise ValueError(f"estimate must be non-negative, got {theta}")
    e = err.e_pose.flat()
    tr_w, tr_rate = transformed_reference(e, desired.twist.flat(), desired.twist_rate.flat())
    out = control_flat(e, err.e_twist.flat(), tr_w, tr_rate, float(theta), gains.k_p, gains.k_d, gains.sgn_width)
    return DualVector3.from_flat(out)


def learning_increment(err: ErrorState, desired: DesiredState, gains: ControllerGains) -> float:
    e = err.e_pose.flat()
    tr_w, tr_rate = transformed_reference(e, desired.twist.flat(), desired.twist_rate.flat())
    return float(increment_flat(err.e_twist.flat(), tr_w, tr_rate, gains.k_theta, gains.sgn_width))


def update_estimate(
    prev_projected: float,
    err: ErrorState,
    desired: DesiredState,
    gains: ControllerGains,
    saturated: bool = False,
) -> float:
    """Projected previous estimate plus the learning increment (capped at ``k_l`` if saturated)."""
    if not np.isfinite(prev_projected):
        raise ValueError("previous estimate must be finite")
    delta = learning_increment(err, desired, gains)
    if saturated:
        if gains.k_l is None:
            raise ValueError("saturated update needs k_l")
        delta = min(gains.k_l, delta)
    return prev_projected + delta


def run_controller_tick(
    t: float,
    k: int,
    err: ErrorState,
    desired: DesiredState,
    profile_prev_projected: EstimateProfile,
    profile_current: EstimateProfile,
    gains: ControllerGains,
    grid: SegmentGrid,
    saturated: bool = False,
) -> DualVector3:
    """Update ``theta_hat_k(t)`` in ``profile_current`` and return the wrench that uses it.

    Iteration 0 is the pure PD run: its estimate is identically zero.
    """
    if not profile_prev_projected.aligned_with(profile_current):
        raise ValueError("estimate profiles are not on the same tick grid")
    if not np.isclose(profile_current.times[-1], grid.duration):
        raise ValueError("estimate profile does not span the segment grid")
    n = int(np.argmin(np.abs(profile_current.times - t)))
    if abs(profile_current.times[n] - t) > BOUNDARY_RTOL * max(1.0, grid.duration):
        raise ValueError(f"t={t} is not on the control tick grid")
    prev = float(profile_prev_projected.values[n])
    theta = 0.0 if k == 0 else update_estimate(prev, err, desired, gains, saturated)
    profile_current.values[n] = theta
    return control_law(err, desired, theta, gains)
