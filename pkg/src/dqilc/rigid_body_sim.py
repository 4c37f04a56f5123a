"""Rigid-body pose/twist propagation in dual-quaternion form.

State layout used by the kernels: a length-14 array ``[pose (8), twist (6)]``
where the pose is ``Q + eps 1/2 Q o aug(P)`` and the twist is
``omega + eps v`` (both body frame). Wrenches are ``force + eps torque``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._jit import njit
from .dual_algebra import (
    DualInertia,
    DualVector3,
    dual_cross_flat,
    inertia_apply_flat,
    inertia_solve_flat,
)
from .dual_quaternion import (
    DualQuaternion,
    UnitDualQuaternion,
    dq_aug,
    dq_position_flat,
    dqconj,
    dqmul,
    frame_transform_flat,
    renormalize,
    unit_residual,
)
from .quaternion import UnitInvariantError, qconj, qmul

EARTH_MU = 3.986004418e14  # m^3/s^2
DRIFT_LIMIT = 1e-6
GRAVITY_MIN_RADIUS = 1.0  # m


# -- kernels -----------------------------------------------------------------


@njit
def kinematics_rate_flat(dq, w):
    return 0.5 * dqmul(dq, dq_aug(w))


@njit
def dynamics_rate_flat(w, mass, J, J_inv, load):
    r = -dual_cross_flat(w, inertia_apply_flat(mass, J, w)) + load
    return inertia_solve_flat(mass, J_inv, r)


@njit
def body_rhs(y, mass, J, J_inv, load):
    dy = np.empty(14)
    dy[:8] = kinematics_rate_flat(y[:8], y[8:])
    dy[8:] = dynamics_rate_flat(y[8:], mass, J, J_inv, load)
    return dy


@njit
def rk4_body(y, mass, J, J_inv, load, dt):
    """One RK4 step with ``load`` (wrench + disturbance) held constant; no renormalization."""
    k1 = body_rhs(y, mass, J, J_inv, load)
    k2 = body_rhs(y + 0.5 * dt * k1, mass, J, J_inv, load)
    k3 = body_rhs(y + 0.5 * dt * k2, mass, J, J_inv, load)
    k4 = body_rhs(y + dt * k3, mass, J, J_inv, load)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit
def rk4_kinematics(dq, w0, w_mid, w1, dt):
    """RK4 on the pose alone given the twist at the start, midpoint and end of the step."""
    k1 = kinematics_rate_flat(dq, w0)
    k2 = kinematics_rate_flat(dq + 0.5 * dt * k1, w_mid)
    k3 = kinematics_rate_flat(dq + 0.5 * dt * k2, w_mid)
    k4 = kinematics_rate_flat(dq + dt * k3, w1)
    return dq + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit
def desired_twist_flat(t, omega_p, speed, roll_amp, roll_freq):
    """Reference twist and its time derivative (roll manoeuvre on a near-circular orbit)."""
    s = math.sin(roll_freq * t)
    c = math.cos(roll_freq * t)
    alpha = -roll_amp * c + roll_amp
    alpha_dot = roll_amp * roll_freq * s
    w = np.zeros(6)
    w[0] = alpha_dot
    w[1] = -omega_p * math.cos(alpha)
    w[2] = omega_p * math.sin(alpha)
    w[3] = speed
    rate = np.zeros(6)
    rate[0] = roll_amp * roll_freq * roll_freq * c
    rate[1] = omega_p * math.sin(alpha) * alpha_dot
    rate[2] = omega_p * math.cos(alpha) * alpha_dot
    return w, rate


@njit
def sinusoid_flat(t, amps, periods, phases):
    out = np.empty(3)
    for i in range(3):
        out[i] = amps[i] * math.sin(2.0 * math.pi * t / periods[i] + phases[i])
    return out


@njit
def gravity_flat(dq, mass, mu):
    """Point-mass gravity in the body frame; ``nan`` if closer than 1 m to the centre."""
    P = dq_position_flat(dq)
    r = math.sqrt(P[0] ** 2 + P[1] ** 2 + P[2] ** 2)
    if r < GRAVITY_MIN_RADIUS:
        return np.full(3, np.nan)
    return -mu * mass / (r * r * r) * P


@njit
def disturbance_flat(t, dq, mass, mu, f_amp, f_per, f_phase, t_amp, t_per, t_phase):
    out = np.empty(6)
    out[:3] = sinusoid_flat(t, f_amp, f_per, f_phase)
    if mu > 0.0:
        out[:3] += gravity_flat(dq, mass, mu)
    out[3:] = sinusoid_flat(t, t_amp, t_per, t_phase)
    return out


@njit
def error_flat(y, dq_d, w_d):
    """Pose error ``dq_d* o dq`` and twist error ``w - tr(w_d)``."""
    e = dqmul(dqconj(dq_d), y[:8])
    tr_w, _ = frame_transform_flat(w_d, e)
    return e, y[8:] - tr_w


# -- value types -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RigidBodyState:
    """Body pose w.r.t. the inertial frame and body-frame twist (rad/s + eps m/s)."""

    pose: UnitDualQuaternion
    twist: DualVector3

    def flat(self) -> np.ndarray:
        return np.concatenate((self.pose.flat(), self.twist.flat()))

    @classmethod
    def from_flat(cls, y) -> "RigidBodyState":
        y = np.asarray(y, dtype=float)
        return cls(UnitDualQuaternion.from_flat(y[:8]), DualVector3.from_flat(y[8:]))


@dataclass(frozen=True, eq=False)
class DesiredState:
    """Reference pose, twist (reference frame) and twist rate at time ``t``."""

    pose: UnitDualQuaternion
    twist: DualVector3
    twist_rate: DualVector3
    t: float = 0.0


@dataclass(frozen=True, eq=False)
class ErrorState:
    e_pose: UnitDualQuaternion
    e_twist: DualVector3
    e_position: np.ndarray
    e_qvec: np.ndarray


@dataclass(frozen=True)
class DesiredTrajectory:
    """Reference twist: roll ``alpha(t) = A (1 - cos(f t))`` while orbiting at ``omega_prime``.

    Defaults reproduce the proximity-operation scenario (orbital speed at
    6778.2 km altitude-radius, 45 deg peak roll over 20 s).
    """

    omega_prime: float = 0.0011
    speed: float = 7668.5229
    roll_amplitude: float = math.pi / 8
    roll_frequency: float = math.pi / 10

    def params(self) -> tuple[float, float, float, float]:
        return (self.omega_prime, self.speed, self.roll_amplitude, self.roll_frequency)

    def flat(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        return desired_twist_flat(float(t), *self.params())

    def __call__(self, t: float) -> tuple[DualVector3, DualVector3]:
        w, rate = self.flat(t)
        return DualVector3.from_flat(w), DualVector3.from_flat(rate)


@dataclass(frozen=True)
class DisturbanceConfig:
    """Sinusoidal force/torque disturbances plus point-mass gravity.

    Axis ``i`` of each sinusoid uses ``magnitudes[i] * sin(2 pi t / periods[i] + phase)``.
    Force phases are redrawn per iteration, uniformly in ``force_phase_range``,
    from a generator keyed on ``(seed, k, axis)``; torque phases are fixed.
    """

    force_periods: tuple[float, float, float] = (100.0, 200.0, 300.0)
    force_magnitudes: tuple[float, float, float] = (0.5, 0.5, 0.5)
    torque_periods: tuple[float, float, float] = (400.0, 500.0, 700.0)
    torque_magnitudes: tuple[float, float, float] = (0.1, 0.05, 0.08)
    force_phase_range: tuple[float, float] = (0.0, 0.1 * math.pi)
    torque_phases: tuple[float, float, float] = (0.0, 0.0, 0.0)
    mu: float = EARTH_MU
    seed: int = 0

    def __post_init__(self):
        for name in ("force_periods", "force_magnitudes", "torque_periods", "torque_magnitudes", "torque_phases"):
            val = tuple(float(v) for v in getattr(self, name))
            if len(val) != 3:
                raise ValueError(f"{name} needs 3 entries")
            object.__setattr__(self, name, val)
        if min(self.force_periods + self.torque_periods) <= 0:
            raise ValueError("disturbance periods must be positive")
        if min(self.force_magnitudes + self.torque_magnitudes) < 0:
            raise ValueError("disturbance magnitudes must be non-negative")
        lo, hi = (float(v) for v in self.force_phase_range)
        if hi < lo:
            raise ValueError("force_phase_range must be (low, high) with low <= high")
        object.__setattr__(self, "force_phase_range", (lo, hi))
        if self.mu < 0:
            raise ValueError("mu must be non-negative")

    def force_phases(self, k: int) -> np.ndarray:
        lo, hi = self.force_phase_range
        return np.array([
            np.random.default_rng([int(self.seed), int(k), axis]).uniform(lo, hi)
            for axis in range(3)
        ])

    def kernel_args(self, k: int, mass: float) -> tuple:
        return (
            float(mass),
            float(self.mu),
            np.array(self.force_magnitudes),
            np.array(self.force_periods),
            self.force_phases(k),
            np.array(self.torque_magnitudes),
            np.array(self.torque_periods),
            np.array(self.torque_phases),
        )


# -- operations --------------------------------------------------------------


def kinematics_rate(state: RigidBodyState):
    """Pose derivative ``1/2 Q o aug(w)`` (a general, non-unit dual quaternion)."""
    return DualQuaternion.from_flat(kinematics_rate_flat(state.pose.flat(), state.twist.flat()))


def dynamics_rate(state: RigidBodyState, M: DualInertia, wrench: DualVector3, disturbance: DualVector3) -> DualVector3:
    load = wrench.flat() + disturbance.flat()
    return DualVector3.from_flat(dynamics_rate_flat(state.twist.flat(), M.mass, M.inertia, M.inertia_inv, load))


def check_drift(dq: np.ndarray, where: str = "") -> None:
    norm_err, orth_err = unit_residual(dq)
    if max(norm_err, orth_err) > DRIFT_LIMIT:
        raise UnitInvariantError(
            f"pose drifted off the unit set{where}: norm error {norm_err:.3e}, orthogonality {orth_err:.3e}"
        )


def step_kinematics(pose: UnitDualQuaternion, twist_fn: Callable[[float], tuple], t: float, dt: float) -> UnitDualQuaternion:
    """Advance a pose by ``dt`` under the twist ``twist_fn(t)[0]`` (RK4 + renormalization)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    w0 = twist_fn(t)[0].flat()
    wm = twist_fn(t + 0.5 * dt)[0].flat()
    w1 = twist_fn(t + dt)[0].flat()
    raw = rk4_kinematics(pose.flat(), w0, wm, w1, dt)
    check_drift(raw)
    return UnitDualQuaternion.from_flat(renormalize(raw))


def step(
    state: RigidBodyState,
    desired: DesiredState,
    M: DualInertia,
    wrench: DualVector3,
    disturbance: DualVector3,
    dt: float,
    trajectory: Callable[[float], tuple] | None = None,
) -> tuple[RigidBodyState, DesiredState]:
    """Advance body and reference by ``dt`` (RK4, zero-order-hold inputs).

    ``trajectory(t) -> (twist, twist_rate)`` drives the reference; it defaults
    to :class:`DesiredTrajectory`. Both poses are renormalized afterwards and
    a drift above 1e-6 before renormalization raises :class:`UnitInvariantError`.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    trajectory = trajectory or DesiredTrajectory()
    load = wrench.flat() + disturbance.flat()
    raw = rk4_body(state.flat(), M.mass, M.inertia, M.inertia_inv, load, dt)
    check_drift(raw[:8], " (body)")
    raw[:8] = renormalize(raw[:8])
    new_state = RigidBodyState.from_flat(raw)

    t1 = desired.t + dt
    pose_d = step_kinematics(desired.pose, trajectory, desired.t, dt)
    w1, rate1 = trajectory(t1)
    return new_state, DesiredState(pose_d, w1, rate1, t1)


def desired_twist(t: float, trajectory: DesiredTrajectory | None = None) -> tuple[DualVector3, DualVector3]:
    """Reference twist and its analytic derivative at time ``t``."""
    return (trajectory or DesiredTrajectory())(t)


def desired_state_at(pose: UnitDualQuaternion, t: float, trajectory: DesiredTrajectory | None = None) -> DesiredState:
    w, rate = desired_twist(t, trajectory)
    return DesiredState(pose, w, rate, float(t))


def disturbance(t: float, k: int, state: RigidBodyState, cfg: DisturbanceConfig, M: DualInertia) -> DualVector3:
    """Total disturbance wrench (force + eps torque) in the body frame."""
    if cfg.mu > 0:
        P = dq_position_flat(state.pose.flat())
        if np.linalg.norm(P) < GRAVITY_MIN_RADIUS:
            raise ValueError(f"gravity singularity: body within {GRAVITY_MIN_RADIUS} m of the attractor")
    out = disturbance_flat(float(t), state.pose.flat(), *cfg.kernel_args(k, M.mass))
    return DualVector3.from_flat(out)


def gravity_inertial_route(state: RigidBodyState, mass: float, mu: float = EARTH_MU) -> np.ndarray:
    """Gravity evaluated in the inertial frame and rotated back into the body frame."""
    Q = state.pose.real
    P = dq_position_flat(state.pose.flat())
    p_I = qmul(qmul(Q, np.concatenate(([0.0], P))), qconj(Q))[1:]
    g_I = -mu * mass * p_I / np.linalg.norm(p_I) ** 3
    return qmul(qmul(qconj(Q), np.concatenate(([0.0], g_I))), Q)[1:]


def error_state(actual: RigidBodyState, desired: DesiredState) -> ErrorState:
    e, etw = error_flat(actual.flat(), desired.pose.flat(), desired.twist.flat())
    e_pose = UnitDualQuaternion.from_flat(e)
    return ErrorState(
        e_pose=e_pose,
        e_twist=DualVector3.from_flat(etw),
        e_position=dq_position_flat(e),
        e_qvec=np.array(e[1:4]),
    )


def initial_state(desired: DesiredState) -> RigidBodyState:
    """Body state matching the reference exactly (zero initial tracking error)."""
    return RigidBodyState(desired.pose, desired.twist)


__all__ = [
    "EARTH_MU",
    "DesiredState",
    "DesiredTrajectory",
    "DisturbanceConfig",
    "ErrorState",
    "RigidBodyState",
    "disturbance",
    "desired_twist",
    "dynamics_rate",
    "error_state",
    "kinematics_rate",
    "step",
    "step_kinematics",
]
