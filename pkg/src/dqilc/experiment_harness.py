"""Multi-iteration tracking campaigns: simulation loop, metrics, energy monitor and logs.

One iteration is a pass over ``[0, T]`` on the control tick grid. The body is
reset to the reference pose and twist at the start of every iteration; the
reference trajectory itself is integrated once per campaign and cached.
"""

from __future__ import annotations

import io
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ._jit import njit
from .config import ExperimentConfig, dump_config, load_config
from .dual_algebra import DualInertia
from .dual_quaternion import renormalize, unit_residual
from .ilc_controller import (
    EstimateProfile,
    control_flat,
    increment_flat,
    segment_project,
    transformed_reference,
)
from .quaternion import UnitInvariantError
from .rigid_body_sim import (
    DRIFT_LIMIT,
    ErrorState,
    desired_twist_flat,
    disturbance_flat,
    error_flat,
    rk4_body,
    rk4_kinematics,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_COLUMNS = (
    "t",
    "dP_x", "dP_y", "dP_z",
    "dq_x", "dq_y", "dq_z",
    "dP_norm", "angle_rad",
    "f_x", "f_y", "f_z",
    "tau_x", "tau_y", "tau_z",
    "theta_hat",
)
ENERGY_BOUND_FACTOR = 10.0
THETA_BOUND = 10.0
REPLAY_TOL = 1e-9

# kernel status codes
OK, DRIFT, SINGULAR = 0, 1, 2


# -- kernels -----------------------------------------------------------------


@njit
def energy_flat(e, etw, mass, J, kp):
    pose = (e[0] - 1.0) ** 2 + e[1] ** 2 + e[2] ** 2 + e[3] ** 2
    pose += e[4] ** 2 + e[5] ** 2 + e[6] ** 2 + e[7] ** 2
    w = etw[:3]
    v = etw[3:]
    return kp * pose + 0.5 * (w @ (J @ w) + mass * (v @ v))


@njit
def reference_kernel(dq0, n_steps, dt, omega_p, speed, roll_amp, roll_freq):
    """Reference pose/twist/rate on the tick grid plus the worst pre-renormalization drift."""
    dq = np.empty((n_steps + 1, 8))
    w = np.empty((n_steps + 1, 6))
    rate = np.empty((n_steps + 1, 6))
    dq[0] = dq0
    worst = 0.0
    for n in range(n_steps + 1):
        t = n * dt
        w[n], rate[n] = desired_twist_flat(t, omega_p, speed, roll_amp, roll_freq)
        if n == n_steps:
            break
        wm, _ = desired_twist_flat(t + 0.5 * dt, omega_p, speed, roll_amp, roll_freq)
        w1, _ = desired_twist_flat(t + dt, omega_p, speed, roll_amp, roll_freq)
        raw = rk4_kinematics(dq[n], w[n], wm, w1, dt)
        a, b = unit_residual(raw)
        worst = max(worst, a, b)
        dq[n + 1] = renormalize(raw)
    return dq, w, rate, worst


@njit
def iteration_kernel(
    y0, ref_dq, ref_w, ref_rate, prev, learn, saturated, dt,
    mass, J, J_inv, kp, kd, k_theta, k_l, width,
    mu, f_amp, f_per, f_phase, t_amp, t_per, t_phase,
):
    """Closed-loop pass over the tick grid.

    Returns the per-tick records and ``(status, tick)``; on a non-zero status
    the arrays are filled up to ``tick`` only.
    """
    n_ticks = ref_dq.shape[0]
    states = np.empty((n_ticks, 14))
    errors = np.empty((n_ticks, 8))
    twist_err = np.empty((n_ticks, 6))
    wrench = np.empty((n_ticks, 6))
    dist = np.empty((n_ticks, 6))
    theta = np.zeros(n_ticks)
    incr = np.zeros(n_ticks)
    energy = np.empty(n_ticks)
    y = y0.copy()
    for n in range(n_ticks):
        t = n * dt
        states[n] = y
        e, etw = error_flat(y, ref_dq[n], ref_w[n])
        tr_w, tr_rate = transformed_reference(e, ref_w[n], ref_rate[n])
        th = 0.0
        if learn:
            d = increment_flat(etw, tr_w, tr_rate, k_theta, width)
            if saturated:
                d = min(k_l, d)
            incr[n] = d
            th = prev[n] + d
        theta[n] = th
        u = control_flat(e, etw, tr_w, tr_rate, th, kp, kd, width)
        dd = disturbance_flat(t, y[:8], mass, mu, f_amp, f_per, f_phase, t_amp, t_per, t_phase)
        errors[n] = e
        twist_err[n] = etw
        wrench[n] = u
        dist[n] = dd
        energy[n] = energy_flat(e, etw, mass, J, kp)
        if not np.all(np.isfinite(dd)):
            return states, errors, twist_err, wrench, dist, theta, incr, energy, SINGULAR, n
        if n == n_ticks - 1:
            break
        raw = rk4_body(y, mass, J, J_inv, u + dd, dt)
        a, b = unit_residual(raw[:8])
        if a > DRIFT_LIMIT or b > DRIFT_LIMIT or not np.all(np.isfinite(raw)):
            return states, errors, twist_err, wrench, dist, theta, incr, energy, DRIFT, n
        raw[:8] = renormalize(raw[:8])
        y = raw
    return states, errors, twist_err, wrench, dist, theta, incr, energy, OK, n_ticks - 1


@njit
def replay_kernel(y0, ref_dq, ref_w, wrench, dt, mass, J, J_inv,
                  mu, f_amp, f_per, f_phase, t_amp, t_per, t_phase):
    """Open-loop pass driven by a recorded wrench sequence; returns the error quaternions."""
    n_ticks = ref_dq.shape[0]
    errors = np.empty((n_ticks, 8))
    y = y0.copy()
    for n in range(n_ticks):
        e, _ = error_flat(y, ref_dq[n], ref_w[n])
        errors[n] = e
        if n == n_ticks - 1:
            break
        dd = disturbance_flat(n * dt, y[:8], mass, mu, f_amp, f_per, f_phase, t_amp, t_per, t_phase)
        raw = rk4_body(y, mass, J, J_inv, wrench[n] + dd, dt)
        raw[:8] = renormalize(raw[:8])
        y = raw
    return errors


def error_positions(e_pose: np.ndarray) -> np.ndarray:
    """Vectorised ``red(2 Q_r* o Q_c)`` over rows of ``(n, 8)`` error quaternions."""
    r, c = e_pose[:, :4], e_pose[:, 4:]
    w, v = r[:, :1], -r[:, 1:]
    cw, cv = c[:, :1], c[:, 1:]
    return 2.0 * (w * cv + cw * v + np.cross(v, cv))


# -- records -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Reference:
    """Reference trajectory sampled on the tick grid."""

    times: np.ndarray
    pose: np.ndarray  # (n, 8)
    twist: np.ndarray  # (n, 6)
    twist_rate: np.ndarray  # (n, 6)


@dataclass(eq=False)
class IterationLog:
    """Per-tick records of one iteration.

    ``theta_prev`` is the projected previous estimate the increments were
    added to, so ``theta - theta_prev == increment`` holds tick by tick.
    """

    k: int
    t: np.ndarray
    e_pose: np.ndarray  # (n, 8)
    e_twist: np.ndarray  # (n, 6)
    force: np.ndarray
    torque: np.ndarray
    theta: np.ndarray
    theta_prev: np.ndarray
    increment: np.ndarray
    energy: np.ndarray
    states: np.ndarray | None = None
    disturbance: np.ndarray | None = None

    @property
    def n_ticks(self) -> int:
        return self.t.size

    @property
    def dP(self) -> np.ndarray:
        return error_positions(self.e_pose)

    @property
    def dq(self) -> np.ndarray:
        return self.e_pose[:, 1:4]

    @property
    def dP_norm(self) -> np.ndarray:
        return np.linalg.norm(self.dP, axis=1)

    @property
    def angle(self) -> np.ndarray:
        return 2.0 * np.arccos(np.minimum(1.0, np.abs(self.e_pose[:, 0])))

    def summary(self) -> dict:
        return metrics(self)


@dataclass(eq=False)
class CampaignReport:
    config: ExperimentConfig
    reference: Reference
    logs: list[IterationLog] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def summaries(self) -> list[dict]:
        return [log_.summary() for log_ in self.logs]

    def column(self, key: str) -> np.ndarray:
        return np.array([s[key] for s in self.summaries()])


@dataclass(frozen=True, eq=False)
class _Arrays:
    dP: np.ndarray
    dP_norm: np.ndarray
    dq: np.ndarray
    angle: np.ndarray


def _arrays(log_: IterationLog) -> _Arrays:
    dP = log_.dP
    return _Arrays(dP, np.linalg.norm(dP, axis=1), log_.dq, log_.angle)


# -- operations --------------------------------------------------------------


def build_reference(cfg: ExperimentConfig) -> Reference:
    """Integrate the reference pose once over the campaign horizon."""
    dq0 = cfg.reference.initial_pose().flat()
    dq, w, rate, worst = reference_kernel(dq0, cfg.n_steps, cfg.dt, *cfg.reference.trajectory.params())
    if worst > DRIFT_LIMIT:
        raise UnitInvariantError(f"reference pose drifted by {worst:.3e} during integration")
    return Reference(cfg.times, dq, w, rate)


def _body_args(cfg: ExperimentConfig):
    M = cfg.body.dual_inertia()
    return M, (M.mass, np.array(M.inertia), np.array(M.inertia_inv))


def run_iteration(
    cfg: ExperimentConfig,
    k: int,
    prev_profile: EstimateProfile,
    reference: Reference | None = None,
    keep_states: bool = False,
) -> tuple[IterationLog, EstimateProfile]:
    """Run iteration ``k`` from rest on the reference, using ``prev_profile`` as the projected previous estimate."""
    reference = reference if reference is not None else build_reference(cfg)
    if prev_profile.values.shape != reference.times.shape or not np.allclose(prev_profile.times, reference.times):
        raise ValueError("estimate profile is not on this configuration's tick grid")
    M, body = _body_args(cfg)
    g = cfg.gains
    y0 = np.concatenate((reference.pose[0], reference.twist[0]))
    k_l = g.k_l if g.k_l is not None else np.inf
    dist = cfg.disturbance.kernel_args(k, M.mass)[1:]
    out = iteration_kernel(
        y0, reference.pose, reference.twist, reference.twist_rate,
        np.ascontiguousarray(prev_profile.values, dtype=float), k > 0, cfg.saturated, cfg.dt,
        *body, g.k_p, g.k_d, g.k_theta, k_l, g.sgn_width, *dist,
    )
    states, errors, twist_err, wrench, dd, theta, incr, energy, status, tick = out
    if status != OK:
        where = f"iteration {k}, tick {tick} (t={tick * cfg.dt:.3f} s)"
        if status == DRIFT:
            raise UnitInvariantError(f"{where}: pose drifted off the unit set by more than {DRIFT_LIMIT:g}")
        raise ValueError(f"{where}: gravity singularity, body within 1 m of the attractor")
    if np.any(theta < 0):
        raise AssertionError(f"iteration {k}: negative estimate")
    result = IterationLog(
        k=k,
        t=reference.times.copy(),
        e_pose=errors,
        e_twist=twist_err,
        force=wrench[:, :3].copy(),
        torque=wrench[:, 3:].copy(),
        theta=theta,
        theta_prev=np.where(k > 0, prev_profile.values, 0.0).astype(float),
        increment=incr,
        energy=energy,
        states=states if keep_states else None,
        disturbance=dd if keep_states else None,
    )
    return result, EstimateProfile(reference.times.copy(), theta.copy(), k)


def run_campaign(
    cfg: ExperimentConfig,
    out_dir: str | Path | None = None,
    keep_states: bool = False,
    progress=None,
) -> CampaignReport:
    """Chain iterations ``0..K-1``, projecting the estimate profile in between.

    Writes logs and a summary when ``out_dir`` is given. Monitor breaches
    (energy growth, unbounded estimate) are recorded as warnings, not raised.
    """
    reference = build_reference(cfg)
    grid = cfg.grid()
    report = CampaignReport(cfg, reference)
    projected = EstimateProfile.zeros(reference.times)
    for k in range(cfg.iterations):
        it_log, profile = run_iteration(cfg, k, projected, reference, keep_states)
        report.logs.append(it_log)
        if progress is not None:
            progress(it_log)
        projected = segment_project(profile, grid, cfg.gains.k_c)
    report.warnings.extend(check_monitors(report))
    for w in report.warnings:
        log.warning(w)
    if out_dir is not None:
        export_campaign(report, out_dir)
    return report


def check_monitors(report: CampaignReport) -> list[str]:
    out = []
    if not report.logs:
        return out
    v0 = float(np.max(report.logs[0].energy))
    for it in report.logs[1:]:
        vk = float(np.max(it.energy))
        if vk > ENERGY_BOUND_FACTOR * v0:
            out.append(f"iteration {it.k}: max energy {vk:.4g} exceeds {ENERGY_BOUND_FACTOR:g} x iteration-0 max {v0:.4g}")
    th = max(float(np.max(it.theta)) for it in report.logs)
    if th >= THETA_BOUND:
        out.append(f"estimate reached {th:.4g} (bound {THETA_BOUND:g})")
    return out


def energy(err: ErrorState, M: DualInertia, k_p: float) -> float:
    """Pose/twist tracking energy ``k_p |dQ - 1|^2 + 1/2 crs(dw, M dw)``; zero only at ``dQ = +1``."""
    return float(energy_flat(err.e_pose.flat(), err.e_twist.flat(), M.mass, np.array(M.inertia), float(k_p)))


def metrics(it: IterationLog) -> dict:
    """Maximum and final error magnitudes plus estimate and energy peaks."""
    a = _arrays(it)
    dq_norm = np.linalg.norm(a.dq, axis=1)

    def peak(x):
        return float(np.max(x)) if x.size else 0.0

    def last(x):
        return float(x[-1]) if x.size else 0.0

    return {
        "k": int(it.k),
        "max_dP_norm_m": peak(a.dP_norm),
        "final_dP_norm_m": last(a.dP_norm),
        "max_dq_norm": peak(dq_norm),
        "final_dq_norm": last(dq_norm),
        "max_angle_deg": math.degrees(peak(a.angle)),
        "max_theta_hat": peak(it.theta),
        "max_V": peak(it.energy),
        "final_V": last(it.energy),
    }


# -- persistence -------------------------------------------------------------


def iteration_table(it: IterationLog) -> np.ndarray:
    a = _arrays(it)
    cols = [it.t[:, None], a.dP, a.dq, a.dP_norm[:, None], a.angle[:, None], it.force, it.torque, it.theta[:, None]]
    return np.hstack([np.asarray(c, dtype=float) for c in cols]).reshape(it.n_ticks, len(CSV_COLUMNS))


def write_iteration_csv(it: IterationLog, path: str | Path) -> None:
    path = Path(path)
    table = iteration_table(it)
    try:
        with path.open("w", newline="") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            np.savetxt(fh, table, fmt="%.17g", delimiter=",")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_iteration_csv(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    try:
        with path.open() as fh:
            header = fh.readline().strip().split(",")
            body = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"{path}: unexpected header {header}")
    if body.strip():
        data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    else:
        data = np.empty((0, len(CSV_COLUMNS)))
    return {name: data[:, i] for i, name in enumerate(CSV_COLUMNS)}


def iteration_filename(k: int) -> str:
    return f"iter_{k:03d}.csv"


def export_campaign(report: CampaignReport, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.yaml").write_text(dump_config(report.config))
    except OSError as exc:
        raise OSError(f"cannot write to {out}: {exc}") from exc
    for it in report.logs:
        write_iteration_csv(it, out / iteration_filename(it.k))
    write_summary(report, out / "summary.yaml")
    return out


def write_summary(report: CampaignReport, path: str | Path) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "variant": report.config.variant,
        "segments": report.config.segments,
        "seed": report.config.disturbance.seed,
        "iterations": report.summaries(),
        "warnings": list(report.warnings),
    }
    try:
        Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def summarize_csv(path: str | Path) -> dict:
    """Recompute the iteration summary columns available from a CSV log."""
    cols = read_iteration_csv(path)

    def peak(x):
        return float(np.max(x)) if x.size else 0.0

    dq = np.stack([cols["dq_x"], cols["dq_y"], cols["dq_z"]], axis=1)
    return {
        "ticks": int(cols["t"].size),
        "max_dP_norm_m": peak(cols["dP_norm"]),
        "max_dq_norm": peak(np.linalg.norm(dq, axis=1)),
        "max_angle_deg": math.degrees(peak(cols["angle_rad"])),
        "max_theta_hat": peak(cols["theta_hat"]),
    }


def _iteration_from_name(path: Path) -> int:
    m = re.fullmatch(r"iter_(\d+)\.csv", path.name)
    if not m:
        raise ValueError(f"cannot infer the iteration index from {path.name!r}")
    return int(m.group(1))


def replay(
    cfg: ExperimentConfig,
    k: int,
    force: np.ndarray,
    torque: np.ndarray,
    reference: Reference | None = None,
) -> np.ndarray:
    """Drive the body open-loop with a recorded wrench; returns the error quaternions per tick."""
    reference = reference if reference is not None else build_reference(cfg)
    wrench = np.hstack((np.asarray(force, float), np.asarray(torque, float)))
    if wrench.shape != (reference.times.size, 6):
        raise ValueError(f"wrench has shape {wrench.shape}, expected {(reference.times.size, 6)}")
    M, body = _body_args(cfg)
    y0 = np.concatenate((reference.pose[0], reference.twist[0]))
    dist = cfg.disturbance.kernel_args(k, M.mass)[1:]
    return replay_kernel(y0, reference.pose, reference.twist, np.ascontiguousarray(wrench), cfg.dt, *body, *dist)


def replay_deviation(cfg: ExperimentConfig, it: IterationLog, reference: Reference | None = None) -> float:
    """Largest gap between logged and open-loop-replayed error (position in m, attitude vector)."""
    errors = replay(cfg, it.k, it.force, it.torque, reference)
    dP = error_positions(errors)
    return float(max(np.max(np.abs(dP - it.dP), initial=0.0), np.max(np.abs(errors[:, 1:4] - it.dq), initial=0.0)))


def replay_csv(path: str | Path, cfg: ExperimentConfig | None = None) -> float:
    """Replay ``iter_kkk.csv`` using the ``config.yaml`` next to it; returns the max deviation."""
    path = Path(path)
    cfg = cfg or load_config(path.parent / "config.yaml")
    k = _iteration_from_name(path)
    cols = read_iteration_csv(path)
    force = np.stack([cols["f_x"], cols["f_y"], cols["f_z"]], axis=1)
    torque = np.stack([cols["tau_x"], cols["tau_y"], cols["tau_z"]], axis=1)
    errors = replay(cfg, k, force, torque)
    dP = error_positions(errors)
    logged_dP = np.stack([cols["dP_x"], cols["dP_y"], cols["dP_z"]], axis=1)
    logged_dq = np.stack([cols["dq_x"], cols["dq_y"], cols["dq_z"]], axis=1)
    return float(max(np.max(np.abs(dP - logged_dP)), np.max(np.abs(errors[:, 1:4] - logged_dq))))
