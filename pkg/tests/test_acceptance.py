"""Acceptance suite: algebraic properties, integrator checks and the full tracking campaigns.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion.
"""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings

from dqilc.config import proximity_preset
from dqilc.dual_algebra import DualVector3, apply_inertia, crs, dual_cross
from dqilc.dual_quaternion import (
    UnitDualQuaternion,
    dq_aug,
    dq_conj,
    dq_mul,
    dq_to_pose,
    dqconj,
    dqmul,
    error_dq,
    frame_transform,
    pose_to_dq,
    unit_residual,
)
from dqilc.experiment_harness import run_campaign
from dqilc.quaternion import from_axis_angle
from dqilc.rigid_body_sim import DesiredTrajectory, step_kinematics
from strategies import dual_quaternions, dual_vectors, inertias, poses, unit_dual_quaternions
from trajectories import H, pose_error_rate_residual, simulated_points, twist_error_rate_residual

CASES = settings(max_examples=1000)
ONE = UnitDualQuaternion.identity().flat()
TOL = 1e-9


def criterion(n, title):
    return pytest.mark.criterion(n, title)


# -- 1: pose error closure and identity ---------------------------------------

C1 = criterion(1, "pose error stays unit; identity iff equal, minus identity iff negated")


@C1
@CASES
@given(unit_dual_quaternions(bound=1e7), unit_dual_quaternions(bound=1e7))
def test_error_closure(a, b):
    e = dqmul(dqconj(a.flat()), b.flat())
    norm_err, orth_err = unit_residual(e)
    # dual-part rounding scales with the operands' dual parts (half the positions)
    nc = max(1.0, np.linalg.norm(e[4:]))
    scale = max(nc, np.linalg.norm(a.dual) + np.linalg.norm(b.dual))
    assert norm_err < TOL
    assert orth_err * nc / scale < TOL
    error_dq(a, b)  # re-checks the unit invariant on construction


@C1
@CASES
@given(unit_dual_quaternions(bound=1e7), unit_dual_quaternions(bound=1e3))
def test_error_recovers_relative_pose(a, x):
    # e(a, a o x) == x, so e == 1 exactly when the poses coincide
    e = error_dq(a, dq_mul(a, x)).flat()
    scale = max(1.0, np.abs(a.dual).max()) * max(1.0, np.abs(x.dual).max())
    np.testing.assert_allclose(e, x.flat(), rtol=0, atol=TOL * scale)


@C1
@CASES
@given(unit_dual_quaternions(bound=1e7))
def test_error_of_equal_and_negated_poses(a):
    scale = max(1.0, np.abs(a.dual).max())
    np.testing.assert_allclose(error_dq(a, a).flat(), ONE, rtol=0, atol=TOL * scale)
    np.testing.assert_allclose(error_dq(a, -a).flat(), -ONE, rtol=0, atol=TOL * scale)


@C1
@CASES
@given(unit_dual_quaternions(bound=1e7), poses(bound=10.0))
def test_error_is_identity_only_for_equal_poses(a, offset):
    # real parts are exact to rounding; dual parts carry rounding of order TOL * |a_c|
    scale = max(1.0, np.linalg.norm(a.dual))

    def is_pm_one(v, sign):
        return np.allclose(v[:4], sign * ONE[:4], rtol=0, atol=TOL) and np.allclose(v[4:], 0, rtol=0, atol=TOL * scale)

    x = pose_to_dq(offset).flat()
    # the offset must clear the resolution at which the product can be decided
    def far(sign):
        return np.abs(x[:4] - sign * ONE[:4]).max() > 1e-6 or np.abs(x[4:]).max() > 1e-6 * scale

    assume(far(1) and far(-1))
    b = UnitDualQuaternion.from_product(dqmul(a.flat(), x), np.linalg.norm(a.dual))
    e = error_dq(a, b).flat()
    assert not is_pm_one(e, 1)
    assert not is_pm_one(e, -1)


# -- 2: pose encoding round trips ---------------------------------------------

C2 = criterion(2, "pose encoding round trips with |P| up to 1e7 m")


@C2
@CASES
@given(poses(bound=1e7))
def test_pose_round_trip(p):
    back = dq_to_pose(pose_to_dq(p))
    np.testing.assert_allclose(back.attitude.components, p.attitude.components, rtol=0, atol=TOL)
    # absolute error relative to |P|: 1e-9 m is below double resolution at 1e7 m
    np.testing.assert_allclose(back.position, p.position, rtol=0, atol=TOL * max(1.0, np.linalg.norm(p.position)))


@C2
@CASES
@given(unit_dual_quaternions(bound=1e7))
def test_dual_quaternion_round_trip(x):
    y = pose_to_dq(dq_to_pose(x)).flat()
    np.testing.assert_allclose(y, x.flat(), rtol=0, atol=TOL * max(1.0, np.abs(x.dual).max()))


# -- 3: frame transform ---------------------------------------------------------

C3 = criterion(3, "sandwich product has zero scalar part and keeps the real-part norm")


@C3
@CASES
@given(dual_vectors(), unit_dual_quaternions(bound=1e7))
def test_sandwich_scalar_part(x, e):
    y = dqmul(dqmul(dqconj(e.flat()), dq_aug(x.flat())), e.flat())
    real_scale = max(1.0, np.linalg.norm(x.real))
    dual_scale = max(1.0, np.linalg.norm(x.dual) + real_scale * np.linalg.norm(e.dual))
    assert abs(y[0]) / real_scale < TOL
    assert abs(y[4]) / dual_scale < TOL


@C3
@CASES
@given(dual_vectors(), unit_dual_quaternions(bound=1e7))
def test_sandwich_preserves_real_norm(x, e):
    out = frame_transform(x, e)
    assert abs(np.linalg.norm(out.real) - np.linalg.norm(x.real)) <= 1e-10 * max(1.0, np.linalg.norm(x.real))


# -- 4, 5: pairing identities ---------------------------------------------------


@criterion(4, "gyroscopic pairing identity with random SPD inertia")
@CASES
@given(dual_vectors(), dual_vectors(), inertias())
def test_gyroscopic_pairing_identity(x, y, M):
    lhs = crs(x, -apply_inertia(M, dual_cross(y, x)))
    rhs = crs(x, dual_cross(y, apply_inertia(M, x)))
    scale = np.linalg.norm(x.flat()) ** 2 * np.linalg.norm(y.flat()) * max(M.mass, np.linalg.norm(M.inertia))
    assert abs(lhs - rhs) <= 1e-10 * max(scale, 1e-300)


@criterion(5, "product adjoint identity of the pairing")
@CASES
@given(dual_quaternions(), dual_quaternions(), dual_quaternions())
def test_pairing_adjoint_identity(a, b, c):
    lhs = crs(dq_mul(a, b), c)
    rhs = crs(b, dq_mul(dq_conj(a), c))
    scale = np.linalg.norm(a.flat()) * np.linalg.norm(b.flat()) * np.linalg.norm(c.flat())
    assert abs(lhs - rhs) <= 1e-10 * max(scale, 1e-300)


# -- 6: error dynamics against finite differences -----------------------------

C6 = criterion(6, "error kinematics and error dynamics match central differences")


@C6
@pytest.mark.parametrize("point", range(6))
def test_pose_error_rate(point, record_property):
    r = pose_error_rate_residual(*simulated_points()[point], h=H)
    record_property("rel_err", f"{r:.2e}")
    assert r < 1e-5


@C6
@pytest.mark.parametrize("point", range(6))
def test_twist_error_rate(point, record_property):
    r = twist_error_rate_residual(*simulated_points()[point], h=H)
    record_property("rel_err", f"{r:.2e}")
    assert r < 1e-5


# -- 8: integrator order ---------------------------------------------------------


@criterion(8, "RK4 convergence order on constant-rate rotation")
def test_rk4_order(record_property):
    w, T = 2.0, 1.0
    exact = from_axis_angle([0, 0, 1], w * T).components
    twist = DualVector3([0, 0, w], [0, 0, 0])

    def final_error(n):
        pose = UnitDualQuaternion.identity()
        dt = T / n
        for i in range(n):
            pose = step_kinematics(pose, lambda t: (twist, DualVector3.zero()), i * dt, dt)
        return np.linalg.norm(pose.real - exact)

    errs = [final_error(n) for n in (10, 20, 40, 80)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    record_property("orders", "/".join(f"{p:.3f}" for p in orders))
    assert all(3.7 <= p <= 4.2 for p in orders)


# -- campaigns -------------------------------------------------------------------


@pytest.fixture(scope="module")
def saturated():
    cfg = proximity_preset(variant="saturated")
    assert cfg.segments == 200 and cfg.iterations == 31 and cfg.frequency == 1000 and cfg.duration == 20
    return run_campaign(cfg)


@pytest.fixture(scope="module")
def unsaturated():
    return run_campaign(proximity_preset(variant="unsaturated"))


C7 = criterion(7, "learning increment non-negative and capped at every tick")


@C7
def test_increment_bounds_saturated(saturated, record_property):
    k_l = saturated.config.gains.k_l
    lo = min(float(it.increment.min()) for it in saturated.logs)
    hi = max(float(it.increment.max()) for it in saturated.logs)
    record_property("increment_range", f"[{lo:.3e}, {hi:.3e}]")
    for it in saturated.logs:
        assert np.all(it.increment >= 0.0)
        assert np.all(it.increment <= k_l)
        assert np.all(it.theta >= it.theta_prev)
        # theta = theta_prev + increment up to one rounding of the sum
        np.testing.assert_allclose(it.theta - it.theta_prev, it.increment, rtol=0, atol=4e-16 * max(1.0, it.theta.max()))


@C7
def test_increment_non_negative_unsaturated(unsaturated):
    for it in unsaturated.logs:
        assert np.all(it.increment >= 0.0)
        assert np.all(it.theta >= it.theta_prev)


C9 = criterion(9, "iteration 0 (PD only) error bands")


@C9
def test_initial_position_error_band(saturated, record_property):
    v = saturated.logs[0].summary()["max_dP_norm_m"]
    record_property("max_dP_m", f"{v:.2f}")
    assert 300.0 <= v <= 5000.0


@C9
def test_initial_angle_band(saturated, record_property):
    v = saturated.logs[0].summary()["max_angle_deg"]
    record_property("max_angle_deg", f"{v:.2f}")
    assert 20.0 <= v <= 70.0


def _final_checks(report, record_property):
    s = report.logs[30].summary()
    record_property("max_dP_m", f"{s['max_dP_norm_m']:.2f}")
    record_property("max_angle_deg", f"{s['max_angle_deg']:.3f}")
    return s


C10 = criterion(10, "iteration 30 error bounds")


@C10
def test_final_position_error(saturated, record_property):
    assert _final_checks(saturated, record_property)["max_dP_norm_m"] <= 100.0


@C10
def test_final_angle(saturated, record_property):
    assert _final_checks(saturated, record_property)["max_angle_deg"] <= 1.0


C11 = criterion(11, "estimate peak in range and plateaued from k=25")


@C11
def test_estimate_range(saturated, record_property):
    v = float(np.max(saturated.column("max_theta_hat")))
    record_property("max_theta_hat", f"{v:.4f}")
    assert 0.1 <= v <= 2.0


@C11
def test_estimate_plateau(saturated, record_property):
    th = saturated.column("max_theta_hat")
    change = abs(th[30] - th[25]) / th[25]
    record_property("k25", f"{th[25]:.4f}")
    record_property("k30", f"{th[30]:.4f}")
    record_property("change", f"{100 * change:.2f}%")
    assert change < 0.05


@criterion(12, "per-iteration max position error non-increasing (5% slack) for k >= 5")
def test_position_error_monotone(saturated, record_property):
    p = saturated.column("max_dP_norm_m")
    worst = max(p[k + 1] / p[k] - 1.0 for k in range(5, p.size - 1))
    record_property("largest_increase", f"{100 * worst:+.2f}%")
    assert all(p[k + 1] <= 1.05 * p[k] for k in range(5, p.size - 1))


C13 = criterion(13, "unsaturated variant converges at least as fast")


@C13
def test_unsaturated_final_position_error(unsaturated, record_property):
    assert _final_checks(unsaturated, record_property)["max_dP_norm_m"] <= 100.0


@C13
def test_unsaturated_final_angle(unsaturated, record_property):
    assert _final_checks(unsaturated, record_property)["max_angle_deg"] <= 1.0


@C13
def test_unsaturated_not_slower(saturated, unsaturated, record_property):
    p56 = saturated.column("max_dP_norm_m")
    p35 = unsaturated.column("max_dP_norm_m")
    ratio = p35 / p56
    record_property("worst_ratio", f"{ratio.max():.4f}")
    assert np.all(p35 <= 1.05 * p56)


def test_campaign_disturbance_phases_differ_per_iteration(saturated):
    d = saturated.config.disturbance
    assert not np.allclose(d.force_phases(0), d.force_phases(1))


def test_reference_trajectory_is_the_scenario_default(saturated):
    assert saturated.config.reference.trajectory == DesiredTrajectory()


@pytest.mark.parametrize("k", [0, 30])
def test_campaign_logs_span_horizon(saturated, k):
    it = saturated.logs[k]
    assert it.n_ticks == 20001 and it.t[-1] == pytest.approx(20.0)

