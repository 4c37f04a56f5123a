"""Dual-quaternion pose tracking with iterative learning control."""

from .config import ExperimentConfig, load_config, proximity_preset, two_segment_preset
from .dual_algebra import (
    DualInertia,
    DualVector3,
    apply_inertia,
    comp_part,
    crs,
    dual_cross,
    exch,
    func_op,
    invert_inertia,
    real_part,
    sgn_dual,
)
from .dual_quaternion import (
    DualQuaternion,
    Pose,
    UnitDualQuaternion,
    dq_conj,
    dq_mul,
    dq_to_pose,
    error_dq,
    error_twist,
    frame_transform,
    is_unit,
    pose_to_dq,
)
from .experiment_harness import (
    CampaignReport,
    IterationLog,
    energy,
    export_campaign,
    metrics,
    run_campaign,
    run_iteration,
)
from .ilc_controller import (
    ControllerGains,
    EstimateProfile,
    SegmentGrid,
    control_law,
    run_controller_tick,
    segment_index,
    segment_project,
    update_estimate,
)
from .quaternion import (
    Quaternion,
    UnitInvariantError,
    UnitQuaternion,
    aug,
    from_axis_angle,
    normalize,
    quat_conj,
    quat_mul,
    red,
    to_angle,
)
from .rigid_body_sim import (
    DesiredState,
    DesiredTrajectory,
    DisturbanceConfig,
    ErrorState,
    RigidBodyState,
    desired_twist,
    disturbance,
    dynamics_rate,
    error_state,
    kinematics_rate,
    step,
)

__version__ = "0.1.0"
