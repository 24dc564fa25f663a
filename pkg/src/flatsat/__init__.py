"""flatsat: saturated flatness-based quadcopter control toolkit.

Library layout:

* model       - translational dynamics, exact input transform, discretization
* geometry    - input sector, ellipsoids, polytopes, erosion
* saturation  - explicit radial saturation (sector and polytope)
* lmi         - nominal/robust certificate synthesis, adaptive-gain bounds
* control     - saturated feedback laws and gain adaptation
* terminal    - MPC terminal-ingredient design and verification
* simulate    - RK4 closed-loop simulation, references, traces, metrics
* cli         - `flatsat` command line front end
"""

from .control import AdaptiveState, ControlAction, control, gamma_step, lyapunov_value, threshold, tracking_control
from .geometry import (
    Box,
    Ellipsoid,
    HPolytope,
    VPolytope,
    check_input_ball_condition,
    max_ball_in_vc,
    max_box_in_vc,
    polytope_approx_vc,
    pontryagin_diff,
    vc_membership,
)
from .lmi import (
    AdaptiveBounds,
    NominalDesign,
    RobustDesign,
    adaptive_bounds,
    check_box_rows,
    max_level_set,
    solve_nominal,
    solve_robust,
)
from .model import (
    A_MATRIX,
    B_MATRIX,
    DisturbanceChannel,
    PhysicalParams,
    RealInput,
    discretize,
    dynamics_rhs,
    inverse_thrust_map,
    linearizing_input,
    thrust_map,
    u_membership,
    yaw_matrix,
)
from .saturation import SaturationResult, candidate_lambdas, sat_polytope, sat_vc
from .simulate import (
    ReferencePlan,
    ReferenceTrajectory,
    Scenario,
    TraceRecord,
    make_reference,
    metrics,
    rk4_step,
    simulate,
    trace_to_csv,
)
from .terminal import (
    StageWeights,
    TerminalIngredients,
    TerminalReport,
    check_gain_stability,
    design_terminal,
    gain_matrix,
    q_star,
    solve_discrete_lyapunov,
    terminal_alpha,
    verify_terminal_conditions,
)

__version__ = "0.1.0"
