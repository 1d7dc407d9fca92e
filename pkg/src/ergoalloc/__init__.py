"""Online human-robot role allocation for cooperative assembly.

Assembly tasks are AND/OR graphs whose hyper-arcs carry per-worker costs;
the human's costs follow a per-joint wear model fed by continuous RULA
scores, so re-searching the graph after every completed action shifts risky
work to the robot exactly when the human's predicted wear warrants it.
"""

from .aog import (
    AOG,
    GraphError,
    HyperArc,
    Node,
    ProgressState,
    Worker,
    apply_action,
    build_graph,
    generate_linear_assembly,
    initial_state,
    load_graph,
    save_graph,
    validate,
)
from .calibration import (
    CalibrationError,
    TrialRecord,
    alpha_from_trial,
    estimate_action_model,
    load_calibration,
    save_calibration,
)
from .ergo import (
    JOINTS,
    ActionModel,
    AngleTrace,
    CostConfig,
    ErgoError,
    RulaBandTable,
    RulaScoreTrace,
    WearVector,
    capacity,
    default_band_table,
    gamma_of,
    human_cost,
    integrate_wear,
    predict,
    recover,
    rula_score,
    score_angle_trace,
)
from .planner import PlanningError, PlanTree, next_action, optimal_plan, replan
from .session import (
    CompletionEvidence,
    SessionError,
    SessionState,
    complete_action,
    export_log,
    load_snapshot,
    offline_allocation,
    override,
    recost,
    replay_log,
    run_scenario,
    save_snapshot,
    start_session,
    state_digest,
    suggest_next,
)

__version__ = "0.1.0"
