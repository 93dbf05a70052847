"""Two-qubit entanglement in a dissipative cavity bus under detuning modulation."""

from .bloch import BlochDerivative, Trajectory, bloch_rhs, integrate, steady_state
from .core import (
    Constant,
    DetuningSchedule,
    DickeState,
    Heaviside,
    OutOfSpanError,
    PiecewiseConstant,
    Pulse,
    Sigmoid,
    SquareWave,
    StateError,
    SystemParams,
    TwoQubitState,
    Zero,
    computational_to_dicke,
    dicke_to_computational,
    eval_schedule,
    g_coeff,
    schedule_from_dict,
)
from .integrate import IntegrationError
from .lindblad import (
    CompositeState,
    FockTailError,
    MatrixTrajectory,
    dissipator,
    full_me_rhs,
    integrate_operator,
    partial_trace_cavity,
    project_reduced_rhs,
    reduced_me_rhs,
    reduced_me_rhs_pair,
)
from .metrics import (
    MetricRecord,
    concurrence_wootters,
    concurrence_xform,
    fidelities,
    metric_record,
    negativity,
    purity,
    trajectory_metrics,
)
from .postselect import (
    DegeneratePostselectionError,
    PostselectionResult,
    postselect,
    postselect_sweep,
)

__version__ = "0.1.0"
