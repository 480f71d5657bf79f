"""Algebraic fault detection and identification for rigid robots using
sliding-window Jacobi polynomial approximation."""
from .dynamics import (
    MechanicalModel,
    RankError,
    RobotState,
    ScaraParams,
    forward_dynamics,
    left_annihilator,
    pseudoinverse,
    right_annihilator,
    scara_model,
)
from .fdi import (
    DetectionDecision,
    Detector,
    FaultEstimator,
    ResidualConfig,
    ResidualEstimator,
    decoupled_fault_matrix,
    detect,
    fault_gain,
    fault_identify_exact,
    fault_identify_partial,
    make_fault_estimator,
    make_residual_estimator,
    residual_decoupled,
    residual_raw,
)
from .jacobi import JacobiBasis
from .kernels import (
    FirFilter,
    KernelSpec,
    SignalWindow,
    WindowNotReady,
    WindowSpec,
    apply,
    approximate_product,
    continuous_apply,
    default_delay,
    fir_weights,
    kernel_value,
)
from .sim import RunRecord, Scenario, run_scenario

__version__ = "0.1.0"
