"""Bell nonlocality toolkit.

Engines: behaviors and local-polytope membership, two-qubit quantum
behaviors, frame-covariant deterministic models, measurement-dependence
simulators, entanglement-swapping bilocality, and randomness-expansion
accounting.  The FastAPI service in :mod:`bell_lab.service` exposes each
engine over HTTP, and :mod:`bell_lab.cli` is a thin client in front of it.
"""
from .behavior import (
    Behavior,
    BellExpression,
    CHSH_SCENARIO,
    DeterministicStrategy,
    LocalMembershipResult,
    Scenario,
    algebraic_bound,
    chsh_expression,
    enumerate_strategies,
    evaluate,
    is_local,
    local_bound,
    strategy_behavior,
)
from .bilocal import (
    BILOCAL_BOUND,
    BilocalValue,
    SwappingScenario,
    TripartiteBehavior,
    bilocal_threshold_sweep,
    bilocal_value,
    swapping_behavior,
)
from .covariance import (
    CovariantModel,
    check_covariance,
    covariance_forces_locality,
    induced_behavior,
)
from .errors import (
    BellLabError,
    CapExceeded,
    DimensionMismatch,
    NotCovariant,
    NumericalFailure,
    OutOfRange,
    SeedStarvation,
)
from .freewill import (
    DetectionModel,
    FreeWillDeficit,
    MeasurementDependentModel,
    deficit,
    entropy_deficit,
    predetermined_inputs_value,
    simulate_detection_model,
    simulate_measurement_dependent,
)
from .quantum import (
    BlochVector,
    MeasurementSettings,
    TwoQubitState,
    chsh_optimal_settings,
    chsh_violation_threshold,
    quantum_behavior,
    werner_state,
)
from .randomness import (
    ExpansionStage,
    TSIRELSON_BOUND,
    chsh_certified_stage,
    expansion_accounting,
    minentropy_bound,
    serial_composition,
    simulate_qrng_rounds,
)

__version__ = "0.1.0"
