"""Trace-distance certificates from local marginals, Petz reconstruction and lattice shield planning."""

from .entropy import (
    EntropyReport,
    binary_entropy,
    cmi,
    concavity_gap,
    conditional_entropy,
    continuity_correction,
    entropy,
    entropy_report,
    mutual_information,
    weak_monotonicity,
)
from .errors import (
    CapacityError,
    CompositionError,
    ConsistencyError,
    CoverageError,
    DegenerateInputError,
    DomainError,
    GeometryError,
    MarkovCertError,
    PlanError,
    RecoveryError,
    RegionError,
    SchemeError,
    ShapeError,
    ValidationError,
)
from .kernels import BACKEND
from .markov import (
    CertificateReport,
    Shield,
    ShieldPlan,
    assign_rdms,
    certificate,
    local_rdms,
    markov_entropy,
    med_gap,
    med_gap_upper_bound,
    tripartite_distance_bound,
    shielded_distance_bound,
)
from .planner import (
    BoundaryMetrics,
    EntropyModel,
    GridLayout,
    boundary_metrics,
    generate_plan,
    model_shield_score,
    plan_from_ordering,
    predict_bound,
    validate_plan,
)
from .recovery import ReconstructionTrace, petz_extend, petz_recover, reconstruct
from .state import (
    DensityMatrix,
    Region,
    StateVector,
    SystemLayout,
    Tolerances,
    bell_pair,
    ghz_state,
    partial_trace,
    project_to_density,
    random_mixed_state,
    tensor_product,
    to_density,
    trace_distance,
)
from .tomo import (
    ConsistencyResult,
    MeasurementPlan,
    VerificationVerdict,
    find_consistent_state,
    simulate,
    simulate_region_tomography,
    verify,
)

__version__ = "0.1.0"
