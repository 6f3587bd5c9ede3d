"""opdyn: asymptotic dynamics of bounded linear operators and semigroups."""

from .errors import (
    OpdynError,
    PreconditionError,
    FieldMismatch,
    IndexDomainViolation,
    DimensionMismatch,
    AlreadyComplex,
    NotPowerBounded,
    NotFiniteDimensional,
    NotContraction,
    PreconditionNotReturning,
    HypothesisNotSatisfied,
    ScalarNotUnimodular,
    EmptySampleSet,
    SampleOutsideBall,
    NotUnimodular,
    NoApproximateKernel,
    NotIsometry,
    NegativeTime,
    UnboundedSemigroup,
    LNotInvariant,
    ZeroDirection,
    ZeroCandidate,
    EmptyNet,
    ParseError,
    InvariantViolation,
)
from .vectors import NormKind, Rescaled, ScalarField, SparseVector
from .operators import (
    DenseMatrix,
    Direction,
    DirectSum,
    Generator,
    Operator,
    RotationBlock,
    StochasticMatrix,
    WeightedShift,
    apply,
    apply_power,
    complexify,
    diag,
    identity,
    inverse,
    is_exact_isometry,
    is_invertible,
    power_bounded_check,
    rescale,
    rescaled_norm,
)
from .orbits import (
    CompactNet,
    OrbitTrace,
    ReturningCertificate,
    attractor_check,
    is_returning,
    lemma1_isometry_check,
    lemma4_recover,
    occasional_attractor_check,
    orbit,
    point_set_distance,
)
from .decomposition import (
    AsymptoticDecomposition,
    asymptotic_project,
    real_quadratic_witness,
    vu_sine_decompose,
)
from .weyl import theorem1_falsify, weyl_sequence_dense, weyl_sequence_identity, weyl_sequence_shift
from .semigroup import SemigroupSpec, continuous_attraction_check, semigroup_at, tilde_net, theorem3_transfer
from .supercyclic import best_scalar_match, compact_supercyclic_probe, supercyclic_probe, theorem4_pipeline

__all__ = [
    "AlreadyComplex",
    "apply",
    "apply_power",
    "asymptotic_project",
    "AsymptoticDecomposition",
    "attractor_check",
    "best_scalar_match",
    "compact_supercyclic_probe",
    "CompactNet",
    "complexify",
    "continuous_attraction_check",
    "DenseMatrix",
    "diag",
    "DimensionMismatch",
    "Direction",
    "DirectSum",
    "EmptyNet",
    "EmptySampleSet",
    "FieldMismatch",
    "Generator",
    "HypothesisNotSatisfied",
    "identity",
    "IndexDomainViolation",
    "InvariantViolation",
    "inverse",
    "is_exact_isometry",
    "is_invertible",
    "is_returning",
    "lemma1_isometry_check",
    "lemma4_recover",
    "LNotInvariant",
    "NegativeTime",
    "NoApproximateKernel",
    "NormKind",
    "NotContraction",
    "NotFiniteDimensional",
    "NotIsometry",
    "NotPowerBounded",
    "NotUnimodular",
    "occasional_attractor_check",
    "OpdynError",
    "Operator",
    "orbit",
    "OrbitTrace",
    "ParseError",
    "point_set_distance",
    "power_bounded_check",
    "PreconditionError",
    "PreconditionNotReturning",
    "real_quadratic_witness",
    "rescale",
    "Rescaled",
    "rescaled_norm",
    "ReturningCertificate",
    "RotationBlock",
    "SampleOutsideBall",
    "ScalarField",
    "ScalarNotUnimodular",
    "semigroup_at",
    "SemigroupSpec",
    "SparseVector",
    "StochasticMatrix",
    "supercyclic_probe",
    "theorem1_falsify",
    "theorem3_transfer",
    "theorem4_pipeline",
    "tilde_net",
    "UnboundedSemigroup",
    "vu_sine_decompose",
    "WeightedShift",
    "weyl_sequence_dense",
    "weyl_sequence_identity",
    "weyl_sequence_shift",
    "ZeroCandidate",
    "ZeroDirection",
]

__version__ = "0.1.0"
