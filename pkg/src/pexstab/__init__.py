"""Numerical laboratory for averaged Pexider stability on finite carriers.

Decomposes perturbed solution triples of the K-averaged Pexider equation
into quadratic and Jensen components by contraction iteration, and checks
the explicit stability bounds that certify the decomposition.
"""

__version__ = "0.1.0"

from .control import (
    ConstantControl,
    Control,
    LipschitzCert,
    PowerControl,
    TableControl,
    corollary_coefficients,
    minimal_lipschitz,
)
from .domain import Automorphism, GroupK, LatticeCarrier, ModularCarrier, build_group
from .errors import (
    CertificateImpossible,
    ConfigError,
    HypothesisViolated,
    LambdaNotContractive,
    LawViolation,
    MaxIterations,
    NoFiniteStep,
    NotContractive,
    OutOfCarrier,
    PexstabError,
    ZeroDenominatorViolation,
)
from .fixpoint import FULL, HALF, AveragingOp, apply_op, iterate
from .funcspace import DenseTable, PolyPlusTable, beta_norm, sup_weighted_distance, symmetrize
from .harness import dump_report, load_config, run_config, validate_config
from .oracle import (
    PexiderTriple,
    SplitMix64,
    jensen_solution_space,
    make_exact_triple,
    perturb,
    quadratic_solution_space,
)
from .stabilizer import Decomposition, StabilityReport, stabilize, uniqueness_probe

__all__ = [
    "__version__",
    "Automorphism", "GroupK", "LatticeCarrier", "ModularCarrier", "build_group",
    "DenseTable", "PolyPlusTable", "beta_norm", "sup_weighted_distance", "symmetrize",
    "Control", "ConstantControl", "PowerControl", "TableControl",
    "LipschitzCert", "minimal_lipschitz", "corollary_coefficients",
    "AveragingOp", "apply_op", "iterate", "HALF", "FULL",
    "PexiderTriple", "SplitMix64", "make_exact_triple", "perturb",
    "quadratic_solution_space", "jensen_solution_space",
    "Decomposition", "StabilityReport", "stabilize", "uniqueness_probe",
    "load_config", "validate_config", "run_config", "dump_report",
    "PexstabError", "ConfigError", "OutOfCarrier", "HypothesisViolated",
    "NotContractive", "ZeroDenominatorViolation", "LambdaNotContractive",
    "NoFiniteStep", "MaxIterations", "LawViolation", "CertificateImpossible",
]
