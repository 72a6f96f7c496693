"""Magnetic Stark resonances of ``H_L + V - F x`` by complex translation.

The public API re-exports the pieces most scripts need; the submodules
hold the rest.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ConvergenceError,
    DomainError,
    InsufficientDataError,
    InvalidParameterError,
    MagstarkError,
    MalformedRowError,
    NotFoundError,
)
from .model import DerivedGeometry, FieldParams, PotentialModel, ScheduleParams  # noqa: E402
from .special import gaussian_tail, pcf_asymptotic, pcf_D  # noqa: E402
from .discretization import (  # noqa: E402
    BasisSpec,
    ComplexOperator,
    assemble_H,
    assemble_H2,
    assemble_HL,
    potential_block,
)
from .eigen import EigenPair, charpoly_eigenvalues, eig_dense, eigvals_dense  # noqa: E402
from .resonance import (  # noqa: E402
    ImpurityLevel,
    ResonanceEstimate,
    estimate_resonance,
    h2_crosscheck,
    locate_resonance,
    unperturbed_levels,
)
from .bounds import run_verification  # noqa: E402
from .config import RunConfig, parse_config, serialize_config  # noqa: E402
from .sweep import FitResult, SweepRow, b_linearity, fit_width_law, run_sweep  # noqa: E402
from .results import read_results, write_results  # noqa: E402

__all__ = [
    "__version__",
    "MagstarkError", "DomainError", "InvalidParameterError", "ConvergenceError", "NotFoundError",
    "InsufficientDataError", "ConfigError", "MalformedRowError",
    "FieldParams", "PotentialModel", "ScheduleParams", "DerivedGeometry",
    "pcf_D", "pcf_asymptotic", "gaussian_tail",
    "BasisSpec", "ComplexOperator", "assemble_HL", "assemble_H", "assemble_H2", "potential_block",
    "EigenPair", "eig_dense", "eigvals_dense", "charpoly_eigenvalues",
    "ImpurityLevel", "ResonanceEstimate", "unperturbed_levels", "locate_resonance",
    "estimate_resonance", "h2_crosscheck",
    "run_verification",
    "RunConfig", "parse_config", "serialize_config",
    "SweepRow", "FitResult", "run_sweep", "fit_width_law", "b_linearity",
    "read_results", "write_results",
]
