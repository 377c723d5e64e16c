"""Direct and inverse spectral theory of -y'' + q y on [0, pi] with antiderivative potentials."""

__version__ = "0.1.0"

from .errors import (
    BracketFailure,
    DegenerateDenominator,
    GNonPositive,
    IllConditionedFit,
    IntegrationOverflow,
    InterlacingViolation,
    NoConvergence,
    NonPositiveLambda,
    OmegaViolation,
    ShiftTooNegative,
    SlinvError,
    TOutOfRange,
    ValidationError,
)
from .harness import StabilityReport, SweepCell, SweepConfig, omega_image_check, sample_potential, stability_sweep
from .inverse import (
    ReconstructionResult,
    ReconstructOptions,
    build_from_data,
    perturb_eigenvalue,
    perturb_norming,
    reconstruct,
    reconstruct_via_basis_step,
)
from .linearized import (
    BasisFunctions,
    build_basis,
    frechet_derivative,
    gram_matrix,
    t_borg,
    t_dirichlet,
    t_forward,
    t_inverse,
    t_solve,
)
from .ode import CauchySolution, boundary_functionals, boundary_values, integrate, trajectories
from .potential import Potential, shift_potential, sobolev_norm
from .seqspace import ExtSeq, Flavor, OmegaResult, decompose, ext_norm, m_of_theta, omega_membership, seq_norm, special_sequence
from .spectra import (
    EigenData,
    RegularizedData,
    auto_shift,
    dataset_from_json,
    dataset_to_json,
    dirichlet_neumann_spectrum,
    dirichlet_spectrum,
    eigendata,
    forward_map,
    norming_constants,
    regularize,
    shift_data,
)

__all__ = [name for name in dir() if not name.startswith("_")]
