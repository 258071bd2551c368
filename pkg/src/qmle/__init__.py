"""Maximum-likelihood estimation of quantum states and measurement parameters."""

__version__ = "0.1.0"

from .errors import (
    CutoffTooSmall,
    DegeneratePhases,
    DimensionMismatch,
    NonFiniteObjective,
    NonUniqueMaximum,
    QMLEError,
    QuadratureNotConverged,
    ReferenceUnidentifiable,
    UnphysicalParams,
    ZeroFactor,
    ZeroProbabilityRecord,
)
from .estimation import (
    CoherentReference,
    EfficiencyEstimate,
    FockReference,
    PhotonNumbers,
    cramer_rao_sigma,
    estimate_eta_avalanche,
    estimate_eta_linear,
    estimate_gaussian,
    fisher_on_off,
    gaussian_log_likelihood,
    naive_eta,
    params_to_photon_numbers,
)
from .optimize import OptConfig, OptResult, maximize_scalar, nelder_mead_maximize
from .povm import (
    ClickSummary,
    HomodyneData,
    HomodyneRecord,
    SpinData,
    SpinOutcome,
    gaussian_homodyne_density,
    homodyne_expectation,
    spin_projector_expectation,
)
from .sampler import SamplerConfig, sample_homodyne, sample_on_off, sample_spin_pair
from .states import (
    DensityMatrix,
    GaussianParams,
    StateVector,
    TFactor,
    coherent_state,
    density_to_t_factor,
    overlap,
    squeezed_thermal_density,
    squeezed_thermal_photon_distribution,
    squeezed_vacuum,
    t_factor_to_density,
)
from .tomography import ReconstructionReport, log_likelihood_t, reconstruct_fock, reconstruct_spin
