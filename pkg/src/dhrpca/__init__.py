"""Deterministic high-dimensional robust PCA and its randomized baseline."""

from .dhr import DhrConfig, DhrResult, eta_step, point_variances, run_dhr, run_pca, weight_update
from .errors import (
    ContractViolation,
    DegenerateStateError,
    DegenerateTruthError,
    NoInformativeDirection,
    RankDeficiencyError,
)
from .estimators import (
    GroundTruth,
    asymptotic_bound,
    expressed_variance,
    gaussian_tail_weight,
    rve,
    rve_sum,
    s0_bound,
)
from .hr import HrConfig, run_hr
from .kernel import KernelSpec, gram, kernel_project, run_kernel_dhr, weighted_kernel_pca
from .numerics import SubspaceBasis, top_d_eigen, weighted_second_moment
from .synth import SynthConfig, generate, largest_singular_value

__version__ = "0.1.0"
