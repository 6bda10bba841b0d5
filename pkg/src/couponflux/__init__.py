"""Exact and Monte Carlo completion times for perturbed coupon collectors."""

from ._backend import COMPILED as HAS_COMPILED_KERNELS
from .careless import (CarelessParams, careless_flux, careless_kernel,
                       careless_mean_hitting_time, sample_careless, simulate_careless,
                       tail_ratio_profile)
from .chain import (CountKernel, FluxReport, PhaseTypeHitting, StationaryDistribution,
                    block_entry_moments, entry_flux, exit_flux, mean_hitting_time,
                    stationary_distribution)
from .clumsy import (ClumsyParams, clumsy_count_kernel, clumsy_flux,
                     clumsy_mean_hitting_time, sample_clumsy, simulate_clumsy)
from .combined import (CombinedParams, combined_flux, combined_kernel,
                       combined_mean_hitting_time, sample_combined, simulate_combined)
from .errors import *  # noqa: F401,F403
from .qseries import log_lucky_weight, log_q_pochhammer, infinite_chain_stationary
from .reset import (ResetParams, exact_mean, regime_normalization, reset_pgf,
                    sample_reset, simulate_reset, success_probability)
from .sampling import HittingSampleSet

__version__ = "0.1.0"
