"""Hypothesis tests for community structure in weighted stochastic block models."""

from .cycles import CycleSumMethod, cycle_sum, cycle_sum_bruteforce
from .errors import (DegenerateDichotomyError, DomainError, EdgeListError, QuadratureError, WSBMError,
                     ZeroVarianceError)
from .families import (ExpFamilyModel, MomentFamily, get_family, make_perturbed_params,
                       moment_to_gamma, moment_to_mixture_exp)
from .graph import EdgeListOptions, WeightedGraph, dichotomize, parse_edge_list, read_edge_list
from .limits import (classify_regime, information_loss, ode_residual, optimal_threshold_exponential,
                     radius_dichotomized, radius_weighted, second_moment_exact, second_moment_limit,
                     second_moment_mc)
from .simulation import SimConfig, SimResult, power_sweep, run_monte_carlo
from .spectral import combined_spectral_statistic, spectral_statistic
from .statistics import (TestReport, decide, dichotomized_slc_statistic, slc_statistic, slmc_statistic,
                         wslmc_statistic)
from .tracy_widom import tw1_cdf, tw1_critical

__version__ = "0.1.0"
