"""Branching-process outbreak simulation under time-dependent vaccination.

Builds coupled realizations of a general (Crump-Mode-Jagers) branching
process, prunes them under vaccination coverage functions sharing the
same uniforms, estimates distributions and quantiles of outbreak
functionals by Monte Carlo, and searches coverage families for the
smallest policy meeting a mean or quantile bound.
"""

__version__ = "0.1.0"

from ._backend import NUMBA_ENABLED, backend_name
from .errors import (CensoredTreeError, CmjvaxError, ConfigError, EmptyInputError,
                     ExplosionRateError, ExplosionWarning, InvalidLawError,
                     MultipleInitialsError, OutOfDomainError)
from .estimate import (CoupledBatch, EmpiricalDistribution, continuity_modulus,
                       run_coupled)
from .functionals import (Functional, births_by, duration_excl_incubation,
                          extinction_time, max_of_z, max_population,
                          parse_functional, to_weeks, total_births)
from .inference import (OutbreakSizeRecord, borel_tanner_pmf, borel_tanner_table,
                        chi_square_gof, gamma_coverage, mean_outbreak_size,
                        mle_offspring_mean)
from .ingest import (OutbreakRecord, WeeklySeries, filter_outbreaks,
                     segment_outbreaks, size_records)
from .policy import (PolicyQuery, PolicyResult, SensitivityCell, optimal_policy,
                     quantile_curve, sensitivity_grid)
from .reproduction import (LifeHistory, ReproductionLaw, bhbp, critical_coverage,
                           offspring_mean, sample_life_history)
from .rng import RandomStream
from .tree import (BranchingTree, Individual, SimCaps, TreeBatch, simulate_batch,
                   simulate_tree, total_birth_order, tree_from_json, tree_to_json)
from .vaccination import (PiecewiseCoverage, PruneMask, RampCoverage, StepCoverage,
                          full_coverage, never_vaccinate, precedes, prune,
                          prune_batch)

__all__ = [name for name in dir() if not name.startswith("_")]
