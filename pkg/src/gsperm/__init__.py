"""Group sequential two-arm tests with normal, t-approximated and
studentized-permutation critical values."""

from .boundaries import (BoundarySet, CovarianceSchedule, crossing_probabilities,
                         normal_boundaries, t_approx_boundaries)
from .decision import (AnalysisOptions, DecisionTrace, InterimState, analyze,
                       analyze_interim, decide)
from .design import DesignSpec, SpendingFunction, information_fractions, spend
from .distributions import DistSpec, draw_stage, parse_dist
from .errors import (ContractError, DegenerateDataError, DomainError, EnumerationSizeError,
                     GSPermError, InvalidDataError, NumericalError, ValidationError)
from .io import ingest_trial_csv, write_trial_csv
from .permutation import (PermutationBoundaryResult, StageAssignment, enumerate_assignments,
                          mixture_variance_target, permutation_boundaries,
                          permutation_replicates, permuted_path, sample_assignment)
from .simulation import (OperatingCharacteristics, ScenarioConfig, load_scenarios,
                         run_scenario, sweep)
from .special import std_normal_cdf, std_normal_quantile, t_cdf, t_quantile
from .stats import (LookSummary, StageBlock, StatisticPath, TrialData, look_summary,
                    statistic_path, welch_df)

__version__ = "0.1.0"
