"""Exact law of the all-time maximum of a negative-drift lattice random walk."""

from .errors import (ConfigError, DegenerateSupport, DriftUnattainable, Inconsistent,
                     InvalidDistribution, NoConvergence, NoRoot, NotNormalized, NotSkipFree,
                     NumericalError, Periodic, PositiveDrift, WalkmaxError)
from .ladder import (ConditionedLadderPmf, DefectiveLadderPmf, DescendingLadderStats,
                     ascending_ladder, conditioned_ladder, descending_stats,
                     prob_tau_plus_infinite)
from .lattice import (DriftWalkSpec, GenFnEval, LatticePmf, convolve, gen_fn, load_pmf,
                      lundberg_exponent, moments, tilt_to_drift, validate)
from .max_pmf import (MaxPmfResult, asymptotic_local, asymptotic_tail, asymptotic_tail_summed,
                      compute_max_pmf, pmf_closed_form_skipfree, pmf_geometric_sum, pmf_lindley,
                      simulate_max, tail_from_pmf)
from .renewal import (RemainderRow, RenewalSequence, RootSolution, brute_force_sum,
                      remainder_scan, renewal_sequence, solve_lambda)
from .study import StudyRow, SweepConfig, run_remainder_scan, run_sweep

__version__ = "0.1.0"
