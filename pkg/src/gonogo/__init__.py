"""Bayesian phase II futility monitoring with late-onset outcomes.

Calibrates adaptive stopping cutoffs, tabulates go/no-go/suspend rules that
handle pending assessments through fractional effective sample size, and
benchmarks the monitored design against classical two-stage and
complete-data Bayesian comparators by exact computation and simulation.
"""

from .design import (
    CalibrationError,
    CutoffParams,
    Decision,
    DecisionTable,
    DesignSpec,
    calibrate,
    cutoff,
    decide,
    decision_table,
    exact_oc,
    stop_rule,
    suspension_check,
    tess_threshold,
)
from .state import EndpointDef, InterimSnapshot, PatientRecord, ess, snapshot, tess
from .stats import (
    BetaPrior,
    DirichletPrior,
    default_prior,
    dirichlet_marginal_tail,
    excess_prob,
    futility_prob,
    reg_inc_beta,
)

__version__ = "0.1.0"

__all__ = [
    "BetaPrior",
    "DirichletPrior",
    "default_prior",
    "reg_inc_beta",
    "futility_prob",
    "excess_prob",
    "dirichlet_marginal_tail",
    "EndpointDef",
    "PatientRecord",
    "InterimSnapshot",
    "ess",
    "tess",
    "snapshot",
    "CutoffParams",
    "DesignSpec",
    "DecisionTable",
    "Decision",
    "CalibrationError",
    "cutoff",
    "stop_rule",
    "exact_oc",
    "calibrate",
    "tess_threshold",
    "suspension_check",
    "decision_table",
    "decide",
    "__version__",
]
