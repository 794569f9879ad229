"""Multi-task surrogate-assisted search with Bayesian competitive knowledge transfer."""

from .benchmarks import SUITE_IDS, ProblemSet, TaskInstance, build_suite, evaluate, suite_info
from .bckt import TransferPairState, posterior_params, sample_tau, update_pair
from .harness import MsasConfig, RunRecord, export, load_records, run, transfer_rate_matrix
from .surrogate import SurrogateConfig, fit, predict

__all__ = [
    "SUITE_IDS",
    "MsasConfig",
    "ProblemSet",
    "RunRecord",
    "SurrogateConfig",
    "TaskInstance",
    "TransferPairState",
    "build_suite",
    "evaluate",
    "export",
    "fit",
    "load_records",
    "posterior_params",
    "predict",
    "run",
    "sample_tau",
    "suite_info",
    "transfer_rate_matrix",
    "update_pair",
]
