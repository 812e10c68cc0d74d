"""Alias of :mod:`icanrank.evaluate` under the short module name."""

from .evaluate import (  # noqa: F401
    ExperimentReport,
    HarnessConfig,
    Target,
    TauRecord,
    TauResult,
    config_hash,
    kendall_tau,
    kendall_tau_bruteforce,
    lambda_sweep,
    run_ablation,
    run_benchmark,
    topk_degree_hist,
)
