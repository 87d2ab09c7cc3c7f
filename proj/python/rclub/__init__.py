"""Clustered linear bandits with corrupted users: simulation + detection."""

from rclub._core import (
    SpdState,
    __version__,
    auc,
    generate_instance,
    lambda_tilde,
    min_eigenvalue,
    run_config,
    run_config_text,
    t0_bound,
    truncated_svd,
)

__all__ = [
    "SpdState",
    "__version__",
    "auc",
    "generate_instance",
    "lambda_tilde",
    "min_eigenvalue",
    "run_config",
    "run_config_text",
    "t0_bound",
    "truncated_svd",
]
