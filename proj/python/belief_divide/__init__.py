"""Bayesian learning model of generative-AI adoption: simulation, estimation and policy runs."""

from ._core import (
    BeliefDivideError,
    __version__,
    choice_probability,
    fast_learner,
    representative_utility,
    run_cli,
    set_thread_count,
    signal_variance,
    simulated_loglik,
    slow_learner,
    table4_params,
    trap_probability,
    update_belief,
)

__all__ = [
    "BeliefDivideError",
    "__version__",
    "choice_probability",
    "fast_learner",
    "representative_utility",
    "run_cli",
    "set_thread_count",
    "signal_variance",
    "simulated_loglik",
    "slow_learner",
    "table4_params",
    "trap_probability",
    "update_belief",
]
