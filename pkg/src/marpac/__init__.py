"""Predictive PAC learning over mixtures of ergodic processes: simulation and checks."""

from .dependence import (BetaCurve, BlockScheme, beta_bruteforce_block, beta_empirical_curve,
                         beta_empirical_ensemble, beta_exact_markov, beta_mixture_infinity, blocked_resample,
                         blocking_bound)
from .learning import FunctionClass, RiskReport, SampleComplexityEstimate, erm, erm_risk_gap, gamma_n, \
    sample_complexity
from .process import MixtureLaw, ProcessLaw, SamplePath, expectation, sample_component, sample_mixture, \
    stationary_distribution

__version__ = "0.1.0"
