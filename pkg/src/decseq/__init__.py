"""Decentralized two-sided sequential tests of a normal mean with binary sensor messages."""

from .gauss import DEFAULT_MODEL, FoldedHypothesis, Hypothesis, HypothesisModel
from .info import InfiniteInformationError, kl_bernoulli, quantizer_kl, random_quantizer_kl
from .optimize import optimize_invariant_lambda, optimize_maximin_f, optimize_threshold
from .quantizers import Absolute, Interval, RandomQuantizer, Threshold, parse_quantizer
from .sequential import InvariantConfig, TwoStageConfig, run_delta_I, run_invariant_sprt

__all__ = [
    "DEFAULT_MODEL", "FoldedHypothesis", "Hypothesis", "HypothesisModel",
    "InfiniteInformationError", "kl_bernoulli", "quantizer_kl", "random_quantizer_kl",
    "optimize_invariant_lambda", "optimize_maximin_f", "optimize_threshold",
    "Absolute", "Interval", "RandomQuantizer", "Threshold", "parse_quantizer",
    "InvariantConfig", "TwoStageConfig", "run_delta_I", "run_invariant_sprt",
]
