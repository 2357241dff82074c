"""Kullback-Leibler information of quantized (binary) channels, in nats."""

from __future__ import annotations

import math

import numpy as np

from .gauss import DEFAULT_MODEL, FoldedHypothesis, Hypothesis, HypothesisModel
from .quantizers import Absolute, RandomQuantizer

# Below this a message probability is treated as exactly 0 or 1: the
# complement rounds to 1.0 and the K-L number carries no usable digits.
DEGENERACY_EPS = 1e-15


class InfiniteInformationError(ValueError):
    """The two induced message laws are (numerically) mutually singular."""


def kl_bernoulli(p: float, q: float) -> float:
    """K-L divergence of Bernoulli(p) from Bernoulli(q), with 0 log 0 = 0."""
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError(f"probabilities out of range: p={p!r}, q={q!r}")
    if (q == 0.0 and p != 0.0) or (q == 1.0 and p != 1.0):
        raise InfiniteInformationError(f"Bernoulli({p}) is not dominated by Bernoulli({q})")
    out = 0.0
    if p > 0.0:
        out += p * math.log(p / q)
    if p < 1.0:
        out += (1.0 - p) * (math.log1p(-p) - math.log1p(-q))
    # rounding can leave -1e-17 when p == q
    return max(out, 0.0)


def kl_bernoulli_array(p, q) -> np.ndarray:
    """Elementwise K-L for grid searches; assumes 0 < p, q < 1."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    out = p * np.log(p / q) + (1.0 - p) * (np.log1p(-p) - np.log1p(-q))
    return np.maximum(out, 0.0)


def _same_model(src, dst):
    if type(src) is not type(dst) or not isinstance(src, (Hypothesis, FoldedHypothesis)):
        raise ValueError(f"labels {src!r} and {dst!r} do not belong to one model")
    if src is dst:
        raise ValueError("K-L number needs two different hypotheses")


def _check_nondegenerate(p: float, label, q) -> None:
    if p < DEGENERACY_EPS or p > 1.0 - DEGENERACY_EPS:
        raise InfiniteInformationError(
            f"{q} is degenerate under {label.value}: P(message = 1) = {p:.3e}"
        )


def quantizer_kl(q, src, dst, model: HypothesisModel = DEFAULT_MODEL) -> float:
    """I^q(src, dst) for a deterministic quantizer."""
    _same_model(src, dst)
    if isinstance(q, Absolute) and isinstance(src, Hypothesis):
        q = q.as_interval()
    p = q.prob_one(src, model)
    r = q.prob_one(dst, model)
    _check_nondegenerate(p, src, q)
    _check_nondegenerate(r, dst, q)
    return kl_bernoulli(p, r)


def random_quantizer_kl(rq, src, dst, model: HypothesisModel = DEFAULT_MODEL) -> float:
    """Weighted average of component K-L numbers (not the K-L of the mixed channel)."""
    rq = RandomQuantizer.of(rq)
    return math.fsum(w * quantizer_kl(q, src, dst, model) for q, w in rq.components)


def maximin_objective(rq, model: HypothesisModel = DEFAULT_MODEL) -> float:
    """min(I(f, g1), I(f, g2)) for a (possibly randomized) quantizer."""
    return min(
        random_quantizer_kl(rq, Hypothesis.F, Hypothesis.G1, model),
        random_quantizer_kl(rq, Hypothesis.F, Hypothesis.G2, model),
    )
