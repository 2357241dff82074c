"""Gaussian primitives and the three-state / folded hypothesis models.

All message probabilities are computed in closed form from the standard
normal CDF; nothing here samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtr

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class Hypothesis(Enum):
    """States of nature for the raw observations."""

    F = "f"
    G1 = "g1"
    G2 = "g2"

    @property
    def index(self) -> int:
        return _THREE_STATE_ORDER.index(self)

    @property
    def is_null(self) -> bool:
        return self is Hypothesis.F


class FoldedHypothesis(Enum):
    """States of nature for |X| once the reflection symmetry is factored out."""

    F = "f~"
    G = "g~"

    @property
    def index(self) -> int:
        return 0 if self is FoldedHypothesis.F else 1


_THREE_STATE_ORDER = (Hypothesis.F, Hypothesis.G1, Hypothesis.G2)
THREE_STATES = _THREE_STATE_ORDER
FOLDED_STATES = (FoldedHypothesis.F, FoldedHypothesis.G)


def parse_label(text: str) -> Hypothesis | FoldedHypothesis:
    """Map 'f', 'g1', 'g2', 'f~', 'g~' to the corresponding label."""
    for enum in (Hypothesis, FoldedHypothesis):
        for member in enum:
            if member.value == text:
                return member
    raise ValueError(f"unknown hypothesis label {text!r}")


def folded_label(h: Hypothesis) -> FoldedHypothesis:
    return FoldedHypothesis.F if h is Hypothesis.F else FoldedHypothesis.G


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, accurate to double precision in the tails."""
    if not math.isfinite(x):
        raise ValueError(f"std_normal_cdf needs a finite argument, got {x!r}")
    return 0.5 * math.erfc(-x / _SQRT2)


def std_normal_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def std_normal_cdf_array(x) -> np.ndarray:
    """Vectorised CDF for grid searches."""
    return ndtr(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class HypothesisModel:
    """Null mean 0 against the symmetric pair -mu, +mu, common variance.

    ``means`` is ordered (f, g1, g2).
    """

    means: tuple[float, float, float] = (0.0, -1.0, 1.0)
    variance: float = 1.0

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("variance must be strictly positive")
        mf, m1, m2 = self.means
        if len({mf, m1, m2}) != 3:
            raise ValueError("hypothesis means must be pairwise distinct")
        if mf != 0.0 or m1 != -m2:
            raise ValueError("model must be symmetric: means (0, -mu, +mu)")

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    def mean(self, h: Hypothesis) -> float:
        return self.means[h.index]

    def cdf(self, x: float, h: Hypothesis) -> float:
        """P_h(X <= x)."""
        return std_normal_cdf((x - self.mean(h)) / self.sd)

    def sf(self, x: float, h: Hypothesis) -> float:
        """P_h(X >= x), computed without cancellation."""
        return std_normal_cdf((self.mean(h) - x) / self.sd)

    def folded_within(self, lam: float, h: FoldedHypothesis) -> float:
        """P(|X| <= lam) under the folded hypothesis."""
        mu = 0.0 if h is FoldedHypothesis.F else self.means[2]
        s = self.sd
        return std_normal_cdf((lam - mu) / s) - std_normal_cdf((-lam - mu) / s)

    def folded_beyond(self, lam: float, h: FoldedHypothesis) -> float:
        """P(|X| > lam), summed from both tails rather than 1 - within."""
        mu = 0.0 if h is FoldedHypothesis.F else self.means[2]
        s = self.sd
        return std_normal_cdf((mu - lam) / s) + std_normal_cdf((-lam - mu) / s)


DEFAULT_MODEL = HypothesisModel()


def folded_densities(x: float, model: HypothesisModel = DEFAULT_MODEL) -> tuple[float, float]:
    """Densities of |X| under the null and the (merged) alternative at x >= 0."""
    if not x >= 0:
        raise ValueError(f"folded densities are defined on x >= 0, got {x!r}")
    s = model.sd
    mu = model.means[2]
    f_ = 2.0 * std_normal_pdf(x / s) / s
    g_ = (std_normal_pdf((x - mu) / s) + std_normal_pdf((x + mu) / s)) / s
    return f_, g_


def induced_prob(q, h, model: HypothesisModel = DEFAULT_MODEL):
    """P_h(q(X) = 1).

    For a randomized quantizer the per-component probabilities are returned
    as a tuple (the fusion center knows which component was used, so the
    mixture probability is never the relevant quantity).
    """
    # local import: quantizers depends on this module
    from .quantizers import RandomQuantizer

    if isinstance(q, RandomQuantizer):
        return tuple(induced_prob(c, h, model) for c, _ in q.components)
    return q.prob_one(h, model)
