"""Binary quantizers applied at the sensor, and the likelihood coordinates
(v1, v2) used to characterise the unambiguous-likelihood family.

Indicator comparisons are closed on the ">= / <=" side. For continuous
observations this never changes a probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .gauss import (
    DEFAULT_MODEL,
    THREE_STATES,
    FoldedHypothesis,
    Hypothesis,
    HypothesisModel,
)


def _check_finite(x):
    if not math.isfinite(x):
        raise ValueError(f"observation must be finite, got {x!r}")


def _three_state(h, kind):
    if not isinstance(h, Hypothesis):
        raise ValueError(f"{kind} quantizer needs a three-state label, got {h!r}")


@dataclass(frozen=True)
class Threshold:
    """I(X >= lam) for direction 'ge', I(X < lam) for 'lt'."""

    lam: float
    direction: str = "ge"

    def __post_init__(self):
        if self.direction not in ("ge", "lt"):
            raise ValueError("direction must be 'ge' or 'lt'")
        if not math.isfinite(self.lam):
            raise ValueError("threshold must be finite")

    def apply(self, x: float) -> int:
        _check_finite(x)
        hit = x >= self.lam
        return int(hit if self.direction == "ge" else not hit)

    def apply_array(self, x: np.ndarray) -> np.ndarray:
        hit = x >= self.lam
        return hit if self.direction == "ge" else ~hit

    def prob_one(self, h, model: HypothesisModel = DEFAULT_MODEL) -> float:
        _three_state(h, "threshold")
        if self.direction == "ge":
            return model.sf(self.lam, h)
        return model.cdf(self.lam, h)

    def complement(self) -> Threshold:
        return Threshold(self.lam, "lt" if self.direction == "ge" else "ge")

    def to_record(self) -> dict:
        return {"kind": "threshold", "lambda": self.lam, "direction": self.direction}

    def __str__(self):
        op = ">=" if self.direction == "ge" else "<"
        return f"I(X {op} {self.lam:g})"


@dataclass(frozen=True)
class Interval:
    """I(lo <= X <= hi) when inside == 1, its complement when inside == 0."""

    lo: float
    hi: float
    inside: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("interval ends must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"interval needs lo < hi, got ({self.lo}, {self.hi})")
        if self.inside not in (0, 1):
            raise ValueError("inside must be 0 or 1")

    def apply(self, x: float) -> int:
        _check_finite(x)
        hit = self.lo <= x <= self.hi
        return int(hit) if self.inside else int(not hit)

    def apply_array(self, x: np.ndarray) -> np.ndarray:
        hit = (x >= self.lo) & (x <= self.hi)
        return hit if self.inside else ~hit

    def prob_one(self, h, model: HypothesisModel = DEFAULT_MODEL) -> float:
        _three_state(h, "interval")
        if self.inside:
            return model.cdf(self.hi, h) - model.cdf(self.lo, h)
        return model.cdf(self.lo, h) + model.sf(self.hi, h)

    def complement(self) -> Interval:
        return Interval(self.lo, self.hi, 1 - self.inside)

    def to_record(self) -> dict:
        return {"kind": "interval", "lower": self.lo, "upper": self.hi, "inside": self.inside}

    def __str__(self):
        body = f"I({self.lo:g} <= X <= {self.hi:g})"
        return body if self.inside else f"1 - {body}"


@dataclass(frozen=True)
class Absolute:
    """I(|X| <= lam) when inside == 1, I(|X| > lam) when inside == 0.

    Probabilities are taken under the folded labels only.
    """

    lam: float
    inside: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("absolute-value threshold must be finite and >= 0")
        if self.inside not in (0, 1):
            raise ValueError("inside must be 0 or 1")

    def apply(self, x: float) -> int:
        _check_finite(x)
        hit = abs(x) <= self.lam
        return int(hit) if self.inside else int(not hit)

    def apply_array(self, x: np.ndarray) -> np.ndarray:
        hit = np.abs(x) <= self.lam
        return hit if self.inside else ~hit

    def prob_one(self, h, model: HypothesisModel = DEFAULT_MODEL) -> float:
        if not isinstance(h, FoldedHypothesis):
            raise ValueError(f"absolute-value quantizer needs a folded label, got {h!r}")
        if self.inside:
            return model.folded_within(self.lam, h)
        return model.folded_beyond(self.lam, h)

    def as_interval(self) -> Interval:
        """The same indicator on the raw scale, usable with three-state labels."""
        return Interval(-self.lam, self.lam, self.inside)

    def complement(self) -> Absolute:
        return Absolute(self.lam, 1 - self.inside)

    def to_record(self) -> dict:
        return {"kind": "abs", "lambda": self.lam, "inside": self.inside}

    def __str__(self):
        op = "<=" if self.inside else ">"
        return f"I(|X| {op} {self.lam:g})"


DeterministicQuantizer = Union[Threshold, Interval, Absolute]


@dataclass(frozen=True)
class RandomQuantizer:
    """Finite mixture of deterministic quantizers.

    The fusion center draws the component and knows which one the sensor
    used, so information numbers are averaged over components.
    """

    components: tuple[tuple[DeterministicQuantizer, float], ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("random quantizer needs at least one component")
        weights = [w for _, w in self.components]
        if any(not w > 0 for w in weights):
            raise ValueError("component weights must be strictly positive")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ValueError(f"component weights must sum to 1, got {math.fsum(weights)!r}")

    @classmethod
    def of(cls, q) -> RandomQuantizer:
        if isinstance(q, RandomQuantizer):
            return q
        return cls(((q, 1.0),))

    @classmethod
    def mix(cls, qa, qb, p: float) -> RandomQuantizer:
        """p * qa + (1 - p) * qb, collapsing to a singleton at p in {0, 1}."""
        if p >= 1.0:
            return cls.of(qa)
        if p <= 0.0:
            return cls.of(qb)
        return cls(((qa, p), (qb, 1.0 - p)))

    @property
    def is_deterministic(self) -> bool:
        return len(self.components) == 1

    @property
    def deterministic(self) -> DeterministicQuantizer:
        if not self.is_deterministic:
            raise ValueError("quantizer is randomized")
        return self.components[0][0]

    def to_record(self) -> dict:
        if self.is_deterministic:
            return self.deterministic.to_record()
        return {
            "kind": "random",
            "components": [{"weight": w, "quantizer": q.to_record()} for q, w in self.components],
        }

    def __str__(self):
        if self.is_deterministic:
            return str(self.deterministic)
        return " + ".join(f"{w:.6g}*{q}" for q, w in self.components)


def apply(q: DeterministicQuantizer, x: float) -> int:
    return q.apply(x)


# -- likelihood coordinates -------------------------------------------------

def _log_ratios(x, model: HypothesisModel):
    x = np.asarray(x, dtype=float)
    mu = model.means[2]
    var = model.variance
    # log g1/f and log g2/f for means (0, -mu, +mu)
    l1 = (-mu * x - 0.5 * mu * mu) / var
    l2 = (mu * x - 0.5 * mu * mu) / var
    return l1, l2


def v_functions(x, model: HypothesisModel = DEFAULT_MODEL):
    """Normalised likelihood coordinates (v1, v2) of an observation.

    v_i = (g_i/f) / (1 + g1/f + g2/f), evaluated in log space so the tails
    do not overflow. Works elementwise on arrays.
    """
    l1, l2 = _log_ratios(x, model)
    denom = np.logaddexp(0.0, np.logaddexp(l1, l2))
    v1, v2 = np.exp(l1 - denom), np.exp(l2 - denom)
    if v1.ndim == 0:
        return float(v1), float(v2)
    return v1, v2


ULQ_GRID = np.linspace(-8.0, 8.0, 16001)
_BOUNDARY_TOL = 1e-12


def _bits_on(q, xs: np.ndarray) -> np.ndarray:
    if hasattr(q, "apply_array"):
        return np.asarray(q.apply_array(xs), dtype=bool)
    return np.array([bool(q.apply(float(x))) for x in xs])


def is_ulq_form(q, a0: float, a1: float, a2: float,
                model: HypothesisModel = DEFAULT_MODEL, grid: np.ndarray = ULQ_GRID) -> bool:
    """Check q(X) == I(a0 + a1*v1(X) + a2*v2(X) > 0) on a dense grid.

    Grid points lying on the separating line (to 1e-12) form the
    zero-probability boundary and are skipped. ``q`` may be any object with
    ``apply`` (or ``apply_array``), so non-ULQ shapes can be checked too.
    """
    if a0 == 0 and a1 == 0 and a2 == 0:
        raise ValueError("coefficients must not all be zero")
    v1, v2 = v_functions(grid, model)
    score = a0 + a1 * v1 + a2 * v2
    off_line = np.abs(score) > _BOUNDARY_TOL
    bits = _bits_on(q, grid)
    return bool(np.all(bits[off_line] == (score[off_line] > 0)))


def _line_through(p, r):
    a1 = r[1] - p[1]
    a2 = -(r[0] - p[0])
    a0 = -(a1 * p[0] + a2 * p[1])
    return a0, a1, a2


def ulq_coefficients(q: DeterministicQuantizer,
                     model: HypothesisModel = DEFAULT_MODEL) -> tuple[float, float, float]:
    """Half-plane coefficients realising a threshold or interval quantizer.

    Thresholds use the line through the breakpoint image and the x -> -inf
    corner (1, 0); intervals use the secant through both breakpoint images.
    The orientation is fixed so that the quantizer's 1-region is positive.
    """
    if isinstance(q, Absolute):
        q = q.as_interval()
    if isinstance(q, Threshold):
        a0, a1, a2 = _line_through((1.0, 0.0), v_functions(q.lam, model))
        probe = q.lam + 1.0
    elif isinstance(q, Interval):
        a0, a1, a2 = _line_through(v_functions(q.lo, model), v_functions(q.hi, model))
        probe = 0.5 * (q.lo + q.hi)
    else:
        raise TypeError(f"no ULQ construction for {type(q).__name__}")
    v1, v2 = v_functions(probe, model)
    if (a0 + a1 * v1 + a2 * v2 > 0) != bool(q.apply(probe)):
        a0, a1, a2 = -a0, -a1, -a2
    return a0, a1, a2


def q_vector(q: DeterministicQuantizer, model: HypothesisModel = DEFAULT_MODEL) -> np.ndarray:
    """Rows f, g1, g2; columns (P(q=0), P(q=1))."""
    if isinstance(q, Absolute):
        q = q.as_interval()
    out = np.empty((3, 2))
    for i, h in enumerate(THREE_STATES):
        p1 = q.prob_one(h, model)
        out[i] = (1.0 - p1, p1)
    return out


# -- text / record forms ----------------------------------------------------

def parse_quantizer(text: str) -> DeterministicQuantizer:
    """Parse 'threshold:L[:ge|lt]', 'interval:A:B[:in|out]' or 'abs:L[:in|out]'."""
    parts = [p.strip() for p in text.split(":")]
    kind, args = parts[0].lower(), parts[1:]
    try:
        if kind == "threshold" and len(args) in (1, 2):
            return Threshold(float(args[0]), args[1] if len(args) == 2 else "ge")
        if kind == "interval" and len(args) in (2, 3):
            inside = _inside_flag(args[2]) if len(args) == 3 else 1
            return Interval(float(args[0]), float(args[1]), inside)
        if kind in ("abs", "absolute") and len(args) in (1, 2):
            inside = _inside_flag(args[1]) if len(args) == 2 else 1
            return Absolute(float(args[0]), inside)
    except ValueError as exc:
        raise ValueError(f"malformed quantizer {text!r}: {exc}") from None
    raise ValueError(f"malformed quantizer {text!r}")


def _inside_flag(s: str) -> int:
    if s in ("in", "1"):
        return 1
    if s in ("out", "0"):
        return 0
    raise ValueError(f"expected in/out, got {s!r}")


def from_record(rec: dict):
    kind = rec.get("kind")
    if kind == "threshold":
        return Threshold(float(rec["lambda"]), rec.get("direction", "ge"))
    if kind == "interval":
        return Interval(float(rec["lower"]), float(rec["upper"]), int(rec.get("inside", 1)))
    if kind == "abs":
        return Absolute(float(rec["lambda"]), int(rec.get("inside", 1)))
    if kind == "random":
        return RandomQuantizer(tuple(
            (from_record(c["quantizer"]), float(c["weight"])) for c in rec["components"]
        ))
    raise ValueError(f"unknown quantizer record {rec!r}")
