"""Fusion-center sequential tests.

The sensor sees raw observations and emits one bit per sample; the fusion
center sees only those bits plus the identity of the quantizer it told the
sensor to use. :class:`Sensor` and the fusion classes below keep that split,
so fusion logic has no path to the raw data.

All likelihood arithmetic runs on log posterior masses, renormalised after
every update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .gauss import (
    FOLDED_STATES,
    DEFAULT_MODEL,
    THREE_STATES,
    Hypothesis,
    HypothesisModel,
)
from .quantizers import Absolute, Threshold

STAGE1_QUANTIZER = Threshold(0.0)
DEFAULT_STAGE2 = (Threshold(0.0), Threshold(-0.7941), Threshold(0.7941))
DEFAULT_MAX_SAMPLES = 10_000_000


class NonTerminationError(RuntimeError):
    """A run hit its max-samples bound without stopping."""


class DegenerateUpdateError(ValueError):
    """Every hypothesis assigns zero probability to the observed message."""


# -- shared arithmetic (also used by the batched engine) ---------------------

def log_message_table(p_one) -> np.ndarray:
    """log P_h(U = bit), shape (2, H): row 0 for bit 0, row 1 for bit 1."""
    p = np.asarray(p_one, dtype=float)
    with np.errstate(divide="ignore"):
        return np.vstack([np.log1p(-p), np.log(p)])


def normalise_log(w: np.ndarray) -> np.ndarray:
    """Subtract logsumexp along the last axis."""
    m = np.max(w, axis=-1, keepdims=True)
    if np.any(~np.isfinite(m)):
        raise DegenerateUpdateError("posterior has no surviving hypothesis")
    return w - (m + np.log(np.sum(np.exp(w - m), axis=-1, keepdims=True)))


def log_stop_ratio(log_post: np.ndarray, log_losses: np.ndarray) -> np.ndarray:
    """log( pi_f W_f / sum_g pi_g W_g ) with the null in column 0."""
    null = log_post[..., 0] + log_losses[0]
    alt = log_post[..., 1:] + log_losses[1:]
    if alt.shape[-1] == 1:
        return null - alt[..., 0]
    return null - np.logaddexp(alt[..., 0], alt[..., 1])


# -- posterior -------------------------------------------------------------

@dataclass(frozen=True)
class PosteriorState:
    """Posterior over the hypotheses, held as normalised log masses."""

    log_masses: tuple[float, ...]
    n: int = 0

    @classmethod
    def from_masses(cls, masses, n: int = 0) -> PosteriorState:
        m = np.asarray(masses, dtype=float)
        if np.any(m < 0) or abs(m.sum() - 1.0) > 1e-9:
            raise ValueError(f"prior masses must form a simplex, got {masses!r}")
        with np.errstate(divide="ignore"):
            return cls(tuple(normalise_log(np.log(m)).tolist()), n)

    @property
    def masses(self) -> tuple[float, ...]:
        return tuple(math.exp(v) for v in self.log_masses)

    def argmax(self) -> int:
        # ties resolve to the earliest label (f, g1, g2 order)
        lm = self.log_masses
        return max(range(len(lm)), key=lambda i: (lm[i], -i))


def posterior_update(state: PosteriorState, bit: int, probs) -> PosteriorState:
    """Bayes update after one message; ``probs`` are P_h(U = 1) per hypothesis.

    pi_{h,n} is proportional to pi_{h,n-1} * P_h(U_n = bit).
    """
    if bit not in (0, 1):
        raise ValueError(f"message bit must be 0 or 1, got {bit!r}")
    table = log_message_table(probs)
    w = np.asarray(state.log_masses) + table[bit]
    return PosteriorState(tuple(normalise_log(w).tolist()), state.n + 1)


# -- configurations and outcomes -------------------------------------------

def _check_common(c, losses, max_samples):
    if not 0 < c < 1:
        raise ValueError(f"sampling cost c must lie in (0, 1), got {c!r}")
    if any(not w > 0 for w in losses):
        raise ValueError("losses must be strictly positive")
    if max_samples < 1:
        raise ValueError("max_samples must be >= 1")


@dataclass(frozen=True)
class TwoStageConfig:
    """Parameters of the two-stage test with one-shot feedback.

    ``stage2`` lists the second-stage quantizers for preliminary decisions
    (f, g1, g2) in that order.
    """

    c: float
    u: float = 0.1
    priors: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    losses: tuple[float, float, float] = (1.0, 1.0, 1.0)
    stage2: tuple = DEFAULT_STAGE2
    max_samples: int = DEFAULT_MAX_SAMPLES

    def __post_init__(self):
        _check_common(self.c, self.losses, self.max_samples)
        if not 0 < self.u < 0.5:
            raise ValueError(f"stage-1 margin u must lie in (0, 1/2), got {self.u!r}")
        if len(self.priors) != 3 or len(self.losses) != 3 or len(self.stage2) != 3:
            raise ValueError("priors, losses and stage2 need one entry per hypothesis")
        PosteriorState.from_masses(self.priors)


@dataclass(frozen=True)
class InvariantConfig:
    """Stationary SPRT on U = I(|X| <= lam) for the folded pair (f~, g~)."""

    lam: float
    c: float
    priors: tuple[float, float] = (1 / 3, 2 / 3)
    losses: tuple[float, float] = (1.0, 1.0)
    max_samples: int = DEFAULT_MAX_SAMPLES

    def __post_init__(self):
        _check_common(self.c, self.losses, self.max_samples)
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if len(self.priors) != 2 or len(self.losses) != 2:
            raise ValueError("invariant test takes two priors and two losses")
        PosteriorState.from_masses(self.priors)

    @property
    def quantizer(self) -> Absolute:
        return Absolute(self.lam)


class RecordEntry(NamedTuple):
    bit: int
    quantizer_id: str
    probs: tuple[float, ...]  # P_h(U = 1) for each hypothesis


@dataclass(frozen=True)
class FeedbackSignal:
    """One-shot feedback V in {0, 1, 2} for preliminary decision f, g1, g2."""

    value: int

    def __post_init__(self):
        if self.value not in (0, 1, 2):
            raise ValueError("feedback takes values 0, 1, 2")

    @property
    def label(self) -> Hypothesis:
        return THREE_STATES[self.value]


@dataclass
class TestOutcome:
    __test__ = False  # keep pytest from collecting this class

    n: int
    d: int
    posterior: PosteriorState
    record: list[RecordEntry] = field(default_factory=list)
    n1: int | None = None
    d0: Hypothesis | None = None


# -- sensor ------------------------------------------------------------------

class Sensor:
    """Local sensor: quantizes raw data, switches quantizer on feedback once."""

    def __init__(self, quantizer, switch_table=None):
        self.quantizer = quantizer
        self._table = switch_table
        self._switched = False

    def quantize(self, x: float) -> int:
        return self.quantizer.apply(x)

    def on_feedback(self, signal: FeedbackSignal) -> None:
        if self._table is None:
            raise RuntimeError("this sensor takes no feedback")
        if self._switched:
            raise RuntimeError("feedback is one-shot")
        self.quantizer = self._table[signal.value]
        self._switched = True


# -- fusion centers ----------------------------------------------------------

class _Fusion:
    def __init__(self, priors, losses, c, max_samples, record: bool):
        self.state = PosteriorState.from_masses(priors)
        self._log_losses = np.log(np.asarray(losses, dtype=float))
        self._log_c = math.log(c)
        self._max = max_samples
        self._keep_record = record
        self.record: list[RecordEntry] = []
        self.decision: int | None = None
        self._set_channel("init", None)

    def _set_channel(self, qid, probs):
        self._qid = qid
        self._probs = probs
        self._table = None if probs is None else log_message_table(probs)

    @property
    def done(self) -> bool:
        return self.decision is not None

    def _absorb(self, bit: int) -> None:
        if self.done:
            raise RuntimeError("test has already stopped")
        if bit not in (0, 1):
            raise ValueError(f"message bit must be 0 or 1, got {bit!r}")
        if self.state.n >= self._max:
            raise NonTerminationError(f"no decision after {self._max} samples")
        w = np.asarray(self.state.log_masses) + self._table[bit]
        self.state = PosteriorState(tuple(normalise_log(w).tolist()), self.state.n + 1)
        if self._keep_record:
            self.record.append(RecordEntry(bit, self._qid, self._probs))

    def _check_stop(self) -> None:
        r = log_stop_ratio(np.asarray(self.state.log_masses), self._log_losses)
        if r >= -self._log_c:
            self.decision = 0
        elif r <= self._log_c:
            self.decision = 1


class TwoStageFusion(_Fusion):
    """Fusion center of the two-stage test.

    Stage 1 runs with I(X >= 0) until some posterior mass reaches 1 - u, then
    emits one feedback signal naming the preliminary decision; stage 2 keeps
    updating the same posterior with the switched channel and stops when the
    weighted posterior ratio of f against {g1, g2} leaves (c, 1/c).
    """

    def __init__(self, cfg: TwoStageConfig, model: HypothesisModel = DEFAULT_MODEL,
                 record: bool = True):
        self.cfg = cfg
        self.model = model
        super().__init__(cfg.priors, cfg.losses, cfg.c, cfg.max_samples, record)
        self._log_threshold = math.log1p(-cfg.u)
        self._stage2_probs = [
            tuple(q.prob_one(h, model) for h in THREE_STATES) for q in cfg.stage2
        ]
        self._set_channel("stage1", tuple(STAGE1_QUANTIZER.prob_one(h, model) for h in THREE_STATES))
        self.stage = 1
        self.n1: int | None = None
        self.d0: Hypothesis | None = None
        self.feedback: FeedbackSignal | None = None

    def receive(self, bit: int) -> FeedbackSignal | None:
        """Absorb one message; returns the feedback signal at the switch time."""
        self._absorb(bit)
        if self.stage == 1:
            if max(self.state.log_masses) < self._log_threshold:
                return None
            k = self.state.argmax()
            self.n1, self.d0 = self.state.n, THREE_STATES[k]
            self.feedback = FeedbackSignal(k)
            self.stage = 2
            self._set_channel(f"stage2:{self.d0.value}", self._stage2_probs[k])
            self._check_stop()  # stage 2 may end at n = N1
            return self.feedback
        self._check_stop()
        return None

    def outcome(self) -> TestOutcome:
        return TestOutcome(self.state.n, self.decision, self.state, self.record, self.n1, self.d0)


class InvariantFusion(_Fusion):
    """Posterior-odds SPRT on the folded pair with a stationary quantizer."""

    def __init__(self, cfg: InvariantConfig, model: HypothesisModel = DEFAULT_MODEL,
                 record: bool = True):
        self.cfg = cfg
        super().__init__(cfg.priors, cfg.losses, cfg.c, cfg.max_samples, record)
        q = cfg.quantizer
        self._set_channel(str(q), tuple(q.prob_one(h, model) for h in FOLDED_STATES))

    def receive(self, bit: int) -> None:
        self._absorb(bit)
        self._check_stop()

    def outcome(self) -> TestOutcome:
        return TestOutcome(self.state.n, self.decision, self.state, self.record)


# -- drivers -----------------------------------------------------------------

def _exhausted(n):
    return ValueError(f"observation stream ended after {n} samples without a decision")


def run_stage1(cfg: TwoStageConfig, bits: Iterable[int], model: HypothesisModel = DEFAULT_MODEL):
    """Run only the first stage on a message stream quantized by I(X >= 0).

    Returns (N1, preliminary decision, posterior at N1).
    """
    fusion = TwoStageFusion(cfg, model, record=False)
    for bit in bits:
        if fusion.receive(int(bit)) is not None:
            return fusion.n1, fusion.d0, PosteriorState(fusion.state.log_masses, fusion.n1)
    raise _exhausted(fusion.state.n)


def run_delta_I(cfg: TwoStageConfig, observations: Iterable[float],
                model: HypothesisModel = DEFAULT_MODEL, record: bool = True) -> TestOutcome:
    """Two-stage test with one-shot feedback on a stream of raw observations."""
    sensor = Sensor(STAGE1_QUANTIZER, switch_table=cfg.stage2)
    fusion = TwoStageFusion(cfg, model, record=record)
    for x in observations:
        signal = fusion.receive(sensor.quantize(x))
        if signal is not None:
            sensor.on_feedback(signal)
        if fusion.done:
            return fusion.outcome()
    raise _exhausted(fusion.state.n)


def run_invariant_sprt(cfg: InvariantConfig, observations: Iterable[float],
                       model: HypothesisModel = DEFAULT_MODEL, record: bool = True) -> TestOutcome:
    """Stationary SPRT on I(|X| <= lam); d = 0 accepts the null."""
    sensor = Sensor(cfg.quantizer)
    fusion = InvariantFusion(cfg, model, record=record)
    for x in observations:
        fusion.receive(sensor.quantize(x))
        if fusion.done:
            return fusion.outcome()
    raise _exhausted(fusion.state.n)
