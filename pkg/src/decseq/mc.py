"""Monte Carlo harness: seeded replications, sample-size and error estimates,
importance sampling on the message record, Bayes risk.

Replication r under stream s always draws from the substream keyed by
(master seed, s, r). Per-replication results land in index order and every
sum goes through ``math.fsum``, so estimates do not depend on batching,
thread count, or replication order.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .batch import OVERRUN, BatchResult, simulate
from .gauss import DEFAULT_MODEL, THREE_STATES, Hypothesis, HypothesisModel
from .rng import stream_keys, uniforms
from .sequential import InvariantConfig, TwoStageConfig

THREADS_ENV = "DECSEQ_THREADS"
ESS_WARN_FRACTION = 0.01

# stream ids: plain runs use 0..2 (f, g1, g2), importance runs 3..5
_PLAIN_STREAM = 0
_IMPORTANCE_STREAM = 3


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class McConfig:
    test: TwoStageConfig | InvariantConfig
    replications: int
    seed: int = 0
    mixture: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    estimator: str = "plain"
    batch_size: int = 65536
    workers: int | None = None
    model: HypothesisModel = DEFAULT_MODEL

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        m = self.mixture
        if len(m) != 3 or any(w < 0 for w in m) or abs(math.fsum(m) - 1.0) > 1e-9:
            raise ValueError(f"hypothesis mixture must be a probability triple, got {m!r}")
        if self.estimator not in ("plain", "importance"):
            raise ValueError("estimator must be 'plain' or 'importance'")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def hypotheses(self) -> list[Hypothesis]:
        return [h for h in THREE_STATES if self.mixture[h.index] > 0]

    @property
    def losses3(self) -> tuple[float, float, float]:
        """Wrong-decision loss per three-state hypothesis."""
        w = self.test.losses
        return tuple(w) if len(w) == 3 else (w[0], w[1], w[1])


@dataclass
class EstimateRow:
    label: str
    mean_n: float
    stderr_n: float | None
    p_error: float
    stderr_p: float | None
    replications: int
    cov_np: float = 0.0  # covariance of the mean-N and error estimators
    overruns: int = 0
    ess: float | None = None
    warning: str | None = None


@dataclass
class EstimateTable:
    rows: dict[str, EstimateRow]
    c: float
    estimator: str
    seed: int
    bayes_risk: float | None = None
    stderr_risk: float | None = None
    diagnostics: list[str] = field(default_factory=list)

    def to_record(self) -> dict:
        return {
            "c": self.c, "estimator": self.estimator, "seed": self.seed,
            "rows": {k: asdict(v) for k, v in self.rows.items()},
            "bayes_risk": self.bayes_risk, "stderr_risk": self.stderr_risk,
            "diagnostics": list(self.diagnostics),
        }


# -- order-independent statistics -------------------------------------------

def _mean(x: np.ndarray) -> float:
    return math.fsum(x.tolist()) / len(x)


def _stderr(x: np.ndarray, mean: float) -> float | None:
    if len(x) < 2:
        return None
    dev = (x - mean).tolist()
    return math.sqrt(math.fsum(v * v for v in dev) / (len(x) - 1) / len(x))


def _cov_of_means(x: np.ndarray, mx: float, y: np.ndarray, my: float) -> float:
    if len(x) < 2:
        return 0.0
    return math.fsum(((x - mx) * (y - my)).tolist()) / (len(x) - 1) / len(x)


# -- running batches -----------------------------------------------------------

def _run_stream(cfg: McConfig, stream: int, means_for) -> BatchResult:
    """Simulate all replications of one stream in index-ordered batches.

    ``means_for(keys)`` returns the true mean of each replication (it may use
    the reserved step-0 draw to pick a proposal component).
    """
    R = cfg.replications
    starts = list(range(0, R, cfg.batch_size))

    def one(start):
        reps = np.arange(start, min(start + cfg.batch_size, R))
        keys = stream_keys(cfg.seed, stream, reps)
        return simulate(cfg.test, means_for(keys), keys, cfg.model)

    workers = cfg.workers or default_workers()
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, starts))
    else:
        parts = [one(s) for s in starts]
    cat = lambda name: None if getattr(parts[0], name) is None else np.concatenate([getattr(p, name) for p in parts])
    return BatchResult(cat("n"), cat("d"), cat("loglik"), cat("n1"), cat("d0"))


def _wrong(h: Hypothesis, d: np.ndarray) -> np.ndarray:
    # runs without a decision count as wrong; they are also flagged
    if h is Hypothesis.F:
        return (d != 0).astype(float)
    return (d != 1).astype(float)


def _lik_column(test, h: Hypothesis) -> int:
    if isinstance(test, TwoStageConfig):
        return h.index
    return 0 if h is Hypothesis.F else 1


def _proposal(test, h: Hypothesis) -> list[Hypothesis]:
    """Raw-data hypotheses of the opposite decision class, mixed equally."""
    if h is Hypothesis.F:
        return [Hypothesis.G1, Hypothesis.G2]
    return [Hypothesis.F]


def _plain(cfg: McConfig, h: Hypothesis) -> tuple[BatchResult, EstimateRow]:
    mean = cfg.model.mean(h)
    res = _run_stream(cfg, _PLAIN_STREAM + h.index, lambda keys: np.full(len(keys), mean))
    n = res.n.astype(float)
    wrong = _wrong(h, res.d)
    mn, mw = _mean(n), _mean(wrong)
    overruns = int(np.count_nonzero(res.d == OVERRUN))
    row = EstimateRow(
        label=h.value, mean_n=mn, stderr_n=_stderr(n, mn), p_error=mw,
        stderr_p=_stderr(wrong, mw), replications=cfg.replications,
        cov_np=_cov_of_means(n, mn, wrong, mw), overruns=overruns,
    )
    return res, row


def importance_row(cfg: McConfig, h: Hypothesis) -> EstimateRow:
    """Importance-sampling estimate of P_h(wrong decision).

    Replications run under the equal path-level mixture of the opposite
    hypotheses; each is weighted by dP_h / dP_proposal of its message record,
    computed exactly from the per-step message probabilities. (N, d) are
    functions of that record, so the estimator is unbiased.
    """
    props = _proposal(cfg.test, h)
    prop_means = np.array([cfg.model.mean(p) for p in props])

    def means_for(keys):
        pick = np.minimum((uniforms(keys, 0) * len(props)).astype(np.intp), len(props) - 1)
        return prop_means[pick]

    res = _run_stream(cfg, _IMPORTANCE_STREAM + h.index, means_for)
    col = [_lik_column(cfg.test, p) for p in props]
    ll = res.loglik
    log_prop = np.logaddexp.reduce(ll[:, col], axis=1) - math.log(len(props))
    w = np.exp(ll[:, _lik_column(cfg.test, h)] - log_prop)
    y = _wrong(h, res.d) * w
    p = _mean(y)
    se = _stderr(y, p)
    sq = math.fsum((y * y).tolist())
    ess = (math.fsum(y.tolist()) ** 2 / sq) if sq > 0 else 0.0
    warning = None
    if ess < ESS_WARN_FRACTION * cfg.replications:
        warning = f"low effective sample size {ess:.1f}"
        warnings.warn(f"importance sampling under {h.value}: {warning}", RuntimeWarning, stacklevel=2)
    return EstimateRow(
        label=h.value, mean_n=float("nan"), stderr_n=None, p_error=p, stderr_p=se,
        replications=cfg.replications, overruns=int(np.count_nonzero(res.d == OVERRUN)),
        ess=ess, warning=warning,
    )


def _combine(se_list, weights):
    if any(s is None for s in se_list):
        return None
    return math.sqrt(math.fsum((w * s) ** 2 for w, s in zip(weights, se_list)))


def _mixture_row(rows: dict[str, EstimateRow], mixture) -> EstimateRow:
    hs = [h for h in THREE_STATES if h.value in rows]
    w = [mixture[h.index] for h in hs]
    rs = [rows[h.value] for h in hs]
    return EstimateRow(
        label="mixture",
        mean_n=math.fsum(wi * r.mean_n for wi, r in zip(w, rs)),
        stderr_n=_combine([r.stderr_n for r in rs], w),
        p_error=math.fsum(wi * r.p_error for wi, r in zip(w, rs)),
        stderr_p=_combine([r.stderr_p for r in rs], w),
        replications=sum(r.replications for r in rs),
        cov_np=math.fsum(wi * wi * r.cov_np for wi, r in zip(w, rs)),
        overruns=sum(r.overruns for r in rs),
    )


def estimate_error_importance(cfg: McConfig) -> dict[str, EstimateRow]:
    """Importance-sampling error rows per hypothesis plus their mixture."""
    rows = {h.value: importance_row(cfg, h) for h in cfg.hypotheses}
    mix = _mixture_row(rows, cfg.mixture)
    mix.mean_n, mix.stderr_n = float("nan"), None
    rows["mixture"] = mix
    return rows


def run_trials(cfg: McConfig) -> EstimateTable:
    """Expected sample sizes and error probabilities for one (test, c) cell."""
    rows: dict[str, EstimateRow] = {}
    diagnostics = []
    for h in cfg.hypotheses:
        _, row = _plain(cfg, h)
        if cfg.estimator == "importance":
            imp = importance_row(cfg, h)
            row.p_error, row.stderr_p, row.cov_np = imp.p_error, imp.stderr_p, 0.0
            row.ess, row.warning = imp.ess, imp.warning
            row.overruns += imp.overruns
        rows[h.value] = row
        if row.overruns:
            diagnostics.append(f"{h.value}: {row.overruns} run(s) hit max_samples")
        if row.warning:
            diagnostics.append(f"{h.value}: {row.warning}")
    rows["mixture"] = _mixture_row(rows, cfg.mixture)
    table = EstimateTable(rows, cfg.test.c, cfg.estimator, cfg.seed, diagnostics=diagnostics)
    table.bayes_risk, table.stderr_risk = bayes_risk(table, cfg.test.c, cfg.mixture, cfg.losses3)
    return table


def bayes_risk(table: EstimateTable, c: float, priors, losses) -> tuple[float, float | None]:
    """Plug-in Bayes risk sum_h pi_h (c E_h N + W_h P_h(wrong)), delta-method stderr."""
    terms, var = [], []
    for h in THREE_STATES:
        pi = priors[h.index]
        if pi == 0:
            continue
        row = table.rows.get(h.value)
        if row is None:
            raise ValueError(f"no estimate row for hypothesis {h.value}")
        w = losses[h.index]
        terms.append(pi * (c * row.mean_n + w * row.p_error))
        if row.stderr_n is None or row.stderr_p is None:
            var = None
        elif var is not None:
            v = (c * row.stderr_n) ** 2 + (w * row.stderr_p) ** 2 + 2 * c * w * row.cov_np
            var.append(pi * pi * max(v, 0.0))
    risk = math.fsum(terms)
    return risk, (None if var is None else math.sqrt(math.fsum(var)))
