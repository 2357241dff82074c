"""Vectorised replay of the sequential tests over many replications.

Each replication draws from its own counter-based substream and uses the
same message tables and stopping arithmetic as the one-run fusion classes,
so a batched replication reproduces the scalar run with the same key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gauss import FOLDED_STATES, DEFAULT_MODEL, THREE_STATES, HypothesisModel
from .rng import FIRST_OBSERVATION_STEP, normals
from .sequential import (
    STAGE1_QUANTIZER,
    InvariantConfig,
    TwoStageConfig,
    log_message_table,
    log_stop_ratio,
    normalise_log,
)

OVERRUN = -1


@dataclass
class BatchResult:
    """Per-replication outcomes, indexed like the input keys.

    ``loglik[r, h]`` is the log-likelihood of replication r's message record
    under hypothesis h (three-state columns for the two-stage test, folded
    columns for the invariant test). ``d`` is -1 for runs that hit
    max_samples.
    """

    n: np.ndarray
    d: np.ndarray
    loglik: np.ndarray
    n1: np.ndarray | None = None
    d0: np.ndarray | None = None

    @property
    def overrun(self) -> np.ndarray:
        return self.d == OVERRUN


def _probs(q, labels, model):
    return tuple(q.prob_one(h, model) for h in labels)


def simulate_delta_I(cfg: TwoStageConfig, means: np.ndarray, keys: np.ndarray,
                     model: HypothesisModel = DEFAULT_MODEL) -> BatchResult:
    """Run the two-stage test once per key; ``means`` gives each run's true mean."""
    R = len(keys)
    sd = model.sd
    channels = [STAGE1_QUANTIZER, *cfg.stage2]  # 0: stage 1, 1 + k: stage 2 after d0 = k
    tables = np.stack([log_message_table(_probs(q, THREE_STATES, model)) for q in channels])
    log_losses = np.log(np.asarray(cfg.losses, dtype=float))
    log_c = math.log(cfg.c)
    log_thr = math.log1p(-cfg.u)
    with np.errstate(divide="ignore"):
        prior = normalise_log(np.log(np.asarray(cfg.priors, dtype=float)))

    n_out = np.zeros(R, dtype=np.int64)
    d_out = np.full(R, OVERRUN, dtype=np.int8)
    n1_out = np.zeros(R, dtype=np.int64)
    d0_out = np.full(R, -1, dtype=np.int8)
    ll_out = np.zeros((R, 3))

    idx = np.arange(R)
    mu = np.asarray(means, dtype=float)
    k = np.asarray(keys)
    post = np.tile(prior, (R, 1))
    ll = np.zeros((R, 3))
    ch = np.zeros(R, dtype=np.intp)

    step = 0
    while idx.size and step < cfg.max_samples:
        step += 1
        x = mu + sd * normals(k, FIRST_OBSERVATION_STEP + step - 1)
        bits = np.empty(idx.size, dtype=np.intp)
        for c in np.unique(ch):
            sel = ch == c
            bits[sel] = channels[c].apply_array(x[sel])
        inc = tables[ch, bits]
        post = normalise_log(post + inc)
        ll += inc

        in1 = ch == 0
        switch = in1 & (post.max(axis=1) >= log_thr)
        if switch.any():
            d0 = np.argmax(post[switch], axis=1)
            n1_out[idx[switch]] = step
            d0_out[idx[switch]] = d0
            ch[switch] = 1 + d0
        r = log_stop_ratio(post, log_losses)
        in2 = ch > 0
        up = in2 & (r >= -log_c)
        lo = in2 & ~up & (r <= log_c)
        stop = up | lo
        if stop.any():
            done = idx[stop]
            n_out[done] = step
            d_out[done] = np.where(up[stop], 0, 1)
            ll_out[done] = ll[stop]
            keep = ~stop
            idx, mu, k, post, ll, ch = idx[keep], mu[keep], k[keep], post[keep], ll[keep], ch[keep]

    n_out[idx] = step
    ll_out[idx] = ll
    return BatchResult(n_out, d_out, ll_out, n1_out, d0_out)


def simulate_invariant(cfg: InvariantConfig, means: np.ndarray, keys: np.ndarray,
                       model: HypothesisModel = DEFAULT_MODEL) -> BatchResult:
    """Run the stationary folded SPRT once per key."""
    R = len(keys)
    sd = model.sd
    q = cfg.quantizer
    table = log_message_table(_probs(q, FOLDED_STATES, model))
    log_losses = np.log(np.asarray(cfg.losses, dtype=float))
    log_c = math.log(cfg.c)
    with np.errstate(divide="ignore"):
        prior = normalise_log(np.log(np.asarray(cfg.priors, dtype=float)))

    n_out = np.zeros(R, dtype=np.int64)
    d_out = np.full(R, OVERRUN, dtype=np.int8)
    ll_out = np.zeros((R, 2))

    idx = np.arange(R)
    mu = np.asarray(means, dtype=float)
    k = np.asarray(keys)
    post = np.tile(prior, (R, 1))
    ll = np.zeros((R, 2))

    step = 0
    while idx.size and step < cfg.max_samples:
        step += 1
        x = mu + sd * normals(k, FIRST_OBSERVATION_STEP + step - 1)
        inc = table[q.apply_array(x).astype(np.intp)]
        post = normalise_log(post + inc)
        ll += inc
        r = log_stop_ratio(post, log_losses)
        up = r >= -log_c
        lo = ~up & (r <= log_c)
        stop = up | lo
        if stop.any():
            done = idx[stop]
            n_out[done] = step
            d_out[done] = np.where(up[stop], 0, 1)
            ll_out[done] = ll[stop]
            keep = ~stop
            idx, mu, k, post, ll = idx[keep], mu[keep], k[keep], post[keep], ll[keep]

    n_out[idx] = step
    ll_out[idx] = ll
    return BatchResult(n_out, d_out, ll_out)


def simulate(cfg, means, keys, model: HypothesisModel = DEFAULT_MODEL) -> BatchResult:
    if isinstance(cfg, TwoStageConfig):
        return simulate_delta_I(cfg, means, keys, model)
    if isinstance(cfg, InvariantConfig):
        return simulate_invariant(cfg, means, keys, model)
    raise TypeError(f"unsupported test configuration {type(cfg).__name__}")
