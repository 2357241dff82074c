"""Independent reference computations used by the tests.

Nothing here imports the engine's arithmetic: probabilities come from
mpmath, and the stopping problems are solved by exact dynamic programming
over message counts (the posterior under a fixed channel depends only on
how many ones and zeros were seen).
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np

mp.mp.dps = 40

MEANS = {"f": 0.0, "g1": -1.0, "g2": 1.0}


def cdf(x, mean=0.0):
    return float(mp.ncdf(mp.mpf(x) - mean))


def sf(x, mean=0.0):
    return float(1 - mp.ncdf(mp.mpf(x) - mean))


def p_ge(lam, h):
    return sf(lam, MEANS[h])


def p_abs_within(lam, h):
    m = MEANS[h]
    return float(mp.ncdf(lam - m) - mp.ncdf(-lam - m))


def kl_bern(p, q):
    p, q = mp.mpf(p), mp.mpf(q)
    return float(p * mp.log(p / q) + (1 - p) * mp.log((1 - p) / (1 - q)))


def kl_threshold(lam, src, dst):
    return kl_bern(mp.ncdf(MEANS[src] - lam), mp.ncdf(MEANS[dst] - lam))


def kl_folded(lam, src, dst):
    def within(h):
        mu = 0 if h == "f" else 1
        return mp.ncdf(lam - mu) - mp.ncdf(-lam - mu)
    return kl_bern(within(src), within(dst))


# -- exact DP for a stationary two-hypothesis SPRT ---------------------------

def invariant_sprt_dp(p_true, p_f, p_g, c, priors=(1 / 3, 2 / 3), losses=(1.0, 1.0), tail=1e-15,
                      n_max=200_000):
    """E(N), P(d = 0), P(d = 1) for the folded SPRT whose messages are 1 w.p.
    ``p_true``; the fusion center models them as Bernoulli(p_f) or (p_g).

    Stops when log(pi_f W_f / pi_g W_g) leaves (log c, -log c), boundaries
    inclusive. Mass on continuing paths is propagated over the count of ones.
    """
    r0 = math.log(priors[0] * losses[0]) - math.log(priors[1] * losses[1])
    a, b = math.log(p_f / p_g), math.log((1 - p_f) / (1 - p_g))
    A = -math.log(c)
    mass = np.array([1.0])
    en, p0, p1 = 0.0, 0.0, 0.0
    n = 0
    while mass.sum() > tail:
        n += 1
        if n > n_max:
            raise RuntimeError("DP horizon exceeded")
        new = np.zeros(n + 1)
        new[:-1] += mass * (1 - p_true)
        new[1:] += mass * p_true
        k = np.arange(n + 1)
        r = r0 + k * a + (n - k) * b
        up, lo = r >= A, r <= -A
        en += n * (new[up].sum() + new[lo].sum())
        p0 += new[up].sum()
        p1 += new[lo].sum()
        new[up | lo] = 0.0
        mass = new
    rest = mass.sum()
    return en + n * rest, p0, p1


def gamblers_ruin(p_up, K):
    """Symmetric +-1 walk from 0, absorbed at +-K: (E N, P(hit +K first))."""
    q = 1 - p_up
    if abs(p_up - 0.5) < 1e-15:
        return float(K * K), 0.5
    rho = q / p_up
    i, m = K, 2 * K
    win = (1 - rho ** i) / (1 - rho ** m)
    en = i / (q - p_up) - (m / (q - p_up)) * win
    return en, win


# -- exact DP for the two-stage test ------------------------------------------

def two_stage_dp(h, c, u=0.1, priors=(1 / 3, 1 / 3, 1 / 3), losses=(1.0, 1.0, 1.0),
                 stage2=(0.0, -0.7941, 0.7941), tail=1e-14, n_max=100_000):
    """E_h(N) and P_h(d = 0) for the two-stage test under true hypothesis ``h``.

    Stage 1 (I(X >= 0)) is a DP over the count of ones; every exit state
    (n1, k1) seeds a stage-2 DP over the count of ones under the switched
    threshold, starting from the stage-1 log posterior.
    """
    names = ("f", "g1", "g2")
    mu = np.array([MEANS[x] for x in names])
    p1 = np.array([float(mp.ncdf(m)) for m in mu])  # P(X >= 0)
    true1 = float(mp.ncdf(MEANS[h]))
    lpri = np.log(np.asarray(priors, float))
    lw = np.log(np.asarray(losses, float))
    A = -math.log(c)
    thr = math.log1p(-u)

    def ratio(lp):
        alt = np.logaddexp(lp[..., 1] + lw[1], lp[..., 2] + lw[2])
        return lp[..., 0] + lw[0] - alt

    def normalise(lp):
        m = lp.max(axis=-1, keepdims=True)
        return lp - (m + np.log(np.exp(lp - m).sum(axis=-1, keepdims=True)))

    q2 = [np.array([float(mp.ncdf(m - t)) for m in mu]) for t in stage2]
    true2 = [float(mp.ncdf(MEANS[h] - t)) for t in stage2]

    exits = []  # (mass, n1, stage-1 log posterior)
    mass = np.array([1.0])
    n = 0
    while mass.sum() > tail:
        n += 1
        if n > n_max:
            raise RuntimeError("stage-1 horizon exceeded")
        new = np.zeros(n + 1)
        new[:-1] += mass * (1 - true1)
        new[1:] += mass * true1
        k = np.arange(n + 1)
        lp = normalise(lpri + k[:, None] * np.log(p1) + (n - k)[:, None] * np.log1p(-p1))
        exit_ = lp.max(axis=1) >= thr
        for kk in np.nonzero(exit_ & (new > 0))[0]:
            exits.append((new[kk], n, lp[kk]))
        new[exit_] = 0.0
        mass = new

    en, pd0 = 0.0, 0.0
    for d0 in range(3):
        grp = [e for e in exits if int(np.argmax(e[2])) == d0]
        if not grp:
            continue
        w = np.array([g[0] for g in grp])
        n1 = np.array([g[1] for g in grp], dtype=float)
        e2, p2 = _stage2(np.array([g[2] for g in grp]), q2[d0], true2[d0], ratio, normalise,
                         A, tail, n_max)
        en += float(np.sum(w * (n1 + e2)))
        pd0 += float(np.sum(w * p2))
    return en, pd0


def _stage2(lp0, q, t, ratio, normalise, A, tail, n_max):
    """Batched stage-2 DP; row e of ``lp0`` is one stage-1 exit posterior."""
    E = lp0.shape[0]
    lq1, lq0 = np.log(q), np.log1p(-q)
    en, pd0 = np.zeros(E), np.zeros(E)
    r = ratio(lp0)
    pd0[r >= A] = 1.0
    mass = np.where((r >= A) | (r <= -A), 0.0, 1.0)[:, None]
    m = 0
    while mass.sum() > tail:
        m += 1
        if m > n_max:
            raise RuntimeError("stage-2 horizon exceeded")
        new = np.zeros((E, m + 1))
        new[:, :-1] += mass * (1 - t)
        new[:, 1:] += mass * t
        j = np.arange(m + 1)
        lp = normalise(lp0[:, None, :] + j[None, :, None] * lq1 + (m - j)[None, :, None] * lq0)
        rr = ratio(lp)
        up, lo = rr >= A, rr <= -A
        en += m * (np.where(up | lo, new, 0.0).sum(axis=1))
        pd0 += np.where(up, new, 0.0).sum(axis=1)
        new[up | lo] = 0.0
        mass = new
    return en + m * mass.sum(axis=1), pd0


# -- brute-force posterior ----------------------------------------------------

def posterior_by_products(prior, bits, probs_per_step):
    """Posterior from explicit likelihood products in 40-digit arithmetic."""
    w = [mp.mpf(p) for p in prior]
    for bit, probs in zip(bits, probs_per_step):
        w = [wi * (mp.mpf(p) if bit else 1 - mp.mpf(p)) for wi, p in zip(w, probs)]
    s = mp.fsum(w)
    return [float(wi / s) for wi in w]
