"""Grid-plus-refinement searches for the optimal sensor quantizers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import ConvexHull, QhullError

from .gauss import (
    DEFAULT_MODEL,
    FoldedHypothesis,
    Hypothesis,
    HypothesisModel,
    std_normal_cdf_array,
)
from .info import kl_bernoulli_array, maximin_objective, quantizer_kl, random_quantizer_kl
from .quantizers import Absolute, Interval, RandomQuantizer, Threshold

_TIE = 1e-12


@dataclass
class OptimizationResult:
    quantizer: RandomQuantizer
    objective: float
    grid_resolution: float
    refined: bool
    details: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "quantizer": self.quantizer.to_record(),
            "description": str(self.quantizer),
            "objective": self.objective,
            "grid_resolution": self.grid_resolution,
            "refined": self.refined,
            **self.details,
        }


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def _golden_refine(fun, grid: np.ndarray, k: int, xtol: float):
    """Refine a grid minimiser with golden-section search on its bracket.

    Returns (x, f(x), refined?). Falls back to the grid point when k sits on
    the grid edge or the bracket is not strict.
    """
    if k == 0 or k == len(grid) - 1:
        return float(grid[k]), fun(grid[k]), False
    a, b, c = grid[k - 1], grid[k], grid[k + 1]
    fb = fun(b)
    if not (fb < fun(a) and fb < fun(c)):
        return float(b), fb, False
    res = minimize_scalar(fun, bracket=(a, b, c), method="golden", options={"xtol": xtol})
    if res.fun <= fb:
        return float(res.x), float(res.fun), True
    return float(b), fb, False


# -- single-alternative thresholds -----------------------------------------

def _threshold_info(lams, target: Hypothesis, model: HypothesisModel):
    s = model.sd
    p_target = std_normal_cdf_array((model.mean(target) - lams) / s)
    p_null = std_normal_cdf_array((model.mean(Hypothesis.F) - lams) / s)
    return kl_bernoulli_array(p_target, p_null)


def optimize_threshold(target: Hypothesis, model: HypothesisModel = DEFAULT_MODEL,
                       lo: float = -5.0, hi: float = 5.0, step: float = 1e-3,
                       xtol: float = 1e-6) -> OptimizationResult:
    """Threshold quantizer I(X >= lam) maximising I(target, f)."""
    if target not in (Hypothesis.G1, Hypothesis.G2):
        raise ValueError("target must be g1 or g2")
    grid = _grid(lo, hi, step)
    values = _threshold_info(grid, target, model)
    k = int(np.argmax(values))  # first maximiser = smallest lambda

    def neg(lam):
        return -float(_threshold_info(np.asarray(lam), target, model))

    lam, _, refined = _golden_refine(neg, grid, k, xtol)
    q = Threshold(lam)
    return OptimizationResult(
        quantizer=RandomQuantizer.of(q),
        objective=quantizer_kl(q, target, Hypothesis.F, model),
        grid_resolution=xtol if refined else step,
        refined=refined,
        details={"target": target.value, "lambda": lam},
    )


# -- maximin quantizer for the null ----------------------------------------

def _arm_probs(lo_edge, hi_edge, model, kind):
    """P_h(q = 1) for h in (f, g1, g2) on arrays of breakpoints."""
    s = model.sd
    out = []
    for h in (Hypothesis.F, Hypothesis.G1, Hypothesis.G2):
        mu = model.mean(h)
        if kind == "threshold":
            out.append(std_normal_cdf_array((mu - lo_edge) / s))
        else:
            out.append(std_normal_cdf_array((hi_edge - mu) / s) - std_normal_cdf_array((lo_edge - mu) / s))
    return out


def _arms(lo_edge, hi_edge, model, kind):
    pf, p1, p2 = _arm_probs(lo_edge, hi_edge, model, kind)
    return kl_bernoulli_array(pf, p1), kl_bernoulli_array(pf, p2)


@dataclass
class _Family:
    """Grid ULQs of one shape with their two information arms."""

    kind: str
    lo: np.ndarray
    hi: np.ndarray
    a: np.ndarray  # I(f, g1)
    b: np.ndarray  # I(f, g2)

    def quantizer(self, i: int):
        if self.kind == "threshold":
            return Threshold(float(self.lo[i]))
        return Interval(float(self.lo[i]), float(self.hi[i]))

    def sort_key(self, i: int):
        # smaller |lambda| first, then smaller lambda
        return (abs(self.lo[i]) + abs(self.hi[i]), self.lo[i], self.hi[i])


def _threshold_family(grid, model):
    a, b = _arms(grid, None, model, "threshold")
    return _Family("threshold", grid, np.full_like(grid, np.nan), a, b)


def _interval_family(grid, model, lo_grid=None, hi_grid=None):
    if lo_grid is None:
        i, j = np.triu_indices(len(grid), 1)
        lo, hi = grid[i], grid[j]
    else:
        lo, hi = np.meshgrid(lo_grid, hi_grid, indexing="ij")
        keep = lo < hi
        lo, hi = lo[keep], hi[keep]
    a, b = _arms(lo, hi, model, "interval")
    return _Family("interval", lo, hi, a, b)


def _best_deterministic(fam: _Family):
    val = np.minimum(fam.a, fam.b)
    top = val.max()
    ties = np.flatnonzero(val >= top - _TIE)
    i = min(ties, key=fam.sort_key)
    return int(i), float(val[i])


def _best_pair(a1, b1, a2, b2):
    """Best min-arm value over mixtures p*q1 + (1-p)*q2, elementwise.

    The objective min(p*a1 + (1-p)*a2, p*b1 + (1-p)*b2) is the minimum of two
    linear functions of p, so its maximum on [0, 1] is at an endpoint or at
    the crossing of the two arms.
    """
    best_val = np.minimum(a1, b1)
    best_p = np.ones_like(best_val)
    v2 = np.minimum(a2, b2)
    take = v2 > best_val
    best_val = np.where(take, v2, best_val)
    best_p = np.where(take, 0.0, best_p)
    den = (a1 - a2) + (b2 - b1)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = (b2 - a2) / den
    inner = np.isfinite(p) & (p > 0) & (p < 1)
    vx = np.where(inner, p * a1 + (1 - p) * a2, -np.inf)
    take = vx > best_val + _TIE
    best_val = np.where(take, vx, best_val)
    best_p = np.where(take, p, best_p)
    return best_val, best_p


def _hull_indices(a, b):
    pts = np.column_stack([a, b])
    try:
        return ConvexHull(pts).vertices
    except (QhullError, ValueError):
        return np.arange(len(a))


def _best_mixture(fams, model):
    """Best two-component randomization over all grid ULQs.

    Any mixture lies in the convex hull of the (I(f,g1), I(f,g2)) points, and
    min-arm is increasing in both coordinates, so the optimum sits on a hull
    edge; pairs of hull vertices therefore cover every pair of grid ULQs.
    """
    owners = [(fi, i) for fi, fam in enumerate(fams) for i in range(len(fam.a))]
    a = np.concatenate([f.a for f in fams])
    b = np.concatenate([f.b for f in fams])
    verts = _hull_indices(a, b)
    i, j = np.triu_indices(len(verts), 1)
    vi, vj = verts[i], verts[j]
    val, p = _best_pair(a[vi], b[vi], a[vj], b[vj])
    k = int(np.argmax(val))
    (fa, ia), (fb, ib) = owners[vi[k]], owners[vj[k]]
    qa, qb = fams[fa].quantizer(ia), fams[fb].quantizer(ib)
    return RandomQuantizer.mix(qa, qb, float(p[k])), float(val[k])


def _refine_threshold(lam, step, fine_step, model):
    m = int(round(step / fine_step))
    fine = lam + fine_step * np.arange(-m, m + 1)
    fam = _threshold_family(fine, model)
    i, v = _best_deterministic(fam)
    return fam.quantizer(i), v


def _refine_interval(lo, hi, step, fine_step, model):
    m = int(round(step / fine_step))
    offs = fine_step * np.arange(-m, m + 1)
    fam = _interval_family(None, model, lo + offs, hi + offs)
    i, v = _best_deterministic(fam)
    return fam.quantizer(i), v


def _component_arms(q, model):
    return (quantizer_kl(q, Hypothesis.F, Hypothesis.G1, model),
            quantizer_kl(q, Hypothesis.F, Hypothesis.G2, model))


def _refine_mixture(rq: RandomQuantizer, step, fine_step, model):
    """Re-optimise each component locally with the other held fixed."""
    if rq.is_deterministic:
        return rq, maximin_objective(rq, model)
    (qa, _), (qb, _) = rq.components
    best_val = maximin_objective(rq, model)
    m = int(round(step / fine_step))
    offs = fine_step * np.arange(-m, m + 1)
    for swap in (False, True):
        moving, fixed = (qb, qa) if swap else (qa, qb)
        fa, fb = _component_arms(fixed, model)
        if isinstance(moving, Threshold):
            fam = _threshold_family(moving.lam + offs, model)
        else:
            fam = _interval_family(None, model, moving.lo + offs, moving.hi + offs)
        val, p = _best_pair(fam.a, fam.b, np.full_like(fam.a, fa), np.full_like(fam.b, fb))
        k = int(np.argmax(val))
        if val[k] > best_val + _TIE:
            moving = fam.quantizer(k)
            cand = RandomQuantizer.mix(moving, fixed, float(p[k]))
            best_val = maximin_objective(cand, model)
            rq = cand
            if rq.is_deterministic:
                break
            (qa, _), (qb, _) = rq.components
    return rq, best_val


_PRECEDENCE = {"threshold": 0, "interval": 1, "mixture": 2}


def optimize_maximin_f(model: HypothesisModel = DEFAULT_MODEL, lo: float = -4.0, hi: float = 4.0,
                       step: float = 1e-2, fine_step: float = 1e-4,
                       families=("threshold", "interval", "mixture")) -> OptimizationResult:
    """Quantizer maximising min(I(f, g1), I(f, g2)).

    Searches grid thresholds, grid intervals and two-component mixtures of
    grid ULQs, then refines each family's incumbent at ``fine_step``.
    """
    families = tuple(families)
    unknown = set(families) - set(_PRECEDENCE)
    if unknown or not families:
        raise ValueError(f"unknown search families {sorted(unknown)}")
    grid = _grid(lo, hi, step)
    thr = _threshold_family(grid, model)
    itv = _interval_family(grid, model)

    found = {}
    if "threshold" in families:
        i, v = _best_deterministic(thr)
        found["threshold"] = {"coarse": v, "quantizer": _refine_threshold(thr.lo[i], step, fine_step, model)[0]}
    if "interval" in families:
        i, v = _best_deterministic(itv)
        found["interval"] = {"coarse": v, "quantizer": _refine_interval(itv.lo[i], itv.hi[i], step, fine_step, model)[0]}
    if "mixture" in families:
        rq, v = _best_mixture([thr, itv], model)
        found["mixture"] = {"coarse": v, "quantizer": _refine_mixture(rq, step, fine_step, model)[0]}

    scored = []
    for name, entry in found.items():
        rq = RandomQuantizer.of(entry["quantizer"])
        entry["objective"] = maximin_objective(rq, model)
        scored.append((name, rq, entry["objective"]))
    top = max(s[2] for s in scored)
    name, rq, obj = min((s for s in scored if s[2] >= top - _TIE),
                        key=lambda s: (not s[1].is_deterministic, _PRECEDENCE[s[0]]))

    arms = (random_quantizer_kl(rq, Hypothesis.F, Hypothesis.G1, model),
            random_quantizer_kl(rq, Hypothesis.F, Hypothesis.G2, model))
    details = {
        "family": name,
        "arms": {"f,g1": arms[0], "f,g2": arms[1]},
        "family_best": {k: {"coarse": e["coarse"], "refined": e["objective"],
                            "quantizer": str(e["quantizer"])} for k, e in found.items()},
    }
    return OptimizationResult(rq, obj, fine_step, True, details)


# -- invariant (folded) threshold ------------------------------------------

def _folded_arms(lams, model):
    s = model.sd
    mu = model.means[2]
    pf = 2.0 * std_normal_cdf_array(lams / s) - 1.0
    pg = std_normal_cdf_array((lams - mu) / s) - std_normal_cdf_array((-lams - mu) / s)
    return kl_bernoulli_array(pf, pg), kl_bernoulli_array(pg, pf)


def invariant_objective(lam, prior_f: float, prior_g: float,
                        model: HypothesisModel = DEFAULT_MODEL):
    """prior_f / I(f~, g~) + prior_g / I(g~, f~) for U = I(|X| <= lam).

    A zero prior drops its term entirely.
    """
    i_fg, i_gf = _folded_arms(np.asarray(lam, dtype=float), model)
    out = np.zeros_like(i_fg)
    if prior_f > 0:
        out = out + prior_f / i_fg
    if prior_g > 0:
        out = out + prior_g / i_gf
    return out if out.ndim else float(out)


def optimize_invariant_lambda(prior_f: float, prior_g: float,
                              model: HypothesisModel = DEFAULT_MODEL,
                              hi: float = 5.0, step: float = 1e-3,
                              xtol: float = 1e-6) -> OptimizationResult:
    """Stationary folded threshold minimising the weighted inverse information."""
    if prior_f < 0 or prior_g < 0 or abs(prior_f + prior_g - 1.0) > 1e-9 or prior_f + prior_g == 0:
        raise ValueError("priors must be nonnegative and sum to 1")
    grid = _grid(step, hi, step)
    values = invariant_objective(grid, prior_f, prior_g, model)
    k = int(np.argmin(values))

    def obj(lam):
        return float(invariant_objective(lam, prior_f, prior_g, model))

    lam, _, refined = _golden_refine(obj, grid, k, xtol)
    q = Absolute(lam)
    i_fg = quantizer_kl(q, FoldedHypothesis.F, FoldedHypothesis.G, model)
    i_gf = quantizer_kl(q, FoldedHypothesis.G, FoldedHypothesis.F, model)
    objective = (prior_f / i_fg if prior_f > 0 else 0.0) + (prior_g / i_gf if prior_g > 0 else 0.0)
    return OptimizationResult(
        quantizer=RandomQuantizer.of(q),
        objective=objective,
        grid_resolution=xtol if refined else step,
        refined=refined,
        details={"lambda": lam, "priors": [prior_f, prior_g],
                 "arms": {"f~,g~": i_fg, "g~,f~": i_gf}},
    )
