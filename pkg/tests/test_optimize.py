import itertools

import numpy as np
import pytest

from decseq.gauss import Hypothesis as H
from decseq.info import maximin_objective, random_quantizer_kl
from decseq.optimize import (
    _best_pair,
    invariant_objective,
    optimize_invariant_lambda,
    optimize_maximin_f,
    optimize_threshold,
)
from decseq.quantizers import Interval, RandomQuantizer, Threshold

import oracles


@pytest.fixture(scope="module")
def maximin():
    return optimize_maximin_f()


def test_threshold_optimum_matches_scan():
    res = optimize_threshold(H.G2)
    lam = res.quantizer.deterministic.lam
    # independent scan with the high-precision oracle around the optimum
    scan = np.linspace(lam - 0.01, lam + 0.01, 41)
    vals = [oracles.kl_threshold(x, "g2", "f") for x in scan]
    assert res.objective >= max(vals) - 1e-12
    assert res.refined


def test_threshold_optima_are_mirror_images():
    a, b = optimize_threshold(H.G1), optimize_threshold(H.G2)
    qa, qb = a.quantizer.deterministic, b.quantizer.deterministic
    assert qa.lam == pytest.approx(-qb.lam, abs=1e-6)
    assert a.objective == pytest.approx(b.objective, rel=1e-10)


def test_maximin_is_sign_threshold_with_balanced_arms(maximin):
    q = maximin.quantizer.deterministic
    assert isinstance(q, Threshold) and abs(q.lam) < 1e-6
    arms = maximin.details["arms"]
    assert arms["f,g1"] == pytest.approx(arms["f,g2"], abs=1e-9)


def test_maximin_beats_brute_force_grid(maximin):
    grid = np.arange(-3, 3.001, 0.25)
    best = 0.0
    for lo, hi in itertools.combinations(grid, 2):
        for inside in (0, 1):
            a = oracles.kl_bern(*(Interval(lo, hi, inside).prob_one(h) for h in (H.F, H.G1)))
            b = oracles.kl_bern(*(Interval(lo, hi, inside).prob_one(h) for h in (H.F, H.G2)))
            best = max(best, min(a, b))
    assert maximin.objective >= best - 1e-12


def test_maximin_beats_random_mixtures(maximin):
    rng = np.random.default_rng(3)
    for _ in range(300):
        l1, l2 = rng.uniform(-3, 3, 2)
        p = rng.uniform(0, 1)
        q2 = Interval(min(l1, l2), max(l1, l2), int(rng.integers(2)))
        rq = RandomQuantizer.mix(Threshold(l1), q2, p)
        assert maximin_objective(rq) <= maximin.objective + 1e-12


def test_family_bests_do_not_exceed_optimum(maximin):
    for entry in maximin.details["family_best"].values():
        assert entry["refined"] <= maximin.objective + 1e-12


@pytest.mark.parametrize("a1,b1,a2,b2", [(0.4, 0.1, 0.1, 0.4), (0.5, 0.0, 0.0, 0.2), (0.3, 0.2, 0.25, 0.28)])
def test_crossing_weight_balances_arms(a1, b1, a2, b2):
    val, p = _best_pair(*(np.array([v]) for v in (a1, b1, a2, b2)))
    p, val = float(p[0]), float(val[0])
    arms = (p * a1 + (1 - p) * a2, p * b1 + (1 - p) * b2)
    # brute force over p
    ps = np.linspace(0, 1, 100001)
    brute = np.max(np.minimum(ps * a1 + (1 - ps) * a2, ps * b1 + (1 - ps) * b2))
    assert val == pytest.approx(brute, abs=1e-5)
    if 0 < p < 1:
        assert arms[0] == pytest.approx(arms[1], abs=1e-12)
        assert p == pytest.approx((b2 - a2) / ((a1 - a2) + (b2 - b1)))


def test_sign_threshold_is_a_lone_optimum_not_a_mixture(maximin):
    # the best pure threshold on a side loses one arm; mixing two mirrored
    # thresholds at equal weight is no better than I(X >= 0)
    q1, q2 = Threshold(0.3), Threshold(-0.3)
    rq = RandomQuantizer.mix(q1, q2, 0.5)
    assert random_quantizer_kl(rq, H.F, H.G1) == pytest.approx(random_quantizer_kl(rq, H.F, H.G2))
    assert maximin_objective(rq) < maximin.objective


def test_invariant_objective_minimum_matches_grid():
    res = optimize_invariant_lambda(1 / 3, 2 / 3)
    lam = res.details["lambda"]
    grid = np.linspace(0.2, 4, 3801)
    assert res.objective <= np.min(invariant_objective(grid, 1 / 3, 2 / 3)) + 1e-12
    assert invariant_objective(lam, 1 / 3, 2 / 3) == pytest.approx(res.objective, rel=1e-12)


def test_invariant_with_null_only_prior_maximises_null_information():
    res = optimize_invariant_lambda(1.0, 0.0)
    lam = res.details["lambda"]
    scan = np.linspace(lam - 0.01, lam + 0.01, 21)
    assert oracles.kl_folded(lam, "f", "g") >= max(oracles.kl_folded(x, "f", "g") for x in scan) - 1e-12


def test_invariant_optimum_moves_with_priors():
    lams = [optimize_invariant_lambda(p, 1 - p).details["lambda"] for p in (1.0, 0.5, 1 / 3, 0.0)]
    assert all(a < b for a, b in zip(lams, lams[1:]))


def test_invariant_prior_validation():
    with pytest.raises(ValueError):
        optimize_invariant_lambda(0.5, 0.6)
    with pytest.raises(ValueError):
        optimize_invariant_lambda(-0.1, 1.1)


def test_unknown_family_rejected():
    with pytest.raises(ValueError):
        optimize_maximin_f(families=("spline",))
