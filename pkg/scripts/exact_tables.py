"""Exact expected sample sizes and error probabilities by dynamic programming
over message counts (no simulation). Slow for the two-stage test at small c:
about a minute for all three costs.

    python3 scripts/exact_tables.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import oracles  # noqa: E402

from decseq.gauss import FoldedHypothesis as FH  # noqa: E402
from decseq.quantizers import Absolute  # noqa: E402

COSTS = (1e-2, 1e-3, 1e-4)


def invariant(lam, c):
    pf, pg = Absolute(lam).prob_one(FH.F), Absolute(lam).prob_one(FH.G)
    en_f, _, wf = oracles.invariant_sprt_dp(pf, pf, pg, c)
    en_g, wg, _ = oracles.invariant_sprt_dp(pg, pf, pg, c)
    return (en_f + 2 * en_g) / 3, (wf + 2 * wg) / 3, (wf, wg)


def two_stage(c):
    en_f, d0_f = oracles.two_stage_dp("f", c)
    en_g, d0_g = oracles.two_stage_dp("g2", c)  # g1 is the mirror image
    return (en_f + 2 * en_g) / 3, ((1 - d0_f) + 2 * d0_g) / 3, (1 - d0_f, d0_g)


def main():
    print(f"{'test':<10s} {'c':>7s} {'E(N)':>10s} {'P(wrong)':>12s} {'P_f':>12s} {'P_g':>12s}")
    for name, fn in (("delta-II", lambda c: invariant(0.5, c)),
                     ("delta-III", lambda c: invariant(1.2824, c)),
                     ("delta-I", two_stage)):
        for c in COSTS:
            en, p, (pf, pg) = fn(c)
            print(f"{name:<10s} {c:>7g} {en:>10.3f} {p:>12.4e} {pf:>12.4e} {pg:>12.4e}", flush=True)


if __name__ == "__main__":
    main()
