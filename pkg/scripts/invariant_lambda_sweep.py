"""Where the best folded threshold sits as the prior on the null moves.

    python3 scripts/invariant_lambda_sweep.py

For each prior pi_f the objective pi_f / I(f~,g~) + (1 - pi_f) / I(g~,f~) is
minimised over lambda; also printed are the maximisers of each arm and of
their minimum.
"""

import numpy as np

from decseq.optimize import _folded_arms, optimize_invariant_lambda
from decseq.gauss import DEFAULT_MODEL


def main():
    print(f"{'pi_f':>6s} {'lambda*':>9s} {'objective':>10s} {'I(f~,g~)':>9s} {'I(g~,f~)':>9s}")
    for pf in (1.0, 0.9, 0.75, 0.5, 1 / 3, 0.25, 0.1, 0.0):
        r = optimize_invariant_lambda(pf, 1 - pf)
        a = r.details["arms"]
        print(f"{pf:6.3f} {r.details['lambda']:9.4f} {r.objective:10.4f} {a['f~,g~']:9.5f} {a['g~,f~']:9.5f}")

    grid = np.linspace(0.001, 5, 500_000)
    i_fg, i_gf = _folded_arms(grid, DEFAULT_MODEL)
    print(f"\nargmax I(f~,g~)            = {grid[np.argmax(i_fg)]:.4f}")
    print(f"argmax I(g~,f~)            = {grid[np.argmax(i_gf)]:.4f}")
    print(f"argmax min(I(f~,g~), I(g~,f~)) = {grid[np.argmax(np.minimum(i_fg, i_gf))]:.4f}")


if __name__ == "__main__":
    main()
