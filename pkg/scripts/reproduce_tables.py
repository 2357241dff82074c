"""Run the sample-size / error-probability tables and print them next to the
reference entries.

    python3 scripts/reproduce_tables.py [--config configs/tables.ini] [--replications N]

Writes the CSV/JSON named in the config, then prints three blocks: mean N,
error probability, Bayes risk at c = 0.01.
"""

import argparse
import sys
from pathlib import Path

from decseq.cli import load_experiment, run_experiment, write_outputs

ROOT = Path(__file__).resolve().parents[1]

REFERENCE_N = {
    "delta-I": (20.2, 28.4, 36.3),
    "delta-II": (94.1, 146.0, 196.4),
    "delta-III": (45.7, 69.0, 92.2),
}
REFERENCE_P = {
    "delta-I": (4.58e-3, 4.42e-4, 4.61e-5),
    "delta-II": (8.84e-3, 8.85e-4, 8.84e-5),
    "delta-III": (8.02e-3, 8.03e-4, 8.02e-5),
}
REFERENCE_RISK = {"delta-I": 0.204, "delta-II": 0.949, "delta-III": 0.465}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(ROOT / "configs" / "tables.ini"))
    ap.add_argument("--replications", type=int)
    args = ap.parse_args()

    cfg = load_experiment(args.config)
    if args.replications:
        cfg.replications = args.replications
    cfg.validate()

    def progress(name, c, table):
        print(f"  done {name} c={c:g}", file=sys.stderr)

    rows = run_experiment(cfg, progress=progress)
    write_outputs(cfg, rows)

    mix = {(r["test"], float(r["c"])): r for r in rows if r["hypothesis"] == "mixture"}
    risk = {(r["test"], float(r["c"])): r for r in rows if r["hypothesis"] == "bayes_risk"}
    costs = sorted({c for _, c in mix}, reverse=True)

    print("\nexpected sample size (mixture)")
    for name in REFERENCE_N:
        cells = []
        for i, c in enumerate(costs):
            r = mix.get((name, c))
            if r is None:
                continue
            ref = REFERENCE_N[name][i] if i < 3 else float("nan")
            cells.append(f"c={c:g}: {float(r['mean_N']):8.2f} +- {float(r['stderr_N']):.2f} [{ref}]")
        print(f"  {name:<10s} " + "   ".join(cells))

    print("\nerror probability (mixture)")
    for name in REFERENCE_P:
        cells = []
        for i, c in enumerate(costs):
            r = mix.get((name, c))
            if r is None:
                continue
            ref = REFERENCE_P[name][i] if i < 3 else float("nan")
            cells.append(f"c={c:g}: {float(r['p_error']):.3e} +- {float(r['stderr_p']):.1e} [{ref:.2e}]")
        print(f"  {name:<10s} " + "   ".join(cells))

    print("\nBayes risk at c=0.01")
    for name, ref in REFERENCE_RISK.items():
        r = risk.get((name, 0.01))
        if r is not None:
            print(f"  {name:<10s} {float(r['p_error']):.4f} +- {float(r['stderr_p']):.4f} [{ref}]")


if __name__ == "__main__":
    main()
