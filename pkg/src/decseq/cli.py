"""Command-line front end: ``decseq info | optimize | simulate``.

Exit codes: 0 success, 1 usage/config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .gauss import FOLDED_STATES, THREE_STATES, FoldedHypothesis, Hypothesis
from .info import InfiniteInformationError, maximin_objective, quantizer_kl
from .mc import McConfig, default_workers, run_trials
from .optimize import (
    optimize_invariant_lambda,
    optimize_maximin_f,
    optimize_threshold,
)
from .quantizers import Absolute, parse_quantizer
from .sequential import (
    DEFAULT_MAX_SAMPLES,
    DEFAULT_STAGE2,
    InvariantConfig,
    NonTerminationError,
    TwoStageConfig,
)

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

CSV_COLUMNS = ["test", "c", "hypothesis", "mean_N", "stderr_N", "p_error", "stderr_p",
               "replications", "seed", "diagnostics"]


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- experiment config -------------------------------------------------------

@dataclass
class TestSpec:
    __test__ = False

    name: str
    kind: str  # "delta-I" or "invariant-sprt"
    u: float = 0.1
    lam: float | None = None
    stage2: tuple = DEFAULT_STAGE2


@dataclass
class ExperimentConfig:
    tests: list[TestSpec]
    c: list[float]
    priors: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    losses: tuple[float, float, float] = (1.0, 1.0, 1.0)
    replications: int = 1000
    seed: int = 0
    estimator: str = "importance"
    max_samples: int = DEFAULT_MAX_SAMPLES
    csv: str | None = None
    json: str | None = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.tests:
            raise ConfigError("no tests configured")
        if not self.c or any(not 0 < c < 1 for c in self.c):
            raise ConfigError("every c must lie in (0, 1)")
        if len(self.priors) != 3 or any(p < 0 for p in self.priors) or abs(sum(self.priors) - 1) > 1e-9:
            raise ConfigError("priors must be three nonnegative numbers summing to 1")
        if len(self.losses) != 3 or any(not w > 0 for w in self.losses):
            raise ConfigError("losses must be three positive numbers")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if self.estimator not in ("plain", "importance"):
            raise ConfigError("estimator must be plain or importance")
        if self.max_samples < 1:
            raise ConfigError("max_samples must be >= 1")
        for t in self.tests:
            if t.kind == "delta-I":
                if not 0 < t.u < 0.5:
                    raise ConfigError(f"[test {t.name}] u must lie in (0, 1/2)")
            elif t.kind == "invariant-sprt":
                if t.lam is None or not t.lam > 0:
                    raise ConfigError(f"[test {t.name}] needs lambda > 0")
                if self.losses[1] != self.losses[2]:
                    raise ConfigError("invariant tests need equal losses under g1 and g2")
            else:
                raise ConfigError(f"[test {t.name}] unknown kind {t.kind!r}")

    def test_config(self, spec: TestSpec, c: float):
        if spec.kind == "delta-I":
            return TwoStageConfig(c=c, u=spec.u, priors=self.priors, losses=self.losses,
                                  stage2=spec.stage2, max_samples=self.max_samples)
        folded_priors = (self.priors[0], self.priors[1] + self.priors[2])
        return InvariantConfig(lam=spec.lam, c=c, priors=folded_priors,
                               losses=(self.losses[0], self.losses[1]), max_samples=self.max_samples)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["experiment"] = {
            "tests": ", ".join(t.name for t in self.tests),
            "c": ", ".join(repr(c) for c in self.c),
            "priors": ", ".join(repr(p) for p in self.priors),
            "losses": ", ".join(repr(w) for w in self.losses),
            "replications": str(self.replications),
            "seed": str(self.seed),
            "estimator": self.estimator,
            "max_samples": str(self.max_samples),
        }
        for t in self.tests:
            sec = {"kind": t.kind}
            if t.kind == "delta-I":
                sec["u"] = repr(t.u)
                sec["stage2"] = ", ".join(_quantizer_text(q) for q in t.stage2)
            else:
                sec["lambda"] = repr(t.lam)
            cp[f"test {t.name}"] = sec
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue().strip()


def _quantizer_text(q) -> str:
    rec = q.to_record()
    if rec["kind"] == "threshold":
        return f"threshold:{rec['lambda']!r}:{rec['direction']}"
    if rec["kind"] == "interval":
        return f"interval:{rec['lower']!r}:{rec['upper']!r}:{'in' if rec['inside'] else 'out'}"
    return f"abs:{rec['lambda']!r}:{'in' if rec['inside'] else 'out'}"


_EXPERIMENT_KEYS = {"tests", "c", "priors", "losses", "replications", "seed",
                    "estimator", "max_samples"}
_TEST_KEYS = {"kind", "u", "lambda", "stage2"}
_OUTPUT_KEYS = {"csv", "json"}


def _floats(text: str, key: str) -> list[float]:
    try:
        return [float(Fraction(p.strip())) for p in text.split(",") if p.strip()]
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key}: expected a comma-separated list of numbers, got {text!r}") from None


def _int(text: str, key: str) -> int:
    try:
        return int(text.replace("_", ""))
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def load_experiment(path: str | Path) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return parse_experiment(cp)


def parse_experiment(cp: configparser.ConfigParser) -> ExperimentConfig:
    sections = set(cp.sections())
    if "experiment" not in sections:
        raise ConfigError("missing [experiment] section")
    exp = cp["experiment"]
    unknown = set(exp) - _EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"unknown keys in [experiment]: {sorted(unknown)}")

    names = [n.strip() for n in exp.get("tests", "").split(",") if n.strip()]
    tests = []
    for name in names:
        sec_name = f"test {name}"
        if sec_name not in sections:
            raise ConfigError(f"missing [{sec_name}] section")
        sec = cp[sec_name]
        bad = set(sec) - _TEST_KEYS
        if bad:
            raise ConfigError(f"unknown keys in [{sec_name}]: {sorted(bad)}")
        spec = TestSpec(name=name, kind=sec.get("kind", "").strip())
        if "u" in sec:
            spec.u = _floats(sec["u"], "u")[0]
        if "lambda" in sec:
            spec.lam = _floats(sec["lambda"], "lambda")[0]
        if "stage2" in sec:
            parts = [p.strip() for p in sec["stage2"].split(",")]
            if len(parts) != 3:
                raise ConfigError("stage2 needs three quantizers (for f, g1, g2)")
            try:
                spec.stage2 = tuple(parse_quantizer(p) for p in parts)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        tests.append(spec)
    extra = sections - {"experiment", "output"} - {f"test {n}" for n in names}
    if extra:
        raise ConfigError(f"unknown sections: {sorted(extra)}")

    cfg = ExperimentConfig(tests=tests, c=_floats(exp.get("c", ""), "c"))
    if "priors" in exp:
        cfg.priors = tuple(_floats(exp["priors"], "priors"))
    if "losses" in exp:
        cfg.losses = tuple(_floats(exp["losses"], "losses"))
    if "replications" in exp:
        cfg.replications = _int(exp["replications"], "replications")
    if "seed" in exp:
        cfg.seed = _int(exp["seed"], "seed")
    if "estimator" in exp:
        cfg.estimator = exp["estimator"].strip()
    if "max_samples" in exp:
        cfg.max_samples = _int(exp["max_samples"], "max_samples")
    if "output" in sections:
        out = cp["output"]
        bad = set(out) - _OUTPUT_KEYS
        if bad:
            raise ConfigError(f"unknown keys in [output]: {sorted(bad)}")
        cfg.csv = out.get("csv")
        cfg.json = out.get("json")
    cfg.validate()
    return cfg


# -- table output ------------------------------------------------------------

def _g6(x) -> str:
    return "" if x is None else f"{x:.6g}"


def _sci(x) -> str:
    return "" if x is None else f"{x:.6e}"


def table_rows(test_name: str, table, seed: int) -> list[dict]:
    out = []
    for label, row in table.rows.items():
        diag = [d for d in table.diagnostics if label == "mixture" or d.startswith(f"{label}:")]
        out.append({
            "test": test_name, "c": _g6(table.c), "hypothesis": label,
            "mean_N": _g6(row.mean_n), "stderr_N": _g6(row.stderr_n),
            "p_error": _sci(row.p_error), "stderr_p": _sci(row.stderr_p),
            "replications": str(row.replications), "seed": str(seed),
            "diagnostics": "; ".join(diag),
        })
    # Bayes risk and its stderr ride in the p_error / stderr_p columns
    out.append({
        "test": test_name, "c": _g6(table.c), "hypothesis": "bayes_risk",
        "mean_N": "", "stderr_N": "", "p_error": _sci(table.bayes_risk),
        "stderr_p": _sci(table.stderr_risk),
        "replications": str(table.rows["mixture"].replications), "seed": str(seed),
        "diagnostics": "",
    })
    return out


def _json_value(col: str, text: str):
    if col in ("replications", "seed"):
        return int(text)
    if col in ("c", "mean_N", "stderr_N", "p_error", "stderr_p"):
        return None if text == "" else float(text)
    return text


def write_outputs(cfg: ExperimentConfig, rows: list[dict]) -> None:
    echo = cfg.to_ini()
    if cfg.csv:
        path = Path(cfg.csv)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            for line in echo.splitlines():
                fh.write(f"# {line}\n")
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\r\n")
            writer.writeheader()
            writer.writerows(rows)
    if cfg.json:
        path = Path(cfg.json)
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = {
            "config": echo,
            "columns": CSV_COLUMNS,
            "rows": [{k: _json_value(k, r[k]) for k in CSV_COLUMNS} for r in rows],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")


def run_experiment(cfg: ExperimentConfig, workers: int | None = None, progress=None) -> list[dict]:
    rows = []
    for spec in cfg.tests:
        for c in cfg.c:
            mc = McConfig(test=cfg.test_config(spec, c), replications=cfg.replications,
                          seed=cfg.seed, mixture=cfg.priors, estimator=cfg.estimator,
                          workers=workers)
            table = run_trials(mc)
            rows.extend(table_rows(spec.name, table, cfg.seed))
            if progress:
                progress(spec.name, c, table)
    return rows


# -- subcommands ---------------------------------------------------------------

def cmd_info(args) -> int:
    try:
        q = parse_quantizer(args.quantizer)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.model == "invariant":
        if not isinstance(q, Absolute):
            print("error: the invariant model takes abs:<lambda> quantizers", file=sys.stderr)
            return EXIT_USAGE
        labels = FOLDED_STATES
    else:
        labels = THREE_STATES
    print(f"quantizer: {q}")
    print(f"model: {args.model}")
    try:
        for a in labels:
            for b in labels:
                if a is not b:
                    print(f"I({a.value},{b.value}) = {quantizer_kl(q, a, b):.6f}")
        if args.model == "three-state":
            rq = q.as_interval() if isinstance(q, Absolute) else q
            print(f"maximin min(I(f,g1), I(f,g2)) = {maximin_objective(rq):.6f}")
    except InfiniteInformationError as exc:
        print(f"error: infinite information: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _print_result(res, as_json: bool) -> None:
    if as_json:
        print(json.dumps(res.to_record(), indent=2, default=str))
        return
    print(f"quantizer: {res.quantizer}")
    print(f"objective: {res.objective:.6f}")
    print(f"grid_resolution: {res.grid_resolution:g}")
    print(f"refined: {res.refined}")
    for k, v in res.details.items():
        if isinstance(v, float):
            print(f"{k}: {v:.6f}")
        elif isinstance(v, dict):
            for kk, vv in v.items():
                print(f"{k}[{kk}]: {vv:.6f}" if isinstance(vv, float) else f"{k}[{kk}]: {vv}")
        else:
            print(f"{k}: {v}")


def cmd_optimize(args) -> int:
    if args.target in ("g1", "g2"):
        res = optimize_threshold(Hypothesis(args.target))
    elif args.target == "f":
        res = optimize_maximin_f(step=args.step)
    else:
        try:
            pf, pg = _floats(args.priors, "priors")
            res = optimize_invariant_lambda(pf, pg)
        except (ValueError, ConfigError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
    _print_result(res, args.json)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        cfg = load_experiment(args.config)
        if args.replications is not None:
            cfg.replications = args.replications
        if args.seed is not None:
            cfg.seed = args.seed
        if args.estimator is not None:
            cfg.estimator = args.estimator
        if args.csv is not None:
            cfg.csv = args.csv
        if args.json is not None:
            cfg.json = args.json
        cfg.validate()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not (cfg.csv or cfg.json):
        print("error: no output path (set [output] csv/json or pass --csv/--json)", file=sys.stderr)
        return EXIT_USAGE

    def progress(name, c, table):
        m = table.rows["mixture"]
        print(f"{name:>10s}  c={c:<8g} E(N)={m.mean_n:9.3f}  P(DI)={m.p_error:.4e}  "
              f"risk={table.bayes_risk:.4f}", file=sys.stderr)

    try:
        rows = run_experiment(cfg, workers=args.threads, progress=None if args.quiet else progress)
        write_outputs(cfg, rows)
    except NonTerminationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="decseq", description="Decentralized two-sided sequential tests for a normal mean.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pi = sub.add_parser("info", help="K-L numbers of a quantizer")
    pi.add_argument("--quantizer", required=True,
                    help="threshold:L[:ge|lt], interval:A:B[:in|out] or abs:L[:in|out]")
    pi.add_argument("--model", choices=("three-state", "invariant"), default="three-state")
    pi.set_defaults(func=cmd_info)

    po = sub.add_parser("optimize", help="search for an optimal quantizer")
    po.add_argument("--target", choices=("f", "g1", "g2", "invariant"), required=True)
    po.add_argument("--priors", default="1/3,2/3", help="folded priors for --target invariant")
    po.add_argument("--step", type=float, default=1e-2, help="coarse grid step for --target f")
    po.add_argument("--json", action="store_true")
    po.set_defaults(func=cmd_optimize)

    ps = sub.add_parser("simulate", help="Monte Carlo tables from an experiment config")
    ps.add_argument("config")
    ps.add_argument("--replications", type=int)
    ps.add_argument("--seed", type=int)
    ps.add_argument("--estimator", choices=("plain", "importance"))
    ps.add_argument("--csv")
    ps.add_argument("--json")
    ps.add_argument("--threads", type=int, default=None,
                    help=f"worker threads (default: ${default_threads_env()} or 1)")
    ps.add_argument("--quiet", action="store_true")
    ps.set_defaults(func=cmd_simulate)
    return p


def default_threads_env() -> str:
    from .mc import THREADS_ENV
    return THREADS_ENV


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
