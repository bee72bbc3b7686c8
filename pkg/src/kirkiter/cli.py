"""Command-line front end.

Exit codes: 0 success / consistent, 1 validation, 2 diverged, 3 max_iter,
4 stability violation, 5 vacuous hypothesis.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
import warnings
from typing import Optional, Sequence

from . import analysis, export
from .config import ExperimentConfig, load_config, parse_config
from .corpus import corpus_table
from .operators import (
    Condition,
    OperatorError,
    UniformSampler,
    check_condition,
    verify_lemma2,
)
from .schemes import ConfigError, StopReason, run
from .stability import PerturbationModel, StabilityError, Verdict, stability_verdict

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_DIVERGED = 2
EXIT_MAX_ITER = 3
EXIT_VIOLATION = 4
EXIT_VACUOUS = 5

RUN_EXIT = {
    StopReason.TOLERANCE_MET: EXIT_OK,
    StopReason.DIVERGED: EXIT_DIVERGED,
    StopReason.MAX_ITER: EXIT_MAX_ITER,
}
STABILITY_EXIT = {
    Verdict.STABLE_CONSISTENT: EXIT_OK,
    Verdict.VIOLATION: EXIT_VIOLATION,
    Verdict.HYPOTHESIS_FAILED: EXIT_VACUOUS,
}


class _Output:
    """CSV goes to --out (or stdout); the human summary goes wherever the CSV does not."""

    def __init__(self, path: Optional[str]):
        self.path = path
        self.buf = io.StringIO()

    @property
    def log(self):
        return sys.stdout if self.path else sys.stderr

    def flush(self):
        if self.path:
            with open(self.path, "w", newline="") as fh:
                fh.write(self.buf.getvalue())
        else:
            sys.stdout.write(self.buf.getvalue())


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.steps is not None:
        cfg.max_iter = cfg.n_steps = args.steps
    if args.tol is not None:
        cfg.tol = cfg.tol_eps = cfg.tol_y = args.tol
    if args.seed is not None:
        cfg.seed = args.seed
        if cfg.perturbation is not None:
            p = cfg.perturbation
            cfg.perturbation = PerturbationModel(p.kind, p.c, p.r, args.seed)
    if args.out is not None:
        cfg.output_path = args.out
    return cfg


def cmd_run(cfg: ExperimentConfig, out: _Output) -> int:
    T, sc = cfg.operator, cfg.scheme
    trace = run(T, sc, cfg.x0, tol=cfg.tol, max_iter=cfg.max_iter)
    export.write_trace(out.buf, trace)
    log = out.log
    print(f"operator={cfg.operator_id} scheme={sc.label or sc.family.value}", file=log)
    print(f"iterations={trace.iterations} stop_reason={trace.stop_reason.value} "
          f"final_error={export.fmt(trace.final_error)}", file=log)
    sig = analysis.sup_sigma(sc, T.contract_a, max(trace.iterations, 1))
    try:
        rate = analysis.estimate_rate(trace).fitted_rate
    except analysis.AnalysisError:
        rate = math.nan
    print(f"fitted_rate={export.fmt(rate)} sigma={export.fmt(sig)}", file=log)
    return RUN_EXIT[trace.stop_reason]


def _observed_ratios(cfg: ExperimentConfig) -> Optional[list[float]]:
    T = cfg.operator
    if cfg.x0 is None or T.fixed_point is None:
        return None
    trace = run(T, cfg.scheme, cfg.x0, tol=cfg.tol, max_iter=cfg.n_steps)
    errs = trace.errors
    return [errs[n + 1] / errs[n] if errs[n] > 0 else math.nan for n in range(len(errs) - 1)]


def cmd_sigma(cfg: ExperimentConfig, out: _Output) -> int:
    T, sc = cfg.operator, cfg.scheme
    a = T.contract_a if cfg.a is None else cfg.a
    n_rows = cfg.n_steps if not all(s.mode.value == "constant" for s in (sc.alpha, *sc.betas)) else 1
    breakdowns = [analysis.sigma(sc, a, n) for n in range(n_rows)]
    observed = _observed_ratios(cfg)
    sigmas = [b.sigma for b in breakdowns]
    if observed is not None and n_rows == 1:
        sigmas = sigmas * len(observed)
    export.write_sigma(out.buf, sigmas, observed)
    b = breakdowns[0]
    log = out.log
    print(f"family={sc.family.value} a={a!r}", file=log)
    print(f"terms={' '.join(map(repr, b.terms))}", file=log)
    print(f"inner_sums={' '.join(map(repr, b.inner_sums))}", file=log)
    ok = all(x.contracts for x in breakdowns)
    flag = "ok" if ok else "DEGENERATE (sigma >= 1: the scheme does not contract)"
    print(f"sigma={max(sigmas)!r} sigma<1: {flag}", file=log)
    return EXIT_OK


def cmd_stability(cfg: ExperimentConfig, out: _Output) -> int:
    T = cfg.operator
    if T.fixed_point is None:
        raise StabilityError(f"operator {cfg.operator_id} has no known fixed point")
    report = stability_verdict(T, cfg.scheme, cfg.x0, cfg.perturbation, cfg.n_steps,
                               tol_eps=cfg.tol_eps, tol_y=cfg.tol_y)
    export.write_stability(out.buf, report)
    print(report.summary(), file=out.log)
    if report.converse_violation:
        return EXIT_VIOLATION
    return STABILITY_EXIT[report.verdict]


def cmd_check_operator(cfg: ExperimentConfig, out: _Output) -> int:
    T = cfg.operator
    sampler = UniformSampler(T.dimension, seed=cfg.seed)
    names = cfg.conditions or [c.value for c in Condition]
    rows = []
    for name in names:
        rep = check_condition(T, name, sampler, cfg.n_samples)
        rows.append(rep)
    rows.append(verify_lemma2(T, sampler, cfg.n_samples, cfg.i_max))
    table = []
    for rep in rows:
        worst = rep.worst()
        table.append([rep.condition, rep.samples_tested, len(rep.violations), rep.satisfied,
                      worst.lhs if worst else None, worst.rhs if worst else None])
    export.write_rows(out.buf, ["condition", "samples", "violations", "satisfied", "worst_lhs", "worst_rhs"], table)
    log = out.log
    declared = T.contract_class.value if T.contract_class else None
    print(f"operator={cfg.operator_id} declared_class={declared or 'none'}", file=log)
    for r in table:
        print(f"  {r[0]:<22} {'ok' if r[3] else 'FAILED':<6} violations={r[2]}", file=log)
    by_name = {rep.condition: rep for rep in rows}
    if declared and declared in by_name and not by_name[declared].satisfied:
        print(f"declared class {declared} is violated", file=log)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig, out: _Output) -> int:
    T = cfg.operator
    rows = []
    for sc in cfg.schemes:
        trace = run(T, sc, cfg.x0, tol=cfg.tol, max_iter=cfg.max_iter)
        try:
            rate = analysis.estimate_rate(trace).fitted_rate if trace.errors else math.nan
        except analysis.AnalysisError:
            rate = math.nan
        sig = analysis.sup_sigma(sc, T.contract_a, max(trace.iterations, 1))
        rows.append([sc.label or sc.family.value, trace.iterations, trace.stop_reason.value, rate, sig])
    export.write_rows(out.buf, ["scheme", "iterations", "stop_reason", "fitted_rate", "sigma"], rows)
    log = out.log
    width = max(len(r[0]) for r in rows) + 2
    print(f"{'scheme':<{width}}{'iters':>7}  {'stop':<14}{'rate':>22}{'sigma':>22}", file=log)
    for name, it, stop, rate, sig in rows:
        print(f"{name:<{width}}{it:>7}  {stop:<14}{export.fmt(rate):>22}{export.fmt(sig):>22}", file=log)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sigma": cmd_sigma,
    "stability": cmd_stability,
    "check-operator": cmd_check_operator,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kirkiter", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML experiment document")
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--seed", type=int)
        p.add_argument("--steps", type=int)
        p.add_argument("--tol", type=float)
        if name == "check-operator":
            p.add_argument("--operator", help="corpus id (instead of --config)")
    sub.add_parser("corpus", help="list the operator corpus as CSV")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "corpus":
        table = corpus_table()
        export.write_rows(sys.stdout, list(table[0]), ([r[k] for k in r] for r in table))
        return EXIT_OK
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if args.config:
                cfg = load_config(args.config, args.command)
            elif getattr(args, "operator", None):
                cfg = parse_config({"operator": args.operator}, args.command)
            else:
                raise ConfigError("--config is required")
            cfg = _apply_overrides(cfg, args)
        out = _Output(cfg.output_path)
        if out.path:
            # fail before doing any work if the output is not writable
            with open(out.path, "a"):
                pass
        code = COMMANDS[args.command](cfg, out)
        out.flush()
        return code
    except (ConfigError, OperatorError, StabilityError, analysis.AnalysisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: ExperimentConfig invariant violated: output not writable: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
