"""Command line entry point.

Subcommands: ``fixed-size``, ``generate``, ``run`` and ``plot``. Exit codes:
0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import files, report
from .config import RunConfig
from .datagen import GeneratorSpec, generate
from .errors import ConfigError, DataError, NumericalError
from .fixed_size import MC_DRAWS, MC_SEED, FixedSizeInputs, minimum_sample_size
from .sequential import run_sequential

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("seqcpm")


def _fixed_size(args) -> int:
    inputs = FixedSizeInputs(
        prevalence=args.prevalence,
        c_statistic=args.cstat,
        parameters=args.parameters,
        shrinkage_target=args.shrinkage,
        optimism_target=args.optimism,
        risk_margin=args.margin,
        r2_cs=args.r2cs,
        mc_draws=args.mc_draws,
        seed=args.mc_seed,
    )
    res = minimum_sample_size(inputs)
    print(f"{'Criterion':<30}{'n':>8}{'events':>8}")
    for label, n in res.rows():
        print(f"{label:<30}{n:>8}{math.ceil(n * inputs.prevalence - 1e-9):>8}")
    print(f"R2_CS = {res.r2_cs:.4f} (max {res.max_r2_cs:.4f}), shrinkage = {res.shrinkage:.3f}")
    print(f"Minimum sample size: n={res.n_total}, events={res.n_events}")
    return EXIT_OK


def _generate(args) -> int:
    spec = GeneratorSpec(n=args.n, target_prevalence=args.prevalence, target_c=args.cstat,
                         p=args.p, seed=args.seed)
    cohort = generate(spec)
    files.write_cohort_csv(cohort, args.out)
    log.info("wrote %d rows (%d events) to %s", cohort.n, int(cohort.y.sum()), args.out)
    return EXIT_OK


def _overrides(args) -> dict:
    out = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    if args.seed is not None:
        out["run.seed"] = str(args.seed)
    if args.workers is not None:
        out["run.workers"] = str(args.workers)
    if args.out_dir is not None:
        out["output.dir"] = args.out_dir
    if args.stop_early:
        out["run.stop_early"] = "true"
    return out


def _run(args) -> int:
    cfg = RunConfig.load(args.config, _overrides(args))
    seq = cfg.sequential_config()
    if cfg["data.cohort_csv"]:
        try:
            cohort = files.read_cohort_csv(cfg["data.cohort_csv"], seed=cfg["run.seed"])
        except OSError as exc:
            raise DataError(str(exc)) from None
    else:
        cohort = generate(cfg.generator_spec())

    curve = run_sequential(cohort, seq)

    out_dir = Path(cfg["output.dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    provenance = cfg.resolved()
    written = []
    if cfg["output.csv"]:
        files.write_learning_curve(curve, out_dir / cfg["output.csv"], "csv")
        written.append(cfg["output.csv"])
    if cfg["output.json"]:
        payload = files.curve_to_dict(curve, provenance)
        (out_dir / cfg["output.json"]).write_text(json.dumps(payload, indent=2) + "\n")
        written.append(cfg["output.json"])
    if cfg["output.svg"] and len(curve.records) >= 2:
        chosen = [m for m in cfg["output.metrics"].split(",") if m.strip()] or None
        report.render_learning_curve_svg(curve, chosen, out_dir / cfg["output.svg"],
                                         title=seq.spec.kind, provenance=cfg.resolved(execution=False))
        written.append(cfg["output.svg"])

    print(f"strategy={seq.spec.kind} seed={seq.seed} increments={len(curve.records)}")
    for rule in curve.rules:
        stop = curve.n_stop_per_rule[rule.name]
        print(f"  {str(rule):<32} N_stop={stop if stop is not None else 'not met'}")
    overall = curve.n_stop_overall
    print(f"  {'all rules':<32} N_stop={overall if overall is not None else 'not met'}")
    print(f"wrote {', '.join(written)} to {out_dir}")
    return EXIT_OK


def _plot(args) -> int:
    try:
        curve = files.read_learning_curve_csv(args.curve)
    except OSError as exc:
        raise DataError(str(exc)) from None
    chosen = [m for m in (args.metrics or "").split(",") if m.strip()] or None
    report.render_learning_curve_svg(curve, chosen, args.out, title=args.title)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqcpm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixed-size", help="a-priori minimum sample size")
    p.add_argument("--prevalence", type=float, required=True)
    p.add_argument("--cstat", type=float)
    p.add_argument("--r2cs", type=float, help="anticipated Cox-Snell R2 instead of --cstat")
    p.add_argument("--parameters", type=int, required=True)
    p.add_argument("--shrinkage", type=float, default=0.9)
    p.add_argument("--optimism", type=float, default=0.05)
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--mc-draws", type=int, default=MC_DRAWS)
    p.add_argument("--mc-seed", type=int, default=MC_SEED)
    p.set_defaults(func=_fixed_size)

    p = sub.add_parser("generate", help="write a synthetic cohort CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--prevalence", type=float, default=0.173)
    p.add_argument("--cstat", type=float, default=0.67)
    p.add_argument("--p", type=int, default=6)
    p.add_argument("--out", default="/dev/stdout")
    p.set_defaults(func=_generate)

    p = sub.add_parser("run", help="replay recruitment and build learning curves")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--stop-early", action="store_true")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a dotted configuration key; repeatable")
    p.set_defaults(func=_run)

    p = sub.add_parser("plot", help="render a learning-curve CSV as SVG")
    p.add_argument("--curve", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics", help="comma-separated metric names")
    p.add_argument("--title", default="")
    p.set_defaults(func=_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
