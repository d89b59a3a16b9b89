"""Command-line harness: ``secondorder run | verify | sweep``."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from . import bounds as bd
from . import runner
from .core import InputError
from .prod import ValidityError
from .translation import TranslationRule

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2
OUT_ENV = "SECONDORDER_OUT"


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{text} is not positive")
    return v


def _csv_list(conv):
    def parse(text):
        try:
            return [conv(v) for v in text.split(",") if v.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def _add_common(p):
    p.add_argument("--algo", choices=runner.ALGORITHMS)
    p.add_argument("--eta", type=_positive, help="fixed learning rate (prod, wm)")
    p.add_argument("--bound-m", type=_positive, help="payoff magnitude bound M (prod, prod-q)")
    p.add_argument("--bound-q", type=_positive, help="quadratic bound Q (prod, prod-m)")
    p.add_argument("--range-e", type=_positive, help="known range bound E (wm)")
    p.add_argument("--translate", default="none", choices=[r.value for r in TranslationRule])
    p.add_argument("--gen", help="generator, e.g. 'outlier:M=1,spike=40,rate=0.01'")
    p.add_argument("--input", help="payoff CSV with header t,x_1,...,x_N")
    p.add_argument("--experts", type=int, default=4)
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bounds", type=_csv_list(str), help="comma-separated bound ids, default all compatible")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")


def build_parser():
    parser = argparse.ArgumentParser(prog="secondorder", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one forecaster and write a trace and a summary")
    _add_common(run)
    run.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)

    ver = sub.add_parser("verify", help="check bounds; without --algo runs the default catalog")
    _add_common(ver)
    ver.add_argument("--corrupt", action="store_true", help="inject a reward deficit (failure path)")

    sw = sub.add_parser("sweep", help="grid over N, n, M and seeds; one CSV row per cell")
    _add_common(sw)
    sw.add_argument("--experts-list", type=_csv_list(int), default=[2, 4, 8])
    sw.add_argument("--rounds-list", type=_csv_list(int), default=[10, 100, 1000])
    sw.add_argument("--magnitudes", type=_csv_list(float), default=[1.0])
    sw.add_argument("--seeds", type=_csv_list(int), default=[0, 1])
    sw.add_argument("--jobs", type=int, default=1)
    return parser


def _out_dir(args):
    return args.out or os.environ.get(OUT_ENV) or "out"


def _config(args, **overrides) -> runner.RunConfig:
    cfg = runner.RunConfig(
        algo=args.algo or "prod-mq",
        eta=args.eta,
        bound_m=args.bound_m,
        bound_q=args.bound_q,
        range_e=args.range_e,
        translate=args.translate,
        gen=args.gen if args.input is None else None,
        input=args.input,
        experts=args.experts,
        rounds=args.rounds,
        seed=args.seed,
        bounds=args.bounds,
        corrupt=getattr(args, "corrupt", False),
    )
    if cfg.gen is None and cfg.input is None:
        cfg.gen = "uniform_signed"
    return replace(cfg, **overrides)


def _table(reports, label=""):
    lines = []
    for r in reports:
        status = "ok" if r.holds else "VIOLATED"
        who = "" if r.expert is None else f" k={r.expert + 1}"
        lines.append(
            f"{label}{r.bound_id:<4}{who:<6} bound={r.bound_value:<24.17g} "
            f"measured={r.measured:<24.17g} slack={r.slack:<24.17g} {status}"
        )
    return "\n".join(lines)


def cmd_run(args) -> int:
    run = runner.execute(_config(args))
    reports = runner.check(run, run.config.bounds)
    trace, summ = runner.write_outputs(run, _out_dir(args))
    print(f"wrote {trace} and {summ}")
    if reports:
        print(_table(reports))
    return EXIT_OK if all(r.holds for r in reports) else EXIT_VIOLATION


def cmd_verify(args) -> int:
    if args.algo is None and args.input is None and args.gen is None:
        plan = [(replace(cfg, corrupt=args.corrupt), ids) for cfg, ids in runner.default_catalog()]
    else:
        plan = [(_config(args), args.bounds)]
    failed = []
    for cfg, ids in plan:
        run = runner.execute(cfg)
        reports = runner.check(run, ids)
        label = f"{cfg.algo:<8}{cfg.translate:<7}{cfg.gen or cfg.input} N={cfg.experts} n={cfg.rounds} seed={cfg.seed}  "
        print(_table(reports, label))
        failed += [(label, r) for r in reports if not r.holds]
    if failed:
        for label, r in failed:
            print(f"violation: {r.bound_id} slack={r.slack!r} ({label.strip()})", file=sys.stderr)
        return EXIT_VIOLATION
    print(f"all {sum(1 for _ in plan)} runs passed")
    return EXIT_OK


def sweep_cell(cfg: runner.RunConfig, magnitude: float) -> dict:
    run = runner.execute(cfg)
    reports = runner.check(run, cfg.bounds)
    stats = run.stats
    row = {
        "algo": cfg.algo,
        "translate": cfg.translate,
        "gen": cfg.gen,
        "N": cfg.experts,
        "n": cfg.rounds,
        "M": magnitude,
        "seed": cfg.seed,
        "params": ";".join(f"{k}={v!r}" for k, v in sorted(run.params.items())),
        "regret": stats.regret,
        "b3_leading": bd.b3_leading(stats),
        "first_order_leading": bd.first_order_leading(stats, run.generator.declared_magnitude),
    }
    for r in reports:
        row[f"slack_{r.bound_id}"] = r.slack
    row["holds"] = "true" if all(r.holds for r in reports) else "false"
    return row


def _cell(args):
    return sweep_cell(*args)


def cmd_sweep(args) -> int:
    base_gen = args.gen or "uniform_signed"
    if args.input is not None:
        raise InputError("sweep draws its sequences from --gen, not --input")
    cells = []
    for N in args.experts_list:
        for n in args.rounds_list:
            for M in args.magnitudes:
                for seed in args.seeds:
                    gen = _gen_with_magnitude(base_gen, M)
                    cells.append((_config(args, experts=N, rounds=n, seed=seed, gen=gen), M))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_cell, cells))
    else:
        rows = [_cell(c) for c in cells]
    columns = list(dict.fromkeys(k for row in rows for k in row))
    body = [columns] + [[_cell_text(row.get(c)) for c in columns] for row in rows]
    path = os.path.join(_out_dir(args), "sweep.csv")
    runner.atomic_write(path, runner.csv_text(body))
    print(f"wrote {len(rows)} rows to {path}")
    return EXIT_OK if all(row["holds"] == "true" for row in rows) else EXIT_VIOLATION


def _cell_text(v) -> str:
    return v if isinstance(v, str) else runner.fmt(v)


def _gen_with_magnitude(text: str, magnitude: float) -> str:
    kind, _, rest = text.partition(":")
    items = [s for s in rest.split(",") if s.strip() and s.split("=")[0].strip() not in ("M", "m", "magnitude")]
    items.append(f"magnitude={magnitude!r}")
    return f"{kind}:{','.join(items)}"


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, bd.ConfigError, ValidityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
