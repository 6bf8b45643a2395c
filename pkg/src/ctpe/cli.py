"""Command line entry point: ``ctpe <recipe|run|sweep|stencil> ...``."""

from __future__ import annotations

import argparse
import os
import sys

from .harness import get_recipe, load_config, recipe_text, run_experiment, run_sweep
from .harness.recipes import RECIPES
from .harness.report import fmt, write_csv
from .stencil import MAX_ORDER, solve_stencil


def _apply_seeds(cfg, seeds):
    return cfg if seeds is None else cfg.replace(seeds=list(range(seeds)))


def _execute(cfg, out, workers):
    if cfg.sweep:
        run_sweep(cfg, out, workers)
    else:
        run_experiment(cfg, out, workers)
    with open(os.path.join(out, "summary.txt")) as fh:
        sys.stdout.write(fh.read())


def cmd_recipe(args) -> int:
    if args.list or args.name is None:
        for name in sorted(RECIPES):
            print(name)
        return 0
    if args.show:
        sys.stdout.write(recipe_text(args.name))
        return 0
    if args.out is None:
        raise SystemExit("ctpe recipe: --out is required to run a recipe")
    cfg = load_config(args.config) if args.config else get_recipe(args.name)
    _execute(_apply_seeds(cfg, args.seeds), args.out, args.workers)
    return 0


def cmd_run(args) -> int:
    cfg = _apply_seeds(load_config(args.config), args.seeds)
    if cfg.sweep:
        cfg = cfg.replace(sweep={})
    run_experiment(cfg, args.out, args.workers)
    with open(os.path.join(args.out, "summary.txt")) as fh:
        sys.stdout.write(fh.read())
    return 0


def cmd_sweep(args) -> int:
    cfg = _apply_seeds(load_config(args.config), args.seeds)
    if not cfg.sweep:
        raise SystemExit("ctpe sweep: the config has no [sweep] section")
    _execute(cfg, args.out, args.workers)
    return 0


def cmd_stencil(args) -> int:
    rows = []
    for order in args.orders:
        st = solve_stencil(order)
        print(f"order {order}: " + " ".join(f"{a:.12g}" for a in st.coef)
              + f"  (sum|a|={st.abs_sum:.6g}, leading moment={st.leading:.6g}, residual={st.residual:.1e})")
        rows.append({"order": str(order), **{f"a_{j}": fmt(a) for j, a in enumerate(st.coef)},
                     "abs_sum": fmt(st.abs_sum), "leading": fmt(st.leading), "residual": fmt(st.residual)})
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        cols = ["order"] + [f"a_{j}" for j in range(max(args.orders) + 1)] + ["abs_sum", "leading", "residual"]
        write_csv(os.path.join(args.out, "stencils.csv"), rows, cols)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctpe", description="High-order generator regression experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required):
        p.add_argument("--config", required=config_required, help="INI experiment config")
        p.add_argument("--out", required=False, help="output directory")
        p.add_argument("--seeds", type=int, default=None, help="override: use seeds 0..N-1")
        p.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("recipe", help="run or print a named recipe")
    p.add_argument("name", nargs="?", choices=sorted(RECIPES))
    p.add_argument("--list", action="store_true", help="list recipe names")
    p.add_argument("--show", action="store_true", help="print the recipe config")
    common(p, False)
    p.set_defaults(func=cmd_recipe)

    p = sub.add_parser("run", help="run one experiment config")
    common(p, True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a config with a [sweep] section")
    common(p, True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stencil", help="print moment-matching stencils")
    p.add_argument("--orders", type=int, nargs="+", default=[1, 2, 3], choices=range(1, MAX_ORDER + 1))
    p.add_argument("--config", help="ignored; accepted for interface uniformity")
    p.add_argument("--out", help="optional directory for stencils.csv")
    p.set_defaults(func=cmd_stencil)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command in ("run", "sweep") and not args.out:
        raise SystemExit(f"ctpe {args.command}: --out is required")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
