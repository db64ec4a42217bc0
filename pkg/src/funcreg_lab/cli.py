"""Command-line harness.

Subcommands: gen (emit datasets), train (single run), sweep (axis sweep with
CSV and figure output), bounds (sample-complexity calculators), pacmc (Monte
Carlo verification on finite worlds), embed (functional-space analysis).
Exit codes: 0 success, 1 failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__, bounds as bounds_mod, pacmc
from .expconfig import ConfigError, load_config
from .models import save_model
from .numkit import RngStream
from .sweep import (build_world, emit_functional, emit_sweep,
                    run_functional_analysis, run_sweep, _schema_header,
                    _train_config)
from .synthgen import atomic_write_text, write_dataset_csv
from .trainer import END_TO_END, FUNC_REG, train_end_to_end, train_func_reg


def _add_common(p, config_required=False):
    p.add_argument("--config", required=config_required,
                   help="experiment config file (key = value grammar)")
    p.add_argument("--seed", type=int, default=None, help="override master seed")
    p.add_argument("--out", default=None, help="override output directory")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker processes (default: available CPUs)")


def _load(args, config_required=False):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = type(cfg)(**{**cfg.__dict__, "seed": args.seed})
    if args.out is not None:
        cfg = type(cfg)(**{**cfg.__dict__, "out_dir": args.out})
    return cfg


def _jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    return max(1, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# subcommands

def cmd_gen(args) -> int:
    cfg = _load(args)
    spec, unlabeled, labeled, test = build_world(
        cfg, cfg.d, cfg.r, cfg.seed, max(cfg.labeled_sweep))
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_dataset_csv(unlabeled, os.path.join(cfg.out_dir, "unlabeled.csv"))
    write_dataset_csv(labeled, os.path.join(cfg.out_dir, "labeled.csv"))
    write_dataset_csv(test, os.path.join(cfg.out_dir, "test.csv"))
    print(f"out={cfg.out_dir} unlabeled={len(unlabeled)} labeled={len(labeled)} "
          f"test={len(test)}")
    return 0


def cmd_train(args) -> int:
    cfg = _load(args)
    spec, unlabeled, labeled, test = build_world(
        cfg, cfg.d, cfg.r, cfg.seed, max(cfg.labeled_sweep))
    tconf = _train_config(cfg, args.method, cfg.seed)
    if args.method == FUNC_REG:
        result = train_func_reg(cfg.world_kind, unlabeled, labeled, tconf,
                                cfg.d, cfg.r, test=test)
    else:
        from .sweep import _model_kind

        result = train_end_to_end(labeled, tconf, cfg.d, cfg.r,
                                  kind=_model_kind(cfg), test=test)
    if result.diverged or result.h is None:
        print("error: every learning-rate grid point diverged", file=sys.stderr)
        return 1
    os.makedirs(cfg.out_dir, exist_ok=True)
    save_model(os.path.join(cfg.out_dir, "model.csv"), result.h, result.f)
    pre = "" if result.pretrain_reg_loss is None else f"{result.pretrain_reg_loss:.17g}"
    lines = [_schema_header("train"),
             "method,trainMSE,testMSE,pretrainRegLoss,chosenLr,seed",
             f"{args.method},{result.train_loss:.17g},{result.test_loss:.17g},"
             f"{pre},{result.chosen_lr:.17g},{cfg.seed}"]
    atomic_write_text(os.path.join(cfg.out_dir, "result.csv"), "\n".join(lines) + "\n")
    print(f"method={args.method} trainMSE={result.train_loss:.6g} "
          f"testMSE={result.test_loss:.6g} chosenLr={result.chosen_lr:g}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    result = run_sweep(cfg, jobs=_jobs(args))
    emit_sweep(result, cfg.out_dir, make_figures=not args.no_figures)
    for row in result.rows:
        print(f"axis={row.axis} value={row.axis_value} method={row.method} "
              f"meanTestMSE={row.mean_test_mse:.6g} runs={row.runs}")
    for red in result.reductions:
        print(f"axis={red.axis} value={red.axis_value} reduction={red.reduction:.6g}")
    print(f"out={cfg.out_dir}")
    return 0


def cmd_embed(args) -> int:
    cfg = _load(args)
    from .funcspace import EmbedConfig

    embed_cfg = EmbedConfig(method=args.embed_method,
                            perplexity=args.perplexity,
                            iterations=args.iterations,
                            learning_rate=args.learning_rate,
                            seed=cfg.seed)
    analysis = run_functional_analysis(cfg, embed_cfg, jobs=_jobs(args))
    emit_functional(analysis, cfg.out_dir)
    for tag in sorted(analysis.dispersions):
        print(f"tag={tag} dispersion={analysis.dispersions[tag]:.6g}")
    ratio = analysis.dispersions[FUNC_REG] / analysis.dispersions[END_TO_END]
    print(f"dispersionRatio={ratio:.6g}")
    print(f"out={cfg.out_dir}")
    return 0


def cmd_bounds(args) -> int:
    if args.example is not None:
        kind = ("auto_encoder" if args.example in ("ae", "auto_encoder")
                else "masked")
        if args.rmax is not None:
            table = bounds_mod.reduction_vs_r(kind, args.d, args.eps, args.C,
                                              args.rmax)
        else:
            table = [(args.r, bounds_mod.example_reduction(kind, args.d, args.r,
                                                           args.eps, args.C))]
        print("r,reduction")
        for r, value in table:
            print(f"{r},{value:.17g}")
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            lines = [_schema_header("example-reduction"), "r,reduction"]
            lines += [f"{r},{v:.17g}" for r, v in table]
            atomic_write_text(os.path.join(args.out, "example_reduction.csv"),
                              "\n".join(lines) + "\n")
        return 0
    if args.variant is None or args.eps0 is None or args.eps1 is None \
            or args.delta is None:
        raise ValueError("bounds needs --variant/--eps0/--eps1/--delta "
                         "(or --example for the worked-example reduction)")
    query = bounds_mod.BoundQuery(
        variant=args.variant,
        eps0=args.eps0, eps1=args.eps1, delta=args.delta,
        eps_r=args.epsR, eps_c=args.epsC,
        ln_h=args.lnH, ln_f=args.lnF, ln_g=args.lnG, ln_h_tau=args.lnHtau,
        ln_n_g=args.lnNG, ln_n_h=args.lnNH, ln_n_f=args.lnNF,
        ln_n_h_pruned=args.lnNHpruned,
        vc_gh=args.vcGH, vc_fh_pruned=args.vcFHpruned, vc_fh=args.vcFH,
        C=args.C, L=args.L)
    res = bounds_mod.compute_bounds(query)
    print(f"variant={res.variant}")
    print(f"mU={res.m_u}")
    print(f"mL={res.m_l}")
    print(f"mUraw={res.m_u_raw:.17g}")
    print(f"mLraw={res.m_l_raw:.17g}")
    print(f"reduction={res.reduction:.17g}")
    print(f"errorBound={res.error_bound:.17g}")
    for name, value in sorted(res.radii.items()):
        print(f"radius.{name}={value:.17g}")
    if res.pruning_threshold is not None:
        print(f"pruningThreshold={res.pruning_threshold:.17g}")
    print(f"C={res.C:.17g}")
    print(f"L={res.L:.17g}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        lines = [_schema_header("bounds"), "variant,mU,mL,reduction,C,L",
                 f"{res.variant},{res.m_u},{res.m_l},{res.reduction:.17g},"
                 f"{res.C:.17g},{res.L:.17g}"]
        atomic_write_text(os.path.join(args.out, "bounds.csv"), "\n".join(lines) + "\n")
    return 0


def cmd_pacmc(args) -> int:
    worlds = []
    if args.world in ("singleton", "all"):
        worlds.append(("singleton", pacmc.singleton_world()))
    if args.world in ("coinflip", "all"):
        worlds.append(("coinflip", pacmc.coinflip_world()))
    if args.world in ("random", "all"):
        gen_rng = RngStream(args.seed)
        for i in range(args.n_random):
            worlds.append((f"random{i}",
                           pacmc.random_realizable_world(gen_rng.derive(i))))
    rows = []
    all_passed = True
    for i, (name, world) in enumerate(worlds):
        report = pacmc.verify_theorem1(
            world, args.eps0, args.eps1, args.delta, args.trials,
            RngStream(args.seed + 1000).derive(i))
        rows.append((name, report))
        all_passed &= report.passed
        print(f"world={name} violations={report.violations} trials={report.trials} "
              f"frequency={report.frequency:.6g} threshold={report.threshold:.6g} "
              f"mU={report.m_u} mL={report.m_l} pruned={report.pruned_size} "
              f"pass={str(report.passed).lower()}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        lines = [_schema_header("pacmc"),
                 "world,violations,trials,frequency,threshold,mU,mL,pruned,pass"]
        for name, rep in rows:
            lines.append(f"{name},{rep.violations},{rep.trials},"
                         f"{rep.frequency:.17g},{rep.threshold:.17g},"
                         f"{rep.m_u},{rep.m_l},{rep.pruned_size},{int(rep.passed)}")
        atomic_write_text(os.path.join(args.out, "pacmc.csv"), "\n".join(lines) + "\n")
    if not all_passed:
        print("error: at least one world exceeded the violation threshold",
              file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funcreg-lab",
        description="representation learning via functional regularization: "
                    "experiments, bound calculators, and verification")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="emit datasets for the configured world")
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="one training run")
    _add_common(p, config_required=True)
    p.add_argument("--method", choices=(END_TO_END, FUNC_REG), default=FUNC_REG)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="axis sweep comparing both pipelines")
    _add_common(p)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("embed", help="functional-space dispersion and embedding")
    _add_common(p)
    p.add_argument("--embed-method", choices=("tsne", "pca"), default="tsne")
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--learning-rate", type=float, default=200.0)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("bounds", help="sample-complexity calculators")
    p.add_argument("--variant", choices=bounds_mod.VARIANTS)
    p.add_argument("--eps0", type=float)
    p.add_argument("--eps1", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--example", choices=("ae", "auto_encoder", "masked"),
                   help="worked-example reduction (C/eps^2) ln C(d-r, r)")
    p.add_argument("--d", type=int, default=100)
    p.add_argument("--r", type=int, default=30)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--rmax", type=int, default=None,
                   help="with --example: print the full table for r=1..rmax")
    p.add_argument("--epsR", type=float, default=0.0)
    p.add_argument("--epsC", type=float, default=0.0)
    p.add_argument("--lnH", type=float, default=None)
    p.add_argument("--lnF", type=float, default=None)
    p.add_argument("--lnG", type=float, default=None)
    p.add_argument("--lnHtau", type=float, default=None)
    p.add_argument("--lnNG", type=float, default=None)
    p.add_argument("--lnNH", type=float, default=None)
    p.add_argument("--lnNF", type=float, default=None)
    p.add_argument("--lnNHpruned", type=float, default=None)
    p.add_argument("--vcGH", type=float, default=None)
    p.add_argument("--vcFHpruned", type=float, default=None)
    p.add_argument("--vcFH", type=float, default=None)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("pacmc", help="Monte Carlo verification on finite worlds")
    p.add_argument("--world", choices=("singleton", "coinflip", "random", "all"),
                   default="all")
    p.add_argument("--n-random", type=int, default=20)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--eps0", type=float, default=0.2)
    p.add_argument("--eps1", type=float, default=0.2)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pacmc)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
