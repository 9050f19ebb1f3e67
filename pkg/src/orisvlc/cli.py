"""Command line entry point: ``orisvlc <subcommand> [options]``."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import replace

from . import __version__
from . import config as cfgmod
from .allocation import algorithm1, allocation_record, no_oris_baseline, solve_single_shot
from .channel import compute_channel, dump_channel_csv, snr_db_conversions
from .geometry import build_scene
from .montecarlo import (ExperimentPlan, default_plan, element_area, run_campaign, sample_trial,
                         trial_rng)
from .plots import PlotError, render

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG_PARSE = 3
EXIT_SCHEMA = 4
EXIT_IO = 5
EXIT_SOLVER = 6
EXIT_PLOT = 7

SUBCOMMANDS = ("solve", "fig1", "fig2", "fig3", "fig4", "dump-channel", "validate-config", "plot")

# rough single-core cost of one trial, used only for the manifest's runtime note
_SECONDS_PER_TRIAL = {(15, 2): 0.06, (30, 5): 0.35, (90, 20): 2.0}


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _parse_grid(text: str):
    try:
        cols, rows = text.lower().split("x")
        return (int(cols), int(rows))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 30x5, got {text!r}") from None


def _parse_int_list(text: str):
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return tuple(out)


def _parse_float_list(text: str):
    vals = tuple(float(p) for p in text.split(",") if p.strip())
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orisvlc", description=__doc__)
    p.add_argument("--version", action="version", version=f"orisvlc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="run configuration (JSON); shipped default if omitted")
        sp.add_argument("--out", help="output directory (campaigns) or file")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--oris-grid", type=lambda s: tuple(_parse_grid(g) for g in s.split(",")),
                        help="ORIS grid(s) per wall, e.g. 30x5 or 15x2,30x5")
        return sp

    s = common(sub.add_parser("solve", help="solve one random deployment and print the allocation"))
    s.add_argument("--users", type=int, default=5)
    s.add_argument("--gamma-th-db", type=float, default=35.0)

    for name in ("fig1", "fig2", "fig3", "fig4"):
        f = common(sub.add_parser(name, help=f"run the {name} campaign"))
        f.add_argument("--trials", type=int)
        f.add_argument("--workers", type=int)
        f.add_argument("--users", type=_parse_int_list, help="user counts, e.g. 1-9 or 1,5,9")
        f.add_argument("--gamma-th-db", type=_parse_float_list, help="thresholds, e.g. 5,20,35")

    d = common(sub.add_parser("dump-channel", help="write gain tensors and coefficients as CSV"))
    d.add_argument("--users", type=int, default=5)

    v = sub.add_parser("validate-config", help="check a configuration document")
    v.add_argument("--config")
    v.add_argument("--print", action="store_true", help="echo the canonical form")

    pl = sub.add_parser("plot", help="render an SVG from a campaign CSV")
    pl.add_argument("csv")
    pl.add_argument("--out", help="SVG path (default: next to the CSV)")
    return p


def _load_config(path):
    try:
        if path is None:
            return cfgmod.default_config()
        return cfgmod.load(path)
    except cfgmod.ConfigParseError as exc:
        raise CliError(EXIT_CONFIG_PARSE, f"config parse error: {exc}") from None
    except cfgmod.SchemaViolation as exc:
        raise CliError(EXIT_SCHEMA, f"config schema violation: {exc}") from None
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read config: {exc}") from None


def _write(path, text):
    try:
        d = os.path.dirname(os.path.abspath(path))
        os.makedirs(d, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from None


def _scene_for(cfg, args):
    scene_cfg = cfg.scene
    if getattr(args, "oris_grid", None):
        scene_cfg = replace(scene_cfg, oris_grid=args.oris_grid[0])
    seed = args.seed if args.seed is not None else cfg.experiment.master_seed
    if args.users < 1:
        raise CliError(EXIT_USAGE, "--users must be at least 1")
    users = sample_trial(trial_rng(seed, 0, 0), args.users, scene_cfg)
    return build_scene(scene_cfg, users), seed


def cmd_solve(args, out):
    cfg = _load_config(args.config)
    scene, seed = _scene_for(cfg, args)
    _, coeffs = compute_channel(scene, cfg.radio)
    _, th_prime = snr_db_conversions(args.gamma_th_db)
    if not th_prime > 0:
        raise CliError(EXIT_USAGE, "--gamma-th-db must be finite")
    single = solve_single_shot(coeffs, config=cfg.solver)
    if single.status not in ("optimal", "node-limit"):
        raise CliError(EXIT_SOLVER, f"solver failed: {single.status}")
    result = {
        "seed": seed,
        "gamma_th_db": args.gamma_th_db,
        "oris_grid": list(scene.oris_grid),
        "users": [{"body_center_xy": list(u.body_center_xy), "device_angle": u.device_angle,
                   "pd_position": list(u.pd_position)} for u in scene.users],
        "no_oris": allocation_record(no_oris_baseline(coeffs), th_prime),
        "single_shot": allocation_record(single, th_prime),
        "algorithm1": allocation_record(algorithm1(coeffs, th_prime, cfg.solver), th_prime),
    }
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.out:
        _write(args.out, text)
    else:
        out.write(text)
    return EXIT_OK


def plan_from_args(name, cfg, args) -> ExperimentPlan:
    e = cfg.experiment
    overrides = dict(
        trials=args.trials if args.trials is not None else e.trials,
        trials_by_grid=e.trials_by_grid,
        master_seed=args.seed if args.seed is not None else e.master_seed,
        scene=cfg.scene,
        radio=cfg.radio,
        solver=cfg.campaign_solver(),
    )
    if args.trials is not None:
        overrides["trials_by_grid"] = ()  # an explicit count applies to every grid
    if args.users:
        overrides["users"] = args.users
    if args.gamma_th_db:
        if name == "fig1":
            raise CliError(EXIT_USAGE, "fig1 draws its thresholds per trial")
        overrides["thresholds_db"] = args.gamma_th_db
    if args.oris_grid:
        overrides["grids"] = args.oris_grid
    elif name != "fig4":
        overrides["grids"] = (cfg.scene.oris_grid,)
    try:
        return default_plan(name, **overrides)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None


def manifest(name, cfg, plan: ExperimentPlan, workers, csv_text) -> dict:
    points = []
    est = 0.0
    for grid in plan.grids:
        n = plan.trials_for(grid)
        points.append({"oris_grid": list(grid), "trials": n,
                       "element_area_m2": element_area(plan.scene, grid)})
        est += n * len(plan.users) * _SECONDS_PER_TRIAL.get(tuple(grid), 0.5)
    return {
        "experiment": name,
        "package_version": __version__,
        "master_seed": plan.master_seed,
        "workers": workers,
        "users": list(plan.users),
        "gamma_th_db": list(plan.thresholds_db) if plan.thresholds_db else
        {"uniform_db": list(plan.fig1_range_db)},
        "grids": points,
        "campaign_node_limit": plan.solver.node_limit,
        "expected_runtime_single_core_s": round(est, 1),
        "config": cfgmod.to_dict(replace(cfg, experiment=replace(
            cfg.experiment, master_seed=plan.master_seed))),
        "csv_sha256": hashlib.sha256(csv_text.encode()).hexdigest(),
        "reproduce": f"orisvlc {name} --config manifest-config.json --seed {plan.master_seed}",
    }


def cmd_campaign(name, args, out):
    cfg = _load_config(args.config)
    plan = plan_from_args(name, cfg, args)
    workers = args.workers if args.workers is not None else cfg.experiment.workers
    if workers < 1:
        raise CliError(EXIT_USAGE, "--workers must be at least 1")
    out_dir = args.out or cfg.experiment.output_dir
    csv_text = run_campaign(plan, workers)
    svg = render(csv_text)
    man = manifest(name, cfg, plan, workers, csv_text)
    _write(os.path.join(out_dir, f"{name}.csv"), csv_text)
    _write(os.path.join(out_dir, f"{name}.svg"), svg)
    _write(os.path.join(out_dir, f"{name}_manifest.json"), json.dumps(man, indent=2, sort_keys=True) + "\n")
    _write(os.path.join(out_dir, "manifest-config.json"), cfgmod.dumps(replace(
        cfg, experiment=replace(cfg.experiment, master_seed=plan.master_seed))))
    out.write(f"wrote {os.path.join(out_dir, name + '.csv')}\n")
    return EXIT_OK


def cmd_dump_channel(args, out):
    cfg = _load_config(args.config)
    scene, _ = _scene_for(cfg, args)
    blockage, coeffs = compute_channel(scene, cfg.radio)
    text = dump_channel_csv(scene, blockage, coeffs, cfg.radio)
    if args.out:
        _write(args.out, text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_validate(args, out):
    cfg = _load_config(args.config)
    out.write(cfgmod.dumps(cfg) if args.print else "config OK\n")
    return EXIT_OK


def cmd_plot(args, out):
    try:
        with open(args.csv, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {args.csv}: {exc}") from None
    try:
        svg = render(text)
    except PlotError as exc:
        raise CliError(EXIT_PLOT, f"cannot plot: {exc}") from None
    path = args.out or os.path.splitext(args.csv)[0] + ".svg"
    _write(path, svg)
    out.write(f"wrote {path}\n")
    return EXIT_OK


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return int(exc.code or 0)
    try:
        if args.command == "solve":
            return cmd_solve(args, out)
        if args.command in ("fig1", "fig2", "fig3", "fig4"):
            return cmd_campaign(args.command, args, out)
        if args.command == "dump-channel":
            return cmd_dump_channel(args, out)
        if args.command == "validate-config":
            return cmd_validate(args, out)
        return cmd_plot(args, out)
    except CliError as exc:
        err.write(f"orisvlc: {exc}\n")
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
