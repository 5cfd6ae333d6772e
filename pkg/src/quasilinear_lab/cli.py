"""Command line entry point: ``qlab {mms,limit,depend,blowup,maxreg}``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Sequence

import numpy as np

from .carreau import ViscosityLaw
from .config import grid_from_config, load_config
from .errors import ConfigError, LabError
from .grid import taylor_green
from .harness import (DATA, VISCOSITY, DependenceConfig, LimitStudyConfig, MatrixFamily, MaxRegStudyConfig,
                      MMSConfig, StudyReport, riccati_blowup_config, run_blowup_study, run_dependence_study,
                      run_limit_study, run_maxreg_study, run_mms_verification, write_report)

log = logging.getLogger("quasilinear_lab")


def _law(cfg: dict[str, Any]) -> ViscosityLaw:
    return ViscosityLaw(cfg.get("mu_inf", 1.0), cfg.get("eta", 0.0), cfg.get("alpha"), cfg.get("rho", 1.0))


def cmd_mms(cfg: dict[str, Any], seed: int) -> StudyReport:
    kw = {k: cfg[k] for k in ("mu_inf", "rho", "p", "n_levels", "dt_space", "t_space", "n_time",
                              "dt_levels", "projection_tol", "linear_tol") if k in cfg}
    if "t_final" in cfg:
        kw["t_time"] = cfg["t_final"]
    return run_mms_verification(MMSConfig(**kw))


def _datum(cfg: dict[str, Any], seed: int):
    kind = cfg.get("initial", "taylor_green").lower()
    if kind == "taylor_green":
        return taylor_green
    if kind == "random":
        from .carreau import random_velocity

        return lambda g: random_velocity(g, np.random.default_rng([seed, 2]))
    raise ConfigError(f"unknown initial datum {kind!r} (taylor_green | random)")


def _limit_config(cfg: dict[str, Any], seed: int, study: str) -> LimitStudyConfig:
    grid = grid_from_config(cfg, {"dim": 2, "n_cells": [32], "p": 5.0})
    law = _law(cfg)
    if study == VISCOSITY:
        etas = cfg.get("eta_sequence", [2.0 ** -n for n in range(9)])
        deltas = cfg.get("deltas")
    else:
        deltas = cfg.get("deltas", [1e-1, 1e-2, 1e-3, 1e-4])
        etas = cfg.get("eta_sequence", [cfg.get("eta", 0.0)] * len(deltas))
    return LimitStudyConfig(grid, law, etas, cfg.get("dt", 2.5e-3), cfg.get("t_final", 0.5), deltas,
                            datum=_datum(cfg, seed), study=study, reference_eta=cfg.get("eta", 0.0) if study == DATA else 0.0,
                            projection_tol=cfg.get("projection_tol", 1e-10),
                            linear_tol=cfg.get("linear_tol", 1e-10),
                            estimate_floor=cfg.get("floor", "yes").lower() in ("yes", "true", "1"), seed=seed)


def cmd_limit(cfg: dict[str, Any], seed: int) -> StudyReport:
    study = cfg.get("study", VISCOSITY).lower()
    return run_limit_study(_limit_config(cfg, seed, study))


def cmd_depend(cfg: dict[str, Any], seed: int) -> StudyReport:
    u0 = cfg.get("u0", 0.5)
    fam = MatrixFamily(lambda t, u: 1.0 + u[0] ** 2, np.array([u0]), radius=1.0,
                       lipschitz_L=2.0 * (abs(u0) + 1.0))
    deltas = cfg.get("deltas", [])
    etas = cfg.get("etas", [])
    eps = cfg.get("eps", [])
    if not (deltas or etas or eps):
        deltas = [1e-1, 1e-2, 1e-3, 1e-4]
    return run_dependence_study(DependenceConfig(fam, deltas, etas, eps, cfg.get("t_final", 1.0),
                                                 cfg.get("dt", 1e-3), cfg.get("p", 2.0), seed=seed))


def cmd_blowup(cfg: dict[str, Any], seed: int) -> StudyReport:
    kw = {}
    if "n_values" in cfg:
        kw["n_values"] = cfg["n_values"]
    if "tail" in cfg:
        kw["tail"] = cfg["tail"]
    return run_blowup_study(riccati_blowup_config(dt=cfg.get("dt", 1e-4), T_max=cfg.get("t_max", 2.0), **kw))


def cmd_maxreg(cfg: dict[str, Any], seed: int) -> StudyReport:
    kw = {k: cfg[k] for k in ("a", "n_probes", "u_samples", "seeds") if k in cfg}
    if "interval" in cfg:
        kw["interval"] = tuple(cfg["interval"])
    if "t_grid" in cfg:
        kw["T_grid"] = cfg["t_grid"]
    return run_maxreg_study(MaxRegStudyConfig(p=cfg.get("p", 2.0), seed=seed, **kw))


COMMANDS = {"mms": cmd_mms, "limit": cmd_limit, "depend": cmd_depend, "blowup": cmd_blowup, "maxreg": cmd_maxreg}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qlab", description="Quasilinear evolution laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--out", help="output base path; writes <out>.csv and <out>.json")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None, help="numba worker threads")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    if args.threads is not None:
        import numba

        numba.set_num_threads(max(1, min(args.threads, numba.config.NUMBA_NUM_THREADS)))
    try:
        cfg = load_config(args.config) if args.config else {}
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        report = COMMANDS[args.command](cfg, seed)
    except LabError as exc:
        log.error("error: %s", exc)
        return 2
    for line in report.summary_lines():
        log.info(line)
    if args.out:
        echo = {**cfg, "seed": seed, "command": args.command}
        csv_path, json_path = write_report(report, args.out, echo)
        log.info("wrote %s and %s", csv_path, json_path)
    else:
        sys.stdout.write(report.csv_text())
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
