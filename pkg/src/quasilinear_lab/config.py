"""Human-readable ``key = value`` configuration files.

Lines are ``key = value``; ``#`` and ``;`` start comments; lists are comma
separated.  The boundary key accepts ``periodic``, ``channel`` or explicit
pairs such as ``periodic:periodic, no_slip:pure_slip``.
"""

from __future__ import annotations

import configparser
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .grid import BC_TAGS, PERIODIC, GridSpec

_SECTION = "main"


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x.strip()]


def _opt_float(s: str) -> float | None:
    return None if s.strip().lower() in ("", "default", "none") else float(s)


SCHEMA: dict[str, Any] = {
    # fluid problem
    "dim": int, "n_cells": _ints, "lengths": _floats, "bc": str, "p": float,
    "mu_inf": float, "eta": float, "alpha": _opt_float, "rho": float,
    "dt": float, "t_final": float, "projection_tol": float, "linear_tol": float,
    "picard_iters": int, "blowup_threshold": float, "seed": int, "initial": str,
    # limit / data studies
    "study": str, "eta_sequence": _floats, "deltas": _floats, "floor": str,
    # mms
    "n_levels": _ints, "dt_space": float, "t_space": float, "n_time": int, "dt_levels": _floats,
    # blow-up
    "n_values": _ints, "tail": _ints, "t_max": float,
    # dependence
    "u0": float, "etas": _floats, "eps": _floats,
    # maxreg
    "a": float, "interval": _floats, "n_probes": int, "t_grid": _floats, "u_samples": int,
    "seeds": _ints,
}


def parse_config(text: str) -> dict[str, Any]:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    out: dict[str, Any] = {}
    for key, raw in cp[_SECTION].items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            out[key] = SCHEMA[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    return out


def load_config(path) -> dict[str, Any]:
    try:
        return parse_config(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"configuration file {path} not found") from exc


def parse_bc(text: str, dim: int) -> tuple[tuple[str, str], ...]:
    t = text.strip().lower()
    if t == "periodic":
        return ((PERIODIC, PERIODIC),) * dim
    if t == "channel":
        return GridSpec.channel(dim, 4).bc
    pairs = []
    for item in t.split(","):
        lo, _, hi = item.strip().partition(":")
        if lo not in BC_TAGS or hi not in BC_TAGS:
            raise ConfigError(f"bad boundary pair {item!r}")
        pairs.append((lo, hi))
    if len(pairs) != dim:
        raise ConfigError(f"need {dim} boundary pairs, got {len(pairs)}")
    return tuple(pairs)


def grid_from_config(cfg: dict[str, Any], defaults: dict[str, Any] | None = None) -> GridSpec:
    c = {**(defaults or {}), **cfg}
    dim = c.get("dim", 2)
    n = c.get("n_cells", [32])
    n = n * dim if len(n) == 1 else n
    lengths = c.get("lengths", [6.283185307179586])
    lengths = lengths * dim if len(lengths) == 1 else lengths
    bc = parse_bc(c.get("bc", "periodic"), dim)
    return GridSpec(dim, tuple(n), tuple(lengths), bc, c.get("p", float("nan")))
