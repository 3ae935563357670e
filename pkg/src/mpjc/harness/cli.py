"""Command-line entry point ``mpjc``.

Exit codes: 0 success, 2 configuration error, 3 leakage gate, 4 solver
failure, 5 validation failures present.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..dynamics import LINDBLAD_ATOL, LINDBLAD_RTOL
from ..errors import ConfigError, CutoffTooSmallError, SolverError
from ..states import MAX_CUTOFF, leakage, select_cutoff
from .config import load_config, parse_mode
from .csvio import trajectory_columns, write_csv
from .figures import ALIASES, figure_ids, run_figure
from .runner import run, with_overrides
from .validation import validate

EXIT_OK, EXIT_CONFIG, EXIT_LEAKAGE, EXIT_SOLVER, EXIT_VALIDATION = 0, 2, 3, 4, 5


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    p.add_argument("--points", type=int, help="override the number of time points")
    p.add_argument("--eps", type=float, help="override the leakage tolerance")
    p.add_argument("--allow-leakage", action="store_true",
                   help="write datasets even when leakage reaches eps")
    p.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpjc", description="Multiphoton Jaynes-Cummings toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("evolve", "single trajectory"),
                       ("lindblad", "open-system trajectory"),
                       ("sweep", "first-peak statistics over the config's sweep axes")):
        _common(sub.add_parser(name, help=text))
    fig = sub.add_parser("figure", help="datasets for one figure")
    fig.add_argument("id", help=f"one of {', '.join(figure_ids() + sorted(ALIASES))}")
    _common(fig)
    val = sub.add_parser("validate", help="run the validation suite and print a JSON report")
    val.add_argument("--group", action="append", help="restrict to a check group (repeatable)")
    val.add_argument("--check", action="append", help="restrict to a check name (repeatable)")
    _common(val)
    cut = sub.add_parser("cutoff", help="smallest cutoff whose leakage is below eps")
    cut.add_argument("--state", required=True,
                     help="mode state as JSON, e.g. '{\"kind\": \"coherent\", \"nbar\": 2}'")
    _common(cut)
    return parser


def _load(args, force_lindblad=False):
    if not args.config:
        raise ConfigError(f"{args.command} needs --config")
    cfg = load_config(args.config)
    return with_overrides(cfg, args.points, args.eps, force_lindblad)


def _target(cfg, args) -> Path:
    """The config's ``output`` path (relative to ``--out``), else ``<label or command>.csv``."""
    if cfg.output:
        return Path(args.out) / cfg.output
    return Path(args.out) / f"{cfg.label or args.command}.csv"


def _cmd_trajectory(args, force_lindblad: bool) -> int:
    cfg = _load(args, force_lindblad)
    if cfg.sweep:
        raise ConfigError("config has sweep axes; use the 'sweep' command")
    traj = run(cfg, args.allow_leakage, args.threads)
    cols = {"t": traj.times, **trajectory_columns(traj)}
    meta = {"artifact_version": __version__, **traj.provenance}
    if cfg.open_system:
        meta["lindblad_tolerances"] = {"rtol": LINDBLAD_RTOL, "atol": LINDBLAD_ATOL}
    path = write_csv(_target(cfg, args), cols, meta)
    print(path)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    if not cfg.sweep:
        raise ConfigError("sweep needs a non-empty 'sweep' section")
    table = run(cfg, args.allow_leakage, args.threads)
    names = [k for k in table.rows[0] if k != "cutoffs"]
    cols = {k: np.array([r[k] for r in table.rows]) for k in names}
    meta = {"artifact_version": __version__, **table.provenance,
            "cutoffs": [r["cutoffs"] for r in table.rows]}
    path = write_csv(_target(cfg, args), cols, meta)
    print(path)
    return EXIT_OK


def _cmd_figure(args) -> int:
    if args.config:
        raise ConfigError("figure takes its parameters from the manifest; --config is not used")
    for path in run_figure(args.id, args.out, args.threads, args.allow_leakage, args.points, args.eps):
        print(path)
    return EXIT_OK


def _cmd_validate(args) -> int:
    report = validate(args.group, args.check)
    print(report.to_json())
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _cmd_cutoff(args) -> int:
    try:
        spec = json.loads(args.state)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--state is not valid JSON: {exc}") from exc
    prep = parse_mode(spec, "state")
    eps = 1e-8 if args.eps is None else args.eps
    n = select_cutoff(prep, eps, MAX_CUTOFF)
    print(json.dumps({"state": spec, "eps": eps, "cutoff": n, "leakage": leakage(prep, n)}))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "evolve": lambda: _cmd_trajectory(args, False),
        "lindblad": lambda: _cmd_trajectory(args, True),
        "sweep": lambda: _cmd_sweep(args),
        "figure": lambda: _cmd_figure(args),
        "validate": lambda: _cmd_validate(args),
        "cutoff": lambda: _cmd_cutoff(args),
    }
    try:
        return handlers[args.command]()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CutoffTooSmallError as exc:
        print(f"leakage gate: {exc}", file=sys.stderr)
        return EXIT_LEAKAGE
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
