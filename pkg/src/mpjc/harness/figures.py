"""Figure datasets driven by the checked-in ``figures.json`` manifest.

Each panel becomes one CSV. ``series`` panels hold observables against
time, one column per observable per curve. ``peak_sweep`` panels hold
first-peak statistics against one or two parameter axes in long format.
"""
from __future__ import annotations

import copy
import itertools
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .. import __version__
from ..dynamics import LINDBLAD_ATOL, LINDBLAD_RTOL
from ..errors import ConfigError
from .config import config_from_dict, expand_values, set_path, sweep_points
from .csvio import column_name, write_csv
from .runner import parallel_map, run_point, summarize

PEAK_COLUMNS = ("L_max", "t_peak", "found", "leakage")
ALIASES = {"6": ("6a", "6b"), "7": ("7a", "7b")}


def load_manifest() -> dict:
    return json.loads(resources.files("mpjc.harness").joinpath("figures.json").read_text())


def figure_ids(manifest: dict | None = None) -> list[str]:
    return list((manifest or load_manifest())["figures"])


def _fmt(v) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def _apply(raw: dict, changes: dict):
    for path, value in changes.items():
        set_path(raw, path, copy.deepcopy(value))


@dataclass
class Curve:
    label: str
    raw: dict


@dataclass
class Panel:
    id: str
    kind: str
    curves: list[Curve]
    axes: dict
    derived: list
    assumptions: list


def _curve_groups(spec: list, groups: dict) -> list[list[tuple[str, dict]]]:
    out = []
    for g in spec:
        if isinstance(g, str):
            if g not in groups:
                raise ConfigError(f"unknown curve group {g!r}")
            out.append([(o["tag"], o["set"]) for o in groups[g]])
        else:
            out.append([(g["tag"].format(_fmt(v)), {g["path"]: v}) for v in g["values"]])
    return out


def expand_figure(fid: str, manifest: dict | None = None) -> list[Panel]:
    """Resolve a figure id into panels with one raw config per curve."""
    manifest = manifest or load_manifest()
    figs = manifest["figures"]
    if fid not in figs:
        raise ConfigError(f"unknown figure id {fid!r}; known: {sorted(figs) + sorted(ALIASES)}")
    fig = figs[fid]
    panels = []
    for spec in fig["panels"]:
        expand = spec.get("expand", {})
        names = list(expand)
        for combo in itertools.product(*(expand[n] for n in names)):
            base = copy.deepcopy(manifest["defaults"])
            _apply(base, spec.get("set", {}))
            pid = spec["id"]
            for n, v in zip(names, combo):
                set_path(base, n, v)
                pid = pid.replace("{" + n + "}", _fmt(v))
            curves = []
            for opts in itertools.product(*_curve_groups(spec["curves"], manifest["groups"])):
                raw = copy.deepcopy(base)
                for _, changes in opts:
                    _apply(raw, changes)
                label = ";".join(tag for tag, _ in opts)
                curves.append(Curve(label, raw))
            axes = {k: expand_values(v, f"{pid}.axes.{k}") for k, v in spec.get("axes", {}).items()}
            panels.append(Panel(pid, spec["kind"], curves, axes, spec.get("derived", []),
                                fig.get("assumptions", [])))
    return panels


def _prepare(raw: dict, points: int | None, eps: float | None) -> dict:
    raw = copy.deepcopy(raw)
    if points is not None:
        raw["grid"] = {**raw.get("grid", {}), "n_points": points}
    if eps is not None:
        raw["eps"] = eps
    return raw


def _series_job(args):
    raw, allow_leakage = args
    traj = run_point(config_from_dict(raw), allow_leakage)
    return traj.times, {k: v for k, v in traj.records.items() if k != "leakage_modes"}, traj.provenance


def _peak_job(args):
    raw, allow_leakage = args
    traj = run_point(config_from_dict(raw), allow_leakage)
    row = summarize(traj)
    return {k: row[k] for k in PEAK_COLUMNS if k in row}, traj.provenance["cutoffs"]


def _metadata(fid: str, panel: Panel, curves: list[Curve], extra: dict) -> dict:
    cfg0 = config_from_dict(curves[0].raw) if not panel.axes else None
    meta = {
        "artifact_version": __version__,
        "figure": fid,
        "panel": panel.id,
        "kind": panel.kind,
        "curves": {c.label: c.raw for c in curves},
        "lindblad_tolerances": {"rtol": LINDBLAD_RTOL, "atol": LINDBLAD_ATOL},
        "assumptions": panel.assumptions,
    }
    if cfg0 is not None:
        meta["g_tilde"] = cfg0.model.g_tilde
    meta.update(extra)
    return meta


def run_panel(fid: str, panel: Panel, out_dir, threads: int = 1, allow_leakage: bool = False,
              points: int | None = None, eps: float | None = None) -> Path:
    curves = [Curve(c.label, _prepare(c.raw, points, eps)) for c in panel.curves]
    for c in curves:
        config_from_dict(c.raw)  # fail fast on manifest errors
    if panel.kind == "series":
        results = parallel_map(_series_job, [(c.raw, allow_leakage) for c in curves], threads)
        times = results[0][0]
        for _, (t, _, _) in zip(curves, results):
            if t.shape != times.shape or not np.array_equal(t, times):
                raise ConfigError(f"panel {panel.id}: curves do not share a time grid")
        cols = {"t": times}
        for c, (_, rec, _) in zip(curves, results):
            for key, vals in rec.items():
                cols[column_name(key, c.label)] = vals
        leak = {c.label: prov["leakage_max"] for c, (_, _, prov) in zip(curves, results)}
        cut = {c.label: prov["cutoffs"] for c, (_, _, prov) in zip(curves, results)}
        esc = {c.label: prov["cutoff_escalation"] for c, (_, _, prov) in zip(curves, results)
               if "cutoff_escalation" in prov}
    elif panel.kind == "peak_sweep":
        cols, leak, cut, esc = _run_peak_sweep(panel, curves, threads, allow_leakage)
    else:
        raise ConfigError(f"unknown panel kind {panel.kind!r}")
    extra = {"leakage_max": max(leak.values()), "leakage_max_per_curve": leak,
             "eps": {c.label: config_from_dict(c.raw).eps for c in curves}, "cutoffs": cut}
    if esc:
        extra["cutoff_escalation"] = esc
    meta = _metadata(fid, panel, curves, extra)
    return write_csv(Path(out_dir) / f"fig_{panel.id}.csv", cols, meta)


def _run_peak_sweep(panel: Panel, curves: list[Curve], threads: int, allow_leakage: bool):
    names = list(panel.axes)
    grid = list(itertools.product(*(panel.axes[n] for n in names)))
    jobs = []
    for c in curves:
        raw = copy.deepcopy(c.raw)
        raw["sweep"] = {n: list(panel.axes[n]) for n in names}
        pts = sweep_points(config_from_dict(raw))
        jobs.extend((r, allow_leakage) for _, r in pts)
    results = parallel_map(_peak_job, jobs, threads)
    cols = {n: np.array([g[i] for g in grid]) for i, n in enumerate(names)}
    leak, cut = {}, {}
    for k, c in enumerate(curves):
        block = results[k * len(grid):(k + 1) * len(grid)]
        for key in PEAK_COLUMNS:
            if key in block[0][0]:
                cols[column_name(key, c.label)] = np.array([row[key] for row, _ in block])
        leak[c.label] = max(row["leakage"] for row, _ in block)
        cut[c.label] = sorted({tuple(cu) for _, cu in block})
    for d in panel.derived:
        cols[d["name"]] = cols[d["a"]] - cols[d["b"]]
    return cols, leak, cut, {}


def run_figure(fid: str, out_dir, threads: int = 1, allow_leakage: bool = False,
               points: int | None = None, eps: float | None = None) -> list[Path]:
    """Write every panel of figure ``fid`` to ``out_dir``; returns the CSV paths."""
    ids = ALIASES.get(fid, (fid,))
    manifest = load_manifest()
    paths = []
    for i in ids:
        for panel in expand_figure(i, manifest):
            paths.append(run_panel(i, panel, out_dir, threads, allow_leakage, points, eps))
    return paths
