"""Execute experiment configs: cutoff selection, leakage gate, propagation, sweeps."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .. import __version__
from ..dynamics import (
    LINDBLAD_ATOL, LINDBLAD_RTOL, Trajectory, lmax_estimate, model_boundary_masks,
    record_lindblad, record_trajectory, unitary_evolve,
)
from ..errors import CutoffTooSmallError
from ..hilbert import fock_space, single_mode_space
from ..model import full_hamiltonian, single_mode_hamiltonian, lindblad_ops
from ..states import MAX_CUTOFF, compose_initial, initial_ensemble, select_cutoff
from .config import ExperimentConfig, as_jsonable, config_from_dict, sweep_points

SPARSE_MIN_DIM = 1500
OPEN_SYSTEM_START_CUTOFF = 8


@dataclass
class SweepTable:
    """One row of peak statistics per sweep point, in sweep order."""

    axes: list[str]
    rows: list[dict]
    provenance: dict = field(default_factory=dict)

    @property
    def leakage_max(self) -> float:
        return max((r["leakage"] for r in self.rows), default=0.0)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])


def make_space(n_modes: int, cutoffs):
    return single_mode_space(cutoffs[0]) if n_modes == 1 else fock_space(*cutoffs)


def initial_cutoffs(cfg: ExperimentConfig) -> list[int]:
    """Explicit cutoffs, or the smallest ones holding the initial state below ``eps``.

    Open systems start no lower than 8 per mode. A populated mode seeds the
    other at half its cutoff; escalation corrects either guess.
    """
    if cfg.cutoffs is not None:
        return list(cfg.cutoffs)
    floor = cfg.model.m + 1
    if cfg.open_system:
        floor = max(floor, OPEN_SYSTEM_START_CUTOFF)
    modes = [cfg.mode1] if cfg.mode2 is None else [cfg.mode1, cfg.mode2]
    cut = [select_cutoff(p, cfg.eps, MAX_CUTOFF, minimum=floor) for p in modes]
    if len(cut) == 2 and cfg.model.g2 != 0:
        # the spin relays photons between the modes, so neither stays near its initial state
        for i, j in ((0, 1), (1, 0)):
            if modes[i].mean_photons > 0:
                cut[j] = max(cut[j], cut[i] // 2)
    return cut


def _grow(n: int) -> int:
    return n + max(2, math.ceil(0.25 * n))


def _evolve(cfg: ExperimentConfig, cutoffs, observables, allow_leakage: bool) -> Trajectory:
    space = make_space(cfg.n_modes, cutoffs)
    p = cfg.model
    state_eps = None if allow_leakage else cfg.eps
    masks = model_boundary_masks(space, p, cfg.bath)
    noon = cfg.noon_order if cfg.n_modes == 2 and cfg.noon_order < min(cutoffs) else None
    if cfg.n_modes == 1:
        H = single_mode_hamiltonian(p.omega0, p.omega1, p.g1, p.gz1, p.m, cutoffs[0])
    else:
        H = full_hamiltonian(p, space, sparse=space.total > SPARSE_MIN_DIM)
    if cfg.open_system:
        jumps = lindblad_ops(cfg.bath, space, cfg.spin_dephasing)
        rho0 = compose_initial(cfg.spin, cfg.mode1, cfg.mode2, space, state_eps)
        return record_lindblad(H, jumps, rho0, cfg.grid, space, observables, noon, cfg.eps,
                               masks, LINDBLAD_RTOL, LINDBLAD_ATOL)
    ens = initial_ensemble(cfg.spin, cfg.mode1, cfg.mode2, space, state_eps)
    traj = unitary_evolve(H, ens, cfg.grid)
    return record_trajectory(traj, space, observables, noon, cfg.eps, leak_masks=masks)


def run_point(cfg: ExperimentConfig, allow_leakage: bool = False) -> Trajectory:
    """One trajectory with cutoff escalation and the leakage gate.

    With ``cfg.escalate`` the mode whose boundary population reaches ``eps``
    grows by ``max(2, 25%)`` until the gate passes or the cap of 60 is hit.
    Unitary runs probe with the cheap leakage-only observable first.
    """
    cutoffs = initial_cutoffs(cfg)
    history = [list(cutoffs)]
    while True:
        probe_only = not cfg.open_system and cfg.escalate
        obs = ("leakage",) if probe_only else cfg.observables
        traj = _evolve(cfg, cutoffs, obs, allow_leakage)
        per_mode = np.max(np.atleast_2d(traj.records["leakage_modes"]), axis=0)
        failing = [i for i, v in enumerate(per_mode) if v >= cfg.eps]
        if not failing or not cfg.escalate:
            break
        if all(cutoffs[i] >= MAX_CUTOFF for i in failing):
            break
        for i in failing:
            cutoffs[i] = min(MAX_CUTOFF, _grow(cutoffs[i]))
        history.append(list(cutoffs))
    if probe_only:
        traj = _evolve(cfg, cutoffs, cfg.observables, allow_leakage)
    if not traj.valid and not allow_leakage:
        raise CutoffTooSmallError(
            f"trajectory leakage {traj.leakage_max:.3e} >= eps={cfg.eps:.1e} at cutoffs {cutoffs}",
            leakage=traj.leakage_max, cutoff=min(cutoffs))
    traj.provenance.update(provenance(cfg, cutoffs, history, traj))
    return traj


def provenance(cfg: ExperimentConfig, cutoffs, history, traj: Trajectory) -> dict:
    out = {
        "version": __version__,
        "label": cfg.label,
        "params": as_jsonable(cfg.raw),
        "cutoffs": list(cutoffs),
        "eps": cfg.eps,
        "g_tilde": cfg.model.g_tilde,
        "rabi_frequency": math.sqrt(math.factorial(cfg.model.m)) * cfg.model.g_tilde,
        "leakage_max": traj.leakage_max,
    }
    if len(history) > 1:
        out["cutoff_escalation"] = history
    if cfg.open_system:
        out["spin_dephasing"] = cfg.spin_dephasing
    return out


def summarize(traj: Trajectory) -> dict:
    """Peak statistics of a trajectory: first-peak ``L``, global maxima, leakage."""
    row = {}
    t = traj.times
    if "L" in traj.records:
        pk = lmax_estimate(traj.records["L"], t)
        row.update(L_max=pk.value, t_peak=pk.time, found=int(pk.found))
    for key, vals in traj.records.items():
        if key in ("leakage", "leakage_modes", "L"):
            continue
        row[f"{key}_max"] = float(np.max(vals))
    row["leakage"] = traj.leakage_max
    return row


def _sweep_job(args):
    raw, allow_leakage = args
    traj = run_point(config_from_dict(raw), allow_leakage)
    row = summarize(traj)
    row["cutoffs"] = traj.provenance["cutoffs"]
    return row


def _init_worker():
    threadpool_limits(1)


def parallel_map(fn, items, threads: int = 1) -> list:
    """Ordered map over a process pool; BLAS is pinned to one thread everywhere.

    Pinning makes results bitwise identical for any worker count.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        with threadpool_limits(1):
            return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker) as pool:
        return list(pool.map(fn, items, chunksize=1))


def run_sweep(cfg: ExperimentConfig, allow_leakage: bool = False, threads: int = 1) -> SweepTable:
    points = sweep_points(cfg)
    rows = parallel_map(_sweep_job, [(raw, allow_leakage) for _, raw in points], threads)
    out = []
    for (axes, _), row in zip(points, rows):
        out.append({**axes, **row})
    prov = {"version": __version__, "label": cfg.label, "params": as_jsonable(cfg.raw),
            "eps": cfg.eps, "sweep_axes": list(cfg.sweep)}
    table = SweepTable(list(cfg.sweep), out, prov)
    table.provenance["leakage_max"] = table.leakage_max
    return table


def run(cfg: ExperimentConfig, allow_leakage: bool = False, threads: int = 1):
    """A :class:`Trajectory` for a plain config, a :class:`SweepTable` when sweep axes are set."""
    if cfg.sweep:
        return run_sweep(cfg, allow_leakage, threads)
    with threadpool_limits(1):
        return run_point(cfg, allow_leakage)


def with_overrides(cfg: ExperimentConfig, points: int | None = None, eps: float | None = None,
                   force_lindblad: bool = False) -> ExperimentConfig:
    """Apply CLI overrides by rebuilding from the raw config (keeps validation in one place)."""
    raw = dict(cfg.raw)
    if points is not None:
        raw["grid"] = {**raw.get("grid", {}), "n_points": points}
    if eps is not None:
        raw["eps"] = eps
    if force_lindblad and raw.get("bath") is None:
        raw["bath"] = {}
    if raw == cfg.raw:
        return cfg
    return config_from_dict(raw)

