"""Time propagation: exact unitary, four-amplitude ODE and Lindblad.

Unitary evolution diagonalises each decoupled block of ``H`` once and then
evaluates ``exp(-iHt)`` exactly at any time. Mixed initial states are carried
as an ensemble of kets so that full density matrices are only formed on
request.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import DOP853, solve_ivp
from scipy.sparse.csgraph import connected_components

from .analytic import Coefficients
from .errors import SolverError
from .hilbert import SpaceDescriptor, hermiticity_error, partial_trace, reduce_columns
from .measures import (
    bloch_vector, coherence, covariance, gaussian_log_negativity, log_negativity, noon_fidelity,
    simon_detC,
)
from .model import ModelParams, exact_factorial

LINDBLAD_RTOL = 1e-10
LINDBLAD_ATOL = 1e-12
TRACE_DRIFT_MAX = 1e-6
ODE_RTOL = 1e-12
ODE_ATOL = 1e-14

OBSERVABLES = ("L", "C", "F_NOON", "detC", "L_Gauss", "populations", "bloch", "leakage")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``n_points`` times from ``t0`` to ``t1`` inclusive.

    A single-point grid (``t0 == t1``) is allowed for initial-state measures.
    """

    t0: float
    t1: float
    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 1:
            raise ValueError(f"n_points must be a positive integer, got {self.n_points}")
        if self.n_points == 1:
            if self.t1 != self.t0:
                raise ValueError("a one-point grid needs t1 == t0")
        elif not self.t1 > self.t0:
            raise ValueError(f"t1 must exceed t0, got [{self.t0}, {self.t1}]")

    @property
    def times(self) -> np.ndarray:
        if self.n_points == 1:
            return np.array([float(self.t0)])
        return np.linspace(self.t0, self.t1, int(self.n_points))

    def scaled(self, factor: float) -> "TimeGrid":
        return TimeGrid(self.t0 * factor, self.t1 * factor, self.n_points)


def _as_times(grid) -> np.ndarray:
    if isinstance(grid, TimeGrid):
        return grid.times
    t = np.atleast_1d(np.asarray(grid, dtype=float))
    if t.ndim != 1:
        raise ValueError("times must be one-dimensional")
    return t


# --- unitary -----------------------------------------------------------------------

def hamiltonian_blocks(H) -> list[np.ndarray]:
    """Index sets of the decoupled blocks of ``H`` (exact nonzero pattern)."""
    pattern = abs(sp.csr_matrix(H)) if sp.issparse(H) else sp.csr_matrix(H != 0)
    pattern.eliminate_zeros()
    n_comp, labels = connected_components(pattern, directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    return np.split(order, bounds)


@dataclass
class _Block:
    idx: np.ndarray
    energies: np.ndarray
    vectors: np.ndarray
    coeffs: np.ndarray  # eigenbasis amplitudes of the initial columns


class UnitaryTrajectory:
    """Lazy evolved states ``exp(-iHt)`` applied to an ensemble of kets.

    ``columns(k)`` returns the kets at the ``k``-th time scaled by
    ``sqrt(weight)``; ``trajectory[k]`` is a ket for a pure input and a
    density matrix otherwise.
    """

    solver_id = "unitary-eigh"

    def __init__(self, H, weights: np.ndarray, kets: np.ndarray, times, pure: bool):
        if sp.issparse(H):
            H = sp.csr_matrix(H)
            err = float(abs(H - H.conj().T).max()) if H.nnz else 0.0
            scale = float(abs(H).max()) if H.nnz else 0.0
        else:
            err, scale = hermiticity_error(H), float(np.max(np.abs(H)))
        if err > 1e-12 * max(1.0, scale):
            raise ValueError(f"Hamiltonian is not Hermitian (max deviation {err:.3e})")
        self.times = _as_times(times)
        self.dim = H.shape[0]
        self.pure = pure
        self.weights = np.asarray(weights, dtype=float)
        cols = kets * np.sqrt(self.weights)[None, :]
        self._blocks = []
        for idx in hamiltonian_blocks(H):
            c = cols[idx]
            if not np.any(c):
                continue
            sub = H[idx][:, idx].toarray() if sp.issparse(H) else H[np.ix_(idx, idx)]
            if idx.size == 1:
                e, v = sub[0].real, np.ones((1, 1), dtype=complex)
            else:
                e, v = np.linalg.eigh(sub)
            self._blocks.append(_Block(idx, e, v, v.conj().T @ c))
        self.n_columns = cols.shape[1]

    def __len__(self) -> int:
        return len(self.times)

    def columns_at(self, t: float) -> np.ndarray:
        out = np.zeros((self.dim, self.n_columns), dtype=complex)
        for b in self._blocks:
            phase = np.exp(-1j * b.energies * t)
            out[b.idx] = b.vectors @ (phase[:, None] * b.coeffs)
        return out

    def columns(self, k: int) -> np.ndarray:
        return self.columns_at(self.times[k])

    def ket(self, k: int) -> np.ndarray:
        if not self.pure:
            raise ValueError("trajectory started from a mixed state")
        return self.columns(k)[:, 0]

    def density(self, k: int) -> np.ndarray:
        c = self.columns(k)
        return c @ c.conj().T

    def __getitem__(self, k: int) -> np.ndarray:
        return self.ket(k) if self.pure else self.density(k)

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]


def _ensemble_from(state0) -> tuple[np.ndarray, np.ndarray, bool]:
    if isinstance(state0, tuple):
        w, kets = state0
        return np.asarray(w, dtype=float), np.asarray(kets, dtype=complex), False
    state0 = np.asarray(state0, dtype=complex)
    if state0.ndim == 1:
        return np.ones(1), state0[:, None], True
    w, v = np.linalg.eigh(0.5 * (state0 + state0.conj().T))
    keep = w > 0
    return w[keep], v[:, keep], False


def unitary_evolve(H, state0, grid) -> UnitaryTrajectory:
    """Exact evolution under a time-independent Hermitian ``H`` (dense or sparse).

    ``state0`` is a ket, a density matrix or a ``(weights, kets)`` ensemble.
    """
    w, kets, pure = _ensemble_from(state0)
    if kets.shape[0] != H.shape[0]:
        raise ValueError(f"state dimension {kets.shape[0]} does not match H ({H.shape[0]})")
    return UnitaryTrajectory(H, w, kets, grid, pure)


# --- four-amplitude ODE ---------------------------------------------------------------

def sector_generator(p: ModelParams) -> np.ndarray:
    """Hamiltonian restricted to ``|g00>, |e00>, |g m 0>, |g 0 m>`` (Kerr shifts included)."""
    r = math.sqrt(exact_factorial(p.m))
    kerr = p.m * p.m - p.m
    e3 = -0.5 * p.omega0 + p.m * p.omega1 + p.chi1 * kerr
    e4 = -0.5 * p.omega0 + p.m * p.omega2 + p.chi2 * kerr
    return np.array([
        [-0.5 * p.omega0, 0, 0, 0],
        [0, 0.5 * p.omega0, r * p.g1, r * p.g2],
        [0, r * p.g1, e3, 0],
        [0, r * p.g2, 0, e4],
    ], dtype=complex)


def coefficient_ode_evolve(params: ModelParams, phi: float, grid,
                           rtol: float = ODE_RTOL, atol: float = ODE_ATOL) -> Coefficients:
    """Integrate the coupled amplitude equations with an adaptive 8th-order method.

    Handles unequal detunings and Kerr strengths, which have no closed form.
    Raises :class:`SolverError` if integration fails or the norm drifts by
    more than 1e-10.
    """
    times = _as_times(grid)
    G = sector_generator(params)
    x0 = np.array([math.cos(phi), math.sin(phi), 0, 0], dtype=complex)

    def rhs(t, x):
        return -1j * (G @ x)

    if times[-1] == times[0]:
        xs = np.repeat(x0[:, None], len(times), axis=1)
    else:
        sol = solve_ivp(rhs, (times[0], times[-1]), x0, method="DOP853", t_eval=times,
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise SolverError(f"amplitude ODE failed: {sol.message}")
        xs = sol.y
    drift = float(np.max(np.abs(np.sum(np.abs(xs) ** 2, axis=0) - 1)))
    if drift > 1e-10:
        raise SolverError(f"amplitude ODE norm drift {drift:.3e} exceeds 1e-10")
    return Coefficients(xs[0], xs[1], xs[2], xs[3], times, params.g1, params.g2, params.m)


def sector_amplitudes(psi: np.ndarray, space: SpaceDescriptor, m: int) -> np.ndarray:
    """Amplitudes of a full ket on ``|g00>, |e00>, |g m 0>, |g 0 m>``."""
    idx = [space.index(0, 0, 0), space.index(1, 0, 0), space.index(0, m, 0), space.index(0, 0, m)]
    return psi[idx]


# --- Lindblad ---------------------------------------------------------------------------

class LindbladTrajectory:
    """Density matrices at the requested output times (Hermitian-symmetrised)."""

    solver_id = "lindblad-dop853"

    def __init__(self, times, states, trace_drift, n_steps, rtol, atol):
        self.times = times
        self.states = states
        self.trace_drift = trace_drift
        self.n_steps = n_steps
        self.rtol, self.atol = rtol, atol
        self.pure = False

    def __len__(self):
        return len(self.times)

    def density(self, k: int) -> np.ndarray:
        return self.states[k]

    def columns(self, k: int) -> np.ndarray:
        # square-root factor so that column-based reductions also work here
        w, v = np.linalg.eigh(self.states[k])
        w = np.clip(w, 0, None)
        return v * np.sqrt(w)[None, :]

    def __getitem__(self, k: int) -> np.ndarray:
        return self.states[k]

    def __iter__(self):
        return iter(self.states)


def lindblad_rhs(H: np.ndarray, jump_ops):
    """Right-hand side ``drho/dt`` acting on the flattened density matrix.

    Operators are held in sparse form; the state stays dense.
    """
    n = H.shape[0]
    Hs = sp.csr_matrix(H)
    Ls = [sp.csr_matrix(L) for L in jump_ops]
    decay = sum((L.conj().T @ L for L in Ls), sp.csr_matrix((n, n), dtype=complex))
    Heff = (Hs - 0.5j * decay).tocsr()
    Heff_c = Heff.conj().tocsr()
    Ls_c = [L.conj().tocsr() for L in Ls]

    def rhs(t, y):
        rho = y.reshape(n, n)
        out = -1j * (Heff @ rho) + 1j * (Heff_c @ rho.T).T  # -i(Heff rho - rho Heff^dag)
        for L, Lc in zip(Ls, Ls_c):
            X = L @ rho
            out += (Lc @ X.T).T  # L rho L^dag
        return out.reshape(-1)

    return rhs


def lindblad_evolve(H: np.ndarray, jump_ops, rho0: np.ndarray, grid, rtol: float = LINDBLAD_RTOL,
                    atol: float = LINDBLAD_ATOL, observe=None):
    """Integrate the Lindblad master equation from ``rho0``.

    Uses an adaptive embedded 8(5,3) Runge-Kutta stepper with dense output;
    each stored sample is symmetrised. With ``observe`` given, it is called as
    ``observe(k, rho)`` for every output point and states are not kept.
    Raises :class:`SolverError` on integration failure or a trace drift above 1e-6.
    """
    times = _as_times(grid)
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        rho0 = np.outer(rho0, rho0.conj())
    n = H.shape[0]
    if rho0.shape != (n, n):
        raise ValueError(f"state shape {rho0.shape} does not match H ({n})")
    if np.any(np.diff(times) < 0):
        raise ValueError("output times must be nondecreasing")
    for L in jump_ops:
        if L.shape != (n, n):
            raise ValueError("jump operator shape does not match H")
    tr0 = np.trace(rho0).real
    rhs = lindblad_rhs(H, jump_ops)
    states = [] if observe is None else None
    drift = 0.0

    def emit(k, y):
        nonlocal drift
        rho = y.reshape(n, n)
        rho = 0.5 * (rho + rho.conj().T)
        d = abs(np.trace(rho).real - tr0)
        drift = max(drift, d)
        if d > TRACE_DRIFT_MAX:
            raise SolverError(f"trace drifted by {d:.3e} at t={times[k]:.6g}")
        if observe is None:
            states.append(rho)
        else:
            observe(k, rho)

    k = 0
    y0 = rho0.reshape(-1).copy()
    while k < len(times) and times[k] <= times[0]:
        emit(k, y0)
        k += 1
    n_steps = 0
    if k < len(times):
        solver = DOP853(rhs, times[0], y0, times[-1], rtol=rtol, atol=atol)
        while k < len(times):
            msg = solver.step()
            n_steps += 1
            if solver.status == "failed":
                raise SolverError(f"Lindblad integration failed at t={solver.t:.6g}: {msg}")
            dense = solver.dense_output()
            while k < len(times) and times[k] <= solver.t:
                y = solver.y if times[k] == solver.t else dense(times[k])
                emit(k, y)
                k += 1
    return LindbladTrajectory(times, states, drift, n_steps, rtol, atol)


# --- peaks ------------------------------------------------------------------------------

@dataclass(frozen=True)
class PeakEstimate:
    value: float
    time: float
    index: int
    found: bool


def lmax_estimate(values, times=None) -> PeakEstimate:
    """First local maximum of a sampled curve, refined by a parabola through three points.

    A curve without an interior maximum gives its final value with
    ``found=False``.
    """
    if isinstance(values, Trajectory):
        times, values = values.times, values.records["L"]
    y = np.asarray(values, dtype=float)
    t = np.arange(len(y), dtype=float) if times is None else np.asarray(times, dtype=float)
    for i in range(1, len(y) - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1]:
            y0, y1, y2 = y[i - 1], y[i], y[i + 1]
            denom = y0 - 2 * y1 + y2
            if denom >= 0:
                return PeakEstimate(float(y1), float(t[i]), i, True)
            h = t[i + 1] - t[i]
            off = 0.5 * (y0 - y2) / denom
            return PeakEstimate(float(y1 - 0.25 * (y0 - y2) * off), float(t[i] + off * h), i, True)
    return PeakEstimate(float(y[-1]), float(t[-1]), len(y) - 1, False)


# --- observables ------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Time grid plus per-time observable records and provenance."""

    times: np.ndarray
    records: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    leakage_max: float = 0.0
    eps: float | None = None

    @property
    def valid(self) -> bool:
        return self.eps is None or self.leakage_max < self.eps


def _mode_populations(diag: np.ndarray, space: SpaceDescriptor) -> list[np.ndarray]:
    p = diag.reshape(space.dims)
    out = []
    for k in range(1, len(space.dims)):
        axes = tuple(i for i in range(len(space.dims)) if i != k)
        out.append(p.sum(axis=axes))
    return out


def boundary_masks(space: SpaceDescriptor, m: int = 1, couplings=None, linear=None) -> list[np.ndarray]:
    """Per mode, the basis states from which the generator can reach a Fock level
    beyond the cutoff.

    ``couplings[i]`` nonzero means ``a_i^dag^m s-`` acts, which raises mode
    ``i`` by ``m`` from the excited spin. ``linear[i]`` true means a term
    linear in ``a_i^dag`` acts (dispersive coupling, heating). With neither
    given, every state in the top Fock level counts.
    """
    n_modes = space.n_modes
    grids = np.indices(space.dims).reshape(len(space.dims), -1)
    spin = grids[0]
    masks = []
    for i in range(1, n_modes + 1):
        n, top = grids[i], space.dims[i] - 1
        if couplings is None and linear is None:
            masks.append(n == top)
            continue
        mask = np.zeros(space.total, dtype=bool)
        if couplings is not None and couplings[i - 1] != 0:
            mask |= (spin == 1) & (n > top - m)
        if linear is not None and linear[i - 1]:
            mask |= n == top
        masks.append(mask)
    return masks


def model_boundary_masks(space: SpaceDescriptor, p: ModelParams, bath=None) -> list[np.ndarray]:
    """:func:`boundary_masks` for the terms present in ``p`` and ``bath``."""
    heating = bath is not None and bath.rb > 0 and bath.n_th > 0
    if space.n_modes == 1:
        return boundary_masks(space, p.m, (p.g1,), (p.gz1 != 0 or heating,))
    return boundary_masks(space, p.m, (p.g1, p.g2), (p.gz1 != 0 or heating, p.gz2 != 0 or heating))


def measure_state(columns: np.ndarray | None, rho: np.ndarray | None, space: SpaceDescriptor,
                  observables, noon_order: int | None = None, leak_masks=None) -> dict:
    """Observables of one tripartite state given as weighted ket columns or a density matrix.

    ``leakage`` is the largest per-mode population on ``leak_masks``
    (default: the top Fock level); ``leakage_modes`` lists all of them.
    """
    out = {}
    two_mode = space.n_modes == 2
    cut = space.mode_dims

    def reduced(keep):
        if columns is not None:
            return reduce_columns(columns, space, keep)
        return partial_trace(rho, keep, space)

    need_b = two_mode and any(o in observables for o in ("L", "F_NOON", "detC", "L_Gauss"))
    rho_b = reduced([1, 2]) if need_b else None
    need_s = any(o in observables for o in ("C", "bloch", "populations"))
    rho_s = reduced([0]) if need_s else None
    if "L" in observables and two_mode:
        out["L"] = log_negativity(rho_b, cut)
    if "C" in observables:
        out["C"] = coherence(rho_s)
    if "F_NOON" in observables and two_mode and noon_order is not None:
        out["F_NOON"] = noon_fidelity(rho_b, noon_order, cut)
    if ("detC" in observables or "L_Gauss" in observables) and two_mode:
        cd = covariance(rho_b, cut)
        if "detC" in observables:
            out["detC"] = simon_detC(cd)
        if "L_Gauss" in observables:
            out["L_Gauss"] = gaussian_log_negativity(cd)
    if "bloch" in observables:
        bx, by, bz = bloch_vector(rho_s)
        out["bloch_x"], out["bloch_y"], out["bloch_z"] = bx, by, bz
    if "populations" in observables or "leakage" in observables:
        diag = (np.sum(np.abs(columns) ** 2, axis=1) if columns is not None
                else np.diagonal(rho).real)
        if "populations" in observables:
            out["p_e"] = float(rho_s[1, 1].real)
            for k, pk in enumerate(_mode_populations(diag, space), start=1):
                out[f"n{k}"] = float(np.dot(np.arange(len(pk)), pk))
        masks = boundary_masks(space) if leak_masks is None else leak_masks
        per_mode = [float(diag[mk].sum()) for mk in masks]
        out["leakage"] = max(per_mode)
        out["leakage_modes"] = per_mode
    return out


def record_trajectory(traj, space: SpaceDescriptor, observables, noon_order: int | None = None,
                      eps: float | None = None, provenance: dict | None = None,
                      leak_masks=None) -> Trajectory:
    """Evaluate ``observables`` at every point of a unitary or Lindblad trajectory."""
    unknown = set(observables) - set(OBSERVABLES)
    if unknown:
        raise ValueError(f"unknown observables {sorted(unknown)}")
    observables = set(observables) | {"leakage"}
    rows = []
    for k in range(len(traj)):
        if isinstance(traj, UnitaryTrajectory):
            rows.append(measure_state(traj.columns(k), None, space, observables, noon_order,
                                      leak_masks))
        else:
            rows.append(measure_state(None, traj.density(k), space, observables, noon_order,
                                      leak_masks))
    records = {key: np.array([r[key] for r in rows]) for key in rows[0]} if rows else {}
    prov = {"solver": traj.solver_id}
    if isinstance(traj, LindbladTrajectory):
        prov.update(rtol=traj.rtol, atol=traj.atol, trace_drift=traj.trace_drift)
    prov.update(provenance or {})
    leak = float(np.max(records["leakage"])) if rows else 0.0
    return Trajectory(np.asarray(traj.times), records, prov, leak, eps)


def record_lindblad(H: np.ndarray, jump_ops, rho0: np.ndarray, grid, space: SpaceDescriptor,
                    observables, noon_order: int | None = None, eps: float | None = None,
                    leak_masks=None, rtol: float = LINDBLAD_RTOL,
                    atol: float = LINDBLAD_ATOL) -> Trajectory:
    """Lindblad evolution with observables evaluated on the fly (no state storage)."""
    unknown = set(observables) - set(OBSERVABLES)
    if unknown:
        raise ValueError(f"unknown observables {sorted(unknown)}")
    observables = set(observables) | {"leakage"}
    rows = []

    def observe(k, rho):
        rows.append(measure_state(None, rho, space, observables, noon_order, leak_masks))

    lt = lindblad_evolve(H, jump_ops, rho0, grid, rtol=rtol, atol=atol, observe=observe)
    records = {key: np.array([r[key] for r in rows]) for key in rows[0]}
    prov = {"solver": lt.solver_id, "rtol": rtol, "atol": atol, "trace_drift": lt.trace_drift}
    return Trajectory(np.asarray(lt.times), records, prov, float(np.max(records["leakage"])), eps)
