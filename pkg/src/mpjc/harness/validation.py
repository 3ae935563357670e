"""Oracle suite: every derived example, key invariants and the acceptance criteria.

Each check compares an implementation route against an independent oracle
and reports the measured deviation next to its tolerance. Failures are
report entries, never exceptions.
"""
from __future__ import annotations

import json
import math
import time
import traceback
from dataclasses import asdict, dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .. import analytic, dynamics, hilbert, measures, model, states
from ..hilbert import fock_space, partial_trace, single_mode_space
from ..model import BathParams, ModelParams
from ..states import ModePrep, SpinPrep

G = 1 / math.sqrt(2)
VAC = ModePrep.vacuum()


@dataclass
class CheckResult:
    name: str
    group: str
    passed: bool
    deviation: float
    tolerance: float
    detail: str = ""


@dataclass
class Report:
    checks: list
    runtime_s: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "n_checks": len(self.checks),
                "n_failed": len(self.failures), "runtime_s": self.runtime_s,
                "checks": [asdict(c) for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


REGISTRY: list = []


def check(group: str, name: str):
    """Register a check. It returns ``(deviation, tolerance)`` for a
    ``deviation <= tolerance`` test, ``(deviation, tolerance, passed)`` for
    anything else, or a list of ``(suffix, ...)`` sub-results."""
    def deco(fn):
        REGISTRY.append((group, name, fn))
        return fn
    return deco


def _results(group, name, out) -> list[CheckResult]:
    items = out if isinstance(out, list) else [("", *out)]
    res = []
    for item in items:
        suffix, dev, tol, *rest = item
        passed = bool(rest[0]) if rest else bool(dev <= tol)
        detail = rest[1] if len(rest) > 1 else ""
        full = f"{name}.{suffix}" if suffix else name
        res.append(CheckResult(full, group, passed, float(dev), float(tol), detail))
    return res


def validate(groups=None, names=None) -> Report:
    """Run the registered checks (optionally filtered by group or name prefix)."""
    t0 = time.perf_counter()
    out = []
    with threadpool_limits(1):
        for group, name, fn in REGISTRY:
            if groups is not None and group not in groups:
                continue
            if names is not None and not any(name.startswith(n) for n in names):
                continue
            try:
                out.extend(_results(group, name, fn()))
            except Exception as exc:  # a crashing check is a failed check
                out.append(CheckResult(name, group, False, math.inf, 0.0,
                                       f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"))
    return Report(out, time.perf_counter() - t0)


# --- shared helpers -------------------------------------------------------------------

def _two_rabi_periods(m, n=600, g1=G, g2=G):
    return np.linspace(0, 2 * 2 * math.pi / analytic.rabi_frequency(g1, g2, m), n)


def _numeric_L(m, kind, p_e, times, g1=G, g2=G, **model_kw):
    """Log-negativity through the full numerical pipeline on the minimal space."""
    space = fock_space(m + 1, m + 1)
    p = ModelParams.resonant(g1, g2, m, **model_kw)
    H = model.mpjc_hamiltonian(p, space) if not model_kw else model.full_hamiltonian(p, space)
    ens = states.initial_ensemble(SpinPrep.from_pe(kind, p_e), VAC, VAC, space)
    traj = dynamics.unitary_evolve(H, ens, times)
    return np.array([measures.log_negativity(partial_trace(traj.density(k), [1, 2], space),
                                             (m + 1, m + 1)) for k in range(len(times))]), traj, space


def _sup_L_quartic(c):
    """Superposition-case L from the roots of the characteristic quartic."""
    coeffs = analytic.quartic_coeffs_sup(c)
    out = []
    for row in np.atleast_2d(coeffs):
        r = np.roots(row).real
        out.append(math.log2(1 + 2 * abs(r[r < 0].sum())))
    return np.array(out)


def _first_peak(m, kind, p_e, n=600, **kw):
    t = np.linspace(0, 2 * math.pi / analytic.rabi_frequency(G, G, m), n)
    L, _, _ = _numeric_L(m, kind, p_e, t, **kw)
    return dynamics.lmax_estimate(L, t)


# --- hilbert ----------------------------------------------------------------------------

@check("hilbert", "commutator_truncation")
def _():
    N = 7
    a = hilbert.destroy(N)
    d = hilbert.commutator(a, a.conj().T) - np.eye(N)
    top = d[N - 1, N - 1]
    d[N - 1, N - 1] = 0
    return [("off_top", float(np.max(np.abs(d))), 1e-14),
            ("top_element", abs(top - (-N)), 1e-12)]


@check("hilbert", "sigma_z_layout")
def _():
    sz = hilbert.tensor_embed(hilbert.SIGMA_Z, 0, hilbert.SpaceDescriptor((2, 2, 2)))
    want = np.array([-1, -1, -1, -1, 1, 1, 1, 1])
    return float(np.max(np.abs(np.diagonal(sz) - want))), 0.0


@check("hilbert", "partial_trace_sector")
def _():
    m, N = 2, 4
    space = fock_space(N, N)
    c = analytic.coeffs_resonant(0.7, 0.4, 0.9, m, m * 1.0, 1.3)
    psi = analytic.sector_state(c, N, N)
    rho = np.outer(psi, psi.conj())
    spin = partial_trace(rho, [0], space)
    bos = partial_trace(rho, [1, 2], space)
    want_b = analytic.embed_boson_state(analytic.reduced_boson_sup(c), m, N, N)
    return [("spin", float(np.max(np.abs(spin - analytic.reduced_spin_sup(c)))), 1e-12),
            ("bosons", float(np.max(np.abs(bos - want_b))), 1e-12),
            ("trace", abs(np.trace(bos) - 1), 1e-12)]


@check("hilbert", "partial_transpose_display")
def _():
    m, p_e = 1, 0.3
    c = analytic.coeffs_resonant(math.asin(math.sqrt(p_e)), 0.5, 0.8, m, 1.0, 0.9)
    x1, x2, x3, x4 = (complex(v) for v in c.stack())
    rho = analytic.embed_boson_state(analytic.reduced_boson_th(c), m, m + 1, m + 1)
    pt = hilbert.partial_transpose(rho, (m + 1, m + 1), 0)
    idx = [0, m, m * (m + 1), m * (m + 1) + m]
    display = np.array([[abs(x1) ** 2 + abs(x2) ** 2, 0, 0, x3 * x4.conjugate()],
                        [0, abs(x4) ** 2, 0, 0],
                        [0, 0, abs(x3) ** 2, 0],
                        [x3.conjugate() * x4, 0, 0, 0]])
    return float(np.max(np.abs(pt[np.ix_(idx, idx)] - display))), 1e-14


# --- states -----------------------------------------------------------------------------

def _mean_n(rho_or_ket):
    v = np.asarray(rho_or_ket)
    n = np.arange(v.shape[0])
    p = np.abs(v) ** 2 if v.ndim == 1 else np.diagonal(v).real
    return float(np.dot(n, p))


@check("states", "coherent_mean")
def _():
    alpha = 1.3 - 0.4j
    return abs(_mean_n(states.coherent_state(alpha, 40)) - abs(alpha) ** 2), 1e-8


@check("states", "coherent_leakage_cutoff20")
def _():
    return states.leakage(ModePrep.coherent(1.0), 20), 1e-12


@check("states", "squeezed_mean")
def _():
    r = 0.7
    return abs(_mean_n(states.squeezed_vacuum(r, 0.3, 60)) - math.sinh(r) ** 2), 1e-8


@check("states", "thermal_mean")
def _():
    nbar = 0.8
    return abs(_mean_n(states.thermal_mode(nbar, 80)) - nbar), 1e-8


@check("states", "prcs_phase_average")
def _():
    alpha, N = 1.2, 30
    avg = np.zeros((N, N), dtype=complex)
    for th in 2 * math.pi * np.arange(256) / 256:
        v = states.coherent_state(alpha * np.exp(1j * th), N)
        avg += np.outer(v, v.conj()) / 256
    return float(np.max(np.abs(avg - states.prcs(alpha, N)))), 1e-10


@check("states", "prss_phase_average")
def _():
    r, N = 0.6, 50
    avg = np.zeros((N, N), dtype=complex)
    for th in 2 * math.pi * np.arange(256) / 256:
        v = states.squeezed_vacuum(r, th, N)
        avg += np.outer(v, v.conj()) / 256
    return float(np.max(np.abs(avg - states.prss(r, N)))), 1e-10


@check("states", "prss_trace_tail")
def _():
    r, N = 0.9, 12
    rho = states.prss(r, N, eps=None)
    return abs(np.trace(rho).real - (1 - states.leakage(ModePrep.prss(r), N))), 1e-12


# --- model ------------------------------------------------------------------------------

@check("model", "coupling_matrix_element")
def _():
    out = []
    for m in (1, 2, 3):
        space = fock_space(m + 2, m + 2)
        p = ModelParams.resonant(0.37, 0.6, m)
        H = model.mpjc_hamiltonian(p, space)
        val = H[space.index(0, m, 0), space.index(1, 0, 0)]
        out.append((f"m{m}", abs(val - 0.37 * math.sqrt(math.factorial(m))), 1e-12))
    return out


@check("model", "excitation_commutes_on_sector")
def _():
    out = []
    for m in (1, 2, 3):
        space = fock_space(m + 1, m + 1)
        p = ModelParams.resonant(0.37, 0.6, m, detuning=0.3, chi1=0.2, chi2=0.5)
        H = model.full_hamiltonian(p, space)
        Nx = model.excitation_operator(p, space)
        idx = model.sector_indices(space, m)[1:]
        comm = hilbert.commutator(H, Nx)
        out.append((f"m{m}", float(np.max(np.abs(comm[np.ix_(idx, idx)]))), 1e-12))
    return out


@check("model", "dispersive_matrix_element")
def _():
    space = fock_space(3, 3)
    p = ModelParams.resonant(G, G, 1, gz1=0.7, gz2=0.2)
    H = model.dispersive_hamiltonian(p, space)
    return abs(H[space.index(0, 1, 0), space.index(0, 0, 0)] - (-0.7 / math.sqrt(2))), 1e-14


@check("model", "single_mode_is_sector_of_two_mode")
def _():
    m, N = 2, 6
    p = ModelParams.resonant(0.8, 0.0, m, gz1=0.4)
    space = fock_space(N, m + 1)
    H2 = model.full_hamiltonian(p, space)
    H1 = model.single_mode_hamiltonian(p.omega0, p.omega1, 0.8, 0.4, m, N)
    # with g2 = gz2 = 0 the mode-2 vacuum slice is invariant and omega2 * n2 vanishes on it
    idx = [space.index(s, n1, 0) for s in (0, 1) for n1 in range(N)]
    return float(np.max(np.abs(H2[np.ix_(idx, idx)] - H1))), 1e-14


@check("model", "invariants")
def _():
    space = fock_space(4, 3)
    p = ModelParams.resonant(0.3, 0.7, 2, detuning=0.2, chi1=0.1, chi2=-0.3, gz1=0.5, gz2=0.2)
    H = model.full_hamiltonian(p, space)
    ops = model.lindblad_ops(BathParams(0.3, 0.1, 0.2, 0.3, 0.4), space)
    return [("hermitian", hilbert.hermiticity_error(H), 1e-14),
            ("jump_operator_count", abs(len(ops) - 9), 0)]


# --- analytic ---------------------------------------------------------------------------

@check("analytic", "resonant_is_zero_detuning_limit")
def _():
    t = np.linspace(0, 20, 301)
    out = []
    for m in (1, 2, 3):
        a = analytic.coeffs_resonant(0.6, 0.4, 0.9, m, m * 1.0, t).stack()
        b = analytic.coeffs_detuned(0.6, 0.4, 0.9, m, m * 1.0, 0.0, t).stack()
        out.append((f"m{m}", float(np.max(np.abs(a - b))), 1e-12))
    return out


@check("analytic", "detuned_amplitude_bound_and_unitarity")
def _():
    rng = np.random.default_rng(7)
    bound_excess, norm_err = 0.0, 0.0
    for _ in range(50):
        m = int(rng.integers(1, 4))
        g1, g2 = rng.uniform(0.1, 1.0, 2)
        delta, t = rng.uniform(-5, 5), rng.uniform(0, 30)
        c = analytic.coeffs_detuned(rng.uniform(0, math.pi), g1, g2, m, m + delta, delta, t)
        q = 4 * math.factorial(m) * (g1 ** 2 + g2 ** 2)
        bound_excess = max(bound_excess, float(abs(c.x3) ** 2 + abs(c.x4) ** 2 - q / (q + delta ** 2)))
        norm_err = max(norm_err, float(abs(c.norm2() - 1)))
    return [("bound", max(bound_excess, 0.0), 1e-14), ("unitarity", norm_err, 1e-13)]


@check("analytic", "thermal_logneg_bruteforce")
def _():
    p_e, m = 0.5, 1
    t = (math.pi / 2) / analytic.rabi_frequency(G, G, m)
    c = analytic.coeffs_resonant(math.asin(math.sqrt(p_e)), G, G, m, 1.0, t)
    ev = np.linalg.eigvalsh(hilbert.partial_transpose(analytic.reduced_boson_th(c), (2, 2), 1))
    brute = math.log2(1 + 2 * abs(ev[ev < 0].sum()))
    closed = float(analytic.logneg_thermal_closed(p_e, G, G, m, t))
    return [("closed_vs_bruteforce", abs(closed - brute), 1e-12),
            ("value", abs(closed - math.log2(0.5 + math.sqrt(0.5))), 1e-12)]


@check("analytic", "pt_spectrum_vs_dense")
def _():
    t = np.linspace(0.05, 6, 40)
    c = analytic.coeffs_resonant(0.9, 0.5, 0.8, 2, 2.0, t)
    lp, lm, p3, p4 = analytic.pt_spectrum_thermal(c)
    dev = 0.0
    for k in range(len(t)):
        ev = np.sort(np.linalg.eigvalsh(
            hilbert.partial_transpose(analytic.reduced_boson_th(c[k]), (2, 2), 1)))
        dev = max(dev, float(np.max(np.abs(ev - np.sort([lp[k], lm[k], p3[k], p4[k]])))))
    return dev, 1e-12


@check("analytic", "quartic_residual")
def _():
    t = np.linspace(0.05, 6, 40)
    c = analytic.coeffs_resonant(0.9, 0.5, 0.8, 1, 1.0, t)
    coeffs = analytic.quartic_coeffs_sup(c)
    res = 0.0
    for k in range(len(t)):
        ev = np.linalg.eigvalsh(
            hilbert.partial_transpose(analytic.reduced_boson_sup(c[k]), (2, 2), 1))
        res = max(res, float(np.max(np.abs(np.polyval(coeffs[k], ev)))))
    return res, 1e-10


@check("analytic", "noon_fidelity_closed_vs_measure")
def _():
    m, N = 2, 3
    t = np.linspace(0, 4, 30)
    c = analytic.coeffs_resonant(1.1, 0.6, 0.6, m, 2.0, t)
    closed = analytic.noon_fidelity_closed(c)
    dev = 0.0
    for k in range(len(t)):
        for rho4 in (analytic.reduced_boson_sup(c[k]), analytic.reduced_boson_th(c[k])):
            rho = analytic.embed_boson_state(rho4, m, N, N)
            dev = max(dev, abs(measures.noon_fidelity(rho, m, (N, N)) - closed[k]))
    return dev, 1e-12


@check("analytic", "bloch_vs_reduced_spin")
def _():
    m, phi, w0 = 2, 0.5, 2.0
    t = np.linspace(0, 6, 50)
    c = analytic.coeffs_resonant(phi, 0.6, 0.3, m, w0, t)
    gt = math.hypot(0.6, 0.3)
    bs = analytic.bloch_sup(phi, gt, m, w0, t)
    bt = analytic.bloch_th(math.sin(phi) ** 2, gt, m, t)
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0, -1.0])
    dev = 0.0
    for k in range(len(t)):
        for rho, b in ((analytic.reduced_spin_sup(c[k]), bs[k]), (analytic.reduced_spin_th(c[k]), bt[k])):
            tr = np.array([np.trace(rho @ s).real for s in (sx, sy, sz)])
            dev = max(dev, float(np.max(np.abs(tr - b))))
    return dev, 1e-12


@check("analytic", "gaussian_cross_block_vs_covariance")
def _():
    out = []
    t = np.linspace(0.1, 5, 12)
    for m in (1, 2):
        N = m + 2
        c = analytic.coeffs_resonant(0.8, 0.5, 0.7, m, float(m), t)
        dev = 0.0
        for k in range(len(t)):
            for rho4, blk in ((analytic.reduced_boson_sup(c[k]), analytic.gaussian_Cblock_sup(c[k])),
                              (analytic.reduced_boson_th(c[k]), analytic.gaussian_Cblock_th(c[k]))):
                cd = measures.covariance(analytic.embed_boson_state(rho4, m, N, N), (N, N))
                dev = max(dev, float(np.max(np.abs(cd.C - blk))))
        out.append((f"m{m}", dev, 1e-10))
    return out


# --- measures ---------------------------------------------------------------------------

@check("measures", "entropy_value")
def _():
    return abs(measures.von_neumann_entropy(np.diag([0.25, 0.75])) - 0.8112781244591328), 1e-12


@check("measures", "logneg_routes_agree")
def _():
    c = analytic.coeffs_resonant(0.9, 0.5, 0.8, 1, 1.0, np.linspace(0.1, 5, 15))
    dev = 0.0
    for k in range(15):
        rho = analytic.embed_boson_state(analytic.reduced_boson_sup(c[k]), 1, 3, 3)
        dev = max(dev, abs(measures.log_negativity(rho, (3, 3))
                           - measures.log_negativity_trace_norm(rho, (3, 3))))
    return dev, 1e-12


@check("measures", "covariance_thermal_vacuum")
def _():
    nbar, N = 0.7, 60
    rho = np.kron(states.thermal_mode(nbar, N), np.diag([1.0, 0, 0]).astype(complex))
    cd = measures.covariance(rho, (N, 3))
    want = np.diag([nbar + 0.5, nbar + 0.5, 0.5, 0.5])
    return max(float(np.max(np.abs(cd.V - want))), float(np.max(np.abs(cd.mean)))), 1e-10


@check("measures", "covariance_coherent_vacuum")
def _():
    alpha, N = 0.9, 40
    v = np.kron(states.coherent_state(alpha, N), np.array([1.0, 0, 0]))
    cd = measures.covariance(v, (N, 3))
    return max(float(np.max(np.abs(cd.V - 0.5 * np.eye(4)))),
               float(np.max(np.abs(cd.mean - [math.sqrt(2) * alpha, 0, 0, 0])))), 1e-10


@check("measures", "tmsv_gaussian_logneg")
def _():
    out = []
    for r in (0.1, 0.5, 1.2):
        val = measures.gaussian_log_negativity(measures.tmsv_covariance(r))
        out.append((f"r{r}", abs(val - math.log2(math.exp(2 * r))), 1e-8))
    return out


@check("measures", "simon_detC_vs_closed_form_m1")
def _():
    phi, w0 = math.asin(math.sqrt(0.5)), 1.0
    t = np.linspace(0.1, 8, 64)
    c = analytic.coeffs_resonant(phi, G, G, 1, w0, t)
    closed = analytic.detC_sup_m1(phi, G, G, w0, t)
    dev = 0.0
    for k in range(len(t)):
        rho = analytic.embed_boson_state(analytic.reduced_boson_sup(c[k]), 1, 2, 2)
        dev = max(dev, abs(measures.simon_detC(measures.covariance(rho, (2, 2))) - closed[k]))
    return dev, 1e-10, dev <= 1e-10, "reference closed form; known disagreement"


# --- dynamics ---------------------------------------------------------------------------

@check("dynamics", "unitary_vs_resonant_amplitudes")
def _():
    out = []
    for m in (1, 2, 3):
        space = fock_space(m + 1, m + 1)
        p = ModelParams.resonant(0.5, 0.8, m)
        phi = 0.7
        psi0 = states.compose_initial(SpinPrep.superposition(phi), VAC, VAC, space)
        t = np.linspace(0, 15, 200)
        traj = dynamics.unitary_evolve(model.mpjc_hamiltonian(p, space), psi0, t)
        num = np.array([dynamics.sector_amplitudes(traj.ket(k), space, m) for k in range(len(t))])
        ref = analytic.coeffs_resonant(phi, 0.5, 0.8, m, p.omega0, t).stack()
        out.append((f"m{m}", float(np.max(np.abs(num - ref))), 1e-10))
    return out


@check("dynamics", "ode_vs_detuned")
def _():
    t = np.linspace(0, 12, 120)
    p = ModelParams.resonant(0.5, 0.8, 2, detuning=0.7)
    ode = dynamics.coefficient_ode_evolve(p, 0.9, t).stack()
    ref = analytic.coeffs_detuned(0.9, 0.5, 0.8, 2, p.omega0, 0.7, t).stack()
    return float(np.max(np.abs(ode - ref))), 1e-9


@check("dynamics", "ode_vs_kerr_symmetric")
def _():
    t = np.linspace(0, 12, 120)
    p = ModelParams.resonant(0.5, 0.8, 3, chi1=0.3, chi2=0.3)
    ode = dynamics.coefficient_ode_evolve(p, 0.9, t).stack()
    ref = analytic.coeffs_kerr_symmetric(0.9, 0.5, 0.8, 3, p.omega0, 0.3, t).stack()
    return float(np.max(np.abs(ode - ref))), 1e-9


@check("dynamics", "lindblad_empty_is_unitary")
def _():
    space = fock_space(2, 2)
    p = ModelParams.resonant(G, G, 1)
    rho0 = states.compose_initial(SpinPrep.thermal(0.5), VAC, VAC, space)
    H = model.mpjc_hamiltonian(p, space)
    t = np.linspace(0, 10, 200)
    lt = dynamics.lindblad_evolve(H, [], rho0, t)
    ut = dynamics.unitary_evolve(H, rho0, t)
    return max(float(np.max(np.abs(lt[k] - ut.density(k)))) for k in range(len(t))), 1e-8


@check("dynamics", "lmax_estimate_vs_formula")
def _():
    out = []
    for p_e in (0.2, 0.5, 0.8):
        t = np.linspace(0, 2 * math.pi, 600)
        L = analytic.logneg_thermal_closed(p_e, G, G, 1, t)
        est = dynamics.lmax_estimate(L, t)
        out.append((f"p{p_e}", abs(est.value - float(analytic.lmax_thermal(p_e))), 1e-6))
    return out


# --- harness ----------------------------------------------------------------------------

@check("harness", "figure_2a_closed_form_overlay")
def _():
    from .figures import expand_figure
    from .config import config_from_dict
    from .runner import run_point
    dev = 0.0
    for curve in expand_figure("2a")[0].curves:
        cfg = config_from_dict(curve.raw)
        if cfg.spin.kind != "thermal":
            continue
        traj = run_point(cfg)
        ref = analytic.logneg_thermal_closed(cfg.spin.p_e, cfg.model.g1, cfg.model.g2, cfg.model.m,
                                             traj.times)
        dev = max(dev, float(np.max(np.abs(traj.records["L"] - ref))))
    return dev, 1e-6


@check("harness", "zero_time_grid_initial_measures")
def _():
    from .config import config_from_dict
    from .runner import run_point
    cfg = config_from_dict({"model": {"g": G, "m": 1}, "spin": {"kind": "superposition", "p_e": 0.3},
                            "grid": {"t0": 0, "t1": 0, "n_points": 1},
                            "observables": ["L", "C", "bloch"]})
    r = run_point(cfg).records
    phi = math.asin(math.sqrt(0.3))
    c0 = measures.coherence(np.array([[math.cos(phi) ** 2, math.cos(phi) * math.sin(phi)],
                                      [math.cos(phi) * math.sin(phi), math.sin(phi) ** 2]]))
    dev = max(abs(r["L"][0]), abs(r["C"][0] - c0), abs(r["bloch_x"][0] - math.sin(2 * phi)),
              abs(r["bloch_z"][0] - math.cos(2 * phi)))
    return dev, 1e-12


# --- acceptance criteria ----------------------------------------------------------------

@check("acceptance", "A1_closed_form_equivalence")
def _():
    out = []
    start = time.perf_counter()
    for m in (1, 2, 3):
        t = _two_rabi_periods(m)
        for p_e in (0.2, 0.5, 1.0):
            L_th, _, _ = _numeric_L(m, "thermal", p_e, t)
            ref = analytic.logneg_thermal_closed(p_e, G, G, m, t)
            out.append((f"thermal_m{m}_p{p_e}", float(np.max(np.abs(L_th - ref))), 1e-8))
            L_sup, _, _ = _numeric_L(m, "superposition", p_e, t)
            c = analytic.coeffs_resonant(math.asin(math.sqrt(p_e)), G, G, m, float(m), t)
            out.append((f"superposition_quartic_m{m}_p{p_e}",
                        float(np.max(np.abs(L_sup - _sup_L_quartic(c)))), 1e-8))
    elapsed = time.perf_counter() - start
    out.append(("runtime_s", elapsed, 10.0))
    return out


@check("acceptance", "A2_lmax_formulas")
def _():
    pes = np.round(np.arange(0, 101) * 0.01, 2)
    th, sup = [], []
    for p_e in pes:
        th.append(_first_peak(1, "thermal", p_e, n=300).value if p_e > 0 else 0.0)
        sup.append(_first_peak(1, "superposition", p_e, n=300).value if p_e > 0 else 0.0)
    th, sup = np.array(th), np.array(sup)
    gap = sup - th
    k = int(np.argmax(gap))
    return [("thermal", float(np.max(np.abs(th - analytic.lmax_thermal(pes)))), 1e-6),
            ("superposition", float(np.max(np.abs(sup - analytic.lmax_sup(pes)))), 1e-6),
            ("gap_argmax", abs(pes[k] - 0.43), 0.01 + 1e-12),
            ("gap_max", abs(gap[k] - 0.32), 0.01)]


@check("acceptance", "A3_genuine_non_gaussianity")
def _():
    out = []
    for m in (1, 2, 3):
        t = np.linspace(0, 2 * 2 * math.pi / analytic.rabi_frequency(G, G, m), 64)
        space = fock_space(m + 1, m + 1)
        H = model.mpjc_hamiltonian(ModelParams.resonant(G, G, m), space)
        for kind in ("thermal", "superposition"):
            for p_e in (0.2, 0.5, 1.0):
                ens = states.initial_ensemble(SpinPrep.from_pe(kind, p_e), VAC, VAC, space)
                traj = dynamics.unitary_evolve(H, ens, t)
                lg, dc = 0.0, math.inf
                for k in range(len(t)):
                    cd = measures.covariance(partial_trace(traj.density(k), [1, 2], space),
                                             (m + 1, m + 1))
                    lg = max(lg, measures.gaussian_log_negativity(cd))
                    dc = min(dc, measures.simon_detC(cd))
                out.append((f"L_gauss_{kind}_m{m}_p{p_e}", lg, 0.0, lg == 0.0))
                out.append((f"detC_{kind}_m{m}_p{p_e}", -dc, 1e-12))
    phi = math.asin(math.sqrt(0.5))
    t = np.linspace(0.1, 2 * 2 * math.pi, 64)
    c = analytic.coeffs_resonant(phi, G, G, 1, 1.0, t)
    closed = analytic.detC_sup_m1(phi, G, G, 1.0, t)
    dev = 0.0
    for k in range(len(t)):
        rho = analytic.embed_boson_state(analytic.reduced_boson_sup(c[k]), 1, 2, 2)
        dev = max(dev, abs(measures.simon_detC(measures.covariance(rho, (2, 2))) - closed[k]))
    out.append(("detC_closed_form_m1", dev, 1e-10))
    return out


@check("acceptance", "A4_noon_engineering")
def _():
    out = []
    for m in (1, 2, 3):
        g = 0.6
        space = fock_space(m + 1, m + 1)
        H = model.mpjc_hamiltonian(ModelParams.resonant(g, g, m), space)
        tn = math.pi / (2 * math.sqrt(math.factorial(m) * 2 * g * g))
        psi0 = states.compose_initial(SpinPrep.thermal(1.0), VAC, VAC, space)
        rho = dynamics.unitary_evolve(H, psi0, [tn]).density(0)
        F = measures.noon_fidelity(partial_trace(rho, [1, 2], space), m, (m + 1, m + 1))
        out.append((f"fidelity_m{m}", abs(F - 1), 1e-8))
        ket = dynamics.unitary_evolve(H, states.compose_initial(SpinPrep.superposition(math.pi / 2),
                                                                 VAC, VAC, space), [tn]).ket(0)
        proj, prob = measures.spin_ground_projection(ket, 0)
        Fp = measures.noon_fidelity(proj / math.sqrt(prob), m, (m + 1, m + 1))
        out.append((f"projection_probability_m{m}", abs(prob - 1), 1e-8))
        out.append((f"projection_fidelity_m{m}", abs(Fp - 1), 1e-8))
    return out


@check("acceptance", "A5_kerr")
def _():
    out = []
    t = np.linspace(0, 10, 200)
    space = fock_space(2, 2)
    for kind in ("thermal", "superposition"):
        ens = states.initial_ensemble(SpinPrep.from_pe(kind, 0.5), VAC, VAC, space)
        runs = []
        for chi1, chi2 in ((0, 0), (1, 0), (1, 1)):
            p = ModelParams.resonant(G, G, 1, chi1=chi1, chi2=chi2)
            traj = dynamics.unitary_evolve(model.full_hamiltonian(p, space), ens, t)
            rec = dynamics.record_trajectory(traj, space, ["L", "C"])
            runs.append(rec.records)
        dev = max(float(np.max(np.abs(r[o] - runs[0][o]))) for r in runs[1:] for o in ("L", "C"))
        out.append((f"m1_invariance_{kind}", dev, 1e-8))
    m, chi = 2, 0.4
    space = fock_space(3, 3)
    p = ModelParams.resonant(G, G, m, chi1=chi, chi2=chi)
    phi = 0.8
    psi0 = states.compose_initial(SpinPrep.superposition(phi), VAC, VAC, space)
    traj = dynamics.unitary_evolve(model.full_hamiltonian(p, space), psi0, t)
    num = np.array([dynamics.sector_amplitudes(traj.ket(k), space, m) for k in range(len(t))])
    ref = analytic.coeffs_detuned(phi, G, G, m, p.omega0, -2 * chi, t).stack()
    out.append(("m2_symmetric_vs_detuned", float(np.max(np.abs(num - ref))), 1e-8))
    return out


@check("acceptance", "A6_speedup_scaling")
def _():
    t1 = _first_peak(1, "thermal", 1.0).time
    t3 = _first_peak(3, "thermal", 1.0).time
    return abs(t1 / t3 - math.sqrt(6)), 1e-3


def _open_first_peak(bath, p_e=0.5, cutoff=8, n=200):
    space = fock_space(cutoff, cutoff)
    p = ModelParams.resonant(G, G, 1)
    H = model.mpjc_hamiltonian(p, space)
    rho0 = states.compose_initial(SpinPrep.thermal(p_e), VAC, VAC, space)
    t = np.linspace(0, 2 * math.pi, n)
    masks = dynamics.model_boundary_masks(space, p, bath)
    start = time.perf_counter()
    if bath is None:
        traj = dynamics.record_trajectory(dynamics.unitary_evolve(H, rho0, t), space, ["L"],
                                          leak_masks=masks)
    else:
        traj = dynamics.record_lindblad(H, model.lindblad_ops(bath, space), rho0, t, space, ["L"],
                                        leak_masks=masks)
    return dynamics.lmax_estimate(traj.records["L"], t).value, time.perf_counter() - start, traj.leakage_max


@check("acceptance", "A7_open_system_ordering")
def _():
    r = 0.05
    Lu, _, _ = _open_first_peak(None)
    Ld, td, _ = _open_first_peak(BathParams(0.0, rb=r, rq=r))
    Lp, tp, _ = _open_first_peak(BathParams(0.0, db=r, dq=r))
    Lb0, t0, _ = _open_first_peak(BathParams(0.0, r, r, r, r))
    Lb2, t2, leak2 = _open_first_peak(BathParams(0.2, r, r, r, r))
    Lb5, t5, leak5 = _open_first_peak(BathParams(0.5, r, r, r, r))
    return [("unitary_gt_dissipation", Ld - Lu, 0.0, Lu > Ld),
            ("dissipation_gt_both", Lb0 - Ld, 0.0, Ld > Lb0),
            ("dephasing_lt_dissipation", Lp - Ld, 0.0, Lp < Ld),
            ("nth_0_gt_0.2", Lb2 - Lb0, 0.0, Lb0 > Lb2),
            ("nth_0.2_gt_0.5", Lb5 - Lb2, 0.0, Lb2 > Lb5),
            ("runtime_s", max(td, tp, t0, t2, t5), 60.0),
            ("cutoff8_leakage_nth0.5", leak5, math.inf, True,
             f"boundary population at the literal cutoff 8 (n_th=0.2: {leak2:.3g})")]


def _max_coherence(m, gz, p_e, single):
    from .config import config_from_dict
    from .runner import run_point
    if single:
        raw = {"modes": 1, "model": {"g1": 1.0, "g2": 0.0, "m": m, "gz1": gz}}
    else:
        raw = {"model": {"g": G, "m": m, "gz": gz}}
    raw.update(spin={"kind": "thermal", "p_e": p_e}, observables=["C"],
               grid={"t0": 0, "t1": 10, "n_points": 200, "units": "t"})
    return float(np.max(run_point(config_from_dict(raw)).records["C"]))


@check("acceptance", "A8_dispersive_coherence")
def _():
    out = []
    for single in (False, True):
        tag = "single" if single else "two"
        for m in (1, 2):
            for p_e in (0.0, 0.5, 1.0):
                for gz in (0.5, 1.0):
                    c = _max_coherence(m, gz, p_e, single)
                    out.append((f"{tag}_m{m}_p{p_e}_gz{gz}", 1e-3 - c, 0.0, c > 1e-3))
                c0 = _max_coherence(m, 0.0, p_e, single)
                out.append((f"{tag}_m{m}_p{p_e}_gz0", c0, 1e-10))
    return out


@check("acceptance", "A9_fig8_qualitative")
def _():
    from .config import config_from_dict
    from .runner import run_point
    out = []
    raw = {"model": {"g": G, "m": 1}, "spin": {"kind": "thermal", "p_e": 1.0},
           "mode1": {"kind": "squeezed_vacuum", "nbar": 1}, "observables": ["L"],
           "grid": {"t0": 0, "t1": 10, "n_points": 200, "units": "gt"}}
    Lmax = float(np.max(run_point(config_from_dict(raw)).records["L"]))
    out.append(("sqv_exceeds_one", 1 - Lmax, 0.0, Lmax > 1))
    for m in (1, 2):
        period = math.pi / math.sqrt(math.factorial(m) * 2 * G * G)
        for n in range(m + 1):
            raw = {"model": {"g": G, "m": m}, "spin": {"kind": "thermal", "p_e": 0.0},
                   "mode1": {"kind": "fock", "n": n}, "observables": ["L"],
                   "grid": {"t0": 0, "t1": 2 * period, "n_points": 401, "units": "t"}}
            L = run_point(config_from_dict(raw)).records["L"]
            out.append((f"fock_n{n}_m{m}_separable", float(np.max(L)), 1e-10))
            if n == m:
                half = (len(L) - 1) // 2
                out.append((f"fock_n{n}_m{m}_period", float(np.max(np.abs(L[:half + 1] - L[half:]))),
                            1e-8))
    return out
