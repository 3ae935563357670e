"""Acceptance criteria 1-10, each computed through the public API and checked
against oracles written out here. Run with ``pytest tests/test_acceptance.py``;
the terminal summary lists one PASS/FAIL line per criterion."""
import json
import math
import time

import numpy as np

from mpjc import analytic, dynamics, measures, model, states
from mpjc.harness.cli import main
from mpjc.harness.config import config_from_dict
from mpjc.harness.runner import run_point
from mpjc.hilbert import fock_space, partial_trace
from mpjc.model import BathParams, ModelParams
from mpjc.states import ModePrep, SpinPrep

G = 1 / math.sqrt(2)
VAC = ModePrep.vacuum()


def rabi(m, g1=G, g2=G):
    return math.sqrt(math.factorial(m) * (g1 ** 2 + g2 ** 2))


def evolve_sector(m, kind, p_e, t, **model_kw):
    p = ModelParams.resonant(G, G, m, **model_kw)
    space = fock_space(m + 1, m + 1)
    rho0 = states.compose_initial(SpinPrep.from_pe(kind, p_e), VAC, VAC, space)
    return space, dynamics.unitary_evolve(model.full_hamiltonian(p, space), rho0, t)


def boson_states(space, traj):
    return [partial_trace(traj.density(k), [1, 2], space) for k in range(len(traj))]


def spin_states(space, traj):
    return [partial_trace(traj.density(k), [0], space) for k in range(len(traj))]


def numeric_L(m, kind, p_e, t, **model_kw):
    space, traj = evolve_sector(m, kind, p_e, t, **model_kw)
    return np.array([measures.log_negativity(r, space.mode_dims) for r in boson_states(space, traj)])


def lmax_sup_formula(p_e):
    return math.log2(1 + p_e)


def lmax_th_formula(p_e):
    return math.log2(p_e + math.sqrt(1 - 2 * p_e + 2 * p_e ** 2))


def test_criterion_01_closed_form_equivalence(record_property):
    start = time.perf_counter()
    worst = 0.0
    for m in (1, 2, 3):
        t = np.linspace(0, 4 * math.pi / rabi(m), 600)
        for p_e in (0.2, 0.5, 1.0):
            dev = np.max(np.abs(numeric_L(m, "thermal", p_e, t) - analytic.logneg_thermal_closed(p_e, G, G, m, t)))
            worst = max(worst, float(dev))
    elapsed = time.perf_counter() - start
    record_property("detail", f"max |L_num - L_closed| = {worst:.2e} (< 1e-8), {elapsed:.1f} s (< 10 s)")
    assert worst < 1e-8
    assert elapsed < 10


def test_criterion_02_lmax_formulas(record_property):
    t = np.linspace(0, 2 * math.pi / rabi(1), 600)
    p_grid = np.round(np.arange(0, 101) * 0.01, 2)
    sup, th, worst = [], [], 0.0
    for p_e in p_grid:
        ls = dynamics.lmax_estimate(numeric_L(1, "superposition", p_e, t), t).value
        lt = dynamics.lmax_estimate(numeric_L(1, "thermal", p_e, t), t).value
        worst = max(worst, abs(ls - lmax_sup_formula(p_e)), abs(lt - lmax_th_formula(p_e)))
        sup.append(ls)
        th.append(lt)
    gap = np.array(sup) - np.array(th)
    k = int(np.argmax(gap))
    record_property("detail", f"max formula deviation {worst:.2e} (< 1e-6); gap peak "
                              f"({p_grid[k]:.2f}, {gap[k]:.4f}) vs (0.43, 0.32) +- 0.01")
    assert worst < 1e-6
    assert abs(p_grid[k] - 0.43) <= 0.01 and abs(gap[k] - 0.32) <= 0.01


def test_criterion_03_genuine_non_gaussianity(record_property):
    worst_lg, worst_neg_detc, worst_closed = 0.0, 0.0, 0.0
    where = ""
    for m in (1, 2, 3):
        t = np.linspace(0, 4 * math.pi / rabi(m), 64)
        for kind in ("superposition", "thermal"):
            for p_e in (0.2, 0.5, 1.0):
                space, traj = evolve_sector(m, kind, p_e, t)
                for k, rho_b in enumerate(boson_states(space, traj)):
                    cd = measures.covariance(rho_b, space.mode_dims)
                    lg = measures.gaussian_log_negativity(cd)
                    dc = measures.simon_detC(cd)
                    if lg > worst_lg:
                        worst_lg, where = lg, f"m={m} {kind} p_e={p_e}"
                    worst_neg_detc = max(worst_neg_detc, -dc)
                    if m == 1 and kind == "superposition":
                        closed = float(analytic.detC_sup_m1(math.asin(math.sqrt(p_e)), G, G, 1.0, t[k]))
                        worst_closed = max(worst_closed, abs(dc - closed))
    record_property("detail", f"max L_Gauss {worst_lg:.3g} (must be 0; worst at {where or 'none'}); "
                              f"min detC {-worst_neg_detc:.2e} (>= -1e-12); "
                              f"m=1 detC vs closed form {worst_closed:.3g} (< 1e-10)")
    assert worst_lg == 0.0
    assert worst_neg_detc <= 1e-12
    assert worst_closed < 1e-10


def noon_ket(m, N):
    psi = np.zeros(N * N)
    psi[m * N] = psi[m] = 1 / math.sqrt(2)
    return psi


def test_criterion_04_noon_engineering(record_property):
    worst_f, worst_p, worst_proj = 0.0, 0.0, 0.0
    for m in (1, 2, 3):
        t_star = math.pi / (2 * rabi(m))
        space, traj = evolve_sector(m, "thermal", 1.0, [t_star])
        ref = noon_ket(m, m + 1)
        rho_b = boson_states(space, traj)[0]
        worst_f = max(worst_f, abs(np.vdot(ref, rho_b @ ref).real - 1))
        _, traj_sup = evolve_sector(m, "superposition", 1.0, [t_star])
        out, prob = measures.spin_ground_projection(traj_sup[0])
        worst_p = max(worst_p, abs(prob - 1))
        worst_proj = max(worst_proj, abs(abs(np.vdot(ref, out)) ** 2 - 1))
    record_property("detail", f"|F_NOON - 1| {worst_f:.1e}, |P_success - 1| {worst_p:.1e}, "
                              f"|projected fidelity - 1| {worst_proj:.1e} (all < 1e-8)")
    assert worst_f < 1e-8 and worst_p < 1e-8 and worst_proj < 1e-8


def test_criterion_05_kerr(record_property):
    t = np.linspace(0, 10 / (2 * G * G) ** 0.5, 300)
    worst_m1 = 0.0
    for kind in ("superposition", "thermal"):
        base = None
        for chi1, chi2 in ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0)):
            space, traj = evolve_sector(1, kind, 0.5, t, chi1=chi1, chi2=chi2)
            L = np.array([measures.log_negativity(r, space.mode_dims) for r in boson_states(space, traj)])
            C = np.array([measures.coherence(r) for r in spin_states(space, traj)])
            if base is None:
                base = (L, C)
            else:
                worst_m1 = max(worst_m1, np.max(np.abs(L - base[0])), np.max(np.abs(C - base[1])))
    worst_m2 = 0.0
    phi = math.pi / 4
    for chi in (0.5, 1.0):
        p = ModelParams.resonant(G, G, 2, chi1=chi, chi2=chi)
        space = fock_space(3, 3)
        psi0 = states.compose_initial(SpinPrep.superposition(phi), VAC, VAC, space)
        traj = dynamics.unitary_evolve(model.full_hamiltonian(p, space), psi0, t)
        ref = analytic.coeffs_detuned(phi, G, G, 2, p.omega0, -2 * chi, t).stack()
        for k in range(len(t)):
            worst_m2 = max(worst_m2, np.max(np.abs(dynamics.sector_amplitudes(traj[k], space, 2) - ref[k])))
    record_property("detail", f"m=1 chi on/off max deviation {worst_m1:.1e}; "
                              f"m=2 vs detuned Delta=-2chi {worst_m2:.1e} (both < 1e-8)")
    assert worst_m1 < 1e-8 and worst_m2 < 1e-8


def test_criterion_06_speedup_scaling(record_property):
    tau = np.linspace(0, 10, 600)
    peaks = {}
    for m in (1, 3):
        t = tau / math.hypot(G, G)
        peaks[m] = dynamics.lmax_estimate(numeric_L(m, "thermal", 1.0, t), t).time
    ratio = peaks[1] / peaks[3]
    record_property("detail", f"t*(m=1)/t*(m=3) = {ratio:.6f} vs sqrt(6) = {math.sqrt(6):.6f} (+- 1e-3)")
    assert abs(ratio - math.sqrt(6)) < 1e-3


def open_first_peak(bath):
    space = fock_space(8, 8)
    p = ModelParams.resonant(G, G, 1)
    H = model.mpjc_hamiltonian(p, space)
    rho0 = states.compose_initial(SpinPrep.thermal(0.5), VAC, VAC, space)
    t = np.linspace(0, 2 * math.pi / p.g_tilde, 200)
    start = time.perf_counter()
    if bath is None:
        L = dynamics.record_trajectory(dynamics.unitary_evolve(H, rho0, t), space, ["L"]).records["L"]
    else:
        L = dynamics.record_lindblad(H, model.lindblad_ops(bath, space), rho0, t, space, ["L"]).records["L"]
    return dynamics.lmax_estimate(L, t).value, time.perf_counter() - start


def test_criterion_07_open_system_ordering(record_property):
    r = 0.05
    Lu, _ = open_first_peak(None)
    Ld, td = open_first_peak(BathParams(0.0, rb=r, rq=r))
    Lp, tp = open_first_peak(BathParams(0.0, db=r, dq=r))
    Lb = {}
    tb = []
    for n_th in (0.0, 0.2, 0.5):
        Lb[n_th], dt = open_first_peak(BathParams(n_th, r, r, r, r))
        tb.append(dt)
    slowest = max(td, tp, *tb)
    claims = {
        "unitary > dissipation": Lu > Ld,
        "dissipation > both": Ld > Lb[0.0],
        "dephasing < dissipation": Lp < Ld,
        "n_th 0 > 0.2 > 0.5": Lb[0.0] > Lb[0.2] > Lb[0.5],
        "each run < 60 s": slowest < 60,
    }
    failed = [k for k, ok in claims.items() if not ok]
    record_property("detail", f"first peaks: unitary {Lu:.4f}, dissipation {Ld:.4f}, dephasing {Lp:.4f}, "
                              f"both {Lb[0.0]:.4f}/{Lb[0.2]:.4f}/{Lb[0.5]:.4f}; slowest run {slowest:.1f} s; "
                              f"failed: {', '.join(failed) or 'none'}")
    assert not failed


def max_coherence(m, gz, p_e, single):
    if single:
        raw = {"modes": 1, "model": {"g1": 1.0, "g2": 0.0, "m": m, "gz1": gz}}
    else:
        raw = {"model": {"g": G, "m": m, "gz": gz}}
    raw.update(spin={"kind": "thermal", "p_e": p_e}, observables=["C"],
               grid={"t0": 0, "t1": 10, "n_points": 200, "units": "t"})
    traj = run_point(config_from_dict(raw))
    assert traj.valid
    return float(np.max(traj.records["C"]))


def test_criterion_08_dispersive_coherence(record_property):
    weakest, strongest_off = math.inf, 0.0
    for single in (False, True):
        for m in (1, 2):
            for p_e in (0.0, 0.5, 1.0):
                for gz in (0.5, 1.0):
                    weakest = min(weakest, max_coherence(m, gz, p_e, single))
                strongest_off = max(strongest_off, max_coherence(m, 0.0, p_e, single))
    record_property("detail", f"min over cases of max C with g_z > 0: {weakest:.3g} (> 1e-3); "
                              f"max C with g_z = 0: {strongest_off:.1e} (< 1e-10)")
    assert weakest > 1e-3 and strongest_off < 1e-10


def test_criterion_09_fig8_qualitative(record_property):
    raw = {"model": {"g": G, "m": 1}, "spin": {"kind": "thermal", "p_e": 1.0},
           "mode1": {"kind": "squeezed_vacuum", "nbar": 1}, "observables": ["L"],
           "grid": {"t0": 0, "t1": 10, "n_points": 200, "units": "gt"}}
    sqv_max = float(np.max(run_point(config_from_dict(raw)).records["L"]))
    fock_max, period_dev = {}, 0.0
    for m in (1, 2):
        period = math.pi / rabi(m)
        for n in range(m + 1):
            raw = {"model": {"g": G, "m": m}, "spin": {"kind": "thermal", "p_e": 0.0},
                   "mode1": {"kind": "fock", "n": n}, "observables": ["L"],
                   "grid": {"t0": 0, "t1": 2 * period, "n_points": 401, "units": "t"}}
            L = run_point(config_from_dict(raw)).records["L"]
            fock_max[(m, n)] = float(np.max(L))
            if n == m:
                half = (len(L) - 1) // 2
                period_dev = max(period_dev, float(np.max(np.abs(L[:half + 1] - L[half:]))))
    entangled = {k: v for k, v in fock_max.items() if v >= 1e-10}
    record_property("detail", f"SQV max L {sqv_max:.4f} (> 1); Fock n <= m max L "
                              f"{max(fock_max.values()):.3g} (< 1e-10; entangled cases (m, n): "
                              f"{sorted(entangled) or 'none'}); period deviation {period_dev:.1e}")
    assert sqv_max > 1
    assert not entangled
    assert period_dev < 1e-8


def test_criterion_10_validation_suite(record_property, capsys):
    start = time.perf_counter()
    code = main(["validate"])
    elapsed = time.perf_counter() - start
    report = json.loads(capsys.readouterr().out)
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    record_property("detail", f"exit {code}, {report['n_checks']} checks, {len(failed)} failed "
                              f"({', '.join(failed) or 'none'}), {elapsed:.0f} s (< 300 s)")
    assert elapsed < 300
    assert code == 0
