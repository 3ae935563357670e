"""Closed-form solutions for ground-state bosons and a single spin excitation.

With both modes in vacuum the dynamics stays in the four-state sector
``{|g00>, |e00>, |g m 0>, |g 0 m>}`` and the amplitudes ``x1..x4`` on these
states are known in closed form. Everything here is an independent oracle
for the numerical propagators: no function builds a Hamiltonian.

Time arguments may be scalars or arrays; amplitudes broadcast accordingly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import exact_factorial


@dataclass(frozen=True)
class Coefficients:
    """Amplitudes on ``|g00>, |e00>, |g m 0>, |g 0 m>`` at times ``t``."""

    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray
    x4: np.ndarray
    t: np.ndarray
    g1: float
    g2: float
    m: int

    @property
    def g_tilde(self) -> float:
        return math.hypot(self.g1, self.g2)

    @property
    def g12(self) -> float:
        return 2 * self.g1 * self.g2 / (self.g1 ** 2 + self.g2 ** 2)

    @property
    def tau(self) -> np.ndarray:
        return math.sqrt(exact_factorial(self.m)) * self.g_tilde * np.asarray(self.t)

    def stack(self) -> np.ndarray:
        """Amplitudes as an array of shape ``t.shape + (4,)``."""
        return np.stack(np.broadcast_arrays(self.x1, self.x2, self.x3, self.x4), axis=-1)

    def norm2(self) -> np.ndarray:
        return np.sum(np.abs(self.stack()) ** 2, axis=-1)

    def __getitem__(self, k) -> "Coefficients":
        x = self.stack()[k]
        return Coefficients(x[..., 0], x[..., 1], x[..., 2], x[..., 3],
                            np.asarray(self.t)[k], self.g1, self.g2, self.m)


def rabi_frequency(g1: float, g2: float, m: int) -> float:
    """``sqrt(m! (g1^2 + g2^2))``."""
    return math.sqrt(exact_factorial(m) * (g1 ** 2 + g2 ** 2))


def coeffs_detuned(phi: float, g1: float, g2: float, m: int, omega0: float,
                   delta: float, t) -> Coefficients:
    """Amplitudes for equal detuning ``delta`` on both modes.

    The excited/emitted pair oscillates at ``s = sqrt(4 m! g^2 + delta^2)/2``
    about a common phase ``exp(i(delta - omega0) t/2)``.
    """
    t = np.asarray(t, dtype=float)
    fm = exact_factorial(m)
    gt = math.hypot(g1, g2)
    s = 0.5 * math.sqrt(4 * fm * gt ** 2 + delta ** 2)
    sinp, cosp = math.sin(phi), math.cos(phi)
    x1 = cosp * np.exp(0.5j * omega0 * t)
    if s == 0:
        x2 = sinp * np.exp(-0.5j * omega0 * t) + 0 * t
        zero = np.zeros_like(x2)
        return Coefficients(x1, x2, zero, zero.copy(), t, g1, g2, m)
    common = np.exp(0.5j * (delta - omega0) * t)
    st = s * t
    x2 = sinp * (np.cos(st) - 0.5j * delta / s * np.sin(st)) * common
    emit = -1j * math.sqrt(fm) / s * sinp * np.sin(st) * common
    return Coefficients(x1, x2, g1 * emit, g2 * emit, t, g1, g2, m)


def coeffs_resonant(phi: float, g1: float, g2: float, m: int, omega0: float, t) -> Coefficients:
    """Resonant amplitudes; Rabi frequency ``sqrt(m!) g_tilde``."""
    t = np.asarray(t, dtype=float)
    gt = math.hypot(g1, g2)
    w = rabi_frequency(g1, g2, m)
    sinp = math.sin(phi)
    back = np.exp(-0.5j * omega0 * t)
    x1 = math.cos(phi) * np.exp(0.5j * omega0 * t)
    x2 = sinp * np.cos(w * t) * back
    if gt == 0:
        zero = np.zeros_like(x2)
        return Coefficients(x1, x2, zero, zero.copy(), t, g1, g2, m)
    emit = -1j * sinp * np.sin(w * t) * back / gt
    return Coefficients(x1, x2, g1 * emit, g2 * emit, t, g1, g2, m)


def kerr_detuning(chi: float, m: int, delta: float = 0.0) -> float:
    """Effective detuning once the Kerr shift ``chi (m^2 - m)`` of ``|m>`` is absorbed."""
    return delta - chi * (m * m - m)


def coeffs_kerr_symmetric(phi: float, g1: float, g2: float, m: int, omega0: float,
                          chi: float, t, delta: float = 0.0) -> Coefficients:
    """Equal Kerr strength ``chi`` on both modes, mapped onto a detuned problem."""
    return coeffs_detuned(phi, g1, g2, m, omega0, kerr_detuning(chi, m, delta), t)


# --- reduced states ------------------------------------------------------------

def _outer(v: np.ndarray) -> np.ndarray:
    return v[..., :, None] * v[..., None, :].conj()


def reduced_boson_sup(c: Coefficients) -> np.ndarray:
    """Two-mode state for the superposition spin, basis ``|00>, |0m>, |m0>, |mm>``."""
    x = c.stack()
    v = np.stack([x[..., 0], x[..., 3], x[..., 2], np.zeros_like(x[..., 0])], axis=-1)
    rho = _outer(v)
    rho[..., 0, 0] += np.abs(x[..., 1]) ** 2
    return rho


def reduced_boson_th(c: Coefficients) -> np.ndarray:
    """Two-mode state for the thermal spin: no coherence between ``|00>`` and the rest."""
    x = c.stack()
    zero = np.zeros_like(x[..., 0])
    v = np.stack([zero, x[..., 3], x[..., 2], zero], axis=-1)
    rho = _outer(v)
    rho[..., 0, 0] += np.abs(x[..., 0]) ** 2 + np.abs(x[..., 1]) ** 2
    return rho


def reduced_spin_sup(c: Coefficients) -> np.ndarray:
    """Spin state in the ``(g, e)`` order."""
    x = c.stack()
    p_e = np.abs(x[..., 1]) ** 2
    rho = np.empty(x.shape[:-1] + (2, 2), dtype=complex)
    rho[..., 0, 0] = np.abs(x[..., 0]) ** 2 + np.abs(x[..., 2]) ** 2 + np.abs(x[..., 3]) ** 2
    rho[..., 1, 1] = p_e
    rho[..., 0, 1] = x[..., 0] * x[..., 1].conj()
    rho[..., 1, 0] = rho[..., 0, 1].conj()
    return rho


def reduced_spin_th(c: Coefficients) -> np.ndarray:
    rho = reduced_spin_sup(c)
    rho[..., 0, 1] = 0
    rho[..., 1, 0] = 0
    return rho


# --- entanglement closed forms ---------------------------------------------------

def logneg_thermal_closed(p_e: float, g1: float, g2: float, m: int, t) -> np.ndarray:
    """Log-negativity for a thermal spin and ground-state bosons at resonance."""
    tau = rabi_frequency(g1, g2, m) * np.asarray(t, dtype=float)
    g12 = 2 * g1 * g2 / (g1 ** 2 + g2 ** 2)
    s2 = np.sin(tau) ** 2
    arg = p_e * s2 + np.sqrt(1 - 2 * p_e * s2 + (1 + g12 ** 2) * p_e ** 2 * s2 ** 2)
    return np.log2(arg)


def lmax_thermal(p_e):
    """Peak log-negativity for a thermal spin (equal couplings)."""
    p_e = np.asarray(p_e, dtype=float)
    return np.log2(p_e + np.sqrt(1 - 2 * p_e + 2 * p_e ** 2))


def lmax_sup(p_e):
    """Peak log-negativity for a superposition spin (equal couplings)."""
    return np.log2(1 + np.asarray(p_e, dtype=float))


def pt_spectrum_thermal(c: Coefficients):
    """Nontrivial partial-transpose eigenvalues ``(lam_plus, lam_minus)`` and ``|x3|^2, |x4|^2``."""
    x = c.stack()
    a = np.abs(x[..., 0]) ** 2 + np.abs(x[..., 1]) ** 2
    p3, p4 = np.abs(x[..., 2]) ** 2, np.abs(x[..., 3]) ** 2
    root = np.sqrt(a * a + 4 * p3 * p4)
    return 0.5 * (a + root), 0.5 * (a - root), p3, p4


def logneg_from_spectrum(lam_minus) -> np.ndarray:
    return np.log2(1 + 2 * np.abs(np.minimum(lam_minus, 0.0)))


def quartic_coeffs_sup(c: Coefficients) -> np.ndarray:
    """Characteristic-polynomial coefficients (highest power first) of the
    partially transposed superposition-case boson state."""
    x = c.stack()
    p2, p3, p4 = (np.abs(x[..., k]) ** 2 for k in (1, 2, 3))
    one = np.ones_like(p2)
    return np.stack([one, -one, p2 * (p3 + p4), p3 * p4 * (1 - 2 * p2), -(p3 * p4) ** 2], axis=-1)


def noon_fidelity_closed(c: Coefficients) -> np.ndarray:
    """Overlap with ``(|m0> + |0m>)/sqrt(2)``; same for either spin preparation."""
    return 0.5 * np.abs(c.x3 + c.x4) ** 2


# --- Bloch vectors -----------------------------------------------------------------

def bloch_sup(phi: float, g_tilde: float, m: int, omega0: float, t) -> np.ndarray:
    """Bloch vector ``(<sx>, <sy>, <sz>)`` with Pauli matrices in the ``(g, e)`` basis.

    In this convention ``z = p_g - p_e``.
    """
    t = np.asarray(t, dtype=float)
    w = math.sqrt(exact_factorial(m)) * g_tilde
    amp = math.sin(2 * phi) * np.cos(w * t)
    z = 1 - 2 * math.sin(phi) ** 2 * np.cos(w * t) ** 2
    return np.stack([amp * np.cos(omega0 * t), -amp * np.sin(omega0 * t), z], axis=-1)


def bloch_th(p_e: float, g_tilde: float, m: int, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    w = math.sqrt(exact_factorial(m)) * g_tilde
    z = 1 - 2 * p_e * np.cos(w * t) ** 2
    zero = np.zeros_like(z)
    return np.stack([zero, zero, z], axis=-1)


# --- Gaussian reference state --------------------------------------------------------

def _cblock(a1, a2, k) -> np.ndarray:
    """Cross block from ``<a1>, <a2>`` and ``k = <a1 a2^dag>`` when ``<a1 a2> = 0``.

    Quadratures are ``X = (a + a^dag)/sqrt(2)``, ``P = -i(a - a^dag)/sqrt(2)``.
    """
    a1, a2, k = np.broadcast_arrays(*(np.asarray(v, dtype=complex) for v in (a1, a2, k)))
    out = np.empty(k.shape + (2, 2))
    out[..., 0, 0] = k.real - 2 * a1.real * a2.real
    out[..., 0, 1] = -k.imag - 2 * a1.real * a2.imag
    out[..., 1, 0] = k.imag - 2 * a1.imag * a2.real
    out[..., 1, 1] = k.real - 2 * a1.imag * a2.imag
    return out


def gaussian_Cblock_sup(c: Coefficients, m: int | None = None) -> np.ndarray:
    """Mode-1/mode-2 covariance block of the superposition-case boson state.

    Nonzero only for single-photon coupling; for ``m >= 2`` no quadrature
    moment connects the two modes.
    """
    m = c.m if m is None else m
    if m != 1:
        return np.zeros(np.shape(c.x1) + (2, 2))
    return _cblock(c.x3 * np.conj(c.x1), c.x4 * np.conj(c.x1), c.x3 * np.conj(c.x4))


def gaussian_Cblock_th(c: Coefficients, m: int | None = None) -> np.ndarray:
    """As :func:`gaussian_Cblock_sup` for the thermal spin (no first moments)."""
    m = c.m if m is None else m
    if m != 1:
        return np.zeros(np.shape(c.x1) + (2, 2))
    zero = np.zeros_like(c.x3)
    return _cblock(zero, zero, c.x3 * np.conj(c.x4))


def detC_sup_m1(phi: float, g1: float, g2: float, omega0: float, t) -> np.ndarray:
    """Reference closed form for ``det C`` of the m = 1 superposition case.

    Kept for comparison. It disagrees with the determinant of
    :func:`gaussian_Cblock_sup`, which follows from the state itself.
    """
    t = np.asarray(t, dtype=float)
    gt = math.hypot(g1, g2)
    pref = g1 ** 2 * g2 ** 2 / (2 * math.sqrt(2) * gt ** 4)
    return (pref * math.sin(phi) ** 2 * math.sin(2 * phi) ** 2 * np.sin(gt * t) ** 4
            * np.cos(omega0 * t + math.pi / 4) ** 2)


def embed_boson_state(rho4: np.ndarray, m: int, n1_cut: int, n2_cut: int) -> np.ndarray:
    """Place a ``|00>, |0m>, |m0>, |mm>`` basis state into full two-mode Fock space."""
    if n1_cut < m + 1 or n2_cut < m + 1:
        raise ValueError(f"cutoffs must be >= m+1 = {m + 1}")
    idx = np.array([0, m, m * n2_cut, m * n2_cut + m])
    out = np.zeros((n1_cut * n2_cut,) * 2, dtype=complex)
    out[np.ix_(idx, idx)] = rho4
    return out


def sector_state(c: Coefficients, n1_cut: int, n2_cut: int) -> np.ndarray:
    """Full tripartite ket ``x1|g00> + x2|e00> + x3|g m 0> + x4|g 0 m>`` (single time)."""
    m = c.m
    if n1_cut < m + 1 or n2_cut < m + 1:
        raise ValueError(f"cutoffs must be >= m+1 = {m + 1}")
    block = n1_cut * n2_cut
    psi = np.zeros(2 * block, dtype=complex)
    psi[0] = c.x1
    psi[block] = c.x2
    psi[m * n2_cut] = c.x3
    psi[m] = c.x4
    return psi
