"""Hamiltonians of the two-mode multiphoton spin-boson model and its bath.

All operators are dense matrices on the layout fixed in :mod:`mpjc.hilbert`
and everything is expressed in the lab frame with hbar = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .hilbert import (
    SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z, SpaceDescriptor, annihilation, destroy, sparse_embed,
    spin_ops, tensor_embed,
)

SPIN_DEPHASING_CONVENTIONS = ("projector", "pauli")


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters. Frequencies are angular, hbar = 1."""

    omega0: float
    omega1: float
    omega2: float
    g1: float
    g2: float
    m: int = 1
    chi1: float = 0.0
    chi2: float = 0.0
    gz1: float = 0.0
    gz2: float = 0.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"photon order m must be a positive integer, got {self.m}")
        object.__setattr__(self, "m", int(self.m))

    @classmethod
    def resonant(cls, g1: float, g2: float, m: int = 1, omega: float = 1.0,
                 detuning: float = 0.0, **kw) -> "ModelParams":
        """Equal mode frequencies ``omega`` with ``omega0 = m*omega + detuning``."""
        return cls(omega0=m * omega + detuning, omega1=omega, omega2=omega,
                   g1=g1, g2=g2, m=m, **kw)

    @property
    def delta1(self) -> float:
        return self.omega0 - self.m * self.omega1

    @property
    def delta2(self) -> float:
        return self.omega0 - self.m * self.omega2

    @property
    def delta(self) -> float:
        """Single detuning; only defined when both modes share a frequency."""
        if self.omega1 != self.omega2:
            raise ValueError("single detuning needs omega1 == omega2")
        return self.delta1

    @property
    def g_tilde(self) -> float:
        return math.hypot(self.g1, self.g2)

    @property
    def rabi(self) -> float:
        """Resonant Rabi frequency ``sqrt(m!) * g_tilde``."""
        return math.sqrt(exact_factorial(self.m)) * self.g_tilde

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class BathParams:
    """Thermal occupation and the four Lindblad rates (mode rates shared)."""

    n_th: float = 0.0
    rb: float = 0.0
    db: float = 0.0
    rq: float = 0.0
    dq: float = 0.0

    def __post_init__(self):
        for name in ("n_th", "rb", "db", "rq", "dq"):
            v = getattr(self, name)
            if not v >= 0:
                raise ValueError(f"{name} must be >= 0, got {v}")


def exact_factorial(m: int) -> int:
    if int(m) != m or m < 0:
        raise ValueError(f"factorial needs a non-negative integer, got {m}")
    if m > 20:
        raise ValueError(f"photon order {m} exceeds the supported maximum of 20")
    return math.factorial(int(m))


def _check_cutoffs(space: SpaceDescriptor, m: int):
    for i, d in enumerate(space.mode_dims, start=1):
        if d < m + 1:
            raise ValueError(
                f"mode {i} cutoff {d} < m+1 = {m + 1}; the m-photon coupling would vanish"
            )


def _mode_ops(space: SpaceDescriptor, mode: int):
    a = sparse_embed(destroy(space.dims[mode]), mode, space)
    return a, a.conj().T.tocsr()


def _finish(H, sparse: bool):
    H = sp.csr_matrix(H)
    H.eliminate_zeros()
    return H if sparse else H.toarray()


def _mpjc_terms(p: ModelParams, space: SpaceDescriptor):
    if space.n_modes != 2:
        raise ValueError("two-mode Hamiltonian needs a two-mode space")
    _check_cutoffs(space, p.m)
    H = 0.5 * p.omega0 * sparse_embed(SIGMA_Z, 0, space)
    sp_plus = sparse_embed(SIGMA_PLUS, 0, space)
    for mode, w, g in ((1, p.omega1, p.g1), (2, p.omega2, p.g2)):
        a, ad = _mode_ops(space, mode)
        H = H + w * (ad @ a)
        if g != 0:
            am = a
            for _ in range(p.m - 1):
                am = am @ a
            coupling = am @ sp_plus
            H = H + g * (coupling + coupling.conj().T)
    return H


def _kerr_terms(p: ModelParams, space: SpaceDescriptor):
    out = sp.csr_matrix((space.total, space.total), dtype=complex)
    for mode, chi in ((1, p.chi1), (2, p.chi2)):
        if chi != 0:
            n = np.arange(space.dims[mode], dtype=float)
            out = out + chi * sparse_embed(np.diag(n * (n - 1)), mode, space)
    return out


def _dispersive_terms(p: ModelParams, space: SpaceDescriptor):
    out = sp.csr_matrix((space.total, space.total), dtype=complex)
    sz = sparse_embed(SIGMA_Z, 0, space)
    for mode, gz in ((1, p.gz1), (2, p.gz2)):
        if gz != 0:
            a, ad = _mode_ops(space, mode)
            out = out + gz * (sz @ (a + ad)) / math.sqrt(2)
    return out


def mpjc_hamiltonian(p: ModelParams, space: SpaceDescriptor, sparse: bool = False):
    """``(w0/2) sz + sum_i [w_i a_i^dag a_i + g_i (a_i^m s+ + a_i^dag^m s-)]``.

    Dense by default; ``sparse=True`` returns CSR for large spaces.
    """
    return _finish(_mpjc_terms(p, space), sparse)


def kerr_hamiltonian(p: ModelParams, space: SpaceDescriptor, sparse: bool = False):
    """MPJC Hamiltonian plus ``sum_i chi_i a_i^dag^2 a_i^2``."""
    return _finish(_mpjc_terms(p, space) + _kerr_terms(p, space), sparse)


def dispersive_hamiltonian(p: ModelParams, space: SpaceDescriptor, sparse: bool = False):
    """MPJC Hamiltonian plus ``sum_i gz_i sz X_i`` with ``X = (a + a^dag)/sqrt(2)``."""
    return _finish(_mpjc_terms(p, space) + _dispersive_terms(p, space), sparse)


def full_hamiltonian(p: ModelParams, space: SpaceDescriptor, sparse: bool = False):
    """MPJC Hamiltonian with whichever Kerr and dispersive terms are nonzero."""
    H = _mpjc_terms(p, space) + _kerr_terms(p, space) + _dispersive_terms(p, space)
    return _finish(H, sparse)


def single_mode_hamiltonian(omega0: float, omega: float, g: float, gz: float, m: int,
                            cutoff: int) -> np.ndarray:
    """Spin (x) one mode: ``(w0/2) sz + w a^dag a + g(a^m s+ + h.c.) + gz sz X``."""
    if int(m) != m or m < 1:
        raise ValueError(f"photon order m must be a positive integer, got {m}")
    if cutoff < m + 1:
        raise ValueError(f"cutoff {cutoff} < m+1 = {m + 1}; the m-photon coupling would vanish")
    a = destroy(cutoff)
    am = np.linalg.matrix_power(a, int(m))
    H = (0.5 * omega0 * np.kron(SIGMA_Z, np.eye(cutoff))
         + omega * np.kron(np.eye(2), a.conj().T @ a))
    coupling = np.kron(SIGMA_PLUS, am)
    H = H + g * (coupling + coupling.conj().T)
    H = H + gz * np.kron(SIGMA_Z, (a + a.conj().T) / math.sqrt(2))
    return H


def lindblad_ops(b: BathParams, space: SpaceDescriptor,
                 spin_dephasing: str = "projector") -> list[np.ndarray]:
    """Jump operators for thermal relaxation and dephasing of every subsystem.

    Per mode: ``sqrt(rb(1+n)) a``, ``sqrt(rb n) a^dag``, ``sqrt(db) a^dag a``.
    Spin: ``sqrt(rq(1+n)) s-``, ``sqrt(rq n) s+`` and a dephasing operator,
    ``sqrt(dq) s+ s-`` by default or ``sqrt(dq/2) sz`` with
    ``spin_dephasing="pauli"``. Zero-rate operators are left out.
    """
    if spin_dephasing not in SPIN_DEPHASING_CONVENTIONS:
        raise ValueError(f"spin_dephasing must be one of {SPIN_DEPHASING_CONVENTIONS}")
    n = b.n_th
    ops = []

    def add(rate, op):
        if rate > 0:
            ops.append(math.sqrt(rate) * op)

    for mode in range(1, space.n_modes + 1):
        a = annihilation(space, mode)
        ad = a.conj().T
        add(b.rb * (1 + n), a)
        add(b.rb * n, ad)
        add(b.db, ad @ a)
    lower = tensor_embed(SIGMA_MINUS, 0, space)
    raise_ = tensor_embed(SIGMA_PLUS, 0, space)
    add(b.rq * (1 + n), lower)
    add(b.rq * n, raise_)
    if spin_dephasing == "projector":
        add(b.dq, raise_ @ lower)
    else:
        add(b.dq / 2, tensor_embed(SIGMA_Z, 0, space))
    return ops


def excitation_operator(p: ModelParams, space: SpaceDescriptor) -> np.ndarray:
    """``s+ s- + (n1 + n2)/m``; conserved by the resonant-form coupling."""
    _, raise_, lower = spin_ops(space)
    N = raise_ @ lower
    for mode in range(1, space.n_modes + 1):
        a = annihilation(space, mode)
        N = N + (a.conj().T @ a) / p.m
    return N


def sector_indices(space: SpaceDescriptor, m: int) -> np.ndarray:
    """Composite indices of ``|g00>, |e00>, |g m 0>, |g 0 m>`` in that order."""
    return np.array([space.index(0, 0, 0), space.index(1, 0, 0),
                     space.index(0, m, 0), space.index(0, 0, m)])
