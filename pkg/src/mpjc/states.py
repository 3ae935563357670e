"""Initial spin and bosonic states.

Truncated Fock expansions are never renormalized. The weight that falls
outside the cutoff (the *leakage*) is computed from the analytic tail and
must stay below ``eps``; otherwise :class:`CutoffTooSmallError` is raised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import CutoffTooSmallError
from .hilbert import SpaceDescriptor

DEFAULT_EPS = 1e-8
MAX_CUTOFF = 60

MODE_KINDS = ("fock", "coherent", "squeezed_vacuum", "thermal", "prcs", "prss")
SPIN_KINDS = ("superposition", "thermal")


@dataclass(frozen=True)
class SpinPrep:
    """Initial spin: ``cos(phi)|g> + sin(phi)|e>`` or ``diag(1 - p_e, p_e)``."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in SPIN_KINDS:
            raise ValueError(f"unknown spin preparation {self.kind!r}")
        if self.kind == "thermal" and not 0.0 <= self.value <= 1.0:
            raise ValueError(f"p_e must lie in [0, 1], got {self.value}")

    @classmethod
    def superposition(cls, phi: float) -> "SpinPrep":
        return cls("superposition", float(phi))

    @classmethod
    def thermal(cls, p_e: float) -> "SpinPrep":
        return cls("thermal", float(p_e))

    @classmethod
    def from_pe(cls, kind: str, p_e: float) -> "SpinPrep":
        """Either kind parametrised by the excited population ``p_e = sin^2 phi``."""
        if kind == "thermal":
            return cls.thermal(p_e)
        if not 0.0 <= p_e <= 1.0:
            raise ValueError(f"p_e must lie in [0, 1], got {p_e}")
        return cls.superposition(math.asin(math.sqrt(p_e)))

    @property
    def p_e(self) -> float:
        if self.kind == "thermal":
            return self.value
        return math.sin(self.value) ** 2


@dataclass(frozen=True)
class ModePrep:
    """One bosonic mode's initial state.

    ``params`` holds ``n`` (fock), ``alpha`` (coherent, prcs), ``r`` and
    ``theta`` (squeezed_vacuum, prss) or ``nbar`` (thermal).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in MODE_KINDS:
            raise ValueError(f"unknown mode preparation {self.kind!r}")
        p = dict(self.params)
        if self.kind == "fock":
            n = p.get("n", 0)
            if int(n) != n or n < 0:
                raise ValueError(f"Fock level must be a non-negative integer, got {n}")
            p = {"n": int(n)}
        elif self.kind in ("coherent", "prcs"):
            p = {"alpha": complex(p.get("alpha", 0.0))}
            if self.kind == "prcs":
                p = {"alpha": abs(p["alpha"])}
        elif self.kind in ("squeezed_vacuum", "prss"):
            r = float(p.get("r", 0.0))
            if r < 0:
                raise ValueError(f"squeezing r must be >= 0, got {r}")
            p = {"r": r} if self.kind == "prss" else {"r": r, "theta": float(p.get("theta", 0.0))}
        elif self.kind == "thermal":
            nbar = float(p.get("nbar", 0.0))
            if nbar < 0:
                raise ValueError(f"nbar must be >= 0, got {nbar}")
            p = {"nbar": nbar}
        object.__setattr__(self, "params", p)

    @classmethod
    def fock(cls, n: int = 0) -> "ModePrep":
        return cls("fock", {"n": n})

    @classmethod
    def vacuum(cls) -> "ModePrep":
        return cls.fock(0)

    @classmethod
    def coherent(cls, alpha: complex) -> "ModePrep":
        return cls("coherent", {"alpha": alpha})

    @classmethod
    def squeezed_vacuum(cls, r: float, theta: float = 0.0) -> "ModePrep":
        return cls("squeezed_vacuum", {"r": r, "theta": theta})

    @classmethod
    def thermal(cls, nbar: float) -> "ModePrep":
        return cls("thermal", {"nbar": nbar})

    @classmethod
    def prcs(cls, alpha: float) -> "ModePrep":
        return cls("prcs", {"alpha": alpha})

    @classmethod
    def prss(cls, r: float) -> "ModePrep":
        return cls("prss", {"r": r})

    @classmethod
    def from_mean(cls, kind: str, nbar: float) -> "ModePrep":
        """Build ``kind`` with mean photon number ``nbar`` (= |alpha|^2 = sinh^2 r)."""
        if nbar < 0:
            raise ValueError(f"nbar must be >= 0, got {nbar}")
        if kind == "fock":
            if int(nbar) != nbar:
                raise ValueError(f"Fock state needs an integer mean, got {nbar}")
            return cls.fock(int(nbar))
        if kind in ("coherent", "prcs"):
            return cls(kind, {"alpha": math.sqrt(nbar)})
        if kind in ("squeezed_vacuum", "prss"):
            return cls(kind, {"r": math.asinh(math.sqrt(nbar))})
        if kind == "thermal":
            return cls.thermal(nbar)
        raise ValueError(f"unknown mode preparation {kind!r}")

    @property
    def is_pure(self) -> bool:
        return self.kind in ("fock", "coherent", "squeezed_vacuum")

    @property
    def mean_photons(self) -> float:
        p = self.params
        if self.kind == "fock":
            return float(p["n"])
        if self.kind in ("coherent", "prcs"):
            return abs(p["alpha"]) ** 2
        if self.kind in ("squeezed_vacuum", "prss"):
            return math.sinh(p["r"]) ** 2
        return p["nbar"]


# --- Fock-basis amplitudes and populations -----------------------------------

def _coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff)
    a = abs(alpha)
    if a == 0:
        out = np.zeros(cutoff, dtype=complex)
        out[0] = 1.0
        return out
    logmag = n * math.log(a) - 0.5 * gammaln(n + 1) - 0.5 * a * a
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def _squeezed_log_weights(r: float, k: np.ndarray) -> np.ndarray:
    """log of |amplitude|^2 on ``|2k>`` for squeezed vacuum."""
    t = math.tanh(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        lt = math.log(t) if t > 0 else -np.inf
        out = 2 * k * lt + gammaln(2 * k + 1) - 2 * k * math.log(2) - 2 * gammaln(k + 1)
    out = np.where(k == 0, 0.0, out) - math.log(math.cosh(r))
    return out


def _squeezed_amplitudes(r: float, theta: float, cutoff: int) -> np.ndarray:
    out = np.zeros(cutoff, dtype=complex)
    k = np.arange((cutoff + 1) // 2)
    mag = np.exp(0.5 * _squeezed_log_weights(r, k))
    out[0::2] = mag * (-np.exp(1j * theta)) ** k
    return out


def _thermal_populations(nbar: float, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff)
    if nbar == 0:
        return (n == 0).astype(float)
    q = nbar / (1 + nbar)
    return q ** n / (1 + nbar)


def _squeezed_tail(r: float, cutoff: int) -> float:
    t2 = math.tanh(r) ** 2
    if t2 == 0:
        return 0.0 if cutoff >= 1 else 1.0
    k0 = (cutoff + 1) // 2
    span = int(min(1e6, math.ceil(math.log(1e-22) / math.log(t2)) + 64))
    k = np.arange(k0, k0 + span)
    return float(math.fsum(np.exp(_squeezed_log_weights(r, k))))


def leakage(prep: ModePrep, cutoff: int) -> float:
    """Probability weight of ``prep`` beyond Fock level ``cutoff - 1``."""
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    p = prep.params
    if prep.kind == "fock":
        return 0.0 if p["n"] < cutoff else 1.0
    if prep.kind in ("coherent", "prcs"):
        return float(poisson.sf(cutoff - 1, abs(p["alpha"]) ** 2))
    if prep.kind == "thermal":
        nbar = p["nbar"]
        return 0.0 if nbar == 0 else (nbar / (1 + nbar)) ** cutoff
    return _squeezed_tail(p["r"], cutoff)


def _gate(prep: ModePrep, cutoff: int, eps: float | None) -> float:
    leak = leakage(prep, cutoff)
    if eps is not None and leak >= eps:
        raise CutoffTooSmallError(
            f"{prep.kind} state loses {leak:.3e} >= eps={eps:.1e} at cutoff {cutoff}",
            leakage=leak, cutoff=cutoff,
        )
    return leak


def select_cutoff(prep: ModePrep, eps: float = DEFAULT_EPS, cap: int = MAX_CUTOFF,
                  minimum: int = 1) -> int:
    """Smallest cutoff ``>= minimum`` whose leakage is below ``eps``.

    Raises :class:`CutoffTooSmallError` when even ``cap`` is not enough.
    """
    for n in range(max(1, minimum), cap + 1):
        if leakage(prep, n) < eps:
            return n
    raise CutoffTooSmallError(
        f"{prep.kind} state needs a cutoff above {cap} for eps={eps:.1e}",
        leakage=leakage(prep, cap), cutoff=cap,
    )


# --- public constructors -------------------------------------------------------

def spin_state(prep: SpinPrep) -> np.ndarray:
    """Ket for a superposition, 2x2 density matrix for a thermal spin."""
    if prep.kind == "superposition":
        return np.array([math.cos(prep.value), math.sin(prep.value)], dtype=complex)
    return np.diag([1.0 - prep.value, prep.value]).astype(complex)


def fock_state(n: int, cutoff: int) -> np.ndarray:
    prep = ModePrep.fock(n)
    _gate(prep, cutoff, 0.5)
    v = np.zeros(cutoff, dtype=complex)
    v[n] = 1.0
    return v


def coherent_state(alpha: complex, cutoff: int, eps: float | None = DEFAULT_EPS) -> np.ndarray:
    _gate(ModePrep.coherent(alpha), cutoff, eps)
    return _coherent_amplitudes(complex(alpha), cutoff)


def squeezed_vacuum(r: float, theta: float, cutoff: int, eps: float | None = DEFAULT_EPS) -> np.ndarray:
    _gate(ModePrep.squeezed_vacuum(r, theta), cutoff, eps)
    return _squeezed_amplitudes(r, theta, cutoff)


def thermal_mode(nbar: float, cutoff: int, eps: float | None = DEFAULT_EPS) -> np.ndarray:
    _gate(ModePrep.thermal(nbar), cutoff, eps)
    return np.diag(_thermal_populations(nbar, cutoff)).astype(complex)


def prcs(alpha: float, cutoff: int, eps: float | None = DEFAULT_EPS) -> np.ndarray:
    """Phase-randomised coherent state: Poisson diagonal."""
    _gate(ModePrep.prcs(alpha), cutoff, eps)
    return np.diag(np.abs(_coherent_amplitudes(abs(alpha), cutoff)) ** 2).astype(complex)


def prss(r: float, cutoff: int, eps: float | None = DEFAULT_EPS) -> np.ndarray:
    """Phase-randomised squeezed vacuum: dephased squeezed-vacuum populations."""
    _gate(ModePrep.prss(r), cutoff, eps)
    return np.diag(np.abs(_squeezed_amplitudes(r, 0.0, cutoff)) ** 2).astype(complex)


def mode_state(prep: ModePrep, cutoff: int, eps: float | None = DEFAULT_EPS) -> np.ndarray:
    p = prep.params
    if prep.kind == "fock":
        return fock_state(p["n"], cutoff)
    if prep.kind == "coherent":
        return coherent_state(p["alpha"], cutoff, eps)
    if prep.kind == "squeezed_vacuum":
        return squeezed_vacuum(p["r"], p["theta"], cutoff, eps)
    if prep.kind == "thermal":
        return thermal_mode(p["nbar"], cutoff, eps)
    if prep.kind == "prcs":
        return prcs(p["alpha"], cutoff, eps)
    return prss(p["r"], cutoff, eps)


def _check_space(space: SpaceDescriptor, n_modes: int):
    if space.n_modes != n_modes:
        raise ValueError(f"space has {space.n_modes} modes, expected {n_modes}")


def compose_initial(spin: SpinPrep, mode1: ModePrep, mode2: ModePrep | None,
                    space: SpaceDescriptor, eps: float | None = DEFAULT_EPS) -> np.ndarray:
    """Tensor product spin (x) mode1 (x) mode2.

    Returns a ket when every factor is pure, otherwise a density matrix.
    ``mode2`` is ``None`` for single-mode spaces.
    """
    modes = [mode1] if mode2 is None else [mode1, mode2]
    _check_space(space, len(modes))
    factors = [spin_state(spin)] + [mode_state(m, d, eps) for m, d in zip(modes, space.mode_dims)]
    if all(f.ndim == 1 for f in factors):
        return reduce(np.kron, factors)
    factors = [np.outer(f, f.conj()) if f.ndim == 1 else f for f in factors]
    return reduce(np.kron, factors)


def _factor_ensemble(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if f.ndim == 1:
        return np.ones(1), f[:, None]
    if np.count_nonzero(f - np.diag(np.diagonal(f))) == 0:
        w = np.diagonal(f).real.copy()
        keep = np.flatnonzero(w > 0)
        return w[keep], np.eye(len(w), dtype=complex)[:, keep]
    w, v = np.linalg.eigh(f)
    keep = np.flatnonzero(w > 0)
    return w[keep], v[:, keep]


def initial_ensemble(spin: SpinPrep, mode1: ModePrep, mode2: ModePrep | None,
                     space: SpaceDescriptor, eps: float | None = DEFAULT_EPS
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Same state as :func:`compose_initial`, as ``(weights, kets)``.

    ``kets`` holds one pure component per column; ``sum_k w_k |k><k|``
    equals the composed density matrix.
    """
    modes = [mode1] if mode2 is None else [mode1, mode2]
    _check_space(space, len(modes))
    factors = [spin_state(spin)] + [mode_state(m, d, eps) for m, d in zip(modes, space.mode_dims)]
    w, kets = np.ones(1), np.ones((1, 1), dtype=complex)
    for f in factors:
        fw, fk = _factor_ensemble(f)
        w = np.kron(w, fw)
        kets = np.einsum("ia,jb->ijab", kets, fk).reshape(kets.shape[0] * fk.shape[0], -1)
    return w, kets


def initial_leakage(mode1: ModePrep, mode2: ModePrep | None, space: SpaceDescriptor) -> float:
    modes = [mode1] if mode2 is None else [mode1, mode2]
    return max(leakage(m, d) for m, d in zip(modes, space.mode_dims))


def purity(state: np.ndarray) -> float:
    state = np.asarray(state)
    if state.ndim == 1:
        return float(np.vdot(state, state).real ** 2)
    return float(np.trace(state @ state).real)
