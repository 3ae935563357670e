"""Truncated Fock spaces and dense operator algebra.

Composite states live on spin (x) mode1 (x) mode2 with row-major index
``i = s*(N1*N2) + n1*N2 + n2`` where ``s = 0`` is the ground level ``|g>``
and ``s = 1`` is the excited level ``|e>``. Every module relies on this
layout; nothing else is supported.

Operators and density matrices are plain complex ``numpy`` arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.sparse as sp

HERMITIAN_TOL = 1e-12
POSITIVITY_TOL = -1e-10
TRACE_TOL = 1e-10


@dataclass(frozen=True)
class SpaceDescriptor:
    """Ordered subsystem dimensions; slot 0 is always the spin."""

    dims: tuple[int, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 2:
            raise ValueError("need a spin slot and at least one mode")
        if dims[0] != 2:
            raise ValueError(f"spin slot must have dimension 2, got {dims[0]}")
        if any(d < 1 for d in dims[1:]):
            raise ValueError(f"mode cutoffs must be >= 1, got {dims[1:]}")
        labels = tuple(self.labels) or ("spin",) + tuple(f"mode{i}" for i in range(1, len(dims)))
        if len(labels) != len(dims):
            raise ValueError("labels and dims differ in length")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    @property
    def n_modes(self) -> int:
        return len(self.dims) - 1

    @property
    def mode_dims(self) -> tuple[int, ...]:
        return self.dims[1:]

    def index(self, s: int, *fock: int) -> int:
        """Composite index of ``|s, n1, n2, ...>``."""
        levels = (s,) + tuple(fock)
        if len(levels) != len(self.dims):
            raise ValueError("wrong number of quantum numbers")
        for lv, d in zip(levels, self.dims):
            if not 0 <= lv < d:
                raise IndexError(f"level {lv} outside [0, {d})")
        return int(np.ravel_multi_index(levels, self.dims))

    def basis(self, s: int, *fock: int) -> np.ndarray:
        v = np.zeros(self.total, dtype=complex)
        v[self.index(s, *fock)] = 1.0
        return v


def fock_space(n1_cut: int, n2_cut: int) -> SpaceDescriptor:
    """Spin (x) two truncated modes with the given cutoffs."""
    if n1_cut < 1 or n2_cut < 1:
        raise ValueError(f"cutoffs must be >= 1, got ({n1_cut}, {n2_cut})")
    return SpaceDescriptor((2, n1_cut, n2_cut), ("spin", "mode1", "mode2"))


def single_mode_space(cutoff: int) -> SpaceDescriptor:
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    return SpaceDescriptor((2, cutoff), ("spin", "mode"))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def destroy(n: int) -> np.ndarray:
    """Truncated annihilation matrix on ``n`` Fock levels."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def tensor_embed(local: np.ndarray, slot: int, space: SpaceDescriptor) -> np.ndarray:
    """Place ``local`` at ``slot`` with identities everywhere else."""
    local = np.asarray(local, dtype=complex)
    if not 0 <= slot < len(space.dims):
        raise IndexError(f"slot {slot} out of range for dims {space.dims}")
    if local.shape != (space.dims[slot],) * 2:
        raise ValueError(
            f"local operator shape {local.shape} does not match dim {space.dims[slot]} at slot {slot}"
        )
    factors = [np.eye(d, dtype=complex) for d in space.dims]
    factors[slot] = local
    return _frozen(reduce(np.kron, factors))


def sparse_embed(local, slot: int, space: SpaceDescriptor) -> sp.csr_matrix:
    """Sparse counterpart of :func:`tensor_embed` for large spaces."""
    local = sp.csr_matrix(local, dtype=complex)
    if local.shape != (space.dims[slot],) * 2:
        raise ValueError(
            f"local operator shape {local.shape} does not match dim {space.dims[slot]} at slot {slot}"
        )
    out = sp.identity(1, dtype=complex, format="csr")
    for k, d in enumerate(space.dims):
        out = sp.kron(out, local if k == slot else sp.identity(d, dtype=complex, format="csr"),
                      format="csr")
    return out


def annihilation(space: SpaceDescriptor, mode: int) -> np.ndarray:
    """Annihilation operator of ``mode`` (1-based) on the full space."""
    if not 1 <= mode <= space.n_modes:
        raise IndexError(f"mode must be in 1..{space.n_modes}, got {mode}")
    return tensor_embed(destroy(space.dims[mode]), mode, space)


def number(space: SpaceDescriptor, mode: int) -> np.ndarray:
    a = annihilation(space, mode)
    return _frozen(a.conj().T @ a)


SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)  # |e><e| - |g><g|
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |e><g|
SIGMA_MINUS = SIGMA_PLUS.T.copy()


def spin_ops(space: SpaceDescriptor) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(sigma_z, sigma_plus, sigma_minus)`` embedded in ``space``."""
    return (
        tensor_embed(SIGMA_Z, 0, space),
        tensor_embed(SIGMA_PLUS, 0, space),
        tensor_embed(SIGMA_MINUS, 0, space),
    )


def dag(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def hermiticity_error(op: np.ndarray) -> float:
    return float(np.max(np.abs(op - op.conj().T))) if op.size else 0.0


def is_hermitian(op: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return hermiticity_error(op) <= tol


def check_density_matrix(rho: np.ndarray, trace_tol: float = TRACE_TOL,
                         herm_tol: float = HERMITIAN_TOL, floor: float = POSITIVITY_TOL) -> None:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit trace and PSD."""
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    if hermiticity_error(rho) > herm_tol:
        raise ValueError(f"not Hermitian (max |rho - rho^dag| = {hermiticity_error(rho):.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1) > trace_tol:
        raise ValueError(f"trace {tr!r} differs from 1")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lo < floor:
        raise ValueError(f"negative eigenvalue {lo:.3e}")


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def as_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state)
    return ket_to_dm(state) if state.ndim == 1 else state


def _normalize_keep(keep, n: int) -> list[int]:
    if isinstance(keep, (int, np.integer)):
        keep = [int(keep)]
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must not be empty")
    if keep[0] < 0 or keep[-1] >= n:
        raise IndexError(f"keep indices {keep} out of range for {n} subsystems")
    return keep


def partial_trace(rho: np.ndarray, keep, dims: Sequence[int] | SpaceDescriptor) -> np.ndarray:
    """Reduced density matrix on the subsystems listed in ``keep``.

    ``rho`` may be a ket, in which case the reduction is done without forming
    the full projector.
    """
    dims = list(dims.dims if isinstance(dims, SpaceDescriptor) else dims)
    keep = _normalize_keep(keep, len(dims))
    n = len(dims)
    drop = [k for k in range(n) if k not in keep]
    dk = int(np.prod([dims[k] for k in keep]))
    rho = np.asarray(rho)
    if rho.ndim == 1:
        psi = rho.reshape(dims).transpose(keep + drop).reshape(dk, -1)
        return psi @ psi.conj().T
    t = rho.reshape(dims + dims)
    # trace out one dropped subsystem at a time, highest index first
    for k in sorted(drop, reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + m)
    return t.reshape(dk, dk)


def reduce_columns(columns: np.ndarray, space: SpaceDescriptor, keep) -> np.ndarray:
    """Reduced state of ``sum_k |c_k><c_k|`` given the kets as columns.

    The columns carry their ensemble weights already (``sqrt(w_k) psi_k``).
    """
    dims = list(space.dims)
    keep = _normalize_keep(keep, len(dims))
    drop = [k for k in range(len(dims)) if k not in keep]
    dk = int(np.prod([dims[k] for k in keep]))
    r = columns.shape[1]
    t = columns.reshape(dims + [r]).transpose(keep + drop + [len(dims)]).reshape(dk, -1)
    return t @ t.conj().T


def partial_transpose(rho: np.ndarray, dims: tuple[int, int], party: int = 1) -> np.ndarray:
    """Transpose the indices of ``party`` (0 or 1) of a bipartite operator."""
    da, db = (int(d) for d in dims)
    if rho.shape != (da * db, da * db):
        raise ValueError(f"operator shape {rho.shape} does not match dims {(da, db)}")
    t = rho.reshape(da, db, da, db)
    if party == 0:
        t = t.transpose(2, 1, 0, 3)
    elif party == 1:
        t = t.transpose(0, 3, 2, 1)
    else:
        raise IndexError("party must be 0 or 1")
    return t.reshape(da * db, da * db)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a
