"""Entanglement, coherence and Gaussian diagnostics on numerical states.

All logarithms are base 2.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import CutoffTooSmallError
from .hilbert import hermiticity_error, partial_transpose

PT_CLIP = 1e-12
INPUT_HERM_TOL = 1e-10
GAUSS_DISC_TOL = 1e-10
PHYSICALITY_TOL = 1e-8

OMEGA = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _require_hermitian(rho: np.ndarray, tol: float = INPUT_HERM_TOL):
    err = hermiticity_error(rho)
    if err > tol:
        raise ValueError(f"input is not Hermitian (max |rho - rho^dag| = {err:.3e})")


def block_eigvalsh(M: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, diagonalising each decoupled block separately.

    Blocks are the connected components of the exact nonzero pattern, so the
    result equals ``eigvalsh(M)`` up to ordering and round-off.
    """
    n = M.shape[0]
    mask = M != 0
    n_comp, labels = connected_components(sp.csr_matrix(mask), directed=False)
    if n_comp == 1:
        return np.linalg.eigvalsh(M)
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    out = []
    for idx in np.split(order, bounds):
        if idx.size == 1:
            out.append(M[idx, idx].real)
        else:
            out.append(np.linalg.eigvalsh(M[np.ix_(idx, idx)]))
    assert sum(len(o) for o in out) == n
    return np.concatenate(out)


def pt_eigenvalues(rho: np.ndarray, dims: tuple[int, int], party: int = 1) -> np.ndarray:
    _require_hermitian(rho)
    pt = partial_transpose(0.5 * (rho + rho.conj().T), dims, party)
    return block_eigvalsh(pt)


def log_negativity(rho: np.ndarray, dims: tuple[int, int]) -> float:
    """``log2(1 + 2 |sum of negative partial-transpose eigenvalues|)``.

    Eigenvalues in ``(-1e-12, 0)`` count as zero.
    """
    ev = pt_eigenvalues(rho, dims)
    neg = ev[ev <= -PT_CLIP]
    return float(np.log2(1 + 2 * abs(math.fsum(neg))))


def log_negativity_trace_norm(rho: np.ndarray, dims: tuple[int, int]) -> float:
    """``log2 ||rho^T_B||_1`` from singular values; equals :func:`log_negativity` for unit trace."""
    _require_hermitian(rho)
    pt = partial_transpose(rho, dims, 1)
    return float(np.log2(np.linalg.svd(pt, compute_uv=False).sum()))


def von_neumann_entropy(rho: np.ndarray) -> float:
    """``-sum p log2 p`` over the eigenvalues; ``0 log 0 = 0``."""
    rho = np.asarray(rho)
    p = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)) if rho.ndim == 2 else np.asarray(rho)
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def shannon_entropy(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def coherence(rho_s: np.ndarray) -> float:
    """Relative entropy of coherence in the computational basis."""
    _require_hermitian(rho_s)
    return max(0.0, shannon_entropy(np.diagonal(rho_s).real) - von_neumann_entropy(rho_s))


def bloch_vector(rho_s: np.ndarray) -> np.ndarray:
    """``(<sx>, <sy>, <sz>)`` with Pauli matrices in the ``(g, e)`` basis, so ``z = p_g - p_e``."""
    r = np.asarray(rho_s)
    return np.array([2 * r[0, 1].real, -2 * r[0, 1].imag, (r[0, 0] - r[1, 1]).real])


def noon_state(N: int, cutoffs: tuple[int, int]) -> np.ndarray:
    n1, n2 = cutoffs
    if N < 1 or N >= n1 or N >= n2:
        raise ValueError(f"NOON order {N} must be in 1..min(cutoffs)-1")
    psi = np.zeros(n1 * n2, dtype=complex)
    psi[N * n2] = psi[N] = 1 / math.sqrt(2)
    return psi


def noon_fidelity(rho_b: np.ndarray, N: int, cutoffs: tuple[int, int]) -> float:
    """``<psi|rho_b|psi>`` for ``psi = (|N0> + |0N>)/sqrt(2)``."""
    psi = noon_state(N, cutoffs)
    rho_b = np.asarray(rho_b)
    if rho_b.ndim == 1:
        return float(abs(np.vdot(psi, rho_b)) ** 2)
    return float(np.vdot(psi, rho_b @ psi).real)


def spin_ground_projection(state: np.ndarray, level: int = 0):
    """Project the spin onto ``|g>`` (``level=0``) or ``|e>`` (``level=1``).

    Returns the unnormalised two-mode ket or density matrix and the outcome
    probability.
    """
    state = np.asarray(state)
    half = state.shape[0] // 2
    if state.ndim == 1:
        out = state.reshape(2, half)[level].copy()
        return out, float(np.vdot(out, out).real)
    out = state.reshape(2, half, 2, half)[level, :, level, :].copy()
    return out, float(np.trace(out).real)


# --- Gaussian covariance ---------------------------------------------------------

@dataclass(frozen=True)
class CovarianceData:
    """Mean ``(x_a, p_a, x_b, p_b)`` and symmetrised covariance matrix."""

    mean: np.ndarray
    V: np.ndarray

    @property
    def A(self) -> np.ndarray:
        return self.V[:2, :2]

    @property
    def B(self) -> np.ndarray:
        return self.V[2:, 2:]

    @property
    def C(self) -> np.ndarray:
        return self.V[:2, 2:]

    def symmetry_error(self) -> float:
        return float(np.max(np.abs(self.V - self.V.T)))

    def min_physical_eigenvalue(self) -> float:
        """Smallest eigenvalue of ``V + (i/2) Omega``; nonnegative for a physical state."""
        return float(np.linalg.eigvalsh(self.V + 0.5j * OMEGA).min())

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        return self.symmetry_error() <= 1e-10 and self.min_physical_eigenvalue() >= -tol


@lru_cache(maxsize=32)
def _quadrature_products(n1: int, n2: int):
    """Quadrature operators on modes padded by one Fock level, plus their pairwise products.

    The extra level makes ``a a^dag`` exact for states supported below the
    original cutoffs.
    """
    def lower(n):
        return sp.diags(np.sqrt(np.arange(1, n, dtype=float)), 1, format="csr")

    p1, p2 = n1 + 1, n2 + 1
    a = sp.kron(lower(p1), sp.identity(p2), format="csr")
    b = sp.kron(sp.identity(p1), lower(p2), format="csr")
    quads = []
    for op in (a, b):
        quads.append(((op + op.T) / math.sqrt(2)).astype(complex).tocsr())
        quads.append((-1j * (op - op.T) / math.sqrt(2)).tocsr())
    prods = {(i, j): (quads[i] @ quads[j]).tocoo() for i in range(4) for j in range(4)}
    return [q.tocoo() for q in quads], prods


def _pad(rho: np.ndarray, n1: int, n2: int) -> np.ndarray:
    t = np.zeros((n1 + 1, n2 + 1, n1 + 1, n2 + 1), dtype=complex)
    t[:n1, :n2, :n1, :n2] = rho.reshape(n1, n2, n1, n2)
    return t.reshape((n1 + 1) * (n2 + 1), -1)


def _expect(rho: np.ndarray, op: sp.coo_matrix) -> complex:
    # Tr(rho op) = sum_rc op[r, c] rho[c, r]
    return complex(np.sum(op.data * rho[op.col, op.row]))


def top_level_population(rho: np.ndarray, cutoffs: tuple[int, int]) -> float:
    """Largest population in the highest Fock level of either mode."""
    n1, n2 = cutoffs
    p = np.diagonal(rho).real.reshape(n1, n2)
    return float(max(p[-1, :].sum(), p[:, -1].sum()))


def covariance(rho: np.ndarray, cutoffs: tuple[int, int], eps: float | None = None) -> CovarianceData:
    """Means and covariance of ``(X_a, P_a, X_b, P_b)`` for a two-mode state.

    ``X = (a + a^dag)/sqrt(2)``, ``P = -i(a - a^dag)/sqrt(2)``; vacuum variance 1/2.
    With ``eps`` given, a top-Fock-level population at or above it raises
    :class:`CutoffTooSmallError`.
    """
    n1, n2 = cutoffs
    rho = np.asarray(rho)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    if rho.shape != (n1 * n2, n1 * n2):
        raise ValueError(f"state shape {rho.shape} does not match cutoffs {cutoffs}")
    if eps is not None:
        top = top_level_population(rho, cutoffs)
        if top >= eps:
            raise CutoffTooSmallError(
                f"top Fock level holds {top:.3e} >= eps={eps:.1e}", leakage=top,
                cutoff=min(cutoffs))
    quads, prods = _quadrature_products(n1, n2)
    big = _pad(rho, n1, n2)
    mean = np.array([_expect(big, q).real for q in quads])
    V = np.empty((4, 4))
    for i in range(4):
        for j in range(i, 4):
            sym = _expect(big, prods[(i, j)]).real  # Re<RiRj> = <{Ri,Rj}>/2
            V[i, j] = V[j, i] = sym - mean[i] * mean[j]
    return CovarianceData(mean, V)


def tmsv_covariance(r: float) -> CovarianceData:
    """Textbook two-mode squeezed vacuum covariance (vacuum variance 1/2)."""
    c, s = math.cosh(2 * r) / 2, math.sinh(2 * r) / 2
    V = np.array([[c, 0, s, 0], [0, c, 0, -s], [s, 0, c, 0], [0, -s, 0, c]])
    return CovarianceData(np.zeros(4), V)


def _exact_det(M: np.ndarray) -> Fraction:
    """Leibniz determinant of a small real matrix in exact rational arithmetic."""
    n = M.shape[0]
    F = [[Fraction(float(x)) for x in row] for row in np.real(M)]
    total = Fraction(0)
    for perm in itertools.permutations(range(n)):
        inv = sum(perm[i] > perm[j] for i in range(n) for j in range(i + 1, n))
        term = Fraction(-1 if inv % 2 else 1)
        for i, j in enumerate(perm):
            term *= F[i][j]
        total += term
    return total


def gaussian_f(cd: CovarianceData) -> float:
    """``detA + detB - 2 detC - sqrt((detA + detB - 2 detC)^2 - 4 detV)``.

    The determinants and the discriminant are evaluated exactly from the
    float entries, and the smaller root is taken as ``4 detV / (larger root)``,
    so neither a near-zero discriminant nor a near-cancelling difference
    loses precision.
    """
    dA, dB, dC, dV = (_exact_det(x) for x in (cd.A, cd.B, cd.C, cd.V))
    sigma = dA + dB - 2 * dC
    disc = float(sigma * sigma - 4 * dV)
    if disc < -GAUSS_DISC_TOL:
        raise ValueError(f"unphysical covariance: discriminant {disc:.3e} < 0")
    root = math.sqrt(max(disc, 0.0))
    if sigma > 0:
        return float(4 * dV) / (float(sigma) + root)
    return float(sigma) - root


def gaussian_log_negativity(cd: CovarianceData) -> float:
    """Log-negativity of the Gaussian state with covariance ``cd``.

    ``f`` is twice the squared smallest partially transposed symplectic
    eigenvalue, so ``max(0, -log2(2f)/2)`` equals ``-log2(2 nu)`` when
    ``nu < 1/2``. Values below 1e-12 are reported as exactly zero.
    """
    f = gaussian_f(cd)
    if f <= 0:
        return math.inf
    val = -0.5 * math.log2(2 * f)
    return val if val > PT_CLIP else 0.0


def pt_symplectic_min(cd: CovarianceData) -> float:
    """Smallest symplectic eigenvalue of the partially transposed covariance, computed directly."""
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    Vt = flip @ cd.V @ flip
    ev = np.linalg.eigvals(1j * OMEGA @ Vt)
    return float(np.min(np.abs(ev)))


def simon_detC(cd: CovarianceData) -> float:
    return float(np.linalg.det(cd.C))
