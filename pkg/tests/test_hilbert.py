import itertools

import numpy as np
import pytest

from mpjc import hilbert
from mpjc.hilbert import (annihilation, commutator, dag, fock_space, partial_trace,
                          partial_transpose, spin_ops, tensor_embed)


def random_density(dim, rng, rank=None):
    rank = rank or dim
    X = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = X @ X.conj().T
    return rho / np.trace(rho)


def test_fock_space_dimensions():
    s = fock_space(2, 2)
    assert s.dims == (2, 2, 2) and s.total == 8
    assert fock_space(20, 20).total == 800
    assert fock_space(3, 3).mode_dims == (3, 3)


def test_fock_space_rejects_bad_cutoffs():
    with pytest.raises(ValueError):
        fock_space(0, 2)


def test_index_layout_enumerates_row_major():
    s = fock_space(3, 4)
    expected = 0
    for spin, n1, n2 in itertools.product(range(2), range(3), range(4)):
        assert s.index(spin, n1, n2) == spin * 12 + n1 * 4 + n2 == expected
        expected += 1


def test_annihilation_matrix_elements():
    s = fock_space(5, 4)
    a1 = annihilation(s, 1)
    assert np.isclose(a1[s.index(0, 0, 2), s.index(0, 1, 2)], 1.0)
    assert np.isclose(a1[s.index(1, 2, 0), s.index(1, 3, 0)], np.sqrt(3))
    a2 = annihilation(s, 2)
    assert np.isclose(a2[s.index(0, 4, 2), s.index(0, 4, 3)], np.sqrt(3))


def test_commutator_is_identity_below_top_level():
    N = 6
    a = hilbert.destroy(N)
    c = commutator(a, dag(a))
    diff = c - np.eye(N)
    assert np.allclose(diff[:-1, :], 0, atol=1e-14)
    assert np.allclose(diff[:, :-1], 0, atol=1e-14)
    assert np.isclose(diff[-1, -1], -N)


def test_two_mode_commutators_restricted_below_cutoff():
    s = fock_space(4, 5)
    a1, a2 = annihilation(s, 1), annihilation(s, 2)
    keep = [s.index(sp, n1, n2) for sp in range(2) for n1 in range(3) for n2 in range(4)]
    sub = np.ix_(keep, keep)
    assert np.allclose(commutator(a1, dag(a1))[sub], np.eye(len(keep)), atol=1e-14)
    assert np.allclose(commutator(a2, dag(a2))[sub], np.eye(len(keep)), atol=1e-14)
    assert np.allclose(commutator(a1, dag(a2)), 0, atol=1e-14)


def test_spin_operator_definitions():
    s = fock_space(1 + 1, 2)
    sz, sp, sm = spin_ops(s)
    g = s.basis(0, 1, 0)
    e = s.basis(1, 1, 0)
    assert np.allclose(sz @ g, -g)
    assert np.allclose(sp @ g, e)
    assert np.allclose(sp @ e, 0)
    assert np.allclose(sz, sp @ sm - sm @ sp)


def test_sigma_z_diagonal_layout():
    s = fock_space(2, 2)
    sz = tensor_embed(np.diag([-1.0, 1.0]), 0, s)
    assert np.allclose(np.diagonal(sz), [-1, -1, -1, -1, 1, 1, 1, 1])


def test_tensor_embed_identity_and_products():
    s = fock_space(3, 2)
    assert np.allclose(tensor_embed(np.eye(3), 1, s), np.eye(s.total))
    rng = np.random.default_rng(0)
    A = rng.normal(size=(2, 2))
    B = rng.normal(size=(3, 3))
    C = rng.normal(size=(2, 2))
    prod = tensor_embed(A, 0, s) @ tensor_embed(B, 1, s) @ tensor_embed(C, 2, s)
    assert np.allclose(prod, np.kron(np.kron(A, B), C))


def test_tensor_embed_matches_basis_propagation():
    s = fock_space(3, 4)
    a = hilbert.destroy(4)
    op = tensor_embed(a, 2, s)
    for spin, n1, n2 in itertools.product(range(2), range(3), range(1, 4)):
        out = op @ s.basis(spin, n1, n2)
        assert np.isclose(out[s.index(spin, n1, n2 - 1)], np.sqrt(n2))
        assert np.isclose(np.linalg.norm(out), np.sqrt(n2))


def test_dag_is_involution():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    assert np.array_equal(dag(dag(X)), X)


def test_partial_trace_product_state():
    s = fock_space(2, 2)
    psi = s.basis(1, 0, 0)
    rho = np.outer(psi, psi.conj())
    red = partial_trace(rho, [1, 2], s)
    expected = np.zeros((4, 4))
    expected[0, 0] = 1
    assert np.allclose(red, expected)


def test_partial_trace_matches_einsum_oracle():
    rng = np.random.default_rng(2)
    s = fock_space(3, 2)
    rho = random_density(s.total, rng)
    t = rho.reshape(2, 3, 2, 2, 3, 2)
    assert np.allclose(partial_trace(rho, [0], s), np.einsum("abcdbc->ad", t))
    assert np.allclose(partial_trace(rho, [1, 2], s), np.einsum("abcaef->bcef", t).reshape(6, 6))
    assert np.allclose(partial_trace(rho, [1], s), np.einsum("abcaec->be", t))


def test_partial_trace_maximally_mixed():
    s = fock_space(3, 3)
    rho = np.eye(s.total) / s.total
    assert np.allclose(partial_trace(rho, [1, 2], s), np.eye(9) / 9)


def test_partial_transpose_of_product():
    rng = np.random.default_rng(3)
    A = random_density(3, rng)
    B = random_density(4, rng)
    rho = np.kron(A, B)
    assert np.allclose(partial_transpose(rho, (3, 4), 1), np.kron(A, B.T))
    assert np.allclose(partial_transpose(rho, (3, 4), 0), np.kron(A.T, B))


def test_partial_transpose_is_involution_and_trace_preserving():
    rng = np.random.default_rng(4)
    rho = random_density(12, rng)
    pt = partial_transpose(rho, (3, 4), 1)
    assert np.allclose(partial_transpose(pt, (3, 4), 1), rho)
    # tracing out the transposed party undoes the transpose
    red = np.einsum("abcb->ac", rho.reshape(3, 4, 3, 4))
    red_pt = np.einsum("abcb->ac", pt.reshape(3, 4, 3, 4))
    assert np.allclose(red, red_pt)


def test_partial_transpose_elementwise_definition():
    rng = np.random.default_rng(5)
    rho = random_density(6, rng)
    pt = partial_transpose(rho, (2, 3), 1)
    for i, j, k, l in itertools.product(range(2), range(3), range(2), range(3)):
        assert pt[i * 3 + j, k * 3 + l] == rho[i * 3 + l, k * 3 + j]


def test_density_matrix_checks():
    rng = np.random.default_rng(6)
    rho = random_density(4, rng)
    hilbert.check_density_matrix(rho)
    with pytest.raises(ValueError):
        hilbert.check_density_matrix(2 * rho)
    bad = rho.copy()
    bad[0, 1] += 1e-6
    with pytest.raises(ValueError):
        hilbert.check_density_matrix(bad)
