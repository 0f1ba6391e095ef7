from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brickwall.errors import DomainError, ShapeError
from brickwall.tensor_core import (as_tensor, contract, exp_antihermitian, exp_antihermitian_batch,
                                   is_antihermitian, lq, svd)

from conftest import CNOT, I2, X, Z


def _random_antihermitian(rng, dim=2, scale=1.0):
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * 0.5 * (z - z.conj().T)


def _taylor_exp(a, terms=30):
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


def test_contract_identity_and_pauli():
    v = np.array([1.0 + 2j, -0.5j])
    assert np.allclose(contract(I2, v, [(1, 0)]), v)
    assert np.allclose(contract(X, X, [(1, 0)]), I2)


def test_contract_matches_loop_oracle(rng):
    a = rng.standard_normal((2, 3, 4)) + 1j * rng.standard_normal((2, 3, 4))
    b = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
    out = np.zeros((2, 3, 5), dtype=complex)
    for i in range(2):
        for j in range(3):
            for m in range(5):
                for k in range(4):
                    out[i, j, m] += a[i, j, k] * b[k, m]
    assert np.allclose(contract(a, b, [(2, 0)]), out, atol=1e-12)


def test_contract_rejects_bad_axes():
    with pytest.raises(ShapeError):
        contract(np.ones((2, 3)), np.ones((2, 4)), [(1, 1)])
    with pytest.raises(ShapeError):
        contract(np.ones((2, 3)), np.ones((3, 2)), [(5, 0)])


def test_as_tensor_rejects_non_finite():
    with pytest.raises(DomainError):
        as_tensor(np.array([1.0, np.nan]))


def test_svd_trivial_cases():
    assert np.allclose(svd(np.eye(4)).s, [1, 1, 1, 1])
    assert np.allclose(svd(np.diag([3.0, 0.0])).s, [3, 0])


def test_svd_of_cnot_matches_eigen_oracle():
    s = svd(CNOT).s
    ev = np.sqrt(np.clip(np.linalg.eigvalsh(CNOT.conj().T @ CNOT), 0, None))
    assert np.allclose(np.sort(s), np.sort(ev))


def test_svd_invariants(rng):
    m = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    u, s, vh = svd(m)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    assert np.allclose(u.conj().T @ u, np.eye(3), atol=1e-12)
    assert np.allclose(vh @ vh.conj().T, np.eye(3), atol=1e-12)
    assert np.linalg.norm(u * s @ vh - m) / np.linalg.norm(m) < 1e-10


def test_svd_rejects_rank3():
    with pytest.raises(ShapeError):
        svd(np.ones((2, 2, 2)))


def test_lq_trivial_cases():
    l, q = lq(np.eye(2))
    assert np.allclose(l, np.eye(2)) and np.allclose(q, np.eye(2))
    l, q = lq(np.array([[3.0, 4.0]]))
    assert np.allclose(l, [[5.0]]) and np.allclose(q, [[0.6, 0.8]])


def test_lq_reconstruction(rng):
    m = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    l, q = lq(m)
    assert np.allclose(l @ q, m, atol=1e-12)
    assert np.allclose(q @ q.conj().T, np.eye(3), atol=1e-12)
    assert np.allclose(np.triu(l, 1), 0)
    assert np.all(np.diagonal(l).real >= 0)


def test_exp_antihermitian_closed_forms():
    assert np.allclose(exp_antihermitian(np.zeros((2, 2))), I2)
    theta = np.pi / 2
    assert np.allclose(exp_antihermitian(1j * theta * X), 1j * X, atol=1e-14)


def test_exp_antihermitian_matches_taylor(rng):
    for dim in (2, 3):
        a = _random_antihermitian(rng, dim)
        assert np.allclose(exp_antihermitian(a), _taylor_exp(a), atol=1e-12)


def test_exp_antihermitian_rejects_hermitian():
    with pytest.raises(DomainError):
        exp_antihermitian(Z)
    with pytest.raises(DomainError):
        exp_antihermitian_batch(np.stack([Z, Z]))
    with pytest.raises(ShapeError):
        exp_antihermitian_batch(np.zeros((2, 3, 3)))


def test_exp_batch_matches_single(rng):
    a = np.stack([_random_antihermitian(rng) for _ in range(6)])
    batch = exp_antihermitian_batch(a)
    for k in range(6):
        assert np.allclose(batch[k], exp_antihermitian(a[k]), atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
def test_exp_is_unitary_property(a0, a1, re, im):
    a = np.array([[1j * a0, re + 1j * im], [-re + 1j * im, 1j * a1]])
    assert is_antihermitian(a)
    u = exp_antihermitian(a)
    assert np.linalg.norm(u.conj().T @ u - I2) < 1e-12
