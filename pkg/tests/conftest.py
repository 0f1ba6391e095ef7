"""Shared brute-force oracles.

Everything here is written from scratch with ``np.kron`` so that tests never
validate the package against itself. Qubit 0 is the most significant bit.
"""

from __future__ import annotations

import numpy as np
import pytest

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def embed(op: np.ndarray, sites, n: int) -> np.ndarray:
    """Full ``2^n`` matrix of ``op`` acting on ``sites`` (any order, any distance)."""
    sites = list(sites)
    k = len(sites)
    dim = 2 ** n
    out = np.zeros((dim, dim), dtype=complex)
    op = op.reshape([2] * (2 * k))
    for col in range(dim):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        sub_in = tuple(bits[s] for s in sites)
        for sub_out in np.ndindex(*([2] * k)):
            amp = op[sub_out + sub_in]
            if amp == 0:
                continue
            nb = list(bits)
            for s, b in zip(sites, sub_out):
                nb[s] = b
            row = int("".join(map(str, nb)), 2)
            out[row, col] += amp
    return out


def dense_of_gates(gates, n: int) -> np.ndarray:
    """Product of ``(matrix, sites)`` pairs, first gate applied first."""
    u = np.eye(2 ** n, dtype=complex)
    for m, sites in gates:
        u = embed(m, sites, n) @ u
    return u


def dense_circuit(circuit) -> np.ndarray:
    return dense_of_gates([(g.matrix, g.sites) for g in circuit.gates()], circuit.n)


def basis(n: int, bits: str) -> np.ndarray:
    v = np.zeros(2 ** n, dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
    return v / np.linalg.norm(v)


def schmidt_entropy(psi: np.ndarray, n: int, cut: int) -> float:
    """Von Neumann entropy in bits across ``[0, cut) | [cut, n)``."""
    s = np.linalg.svd(psi.reshape(2 ** cut, 2 ** (n - cut)), compute_uv=False)
    p = s ** 2 / np.sum(s ** 2)
    p = p[p > 1e-15]
    return float(-np.sum(p * np.log2(p)))


def operator_schmidt_entropy(u: np.ndarray, n: int, cut: int) -> float:
    """Entropy of ``u`` as a normalized vector with rows and columns split at ``cut``."""
    t = u.reshape([2] * (2 * n))
    left = list(range(cut)) + list(range(n, n + cut))
    right = list(range(cut, n)) + list(range(n + cut, 2 * n))
    m = np.transpose(t, left + right).reshape(4 ** cut, 4 ** (n - cut))
    s = np.linalg.svd(m, compute_uv=False)
    p = s ** 2 / np.sum(s ** 2)
    p = p[p > 1e-15]
    return float(-np.sum(p * np.log2(p)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


#: One PASS/FAIL line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
