"""Standard gate matrices (first qubit is the most significant)."""

from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
CNOT = np.array([[1, 0, 0, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1],
                 [0, 0, 1, 0]], dtype=np.complex128)
SWAP = np.array([[1, 0, 0, 0],
                 [0, 0, 1, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1]], dtype=np.complex128)


def rx(theta: float) -> np.ndarray:
    """``exp(-i theta X / 2)``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def rz(theta: float) -> np.ndarray:
    """``exp(-i theta Z / 2)``."""
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def rzz(theta: float) -> np.ndarray:
    """``exp(-i theta Z⊗Z / 2)``."""
    a, b = np.exp(-0.5j * theta), np.exp(0.5j * theta)
    return np.diag([a, b, b, a])


def cphase(lam: float) -> np.ndarray:
    """Controlled phase ``diag(1, 1, 1, e^{i lam})`` (the ``cu1`` gate)."""
    return np.diag([1, 1, 1, np.exp(1j * lam)]).astype(np.complex128)


def u3(theta: float, phi: float, lam: float) -> np.ndarray:
    """OpenQASM ``u3`` gate."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -np.exp(1j * lam) * s],
                     [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
                    dtype=np.complex128)


def zyz_angles(u: np.ndarray) -> tuple[float, float, float, float]:
    """Decompose a 2x2 unitary as ``e^{i alpha} u3(theta, phi, lam)``.

    Returns ``(theta, phi, lam, alpha)``.
    """
    u = np.asarray(u, dtype=np.complex128)
    det = np.linalg.det(u)
    v = u / np.sqrt(det)  # special unitary, defined up to a sign
    theta = 2 * np.arctan2(abs(v[1, 0]), abs(v[0, 0]))
    if abs(v[0, 0]) > 1e-12 and abs(v[1, 0]) > 1e-12:
        a = np.angle(v[1, 1])       # (phi + lam) / 2
        b = np.angle(v[1, 0])       # (phi - lam) / 2
        phi, lam = a + b, a - b
    elif abs(v[1, 0]) <= 1e-12:     # diagonal
        phi, lam = 0.0, 2 * np.angle(v[1, 1])
    else:                           # anti-diagonal
        phi, lam = 2 * np.angle(v[1, 0]), 0.0
    base = u3(theta, phi, lam)
    # global phase from the largest entry
    k = np.unravel_index(np.argmax(np.abs(base)), base.shape)
    alpha = float(np.angle(u[k] / base[k]))
    return float(theta), float(phi), float(lam), alpha
