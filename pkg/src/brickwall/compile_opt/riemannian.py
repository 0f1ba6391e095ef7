"""Tangent projection, exponential retraction and Adam on products of U(2).

Every function accepts a single ``(2, 2)`` matrix or a stack ``(P, 2, 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, ShapeError
from ..tensor_core import ANTIHERMITIAN_TOL, exp_antihermitian, exp_antihermitian_batch


def _dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def skew(a: np.ndarray) -> np.ndarray:
    """Anti-Hermitian part ``(a - a^dagger) / 2``."""
    return 0.5 * (a - _dagger(a))


def project_to_tangent(u: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Riemannian gradient ``(u^dagger grad - grad^dagger u) / 2`` in the Lie algebra."""
    u = np.asarray(u, dtype=np.complex128)
    grad = np.asarray(grad, dtype=np.complex128)
    if u.shape != grad.shape:
        raise ShapeError(f"gate shape {u.shape} != gradient shape {grad.shape}")
    return 0.5 * (_dagger(u) @ grad - _dagger(grad) @ u)


def retract(u: np.ndarray, step: np.ndarray, eta: float = 1.0) -> np.ndarray:
    """Move along the manifold: ``u exp(-eta step)``.

    Raises:
        DomainError: If ``step`` is not anti-Hermitian to 1e-10.
    """
    u = np.asarray(u, dtype=np.complex128)
    step = np.asarray(step, dtype=np.complex128)
    if u.shape != step.shape:
        raise ShapeError(f"gate shape {u.shape} != step shape {step.shape}")
    if eta == 0.0:
        return u.copy()
    if step.ndim == 2:
        return u @ exp_antihermitian(-eta * step)
    return u @ exp_antihermitian_batch(-eta * step)


@dataclass
class OptimizerState:
    """Adam moments kept in the Lie-algebra coordinates of every gate."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    extras: dict = field(default_factory=dict)

    @classmethod
    def fresh(cls, n_gates: int, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> "OptimizerState":
        return cls(np.zeros((n_gates, 2, 2), dtype=np.complex128),
                   np.zeros((n_gates, 2, 2)), 0, lr, beta1, beta2, eps)

    def copy(self) -> "OptimizerState":
        return OptimizerState(self.m.copy(), self.v.copy(), self.t, self.lr, self.beta1,
                              self.beta2, self.eps, dict(self.extras))


def adam_step(state: OptimizerState, grads: np.ndarray,
              lr: float | None = None) -> tuple[OptimizerState, np.ndarray]:
    """One Adam update on projected gradients.

    The second moment uses ``|g|^2`` elementwise. The bias-corrected step
    ``lr m_hat / (sqrt(v_hat) + eps)`` is not exactly anti-Hermitian, so its
    skew part is returned; feed it to :func:`retract` with ``eta = 1``.

    Args:
        state: Current moments (not modified).
        grads: Anti-Hermitian projected gradients, same shape as ``state.m``.
        lr: Learning rate for this step; defaults to ``state.lr``.

    Returns:
        The advanced state and the anti-Hermitian steps.
    """
    grads = np.asarray(grads, dtype=np.complex128)
    if grads.shape != state.m.shape:
        raise ShapeError(f"expected gradients of shape {state.m.shape}, got {grads.shape}")
    if grads.size and np.max(np.abs(grads + _dagger(grads))) > ANTIHERMITIAN_TOL * 10:
        raise DomainError("adam_step expects anti-Hermitian (projected) gradients")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * np.abs(grads) ** 2
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    eta = state.lr if lr is None else lr
    step = skew(eta * m_hat / (np.sqrt(v_hat) + state.eps))
    new = OptimizerState(m, v, t, state.lr, state.beta1, state.beta2, state.eps,
                         dict(state.extras))
    return new, step
