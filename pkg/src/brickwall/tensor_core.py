"""Dense complex tensor kernels.

Every tensor in the package is a ``numpy.ndarray`` of dtype ``complex128`` in
C (row-major) order; :data:`ComplexTensor` is an alias used in signatures.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .errors import DecompositionError, DomainError, ShapeError

ComplexTensor = np.ndarray

#: Tolerance on ``||a + a^dagger||`` accepted by :func:`exp_antihermitian`.
ANTIHERMITIAN_TOL = 1e-10


class SVDResult(NamedTuple):
    """Thin SVD ``m = u @ diag(s) @ vh`` with ``s`` descending."""

    u: ComplexTensor
    s: np.ndarray
    vh: ComplexTensor


def as_tensor(x) -> ComplexTensor:
    """Return ``x`` as a C-contiguous complex128 array, rejecting NaN/Inf."""
    t = np.ascontiguousarray(x, dtype=np.complex128)
    if not np.all(np.isfinite(t)):
        raise DomainError("tensor contains non-finite entries")
    return t


def contract(a: ComplexTensor, b: ComplexTensor,
             axes: Sequence[tuple[int, int]]) -> ComplexTensor:
    """Sum over paired axes of ``a`` and ``b``.

    The result carries the free axes of ``a`` (in order) followed by the free
    axes of ``b``.

    Args:
        a, b: Input tensors.
        axes: Pairs ``(i, j)`` contracting axis ``i`` of ``a`` with axis
            ``j`` of ``b``.

    Raises:
        ShapeError: If a paired axis is out of range or the dimensions differ.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    axes = [(int(i), int(j)) for i, j in axes]
    ia = [i for i, _ in axes]
    ib = [j for _, j in axes]
    if len(set(ia)) != len(ia) or len(set(ib)) != len(ib):
        raise ShapeError(f"repeated axis in contraction pairs {axes}")
    for i, j in axes:
        if not (-a.ndim <= i < a.ndim and -b.ndim <= j < b.ndim):
            raise ShapeError(f"axis pair {(i, j)} out of range for ranks "
                             f"{a.ndim} and {b.ndim}")
        if a.shape[i] != b.shape[j]:
            raise ShapeError(f"cannot contract axis {i} (dim {a.shape[i]}) "
                             f"with axis {j} (dim {b.shape[j]})")
    return np.tensordot(a, b, axes=(ia, ib))


def _require_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeError(f"expected a rank-2 tensor, got rank {m.ndim}")
    return m


def svd(m: ComplexTensor) -> SVDResult:
    """Thin singular value decomposition.

    Falls back from LAPACK ``gesdd`` to the slower but more robust ``gesvd``
    before giving up.

    Raises:
        ShapeError: If ``m`` is not rank 2.
        DecompositionError: If neither driver converges.
    """
    m = _require_matrix(m)
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            u, s, vh = scipy.linalg.svd(m, full_matrices=False,
                                        lapack_driver="gesvd")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise DecompositionError(f"SVD of {m.shape} matrix failed") from exc
    return SVDResult(u, s, vh)


def lq(m: ComplexTensor) -> tuple[ComplexTensor, ComplexTensor]:
    """LQ decomposition ``m = l @ q`` with ``q`` having orthonormal rows.

    The phase convention makes the diagonal of ``l`` real and non-negative.
    For an ``r x c`` input, ``l`` is ``r x k`` and ``q`` is ``k x c`` with
    ``k = min(r, c)``.
    """
    m = _require_matrix(m)
    # m^dagger = Q R  =>  m = R^dagger Q^dagger
    qr_q, qr_r = np.linalg.qr(m.conj().T, mode="reduced")
    diag = np.diagonal(qr_r)
    phase = np.ones_like(diag)
    nz = np.abs(diag) > 0
    phase[nz] = diag[nz] / np.abs(diag[nz])
    qr_q = qr_q * phase[np.newaxis, :]
    qr_r = qr_r * phase.conj()[:, np.newaxis]
    return qr_r.conj().T, qr_q.conj().T


def is_antihermitian(a: ComplexTensor, tol: float = ANTIHERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and \
        float(np.linalg.norm(a + a.conj().T)) <= tol


def exp_antihermitian(a: ComplexTensor) -> ComplexTensor:
    """Matrix exponential of an anti-Hermitian matrix (a unitary).

    2x2 inputs use the closed form ``exp(i(h0 + h.sigma))``; larger inputs
    go through the eigendecomposition of the Hermitian matrix ``-i a``.

    Raises:
        DomainError: If ``||a + a^dagger|| > 1e-10``.
    """
    a = _require_matrix(a)
    if not is_antihermitian(a):
        raise DomainError("exp_antihermitian requires an anti-Hermitian input")
    # a = i h with h Hermitian; symmetrize away the admissible residue
    h = -0.5j * (a - a.conj().T)
    if a.shape == (2, 2):
        return _exp_i_hermitian_2x2(h)
    evals, evecs = np.linalg.eigh(h)
    return (evecs * np.exp(1j * evals)) @ evecs.conj().T


def _exp_i_hermitian_2x2(h: np.ndarray) -> np.ndarray:
    """``exp(i h)`` for a stack ``(..., 2, 2)`` of Hermitian matrices."""
    h0 = 0.5 * (h[..., 0, 0] + h[..., 1, 1]).real
    hx = h[..., 0, 1].real
    hy = -h[..., 0, 1].imag
    hz = 0.5 * (h[..., 0, 0] - h[..., 1, 1]).real
    r = np.sqrt(hx * hx + hy * hy + hz * hz)
    c = np.cos(r)
    sinc = np.sinc(r / np.pi)  # sin(r)/r, finite at r = 0
    w = np.empty(h.shape, dtype=np.complex128)
    w[..., 0, 0] = c + 1j * sinc * hz
    w[..., 0, 1] = 1j * sinc * (hx - 1j * hy)
    w[..., 1, 0] = 1j * sinc * (hx + 1j * hy)
    w[..., 1, 1] = c - 1j * sinc * hz
    return np.exp(1j * h0)[..., None, None] * w


def exp_antihermitian_batch(a: ComplexTensor) -> ComplexTensor:
    """:func:`exp_antihermitian` for a stack of 2x2 matrices, shape ``(..., 2, 2)``.

    Raises:
        DomainError: If any matrix is not anti-Hermitian to 1e-10.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.shape[-2:] != (2, 2):
        raise ShapeError(f"expected a stack of 2x2 matrices, got shape {a.shape}")
    ah = np.conj(np.swapaxes(a, -1, -2))
    if a.size and np.max(np.linalg.norm(a + ah, axis=(-2, -1))) > ANTIHERMITIAN_TOL:
        raise DomainError("exp_antihermitian_batch requires anti-Hermitian inputs")
    return _exp_i_hermitian_2x2(-0.5j * (a - ah))
