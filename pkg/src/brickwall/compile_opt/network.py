"""Exact contraction of a brick-wall ansatz against a target, with gate environments.

Both loss modes reduce to one overlap ``f = Tr[T^dagger U_a]``: in unitary
mode ``T`` is the target MPO, in state mode ``T = |psi_t><psi_0|`` so that
``f = <psi_t| U_a |psi_0>``. For every trainable gate ``u_k`` the engines
also return the environment ``E_k = df/du_k`` (``f`` is linear in each
gate, so ``f = sum(E_k * u_k)``).

:class:`ChainEngine` splits every CNOT into a control half ``|b><b|`` and a
target half ``X^b`` joined by a bond bit ``b``. The ansatz then becomes an
exact MPO of bond ``2^depth`` whose columns are contracted against the
target with left/right environments. :class:`DenseEngine` is a state-vector
engine for grids and small systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..circuits.ansatz import _skeleton
from ..circuits.ir import Chain, Topology
from ..errors import ShapeError


def _lmul(u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``u @ x`` over the last two axes of a stack ``x``."""
    out = np.empty_like(x)
    out[..., 0, :] = u[0, 0] * x[..., 0, :] + u[0, 1] * x[..., 1, :]
    out[..., 1, :] = u[1, 0] * x[..., 0, :] + u[1, 1] * x[..., 1, :]
    return out


@dataclass(frozen=True)
class _Column:
    """Time-ordered operations on one site of the split-CNOT ansatz MPO.

    ``ops`` entries are ``("u", param_index)``, ``("p", None)`` for a control
    half and ``("x", None)`` for a target half. The operations are cut into
    an early and a late segment with about half of the bond bits each, so
    that ``W = W_late W_early`` is formed by a single outer-product
    contraction and all other work happens on half-size arrays.
    """

    early: tuple
    late: tuple
    n_left: int
    n_right: int
    n_early: int  # bits owned by the early segment
    n_late: int
    to_bond: tuple  # (late bits, o, early bits, i) -> (left bits, o, i, right bits)
    to_split: tuple  # (left bits, o, i, right bits) -> (late bits, early bits, o, i)


def _column_plan(skeleton, site: int) -> _Column:
    ops, bits = [], []
    for op in skeleton:
        if op[0] == "u":
            if op[2] == site:
                ops.append(("u", op[1]))
        elif op[1] == site:
            ops.append(("p", None))
            bits.append(1)
        elif op[2] == site:
            ops.append(("x", None))
            bits.append(0)
    n_left, n_right = bits.count(0), bits.count(1)
    n_bits = len(bits)
    n_early = n_bits // 2
    cut, seen = 0, 0
    while seen < n_early:
        seen += ops[cut][0] != "u"
        cut += 1
    # bond-layout axis of each time-ordered bit
    li = ri = 0
    bond_axis = []
    for b in bits:
        if b == 0:
            bond_axis.append(li)
            li += 1
        else:
            bond_axis.append(n_left + 2 + ri)
            ri += 1
    n_late = n_bits - n_early
    o_ax, i_ax = n_left, n_left + 1
    # split layout (late bits, o, early bits, i)
    split_axis = [n_late + 1 + t if t < n_early else t - n_early for t in range(n_bits)]
    to_bond = [0] * (n_bits + 2)
    for t in range(n_bits):
        to_bond[bond_axis[t]] = split_axis[t]
    to_bond[o_ax] = n_late
    to_bond[i_ax] = n_bits + 1
    to_split = tuple(bond_axis[n_early:] + bond_axis[:n_early] + [o_ax, i_ax])
    return _Column(tuple(ops[:cut]), tuple(ops[cut:]), n_left, n_right, n_early, n_late,
                   tuple(to_bond), to_split)


def _forward(ops, params: np.ndarray, keep: bool):
    """Segment operator over its bit values ``(bits..., 2, 2)`` and the prefix before every gate."""
    pre = np.eye(2, dtype=np.complex128)
    saved = {}
    for kind, arg in ops:
        if kind == "u":
            if keep:
                saved[arg] = pre
            pre = _lmul(params[arg], pre)
        elif kind == "p":
            p0 = pre.copy()
            p0[..., 1, :] = 0.0
            p1 = pre.copy()
            p1[..., 0, :] = 0.0
            pre = np.stack([p0, p1], axis=-3)
        else:
            pre = np.stack([pre, pre[..., ::-1, :]], axis=-3)
    return pre, saved


def _backward(ops, c: np.ndarray, saved: dict, params: np.ndarray, out: np.ndarray) -> None:
    """Write ``df/du`` for the segment's gates into ``out``.

    ``c`` has shape ``(bits..., 2, 2)`` in time order and holds ``df/dS`` for
    the segment operator ``S``.
    """
    for kind, arg in reversed(ops):
        if kind == "u":
            pre = saved[arg]
            out[arg] = np.tensordot(c.reshape(-1, 2, 2), pre.reshape(-1, 2, 2),
                                    axes=([0, 2], [0, 2]))
            c = _rmul(c, params[arg])
        elif kind == "p":
            c = np.stack([c[..., 0, 0, :], c[..., 1, 1, :]], axis=-2)
        else:
            c = np.stack([c[..., 0, 0, :] + c[..., 1, 1, :],
                          c[..., 0, 1, :] + c[..., 1, 0, :]], axis=-2)


def _rmul(c: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``out[..., b, i] = sum_a c[..., a, i] u[a, b]``."""
    out = np.empty_like(c)
    out[..., 0, :] = u[0, 0] * c[..., 0, :] + u[1, 0] * c[..., 1, :]
    out[..., 1, :] = u[0, 1] * c[..., 0, :] + u[1, 1] * c[..., 1, :]
    return out


class _ColumnState:
    """Column operator of one site together with what its gradient pass needs."""

    def __init__(self, col: _Column, params: np.ndarray, keep: bool):
        early, self.saved_early = _forward(col.early, params, keep)
        late, self.saved_late = _forward(col.late, params, keep)
        self.early = early.reshape(-1, 2, 2)  # (y, b, c)
        self.late = late.reshape(-1, 2, 2)  # (x, a, b)
        w = np.tensordot(self.late, self.early, axes=([2], [1]))  # (x, a, y, c)
        w = w.reshape((2,) * col.n_late + (2,) + (2,) * col.n_early + (2,)).transpose(col.to_bond)
        self.w = w.reshape(2 ** col.n_left, 2, 2, 2 ** col.n_right)

    def backward(self, col: _Column, m: np.ndarray, params: np.ndarray, out: np.ndarray) -> None:
        ms = m.reshape((2,) * col.n_left + (2, 2) + (2,) * col.n_right).transpose(col.to_split)
        ms = ms.reshape(2 ** col.n_late, 2 ** col.n_early, 2, 2)  # (x, y, o, i)
        m_early = np.tensordot(ms, self.late, axes=([0, 2], [0, 1]))  # (y, i, a)
        m_early = m_early.transpose(0, 2, 1).reshape((2,) * col.n_early + (2, 2))
        _backward(col.early, m_early, self.saved_early, params, out)
        m_late = np.tensordot(ms, self.early, axes=([1, 3], [0, 2]))  # (x, o, b)
        _backward(col.late, m_late.reshape((2,) * col.n_late + (2, 2)), self.saved_late,
                  params, out)


def operator_target(tensors) -> list[np.ndarray]:
    """MPO tensors ``(l, o, i, r)`` of a unitary-mode target."""
    return [np.asarray(t, dtype=np.complex128) for t in tensors]


def state_target(psi_t, psi_0) -> list[np.ndarray]:
    """MPO tensors of ``|psi_t><psi_0|`` from two lists of MPS tensors."""
    out = []
    for a, b in zip(psi_t, psi_0):
        t = np.einsum("aob,cid->acoibd", a, np.conj(b))
        out.append(t.reshape(a.shape[0] * b.shape[0], 2, 2, a.shape[2] * b.shape[2]))
    return out


class ChainEngine:
    """Column-transfer contraction of a chain ansatz against an MPO target.

    Cost per evaluation is dominated by ``O(N D chi^2)`` with ``D`` the
    target bond dimension and ``chi = 2^depth``.
    """

    def __init__(self, topology: Topology, depth: int, target: list[np.ndarray]):
        if not isinstance(topology, Chain):
            raise ShapeError("ChainEngine needs a Chain topology")
        if len(target) != topology.n:
            raise ShapeError(f"target has {len(target)} sites, ansatz {topology.n}")
        skeleton, keys = _skeleton(topology, depth)
        self.n = topology.n
        self.n_params = len(keys)
        self.columns = [_column_plan(skeleton, j) for j in range(self.n)]
        self.tconj = [np.conj(t) for t in target]

    def _right_envs(self, ws):
        envs = [None] * (self.n + 1)
        envs[self.n] = np.ones((1, 1), dtype=np.complex128)
        for j in range(self.n - 1, -1, -1):
            t, w, r = self.tconj[j], ws[j], envs[j + 1]
            dl, dr = t.shape[0], t.shape[3]
            cl = w.shape[0]
            x = w.reshape(-1, w.shape[3]) @ r.T  # (cl*4, dr)
            envs[j] = t.reshape(dl, 4 * dr) @ x.reshape(cl, 4 * dr).T
        return envs

    def value(self, params: np.ndarray) -> complex:
        """The overlap ``f`` alone."""
        left = np.ones((1, 1), dtype=np.complex128)
        for j, col in enumerate(self.columns):
            w = _ColumnState(col, params, keep=False).w
            left = self._step_left(left, self.tconj[j], w)[0]
        return complex(left[0, 0])

    @staticmethod
    def _step_left(left, t, w):
        dl, dr = t.shape[0], t.shape[3]
        cl, cr = w.shape[0], w.shape[3]
        x = (left.T @ t.reshape(dl, 4 * dr)).reshape(cl * 4, dr)
        return x.T @ w.reshape(cl * 4, cr), x

    def value_and_grad(self, params: np.ndarray) -> tuple[complex, np.ndarray]:
        """``f`` and the stack of environments ``df/du_k``, shape ``(P, 2, 2)``."""
        params = np.asarray(params)
        if params.shape != (self.n_params, 2, 2):
            raise ShapeError(f"expected params of shape {(self.n_params, 2, 2)}")
        fw = [_ColumnState(col, params, keep=True) for col in self.columns]
        right = self._right_envs([cs.w for cs in fw])
        grad = np.empty((self.n_params, 2, 2), dtype=np.complex128)
        left = np.ones((1, 1), dtype=np.complex128)
        for j, col in enumerate(self.columns):
            w = fw[j].w
            new_left, x = self._step_left(left, self.tconj[j], w)
            m = (x @ right[j + 1]).reshape(w.shape[0], 2, 2, -1)
            fw[j].backward(col, m, params, grad)
            left = new_left
        return complex(left[0, 0]), grad


def _apply_1q(psi: np.ndarray, u: np.ndarray, q: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(u, psi, axes=([1], [q])), 0, q)


def _apply_cx(psi: np.ndarray, c: int, t: int) -> np.ndarray:
    out = psi.copy()
    idx = [slice(None)] * psi.ndim
    idx[c] = 1
    sub = psi[tuple(idx)]
    out[tuple(idx)] = np.flip(sub, axis=t - 1 if t > c else t)
    return out


class DenseEngine:
    """State-vector contraction for any topology (small ``N``).

    The target is given densely: ``target`` and ``start`` have shape
    ``(2,) * N + (B,)`` holding ``B`` columns (``B = 1`` for state mode and
    ``B = 2^N`` basis states for unitary mode), and
    ``f = sum(conj(target) * U_a start)``. ``position[q]`` is the axis of
    ansatz qubit ``q`` (snake-ordered targets of grid circuits).
    """

    def __init__(self, topology: Topology, depth: int, target: np.ndarray, start: np.ndarray,
                 position=None):
        n = topology.n
        if target.shape[:n] != (2,) * n or target.shape != start.shape:
            raise ShapeError("dense target and start must both have shape (2,)*N + (B,)")
        skeleton, keys = _skeleton(topology, depth)
        pos = list(range(n)) if position is None else list(position)
        self.ops = [(op[0], op[1], pos[op[2]]) if op[0] == "u" else (op[0], pos[op[1]], pos[op[2]])
                    for op in skeleton]
        self.n_params = len(keys)
        self.target = target
        self.start = start

    def _run(self, params):
        psi = self.start
        for op in self.ops:
            psi = _apply_1q(psi, params[op[1]], op[2]) if op[0] == "u" else _apply_cx(psi, op[1], op[2])
        return psi

    def value(self, params: np.ndarray) -> complex:
        return complex(np.vdot(self.target, self._run(params)))

    def value_and_grad(self, params: np.ndarray) -> tuple[complex, np.ndarray]:
        params = np.asarray(params)
        psi = self._run(params)
        f = complex(np.vdot(self.target, psi))
        lam = self.target
        grad = np.empty((self.n_params, 2, 2), dtype=np.complex128)
        for op in reversed(self.ops):
            if op[0] == "cx":
                psi = _apply_cx(psi, op[1], op[2])
                lam = _apply_cx(lam, op[1], op[2])
                continue
            u, q = params[op[1]], op[2]
            psi = _apply_1q(psi, u.conj().T, q)
            axes = [k for k in range(psi.ndim) if k != q]
            grad[op[1]] = np.tensordot(lam.conj(), psi, axes=(axes, axes))
            lam = _apply_1q(lam, u.conj().T, q)
        return f, grad
