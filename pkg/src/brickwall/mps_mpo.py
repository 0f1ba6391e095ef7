"""Matrix product states and operators.

Index conventions:

* MPS site tensors have shape ``(left, phys, right)``.
* MPO site tensors have shape ``(left, out, in, right)``; the operator maps
  the ``in`` legs to the ``out`` legs.
* Sites are 0-based. In dense vectors site 0 is the most significant qubit,
  so densified objects agree with ``np.kron`` ordering.

A right-canonical MPO keeps an extra factor of the physical dimension in
every isometry, ``sum A A^* = 2 I``, so that a unitary satisfies
``Tr[U^dagger U] = 2^N`` with an O(1) first tensor.

Operations never mutate their inputs; each returns a new object.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import DomainError, ShapeError, TopologyError
from .tensor_core import lq, svd

#: Singular values below this fraction of the largest are numerical zeros and
#: are dropped when a gate is split back into two site tensors.
SPLIT_RTOL = 1e-14

_MAGIC = b"BWTN"
_FORMAT_VERSION = 1


def _freeze(tensors) -> tuple[np.ndarray, ...]:
    out = []
    for t in tensors:
        t = np.array(t, dtype=np.complex128, order="C")
        t.flags.writeable = False
        out.append(t)
    return tuple(out)


@dataclass(frozen=True)
class MPS:
    """Matrix product state on ``n`` qubits.

    ``canonical`` is ``None`` (no gauge guarantee), ``"right"`` (every tensor
    but the first is a right isometry) or ``"mixed"`` (orthogonality center at
    ``center``; tensors to its left are left isometries, to its right right
    isometries).
    """

    tensors: tuple[np.ndarray, ...]
    canonical: str | None = None
    center: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "tensors", _freeze(self.tensors))
        _check_chain(self.tensors, rank=3)

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[-1] for t in self.tensors[:-1]]

    def to_dense(self) -> np.ndarray:
        """State vector of length ``2**n``."""
        v = self.tensors[0]
        for t in self.tensors[1:]:
            v = np.tensordot(v, t, axes=(-1, 0))
        return v.reshape(-1)

    def norm(self) -> float:
        return float(np.sqrt(abs(inner(self, self))))


@dataclass(frozen=True)
class MPO:
    """Matrix product operator on ``n`` qubits (see module docstring)."""

    tensors: tuple[np.ndarray, ...]
    canonical: str | None = None
    center: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "tensors", _freeze(self.tensors))
        _check_chain(self.tensors, rank=4)

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[-1] for t in self.tensors[:-1]]

    def to_dense(self) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix."""
        m = self.tensors[0]  # (1, o..., i..., r) kept as (o, i) pairs
        n_sites = 1
        for t in self.tensors[1:]:
            m = np.tensordot(m, t, axes=(-1, 0))
            n_sites += 1
        m = m.reshape((2, 2) * n_sites)
        outs = list(range(0, 2 * n_sites, 2))
        ins = list(range(1, 2 * n_sites, 2))
        dim = 2 ** n_sites
        return m.transpose(outs + ins).reshape(dim, dim)


Network = Union[MPS, MPO]


class SchmidtSpectrum(NamedTuple):
    """Normalized Schmidt values across bond ``cut`` (sites ``< cut`` on the left)."""

    cut: int
    values: np.ndarray


def _check_chain(tensors, rank: int) -> None:
    if len(tensors) < 1:
        raise ShapeError("a network needs at least one site")
    for j, t in enumerate(tensors):
        if t.ndim != rank:
            raise ShapeError(f"site {j}: expected rank {rank}, got {t.ndim}")
        if any(d != 2 for d in t.shape[1:-1]):
            raise ShapeError(f"site {j}: physical dimension must be 2")
    if tensors[0].shape[0] != 1 or tensors[-1].shape[-1] != 1:
        raise ShapeError("boundary bonds must have dimension 1")
    for j in range(len(tensors) - 1):
        if tensors[j].shape[-1] != tensors[j + 1].shape[0]:
            raise ShapeError(f"bond {j + 1}: dimensions "
                             f"{tensors[j].shape[-1]} and {tensors[j + 1].shape[0]} differ")


# ---------------------------------------------------------------------------
# chain helpers: an MPS-like list of (left, p, right) tensors, p = 2 or 4


def _as_chain(target: Network) -> list[np.ndarray]:
    if isinstance(target, MPO):
        return [t.reshape(t.shape[0], 4, t.shape[-1]) for t in target.tensors]
    return list(target.tensors)


def _from_chain(target: Network, chain, canonical=None, center=None) -> Network:
    if isinstance(target, MPO):
        ts = [t.reshape(t.shape[0], 2, 2, t.shape[-1]) for t in chain]
        return MPO(ts, canonical, center)
    return MPS(chain, canonical, center)


def _chain_overlap(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> complex:
    """``sum conj(a) * b`` over all physical configurations."""
    env = np.ones((1, 1), dtype=np.complex128)
    for ta, tb in zip(a, b):
        x = np.tensordot(env, ta.conj(), axes=(0, 0))       # (rb, p, ra')
        env = np.tensordot(x, tb, axes=([0, 1], [0, 1]))     # (ra', rb')
    return complex(env[0, 0])


def _right_canonicalize_chain(chain) -> list[np.ndarray]:
    """Right-to-left LQ sweep; all tensors but the first become right isometries."""
    chain = list(chain)
    for j in range(len(chain) - 1, 0, -1):
        t = chain[j]
        dl, p, dr = t.shape
        l, q = lq(t.reshape(dl, p * dr))
        chain[j] = q.reshape(q.shape[0], p, dr)
        chain[j - 1] = np.tensordot(chain[j - 1], l, axes=(-1, 0))
    return chain


def _truncate_chain(chain, d_max: int):
    """Left-to-right SVD sweep on a right-canonical chain.

    Returns the left-canonical chain (norm carried by the last tensor), the
    list of normalized discarded weights per cut and the kept Schmidt values.
    """
    chain = list(chain)
    discarded = []
    spectra = []
    for j in range(len(chain) - 1):
        t = chain[j]
        dl, p, dr = t.shape
        u, s, vh = svd(t.reshape(dl * p, dr))
        total = float(np.sum(s * s))
        k = min(d_max, len(s))
        kept = s[:k]
        discarded.append(0.0 if total == 0.0 else float(np.sum(s[k:] ** 2)) / total)
        spectra.append(kept / np.sqrt(np.sum(kept ** 2)) if total > 0 else kept)
        chain[j] = u[:, :k].reshape(dl, p, k)
        chain[j + 1] = np.tensordot(kept[:, None] * vh[:k], chain[j + 1], axes=(1, 0))
    return chain, discarded, spectra


def _scale_isometries(chain, factor: float, center: int) -> list[np.ndarray]:
    """Multiply every non-center tensor by ``factor`` and compensate at the center."""
    n = len(chain)
    out = [t * factor if j != center else t for j, t in enumerate(chain)]
    out[center] = out[center] / factor ** (n - 1)
    return out


# ---------------------------------------------------------------------------
# construction


def mps_product_state(n: int, bits: str) -> MPS:
    """Computational basis state ``|bits>``; ``bits[0]`` is site 0.

    Raises:
        DomainError: If ``n < 2``, ``len(bits) != n`` or ``bits`` is not binary.
    """
    if n < 2:
        raise DomainError("a product state needs at least two qubits")
    if len(bits) != n or set(bits) - {"0", "1"}:
        raise DomainError(f"bits must be a binary string of length {n}")
    ts = []
    for b in bits:
        t = np.zeros((1, 2, 1), dtype=np.complex128)
        t[0, int(b), 0] = 1.0
        ts.append(t)
    return MPS(ts, "right", 0)


def mps_from_local_states(states: Sequence[np.ndarray]) -> MPS:
    """Product state from a list of single-qubit vectors (normalized on input)."""
    ts = []
    for v in states:
        v = np.asarray(v, dtype=np.complex128).reshape(2)
        ts.append((v / np.linalg.norm(v)).reshape(1, 2, 1))
    return MPS(ts, "right", 0)


def mpo_identity(n: int) -> MPO:
    """Identity operator with bond dimension 1."""
    if n < 2:
        raise DomainError("an MPO needs at least two qubits")
    eye = np.eye(2, dtype=np.complex128).reshape(1, 2, 2, 1)
    return MPO([eye] * n, "right", 0)


def mps_from_dense(vec: np.ndarray) -> MPS:
    """Exact MPS of a dense state vector via successive SVDs."""
    vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
    n = int(round(np.log2(vec.size)))
    if 2 ** n != vec.size:
        raise ShapeError("vector length is not a power of two")
    chain = _dense_to_chain(vec, n, 2)
    return MPS(chain, "mixed", n - 1)


def mpo_from_dense(mat: np.ndarray) -> MPO:
    """Exact MPO of a dense ``2^n x 2^n`` matrix via successive SVDs."""
    mat = np.asarray(mat, dtype=np.complex128)
    dim = mat.shape[0]
    n = int(round(np.log2(dim)))
    if mat.shape != (dim, dim) or 2 ** n != dim:
        raise ShapeError("matrix must be square with power-of-two size")
    t = mat.reshape((2,) * (2 * n))
    order = [x for j in range(n) for x in (j, n + j)]
    vec = t.transpose(order).reshape(-1)
    chain = _dense_to_chain(vec, n, 4)
    return MPO([c.reshape(c.shape[0], 2, 2, c.shape[-1]) for c in chain], "mixed", n - 1)


def _dense_to_chain(vec, n, p):
    chain = []
    rest = vec.reshape(1, -1)
    for _ in range(n - 1):
        dl = rest.shape[0]
        u, s, vh = svd(rest.reshape(dl * p, -1))
        k = max(1, int(np.sum(s > SPLIT_RTOL * s[0]))) if s[0] > 0 else 1
        chain.append(u[:, :k].reshape(dl, p, k))
        rest = s[:k, None] * vh[:k]
    chain.append(rest.reshape(rest.shape[0], p, 1))
    return chain


def random_mps(n: int, bond: int, rng: np.random.Generator) -> MPS:
    """Normalized MPS with Gaussian tensors and bond dimensions capped at ``bond``."""
    dims = [1] + [min(bond, 2 ** min(j, n - j)) for j in range(1, n)] + [1]
    ts = [rng.normal(size=(dims[j], 2, dims[j + 1]))
          + 1j * rng.normal(size=(dims[j], 2, dims[j + 1])) for j in range(n)]
    psi = MPS(ts)
    return MPS([t / psi.norm() if j == 0 else t for j, t in enumerate(psi.tensors)])


# ---------------------------------------------------------------------------
# gates


def _gate_matrix(gate, nq: int) -> np.ndarray:
    g = np.asarray(gate, dtype=np.complex128)
    dim = 2 ** nq
    if g.shape == (2,) * (2 * nq):
        g = g.reshape(dim, dim)
    if g.shape != (dim, dim):
        raise ShapeError(f"a {nq}-site gate must be {dim}x{dim}, got {g.shape}")
    if np.linalg.norm(g.conj().T @ g - np.eye(dim)) > 1e-10:
        raise DomainError("gate is not unitary")
    return g


def apply_gate(target: Network, gate, sites: Sequence[int]) -> Network:
    """Apply a 1- or 2-site gate, ``target <- gate @ target``.

    Two-site gates act on adjacent sites; ``sites[0]`` is the gate's first
    (most significant) qubit, in either order. The merged two-site tensor is
    split exactly by SVD, discarding only numerically zero singular values.

    Raises:
        TopologyError: If the two sites are not nearest neighbours.
        ShapeError, DomainError: On a malformed or non-unitary gate.
    """
    sites = [int(s) for s in sites]
    n = target.n
    if any(not 0 <= s < n for s in sites):
        raise DomainError(f"sites {sites} out of range for {n} qubits")
    ts = list(target.tensors)
    is_mpo = isinstance(target, MPO)
    if len(sites) == 1:
        g = _gate_matrix(gate, 1)
        j = sites[0]
        ts[j] = np.einsum("ab,lb...->la...", g, ts[j])
        # a unitary on the physical leg keeps every isometry condition
        return type(target)(ts, target.canonical, target.center)
    if len(sites) != 2:
        raise DomainError("gates act on one or two sites")
    a, b = sites
    if abs(a - b) != 1:
        raise TopologyError(f"sites {a} and {b} are not adjacent")
    g = _gate_matrix(gate, 2).reshape(2, 2, 2, 2)
    if a > b:  # reorder to (left, right) qubit order
        g = g.transpose(1, 0, 3, 2)
        a, b = b, a
    left, right = ts[a], ts[b]
    if is_mpo:
        theta = np.tensordot(left, right, axes=(-1, 0))      # l o1 i1 o2 i2 r
        theta = np.einsum("abcd,lcxdyr->laxbyr", g, theta)
        dl, dr = left.shape[0], right.shape[-1]
        u, s, vh = svd(theta.reshape(dl * 4, 4 * dr))
        k = max(1, int(np.sum(s > SPLIT_RTOL * s[0])))
        ts[a] = u[:, :k].reshape(dl, 2, 2, k)
        ts[b] = (s[:k, None] * vh[:k]).reshape(k, 2, 2, dr)
    else:
        theta = np.tensordot(left, right, axes=(-1, 0))      # l p1 p2 r
        theta = np.einsum("abcd,lcdr->labr", g, theta)
        dl, dr = left.shape[0], right.shape[-1]
        u, s, vh = svd(theta.reshape(dl * 2, 2 * dr))
        k = max(1, int(np.sum(s > SPLIT_RTOL * s[0])))
        ts[a] = u[:, :k].reshape(dl, 2, k)
        ts[b] = (s[:k, None] * vh[:k]).reshape(k, 2, dr)
    return type(target)(ts)


# ---------------------------------------------------------------------------
# gauge and truncation


def canonicalize(target: Network) -> Network:
    """Right-canonical form by a right-to-left LQ sweep.

    The represented state or operator is unchanged. For an MPO the isometries
    carry the factor ``sqrt(2)`` per site (so ``sum A A^* = 2 I``).
    """
    chain = _right_canonicalize_chain(_as_chain(target))
    if isinstance(target, MPO):
        chain = _scale_isometries(chain, np.sqrt(2.0), center=0)
    return _from_chain(target, chain, "right", 0)


def truncate(target: Network, d_max: int) -> tuple[Network, float]:
    """Cap every bond at ``d_max`` with a left-to-right SVD sweep.

    The input should be right-canonical (it is canonicalized first if not),
    so that the singular values at each cut are its Schmidt values. The result
    is renormalized to ``<psi|psi> = 1`` (MPS) or ``Tr[U^dagger U] = 2^N``
    (MPO) and ends in mixed form with the center on the last site.

    Returns:
        The truncated network and the discarded weight: squared normalized
        Schmidt values dropped, summed over all cuts.

    Raises:
        DomainError: If ``d_max < 1``.
    """
    if d_max < 1:
        raise DomainError("d_max must be at least 1")
    if target.canonical != "right":
        target = canonicalize(target)
    chain, discarded, _ = _truncate_chain(_as_chain(target), d_max)
    n = len(chain)
    last = chain[-1]
    nrm = np.linalg.norm(last)
    if isinstance(target, MPO):
        chain[-1] = last * (np.sqrt(2.0 ** n) / nrm)
        chain = _scale_isometries(chain, np.sqrt(2.0), center=n - 1)
    else:
        chain[-1] = last / nrm
    return _from_chain(target, chain, "mixed", n - 1), float(sum(discarded))


def compress(target: Network, d_max: int) -> tuple[Network, float]:
    """:func:`canonicalize` followed by :func:`truncate`."""
    return truncate(canonicalize(target), d_max)


# ---------------------------------------------------------------------------
# contractions


def inner(a: MPS, b: MPS) -> complex:
    """``<a|b>``."""
    if a.n != b.n:
        raise ShapeError(f"MPS sizes differ: {a.n} vs {b.n}")
    return _chain_overlap(a.tensors, b.tensors)


def trace_adjoint_product(a: MPO, b: MPO) -> complex:
    """``Tr[a^dagger b]`` (not normalized by ``2^N``)."""
    if a.n != b.n:
        raise ShapeError(f"MPO sizes differ: {a.n} vs {b.n}")
    return _chain_overlap(_as_chain(a), _as_chain(b))


def trace(a: MPO) -> complex:
    """``Tr[a]``."""
    env = np.ones(1, dtype=np.complex128)
    for t in a.tensors:
        env = env @ np.einsum("loor->lr", t)
    return complex(env[0])


def schmidt_spectrum(target: Network, cut: int) -> SchmidtSpectrum:
    """Normalized Schmidt values across bond ``cut``.

    Bond ``cut`` separates sites ``0..cut-1`` from ``cut..n-1``. An MPO is
    treated as a vector in the doubled space, normalized on the fly.

    Raises:
        DomainError: If ``cut`` is not in ``1..n-1``.
    """
    n = target.n
    if not 1 <= cut <= n - 1:
        raise DomainError(f"cut {cut} out of range 1..{n - 1}")
    chain = _as_chain(target)
    if target.canonical == "mixed" and target.center is not None:
        center = target.center
    elif target.canonical == "right":
        center = 0
    else:
        chain = _right_canonicalize_chain(chain)
        center = 0
    if cut > center:
        r = np.eye(chain[center].shape[0], dtype=np.complex128)
        for j in range(center, cut):
            t = np.tensordot(r, chain[j], axes=(1, 0))
            dl, p, dr = t.shape
            _, r = np.linalg.qr(t.reshape(dl * p, dr))
        m = r
    else:
        l = np.eye(chain[center].shape[-1], dtype=np.complex128)
        for j in range(center, cut - 1, -1):
            t = np.tensordot(chain[j], l, axes=(-1, 0))
            dl, p, dr = t.shape
            l, _ = lq(t.reshape(dl, p * dr))
        m = l
    s = np.linalg.svd(m, compute_uv=False)
    total = np.sqrt(np.sum(s * s))
    return SchmidtSpectrum(cut, s / total if total > 0 else s)


def entanglement_entropy(target: Network, cut: int) -> float:
    """Von Neumann entropy in bits across bond ``cut``."""
    p = schmidt_spectrum(target, cut).values ** 2
    p = p[p > 0]
    # clamp rounding noise such as -0.0 for product states
    return max(0.0, float(-np.sum(p * np.log2(p))))


def _split_two_site(op: np.ndarray):
    """Operator-Schmidt split of a 4x4 operator into (2,2,k) and (k,2,2) halves."""
    t = op.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = svd(t)
    k = max(1, int(np.sum(s > SPLIT_RTOL * s[0])))
    left = (u[:, :k] * np.sqrt(s[:k])).reshape(2, 2, k)
    right = (np.sqrt(s[:k])[:, None] * vh[:k]).reshape(k, 2, 2)
    return left, right


def expect_local(target: MPS, observable, sites: Sequence[int]) -> float:
    """``<psi|O|psi> / <psi|psi>`` for a Hermitian operator on 1-2 adjacent sites.

    Raises:
        DomainError: If the observable is not Hermitian.
        TopologyError: If two sites are not adjacent.
    """
    sites = [int(s) for s in sites]
    nq = len(sites)
    o = np.asarray(observable, dtype=np.complex128).reshape(2 ** nq, 2 ** nq)
    if np.linalg.norm(o - o.conj().T) > 1e-10:
        raise DomainError("observable is not Hermitian")
    if nq == 2 and abs(sites[0] - sites[1]) != 1:
        raise TopologyError(f"sites {sites} are not adjacent")
    if nq == 2 and sites[0] > sites[1]:
        o = o.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
        sites = sites[::-1]
    ops: dict[int, np.ndarray] = {}
    if nq == 1:
        ops[sites[0]] = o.reshape(1, 2, 2, 1)
    else:
        left, right = _split_two_site(o)
        ops[sites[0]] = left.reshape(1, 2, 2, -1)
        ops[sites[1]] = right.reshape(-1, 2, 2, 1)
    env = np.ones((1, 1, 1), dtype=np.complex128)   # (bra, op, ket)
    for j, t in enumerate(target.tensors):
        w = ops.get(j)
        if w is None:
            x = np.tensordot(env, t.conj(), axes=(0, 0))           # (op, ket, p, bra')
            env = np.tensordot(x, t, axes=([1, 2], [0, 1]))        # (op, bra', ket')
            env = env.transpose(1, 0, 2)
        else:
            x = np.tensordot(env, t.conj(), axes=(0, 0))           # (op, ket, po, bra')
            x = np.tensordot(x, w, axes=([0, 2], [0, 1]))          # (ket, bra', pi, op')
            env = np.tensordot(x, t, axes=([0, 2], [0, 1]))        # (bra', op', ket')
    val = complex(env[0, 0, 0]) / inner(target, target).real
    return float(val.real)


# ---------------------------------------------------------------------------
# binary serialization: magic, version, kind, n, canonical, center, tensors


_CANON_CODES = {None: 0, "right": 1, "mixed": 2}


def to_bytes(target: Network) -> bytes:
    """Serialize to the versioned binary format (row-major complex128, little endian)."""
    buf = io.BytesIO()
    kind = 1 if isinstance(target, MPO) else 0
    center = -1 if target.center is None else target.center
    buf.write(_MAGIC)
    buf.write(struct.pack("<IBIBi", _FORMAT_VERSION, kind, target.n,
                          _CANON_CODES[target.canonical], center))
    for t in target.tensors:
        buf.write(struct.pack("<B", t.ndim))
        buf.write(struct.pack(f"<{t.ndim}I", *t.shape))
        buf.write(np.ascontiguousarray(t, dtype="<c16").tobytes())
    return buf.getvalue()


def from_bytes(data: bytes) -> Network:
    """Inverse of :func:`to_bytes`."""
    if data[:4] != _MAGIC:
        raise ShapeError("not a brickwall tensor-network file (bad magic)")
    off = 4
    version, kind, n, canon, center = struct.unpack_from("<IBIBi", data, off)
    if version != _FORMAT_VERSION:
        raise ShapeError(f"unsupported format version {version}")
    off += struct.calcsize("<IBIBi")
    tensors = []
    for _ in range(n):
        (rank,) = struct.unpack_from("<B", data, off)
        off += 1
        shape = struct.unpack_from(f"<{rank}I", data, off)
        off += 4 * rank
        count = int(np.prod(shape))
        t = np.frombuffer(data, dtype="<c16", count=count, offset=off).reshape(shape)
        off += 16 * count
        tensors.append(t.astype(np.complex128))
    canonical = {v: k for k, v in _CANON_CODES.items()}[canon]
    cls = MPO if kind == 1 else MPS
    return cls(tensors, canonical, None if center < 0 else center)


def save_network(target: Network, path) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(target))


def load_network(path) -> Network:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
