"""Brick-wall ansatz: fixed CNOT skeleton dressed with trainable single-qubit gates."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import DomainError, ShapeError
from ..tensor_core import exp_antihermitian
from . import gates as G
from .builders import _bond_groups, _resolve_topology, haar_unitary
from .ir import Chain, Circuit, Gate, Grid, Topology

# skeleton entries: ("u", param_index, site) or ("cx", control, target)
Op = tuple


@lru_cache(maxsize=256)
def _skeleton(topology: Topology, depth: int) -> tuple[tuple[Op, ...], tuple[tuple[int, int], ...]]:
    ops: list[Op] = []
    keys: list[tuple[int, int]] = []
    groups = _bond_groups(topology)
    for layer in range(depth):
        slot = 0
        for group in groups:
            for a, b in group:
                for q in (a, b):
                    ops.append(("u", len(keys), q))
                    keys.append((layer, slot))
                    slot += 1
                ops.append(("cx", min(a, b), max(a, b)))
    for q in range(topology.n):
        ops.append(("u", len(keys), q))
        keys.append((depth, q))
    return tuple(ops), tuple(keys)


@dataclass(frozen=True, eq=False)
class BrickWallAnsatz:
    """Brick-wall circuit of CNOTs with trainable single-qubit gates.

    One layer (one unit of ``depth``) puts a CNOT on every bond of the
    topology: the even then odd bonds of a chain, or four edge groups of a
    grid. Every CNOT is preceded by a trainable gate on each of its qubits
    and a final column of ``n`` gates closes the circuit, so a chain holds
    ``2 (n - 1) depth + n`` parameters. Controls sit on the lower index.

    ``params`` has shape ``(n_params, 2, 2)``; ``keys[k]`` is the
    ``(layer, slot)`` position of parameter ``k`` (the closing column is
    layer ``depth``).
    """

    topology: Topology
    depth: int
    params: np.ndarray

    def __post_init__(self):
        if self.depth < 0:
            raise DomainError("depth must be non-negative")
        p = np.array(self.params, dtype=np.complex128)
        if p.shape != (self.n_params, 2, 2):
            raise ShapeError(f"expected params of shape {(self.n_params, 2, 2)}, got {p.shape}")
        p.flags.writeable = False
        object.__setattr__(self, "params", p)

    @property
    def n(self) -> int:
        return self.topology.n

    @property
    def skeleton(self) -> tuple[Op, ...]:
        return _skeleton(self.topology, self.depth)[0]

    @property
    def keys(self) -> tuple[tuple[int, int], ...]:
        return _skeleton(self.topology, self.depth)[1]

    @property
    def n_params(self) -> int:
        return len(_skeleton(self.topology, self.depth)[1])

    def n_cnot(self) -> int:
        return sum(1 for op in self.skeleton if op[0] == "cx")

    def with_params(self, params) -> "BrickWallAnsatz":
        return BrickWallAnsatz(self.topology, self.depth, params)

    def gate_list(self) -> list[Gate]:
        out = []
        for op in self.skeleton:
            if op[0] == "u":
                u = self.params[op[1]]
                theta, phi, lam, _ = G.zyz_angles(u)
                out.append(Gate.single(u, op[2], "u3", (theta, phi, lam)))
            else:
                out.append(Gate.cnot(op[1], op[2]))
        return out

    def to_circuit(self) -> Circuit:
        meta = {"family": "brickwall", "d_optim": self.depth}
        return Circuit.from_gates(self.n, self.gate_list(), self.topology, meta)

    def extended(self, depth: int, sigma: float = 0.0, seed: int | None = None) -> "BrickWallAnsatz":
        """Deeper ansatz whose first layers and closing column copy this one.

        New layers start at identity (plus ``sigma`` Gaussian noise in the
        Lie algebra when ``sigma > 0``).
        """
        if depth < self.depth:
            raise DomainError("can only extend to a larger depth")
        grown = build_ansatz(self.topology, depth, "near_identity" if sigma > 0 else "identity",
                             sigma=sigma, seed=seed)
        new = np.array(grown.params)
        n_layer_params = self.n_params - self.n
        new[:n_layer_params] = self.params[:n_layer_params]
        new[-self.n:] = self.params[-self.n:]
        return grown.with_params(new)

    def to_dict(self) -> dict:
        return {"topology": self.topology.to_dict(), "depth": self.depth,
                "params": np.stack([self.params.real, self.params.imag], axis=-1).tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "BrickWallAnsatz":
        from .ir import topology_from_dict

        arr = np.asarray(d["params"], dtype=float)
        return cls(topology_from_dict(d["topology"]), int(d["depth"]), arr[..., 0] + 1j * arr[..., 1])


def random_near_identity(count: int, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """``exp(A)`` with ``A`` anti-Hermitian, entries Gaussian with scale ``sigma``."""
    z = rng.standard_normal((count, 2, 2)) + 1j * rng.standard_normal((count, 2, 2))
    a = 0.5 * sigma * (z - np.conj(np.swapaxes(z, 1, 2)))
    return np.stack([exp_antihermitian(x) for x in a])


def build_ansatz(topology, depth: int, init: str = "near_identity", sigma: float = 0.01,
                 seed: int | None = None) -> BrickWallAnsatz:
    """Create a brick-wall ansatz.

    Args:
        topology: Qubit count (chain), :class:`Chain` or :class:`Grid`.
        depth: Number of brick layers ``d_optim``.
        init: ``"identity"``, ``"near_identity"`` (Gaussian of scale ``sigma``
            in the Lie algebra) or ``"seeded"`` (Haar-random gates).
        seed: Seed for the random initializations.
    """
    topo = _resolve_topology(topology)
    if depth < 1:
        raise DomainError("d_optim must be >= 1")
    count = len(_skeleton(topo, depth)[1])
    rng = np.random.default_rng(seed)
    if init == "identity":
        params = np.broadcast_to(np.eye(2, dtype=np.complex128), (count, 2, 2))
    elif init == "near_identity":
        params = random_near_identity(count, sigma, rng)
    elif init == "seeded":
        params = np.stack([haar_unitary(2, rng) for _ in range(count)])
    else:
        raise DomainError(f"unknown init {init!r}")
    return BrickWallAnsatz(topo, depth, params)


def grid_cnot_count(n1: int, n2: int, depth: int) -> int:
    """CNOTs in a depth-``depth`` ansatz on an ``n1 x n2`` grid."""
    return (2 * n1 * n2 - n1 - n2) * depth


def chain_cnot_count(n: int, depth: int) -> int:
    return (n - 1) * depth


__all__ = ["BrickWallAnsatz", "build_ansatz", "grid_cnot_count", "chain_cnot_count",
           "random_near_identity", "Chain", "Grid"]
