"""Circuit intermediate representation shared by targets and compiled outputs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from ..errors import DomainError, ShapeError, TopologyError
from . import gates as G

#: Gates are rejected when ``||U^dagger U - I||`` exceeds this.
UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class Chain:
    """Open 1D chain; qubits ``i`` and ``i+1`` are coupled."""

    n: int

    def adjacent(self, a: int, b: int) -> bool:
        return abs(a - b) == 1

    def edges(self) -> list[tuple[int, int]]:
        return [(i, i + 1) for i in range(self.n - 1)]

    def to_dict(self) -> dict:
        return {"kind": "chain", "n": self.n}


@dataclass(frozen=True)
class Grid:
    """``n1 x n2`` square lattice; qubit ``(r, c)`` has index ``r * n2 + c``."""

    n1: int
    n2: int

    @property
    def n(self) -> int:
        return self.n1 * self.n2

    def index(self, r: int, c: int) -> int:
        return r * self.n2 + c

    def coords(self, q: int) -> tuple[int, int]:
        return divmod(q, self.n2)

    def adjacent(self, a: int, b: int) -> bool:
        (ra, ca), (rb, cb) = self.coords(a), self.coords(b)
        return abs(ra - rb) + abs(ca - cb) == 1

    def edges(self) -> list[tuple[int, int]]:
        return [e for group in self.edge_groups() for e in group]

    def edge_groups(self) -> list[list[tuple[int, int]]]:
        """Edges in four site-disjoint groups: horizontal even/odd, vertical even/odd."""
        groups = []
        for parity in (0, 1):
            groups.append([(self.index(r, c), self.index(r, c + 1))
                           for r in range(self.n1) for c in range(parity, self.n2 - 1, 2)])
        for parity in (0, 1):
            groups.append([(self.index(r, c), self.index(r + 1, c))
                           for r in range(parity, self.n1 - 1, 2) for c in range(self.n2)])
        return groups

    def to_dict(self) -> dict:
        return {"kind": "grid", "n1": self.n1, "n2": self.n2}


Topology = Chain | Grid


def topology_from_dict(d: dict) -> Topology:
    if d["kind"] == "chain":
        return Chain(int(d["n"]))
    if d["kind"] == "grid":
        return Grid(int(d["n1"]), int(d["n2"]))
    raise DomainError(f"unknown topology {d['kind']!r}")


@dataclass(frozen=True, eq=False)
class Gate:
    """A gate acting on one or two qubits.

    ``kind`` is ``"single"``, ``"cnot"`` or ``"two"``. For two-qubit gates
    ``sites[0]`` is the first (most significant) qubit of ``matrix``; for a
    CNOT it is the control. ``name`` and ``params`` carry the OpenQASM
    spelling when one exists.
    """

    kind: str
    sites: tuple[int, ...]
    matrix: np.ndarray
    name: str = "unitary"
    params: tuple[float, ...] = ()

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        nq = 1 if self.kind == "single" else 2
        if self.kind not in ("single", "cnot", "two"):
            raise DomainError(f"unknown gate kind {self.kind!r}")
        if len(self.sites) != nq or len(set(self.sites)) != nq:
            raise ShapeError(f"{self.kind} gate needs {nq} distinct sites, got {self.sites}")
        if m.shape != (2 ** nq, 2 ** nq):
            raise ShapeError(f"{self.kind} gate matrix has shape {m.shape}")
        if np.linalg.norm(m.conj().T @ m - np.eye(2 ** nq)) > UNITARY_TOL:
            raise DomainError(f"gate {self.name} on {self.sites} is not unitary")

    @classmethod
    def single(cls, u, site: int, name: str = "u3", params: Sequence[float] = ()) -> "Gate":
        return cls("single", (site,), u, name, tuple(params))

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls("cnot", (control, target), G.CNOT, "cx")

    @classmethod
    def two(cls, u, a: int, b: int, name: str = "unitary",
            params: Sequence[float] = ()) -> "Gate":
        return cls("two", (a, b), u, name, tuple(params))

    @property
    def n_qubits(self) -> int:
        return len(self.sites)

    def cnot_cost(self) -> int:
        """CNOTs needed on hardware: 1 for a CNOT, 3 for any other two-qubit gate."""
        return {"single": 0, "cnot": 1, "two": 3}[self.kind]

    def same_as(self, other: "Gate", atol: float = 1e-12) -> bool:
        return (self.kind == other.kind and self.sites == other.sites
                and self.name == other.name
                and np.allclose(self.matrix, other.matrix, rtol=0, atol=atol))

    def __repr__(self) -> str:
        p = f"({', '.join(f'{x:.4g}' for x in self.params)})" if self.params else ""
        return f"Gate({self.name}{p} @ {self.sites})"


@dataclass(frozen=True)
class Circuit:
    """Ordered layers of gates; gates within one layer act on disjoint qubits."""

    n: int
    layers: tuple[tuple[Gate, ...], ...]
    topology: Topology | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        layers = tuple(tuple(layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        if self.topology is None:
            object.__setattr__(self, "topology", Chain(self.n))
        if self.topology.n != self.n:
            raise ShapeError(f"topology has {self.topology.n} qubits, circuit {self.n}")
        for k, layer in enumerate(layers):
            used: set[int] = set()
            for g in layer:
                for s in g.sites:
                    if not 0 <= s < self.n:
                        raise DomainError(f"layer {k}: site {s} out of range 0..{self.n - 1}")
                    if s in used:
                        raise DomainError(f"layer {k}: qubit {s} is acted on twice")
                    used.add(s)
                if g.kind == "cnot" and not self.topology.adjacent(*g.sites):
                    raise TopologyError(f"layer {k}: CNOT on non-adjacent qubits {g.sites}")

    @classmethod
    def from_gates(cls, n: int, gates: Iterable[Gate], topology: Topology | None = None,
                   metadata: dict | None = None) -> "Circuit":
        """Pack a gate sequence into layers as early as possible (order preserving)."""
        layers: list[list[Gate]] = []
        front = [0] * n  # first free layer per qubit
        for g in gates:
            k = max(front[s] for s in g.sites)
            if k == len(layers):
                layers.append([])
            layers[k].append(g)
            for s in g.sites:
                front[s] = k + 1
        return cls(n, tuple(tuple(layer) for layer in layers), topology, dict(metadata or {}))

    def gates(self) -> Iterator[Gate]:
        for layer in self.layers:
            yield from layer

    @property
    def depth(self) -> int:
        return len(self.layers)

    def cnot_count(self) -> int:
        """CNOTs after compiling every general two-qubit gate with three CNOTs."""
        return sum(g.cnot_cost() for g in self.gates())

    def two_qubit_count(self) -> int:
        return sum(1 for g in self.gates() if g.n_qubits == 2)

    def then(self, other: "Circuit") -> "Circuit":
        """``other`` applied after ``self``."""
        if other.n != self.n:
            raise ShapeError("circuits act on different qubit counts")
        return Circuit(self.n, self.layers + other.layers, self.topology, dict(self.metadata))

    def with_metadata(self, **kw) -> "Circuit":
        return Circuit(self.n, self.layers, self.topology, {**self.metadata, **kw})

    def __len__(self) -> int:
        return sum(len(layer) for layer in self.layers)


def apply_dense(gate: Gate, psi: np.ndarray, n: int) -> np.ndarray:
    """Apply ``gate`` to a tensor whose first ``n`` axes are qubits (any trailing batch)."""
    nq = gate.n_qubits
    m = gate.matrix.reshape((2,) * (2 * nq))
    axes = list(gate.sites)
    out = np.tensordot(m, psi, axes=(list(range(nq, 2 * nq)), axes))
    return np.moveaxis(out, list(range(nq)), axes)


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Dense unitary of a circuit (intended for ``n <= 12``)."""
    dim = 2 ** c.n
    u = np.eye(dim, dtype=np.complex128).reshape((2,) * c.n + (dim,))
    for g in c.gates():
        u = apply_dense(g, u, c.n)
    return u.reshape(dim, dim)


def circuit_state(c: Circuit, psi0: np.ndarray) -> np.ndarray:
    """Dense output state ``c |psi0>``."""
    psi = np.asarray(psi0, dtype=np.complex128).reshape((2,) * c.n)
    for g in c.gates():
        psi = apply_dense(g, psi, c.n)
    return psi.reshape(-1)
