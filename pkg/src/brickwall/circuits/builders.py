"""Builders for the target circuit families."""

from __future__ import annotations

import numpy as np

from ..errors import DomainError
from . import gates as G
from .ir import Chain, Circuit, Gate, Grid, Topology


def _resolve_topology(n_or_topology) -> Topology:
    if isinstance(n_or_topology, (Chain, Grid)):
        return n_or_topology
    return Chain(int(n_or_topology))


def _bond_groups(topo: Topology) -> list[list[tuple[int, int]]]:
    if isinstance(topo, Grid):
        return [g for g in topo.edge_groups() if g]
    n = topo.n
    groups = [[(i, i + 1) for i in range(0, n - 1, 2)],
              [(i, i + 1) for i in range(1, n - 1, 2)]]
    return [g for g in groups if g]


def build_trotter_ising(n, tau: float, steps: int) -> Circuit:
    """First-order Trotter circuit for ``H = -sum Z_i Z_{i+1} - sum X_i``.

    Each step applies ``exp(+i tau Z Z)`` on the even bonds, then on the odd
    bonds (four edge groups on a grid), then ``exp(+i tau X)`` on every site.

    Args:
        n: Qubit count for a chain, or a :class:`Grid`.
        tau: Time step (``tau = 0`` gives the identity).
        steps: Number of Trotter steps (the target depth).
    """
    topo = _resolve_topology(n)
    if topo.n < 2 or steps < 1 or tau < 0:
        raise DomainError("need n >= 2, steps >= 1 and tau >= 0")
    zz = G.rzz(-2 * tau)
    xf = G.rx(-2 * tau)
    step_layers = []
    for group in _bond_groups(topo):
        step_layers.append(tuple(Gate.two(zz, a, b, "rzz", (-2 * tau,)) for a, b in group))
    step_layers.append(tuple(Gate.single(xf, q, "rx", (-2 * tau,)) for q in range(topo.n)))
    meta = {"family": "ising", "tau": float(tau), "steps": int(steps),
            "d_target": int(steps), "layers_per_step": len(step_layers)}
    return Circuit(topo.n, tuple(step_layers) * steps, topo, meta)


def rk_phase(k: int, convention: str = "binary") -> float:
    """Phase of ``R_k``: ``2 pi / 2^k`` (``"binary"``) or ``2 pi / k`` (``"linear"``)."""
    if convention == "binary":
        return 2 * np.pi / 2 ** k
    if convention == "linear":
        return 2 * np.pi / k
    raise DomainError(f"unknown R_k convention {convention!r}")


def _controlled_rk(k: int, control: int, target: int, convention: str) -> Gate:
    lam = rk_phase(k, convention)
    return Gate.two(G.cphase(lam), control, target, "cu1", (lam,))


def build_qft_core(n: int, convention: str = "binary") -> Circuit:
    """QFT without the final SWAP network (output qubit order reversed).

    Round ``j`` applies H on qubit ``j`` and then controlled-``R_k`` from
    qubit ``j + k - 1`` for ``k = 2 .. n - j``. Controlled rotations between
    distant qubits are kept as non-local two-qubit gates.
    """
    if n < 2:
        raise DomainError("QFT needs n >= 2")
    gates = []
    for j in range(n):
        gates.append(Gate.single(G.H, j, "h"))
        for k in range(2, n - j + 1):
            gates.append(_controlled_rk(k, j + k - 1, j, convention))
    meta = {"family": "qft", "n": n, "rk_convention": convention}
    return Circuit.from_gates(n, gates, Chain(n), meta)


def build_aqft(n: int, k_max: int, convention: str = "binary") -> Circuit:
    """Approximate QFT keeping ``CR_k`` with ``k <= k_max``, routed to nearest neighbours.

    In each round the starting qubit is swapped forward so that every
    controlled rotation acts on adjacent qubits, then swapped back.
    """
    if not 2 <= k_max <= n:
        raise DomainError(f"need 2 <= k_max <= n, got k_max={k_max}, n={n}")
    gates = []
    for j in range(n):
        gates.append(Gate.single(G.H, j, "h"))
        k_round = min(k_max, n - j)
        pos = j
        for k in range(2, k_round + 1):
            if k > 2:
                gates.append(Gate.two(G.SWAP, pos, pos + 1, "swap"))
                pos += 1
            gates.append(_controlled_rk(k, j + k - 1, pos, convention))
        while pos > j:
            gates.append(Gate.two(G.SWAP, pos - 1, pos, "swap"))
            pos -= 1
    meta = {"family": "aqft", "n": n, "k_max": k_max, "rk_convention": convention}
    return Circuit.from_gates(n, gates, Chain(n), meta)


def aqft_cnot_count(n: int, k_max: int) -> int:
    """Closed-form CNOT count of :func:`build_aqft` (three CNOTs per two-qubit gate)."""
    if not 2 <= k_max <= n:
        raise DomainError(f"need 2 <= k_max <= n, got k_max={k_max}, n={n}")
    # 3[(3k-5)(n - k/2) - (k-2)], kept in integers
    return 3 * ((3 * k_max - 5) * (2 * n - k_max) // 2 - (k_max - 2))


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix with phase-fixed R."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))[np.newaxis, :]


def build_haar_random(n: int, depth: int, seed: int) -> Circuit:
    """Brick-wall of Haar-random two-qubit gates; one depth unit = even + odd bonds."""
    if depth < 1 or n < 2:
        raise DomainError("need n >= 2 and depth >= 1")
    rng = np.random.default_rng(seed)
    topo = Chain(n)
    groups = _bond_groups(topo)
    layers = []
    for _ in range(depth):
        for group in groups:
            layers.append(tuple(Gate.two(haar_unitary(4, rng), a, b) for a, b in group))
    meta = {"family": "haar", "depth": depth, "seed": seed, "d_target": depth,
            "layers_per_step": len(groups)}
    return Circuit(n, tuple(layers), topo, meta)


def build_bell_pair() -> Circuit:
    return Circuit.from_gates(2, [Gate.single(G.H, 0, "h"), Gate.cnot(0, 1)],
                              metadata={"family": "bell"})
