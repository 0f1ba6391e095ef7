"""Tensor-network simulation of circuits with per-layer compression."""

from __future__ import annotations

from typing import Iterator

from ..errors import ShapeError
from ..mps_mpo import MPO, MPS, Network, apply_gate, compress, mpo_identity
from .ir import Circuit, Grid
from .snake import route_gate, snake_map

#: Default bond cap for simulating target circuits.
D_TARGET = 128


def iter_simulation(c: Circuit, start: Network, d_target: int = D_TARGET
                    ) -> Iterator[tuple[int, Network, float]]:
    """Apply ``c`` layer by layer to ``start``.

    After every layer that contains a two-qubit gate the network is
    canonicalized and truncated to ``d_target``. Grid circuits are
    snake-mapped first; other non-local gates are SWAP-routed on the fly.

    Yields:
        ``(layer_index, network, cumulative_discarded_weight)`` after each
        layer of ``c`` (index counted in the original circuit).
    """
    if start.n != c.n:
        raise ShapeError(f"circuit has {c.n} qubits, start network {start.n}")
    if isinstance(c.topology, Grid):
        c = snake_map(c)[1]
    net = start
    discarded = 0.0
    for k, layer in enumerate(c.layers):
        two_site = False
        for g in layer:
            if g.n_qubits == 1:
                net = apply_gate(net, g.matrix, g.sites)
                continue
            two_site = True
            a, b = g.sites
            for h in route_gate(g, a, b):
                net = apply_gate(net, h.matrix, h.sites)
        if two_site:
            net, w = compress(net, d_target)
            discarded += w
        yield k, net, discarded


def circuit_to_mpo(c: Circuit, d_target: int = D_TARGET) -> tuple[MPO, float]:
    """Compressed MPO of ``c`` and its cumulative discarded weight.

    The MPO ends canonical (mixed form) with ``Tr[U^dagger U] = 2^N``. For a
    grid circuit the sites are in snake order.
    """
    net: Network = mpo_identity(c.n)
    discarded = 0.0
    for _, net, discarded in iter_simulation(c, net, d_target):
        pass
    if net.canonical is None:
        net, w = compress(net, d_target)
        discarded += w
    return net, discarded


def circuit_to_mps(c: Circuit, psi0: MPS, d_target: int = D_TARGET) -> tuple[MPS, float]:
    """Compressed MPS of ``c |psi0>`` and its cumulative discarded weight."""
    net: Network = psi0
    discarded = 0.0
    for _, net, discarded in iter_simulation(c, net, d_target):
        pass
    if net.canonical is None:
        net, w = compress(net, d_target)
        discarded += w
    return net, discarded
