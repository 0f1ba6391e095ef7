"""Boustrophedon ("snake") embedding of a square lattice into a chain."""

from __future__ import annotations

from ..errors import DomainError
from . import gates as G
from .ir import Chain, Circuit, Gate, Grid


def snake_order(grid: Grid) -> list[int]:
    """Grid qubit index at each chain position.

    Even rows run left to right and odd rows right to left, so horizontal
    neighbours stay adjacent on the chain.
    """
    if grid.n1 < 2 or grid.n2 < 2:
        raise DomainError("grid dimensions must be at least 2")
    order = []
    for r in range(grid.n1):
        cols = range(grid.n2) if r % 2 == 0 else range(grid.n2 - 1, -1, -1)
        order.extend(grid.index(r, c) for c in cols)
    return order


def route_gate(gate: Gate, a: int, b: int) -> list[Gate]:
    """Realize ``gate`` on chain positions ``a``, ``b`` with nearest-neighbour SWAPs.

    The second qubit is swapped next to the first, the gate acts, and the
    SWAPs are undone.
    """
    if abs(a - b) == 1:
        return [_relabel(gate, a, b)]
    step = 1 if b > a else -1
    moves = []
    pos = b
    while abs(pos - a) > 1:
        moves.append(Gate.two(G.SWAP, pos - step, pos, "swap"))
        pos -= step
    return moves + [_relabel(gate, a, pos)] + moves[::-1]


def _relabel(gate: Gate, a: int, b: int) -> Gate:
    return Gate(gate.kind, (a, b), gate.matrix, gate.name, gate.params)


def route_to_chain(c: Circuit, position: list[int] | None = None) -> Circuit:
    """Map a circuit onto a chain, SWAP-routing non-adjacent two-qubit gates.

    Args:
        c: Circuit with any topology.
        position: ``position[q]`` is the chain site of qubit ``q``
            (identity when omitted).
    """
    position = list(range(c.n)) if position is None else position
    gates = []
    for g in c.gates():
        if g.n_qubits == 1:
            gates.append(Gate(g.kind, (position[g.sites[0]],), g.matrix, g.name, g.params))
        else:
            gates.extend(route_gate(g, position[g.sites[0]], position[g.sites[1]]))
    meta = {**c.metadata, "routed": True}
    return Circuit.from_gates(c.n, gates, Chain(c.n), meta)


def snake_map(c: Circuit) -> tuple[list[int], Circuit]:
    """Snake-map a grid circuit onto a chain.

    Returns:
        ``order`` (grid qubit at each chain position) and the routed chain
        circuit, acting on qubits in chain order.
    """
    if not isinstance(c.topology, Grid):
        raise DomainError("snake_map needs a circuit on a Grid topology")
    order = snake_order(c.topology)
    position = [0] * c.n
    for k, q in enumerate(order):
        position[q] = k
    routed = route_to_chain(c, position)
    return order, routed.with_metadata(snake_order=order)
