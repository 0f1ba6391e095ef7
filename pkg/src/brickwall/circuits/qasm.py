"""OpenQASM 2.0 emission and a reader for the emitted subset.

General single-qubit gates are written as ``u3`` followed by a
``// phase=...`` comment holding the global phase dropped by ``u3``; the
reader restores it so round trips reproduce every matrix, while other
OpenQASM tools simply ignore the comment.
"""

from __future__ import annotations

import ast
import operator
import re
from pathlib import Path

import numpy as np

from ..errors import ShapeError, UnsupportedGate
from . import gates as G
from .ansatz import BrickWallAnsatz
from .ir import Chain, Circuit, Gate

_SINGLE = {
    "h": lambda: G.H,
    "x": lambda: G.X,
    "y": lambda: G.Y,
    "z": lambda: G.Z,
    "rx": G.rx,
    "rz": G.rz,
    "u3": G.u3,
}
_TWO = {
    "cx": None,
    "swap": lambda: G.SWAP,
    "rzz": G.rzz,
    "cu1": G.cphase,
}


def _fmt(x: float) -> str:
    return repr(float(x))


def _gate_line(g: Gate) -> str:
    qubits = ",".join(f"q[{s}]" for s in g.sites)
    if g.kind == "cnot":
        return f"cx {qubits};"
    if g.kind == "two":
        if g.name not in _TWO:
            raise UnsupportedGate(f"no OpenQASM 2.0 spelling for a general two-qubit gate "
                                  f"on {g.sites}")
        args = f"({','.join(_fmt(p) for p in g.params)})" if g.params else ""
        return f"{g.name}{args} {qubits};"
    if g.name in ("h", "x", "y", "z"):
        return f"{g.name} {qubits};"
    if g.name in ("rx", "rz"):
        return f"{g.name}({_fmt(g.params[0])}) {qubits};"
    theta, phi, lam, alpha = G.zyz_angles(g.matrix)
    return f"u3({_fmt(theta)},{_fmt(phi)},{_fmt(lam)}) {qubits}; // phase={_fmt(alpha)}"


def to_qasm(obj: Circuit | BrickWallAnsatz) -> str:
    """OpenQASM 2.0 text for a circuit or an ansatz.

    Raises:
        UnsupportedGate: For general two-qubit gates (always the case for an
            ansatz containing anything but CNOTs and single-qubit gates).
    """
    if isinstance(obj, BrickWallAnsatz):
        circuit = obj.to_circuit()
        if any(g.kind == "two" for g in circuit.gates()):
            raise UnsupportedGate("ansatz export allows only CNOT and single-qubit gates")
    else:
        circuit = obj
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.n}];"]
    lines.extend(_gate_line(g) for g in circuit.gates())
    return "\n".join(lines) + "\n"


def export_qasm(obj: Circuit | BrickWallAnsatz, path) -> Path:
    path = Path(path)
    path.write_text(to_qasm(obj), encoding="utf-8")
    return path


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def _eval_param(text: str) -> float:
    """Evaluate an arithmetic parameter expression with ``pi``."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return float(np.pi)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ShapeError(f"unsupported parameter expression {text!r}")
    return ev(ast.parse(text.strip(), mode="eval"))


_LINE = re.compile(r"^(?P<name>[a-z][a-z0-9_]*)\s*(\((?P<args>[^)]*)\))?\s+"
                   r"(?P<qubits>[^;]+);\s*(//\s*phase=(?P<phase>\S+))?$")
_QUBIT = re.compile(r"^\s*q\[(\d+)\]\s*$")


def parse_qasm(text: str) -> Circuit:
    """Read OpenQASM 2.0 text using the gate subset :func:`to_qasm` writes."""
    n = None
    gates = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("//") or line.startswith("OPENQASM") \
                or line.startswith("include") or line.startswith("creg") \
                or line.startswith("barrier"):
            continue
        m = re.match(r"^qreg\s+q\[(\d+)\];$", line)
        if m:
            n = int(m.group(1))
            continue
        m = _LINE.match(line)
        if not m:
            raise ShapeError(f"line {lineno}: cannot parse {raw!r}")
        name = m.group("name")
        args = [_eval_param(a) for a in m.group("args").split(",")] if m.group("args") else []
        qubits = []
        for q in m.group("qubits").split(","):
            qm = _QUBIT.match(q)
            if not qm:
                raise ShapeError(f"line {lineno}: bad qubit reference {q!r}")
            qubits.append(int(qm.group(1)))
        if name in _SINGLE:
            u = _SINGLE[name](*args)
            if m.group("phase"):
                u = np.exp(1j * float(m.group("phase"))) * u
            gates.append(Gate.single(u, qubits[0], name, args))
        elif name == "cx":
            gates.append(Gate.cnot(*qubits))
        elif name in _TWO:
            gates.append(Gate.two(_TWO[name](*args), qubits[0], qubits[1], name, args))
        else:
            raise UnsupportedGate(f"line {lineno}: unknown gate {name!r}")
    if n is None:
        raise ShapeError("missing qreg declaration")
    return Circuit.from_gates(n, gates, Chain(n))


def import_qasm(path) -> Circuit:
    return parse_qasm(Path(path).read_text(encoding="utf-8"))
