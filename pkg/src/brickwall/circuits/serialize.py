"""Circuit JSON format.

``{"n", "topology", "metadata", "layers": [[{"kind", "sites", "name",
"params", "matrix"}]]}`` with complex numbers stored as ``[re, im]`` pairs.
CNOTs omit the matrix.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .ir import Circuit, Gate, topology_from_dict


def _cplx(m: np.ndarray) -> list:
    return np.stack([m.real, m.imag], axis=-1).tolist()


def _uncplx(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def circuit_to_dict(c: Circuit) -> dict:
    layers = []
    for layer in c.layers:
        out = []
        for g in layer:
            d = {"kind": g.kind, "sites": list(g.sites), "name": g.name,
                 "params": list(g.params)}
            if g.kind != "cnot":
                d["matrix"] = _cplx(g.matrix)
            out.append(d)
        layers.append(out)
    return {"n": c.n, "topology": c.topology.to_dict(),
            "metadata": _jsonable(c.metadata), "layers": layers}


def circuit_from_dict(d: dict) -> Circuit:
    layers = []
    for layer in d["layers"]:
        gates = []
        for g in layer:
            if g["kind"] == "cnot":
                gates.append(Gate.cnot(*g["sites"]))
            else:
                gates.append(Gate(g["kind"], tuple(g["sites"]), _uncplx(g["matrix"]),
                                  g.get("name", "unitary"), tuple(g.get("params", ()))))
        layers.append(tuple(gates))
    return Circuit(int(d["n"]), tuple(layers), topology_from_dict(d["topology"]),
                   dict(d.get("metadata", {})))


def save_circuit(c: Circuit, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(circuit_to_dict(c)), encoding="utf-8")
    return path


def load_circuit(path) -> Circuit:
    return circuit_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
