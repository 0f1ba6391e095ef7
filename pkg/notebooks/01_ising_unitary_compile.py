"""
Compressing a Trotterized Ising circuit into a brick wall
=========================================================

A chain of ``N`` qubits evolves under ``H = -sum Z_i Z_{i+1} - sum X_i``.
The first-order Trotter circuit for ``steps`` steps costs ``3 (N - 1)``
CNOTs per step. Here we search for a much shallower brick wall of CNOTs
with trainable single-qubit gates that reproduces the same unitary.

Run with ``python notebooks/01_ising_unitary_compile.py``.
"""

from __future__ import annotations

import numpy as np

from brickwall.circuits import build_ansatz, build_trotter_ising, export_qasm
from brickwall.compile_opt import LossSpec, OptimizeConfig, optimize
from brickwall.pipeline import brickwall_target_cnots, compression_rate

N, TAU, STEPS, DEPTH = 6, 0.1, 10, 4

# %%
# The target is simulated as an MPO and wrapped as a unitary-mode loss.
target = build_trotter_ising(N, TAU, STEPS)
spec = LossSpec.from_circuit(target, "unitary")
print(f"target: {target.depth} layers, {brickwall_target_cnots(N, STEPS)} CNOTs")

# %%
# Start from random single-qubit gates and run Riemannian Adam.
ansatz = build_ansatz(N, DEPTH, "seeded", seed=0)
result = optimize(spec, ansatz, OptimizeConfig(max_iters=1500, lr=1e-2, lr_final=1e-4))
hist = np.asarray(result.fidelity_history)
for it in range(0, len(hist), 250):
    print(f"iteration {it:5d}  F = {hist[it]:.5f}")
print(f"best F_optim = {result.f_optim:.5f} at iteration {result.best_iteration}")

# %%
# The compiled circuit has (N - 1) CNOTs per brick layer.
n_cnot = result.ansatz.n_cnot()
gamma = compression_rate(brickwall_target_cnots(N, STEPS), n_cnot)
print(f"{n_cnot} CNOTs, compression rate {gamma:.2f}")
export_qasm(result.ansatz, "ising_compiled.qasm")
