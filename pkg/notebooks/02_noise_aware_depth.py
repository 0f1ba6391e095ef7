"""
Choosing the ansatz depth under gate noise
==========================================

Deeper brick walls approximate the target better but every CNOT fails with
probability ``eps``. The overall fidelity ``F_all = F_optim (1 - eps)^n_cnot``
therefore peaks at a finite depth ``d_max``. A sweep computes ``F_optim``
once per depth; other error rates are just a rescoring of the same table.
"""

from __future__ import annotations

from brickwall.circuits import build_trotter_ising
from brickwall.compile_opt import LossSpec, OptimizeConfig
from brickwall.pipeline import (NoiseModel, SweepConfig, brickwall_target_cnots, depth_sweep,
                                rescore)

N, TAU, STEPS = 6, 0.1, 15

# %%
spec = LossSpec.from_circuit(build_trotter_ising(N, TAU, STEPS), "unitary")
config = SweepConfig(restarts=2, init="seeded",
                     optimize=OptimizeConfig(max_iters=1000, lr=1e-3))
report = depth_sweep(spec, range(1, 7), NoiseModel(4e-3), config,
                     target_cnots=brickwall_target_cnots(N, STEPS), log=print)

# %%
print("d_optim  n_cnot  F_optim  F_noise  F_all")
for r in report.rows:
    print(f"{r.d_optim:7d}  {r.n_cnot:6d}  {r.f_optim:.4f}   {r.f_noise:.4f}   {r.f_all:.4f}")
print(f"d_max = {report.d_max}, gamma = {report.gamma:.2f}")

# %%
# Lower error rates favour deeper circuits.
for eps in (1e-3, 4e-3, 1e-2, 2.5e-2):
    r = rescore(report, NoiseModel(eps))
    print(f"eps = {eps:g}: d_max = {r.d_max}, F_all_max = {r.f_all_max:.4f}")
