"""
Optimized brick walls against the approximate QFT
=================================================

The approximate QFT drops controlled rotations beyond a range ``k_max`` and
is the standard way to trade accuracy for CNOTs. We compare its overall
fidelity under noise with brick walls compiled directly from the QFT.
"""

from __future__ import annotations

from brickwall.circuits import aqft_cnot_count, build_qft_core
from brickwall.compile_opt import LossSpec, OptimizeConfig
from brickwall.pipeline import NoiseModel, SweepConfig, aqft_baseline, depth_sweep

N = 6
model = NoiseModel(4e-3)

# %%
baseline = aqft_baseline(N, model=model)
print("k_max  n_cnot  F_optim  F_all")
for b in baseline:
    print(f"{b.k_max:5d}  {b.n_cnot:6d}  {b.f_optim:.4f}   {b.f_all:.4f}")

# %%
spec = LossSpec.from_circuit(build_qft_core(N), "unitary")
config = SweepConfig(restarts=2, init="seeded",
                     optimize=OptimizeConfig(max_iters=1000, lr=1e-2, lr_final=1e-4))
report = depth_sweep(spec, range(1, 6), model, config, target_cnots=aqft_cnot_count(N, N))
print("d_optim  n_cnot  F_optim  F_all")
for r in report.rows:
    print(f"{r.d_optim:7d}  {r.n_cnot:6d}  {r.f_optim:.4f}   {r.f_all:.4f}")
print(f"optimized F_all_max = {report.f_all_max:.4f} at d_max = {report.d_max}")
print(f"AQFT F_all_max = {max(b.f_all for b in baseline):.4f}")
