"""
Entanglement growth of the three target families
================================================

How far a circuit can be compressed is tied to how much entanglement it
builds. Ising dynamics grow it slowly, the QFT saturates at a small value
independent of ``N`` and Haar brick walls grow it linearly until the
maximum ``N / 2`` bits.
"""

from __future__ import annotations

from brickwall.circuits import build_haar_random, build_qft_core, build_trotter_ising
from brickwall.pipeline import ee_trace

N = 8

# %%
ising = ee_trace(build_trotter_ising(N, 0.1, 30), which="both")
print("Ising step  S_state  S_operator")
for k in range(0, 31, 5):
    print(f"{k:10d}  {ising.state[k]:.4f}   {ising.operator[k]:.4f}")

# %%
for n in (4, 6, 8, 10):
    qft = ee_trace(build_qft_core(n), which="operator")
    print(f"QFT N={n:2d}: final operator EE {qft.operator[-1]:.4f}")

# %%
haar = ee_trace(build_haar_random(N, 6, seed=0), which="state")
print("Haar depth:", " ".join(f"{s:.3f}" for s in haar.state))
