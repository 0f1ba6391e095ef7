from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest

from brickwall.circuits import (Circuit, Gate, build_ansatz, build_trotter_ising, circuit_state,
                                circuit_to_mpo)
from brickwall.compile_opt import LossSpec, OptimizeConfig
from brickwall.errors import BrickwallError, DomainError, PlanError
from brickwall.mps_mpo import mps_from_local_states, mps_product_state
from brickwall.pipeline import (DepthSweepReport, NoiseModel, PartitionPlan, SweepConfig,
                                SweepRow, aqft_baseline, brickwall_target_cnots, compile_plan,
                                compression_rate, depth_sweep, ee_trace, fit_power_law,
                                noise_fidelity, observable_dynamics, overall_fidelity, partition,
                                rescore, run_manifest, scaling_study, write_json,
                                write_sweep_csv)

from conftest import Z, basis, dense_circuit, schmidt_entropy

FAST = OptimizeConfig(max_iters=300, lr=1e-2, lr_final=1e-3)


# ---------------------------------------------------------------------------
# partitioning


def test_single_part_is_whole_circuit():
    c = build_trotter_ising(4, 0.1, 5)
    (part,) = partition(c, PartitionPlan((5,), (3,)))
    assert part.mode == "state" and part.circuit.layers == c.layers


def test_ibm_plan_compression():
    plan = PartitionPlan.uniform(100, 20, 6, 8)
    assert plan.m == 6 and plan.total_depth == 200
    assert plan.gamma() == pytest.approx(12.5)
    parts = partition(build_trotter_ising(4, 0.1, 200), plan)
    assert [p.mode for p in parts] == ["state"] + ["unitary"] * 5
    assert [p.circuit.metadata["steps"] for p in parts] == [100] + [20] * 5


def test_split_parts_compose_to_target():
    c = build_trotter_ising(6, 0.1, 100)
    parts = partition(c, PartitionPlan((60, 40), (8, 8)))
    u = dense_circuit(parts[1].circuit) @ dense_circuit(parts[0].circuit)
    assert np.allclose(u, dense_circuit(c), atol=1e-10)
    gates = [g for p in parts for g in p.circuit.gates()]
    assert all(g.same_as(h, atol=0) for g, h in zip(gates, c.gates()))


def test_partition_errors():
    c = build_trotter_ising(4, 0.1, 10)
    with pytest.raises(PlanError):
        partition(c, PartitionPlan((6, 5), (3, 3)))
    with pytest.raises(PlanError):
        PartitionPlan((3, 3), (3,))
    with pytest.raises(PlanError):
        PartitionPlan((0,), (3,))


# ---------------------------------------------------------------------------
# noise accounting


def test_noise_fidelity_values():
    assert noise_fidelity(0) == 1.0
    # frozen from direct evaluation of (1 - 0.004) ** n
    assert noise_fidelity(72, NoiseModel(4e-3)) == pytest.approx(0.749329, abs=1e-6)
    assert noise_fidelity(198, NoiseModel(4e-3)) == pytest.approx(0.452219, abs=1e-6)
    assert noise_fidelity(10, 0.01) == pytest.approx(0.99 ** 10)
    with pytest.raises(DomainError):
        noise_fidelity(-1)
    with pytest.raises(DomainError):
        NoiseModel(1.0)
    assert NoiseModel(0.0).eps2 == 0.0


def test_overall_fidelity_and_compression():
    assert overall_fidelity(1, 1) == 1
    assert overall_fidelity(0.963, 0.7494) == pytest.approx(0.7217, abs=5e-5)
    assert overall_fidelity(0.5, 0) == 0
    assert compression_rate(brickwall_target_cnots(10, 15), 9 * 6) == pytest.approx(7.5)
    assert compression_rate(brickwall_target_cnots(10, 4), 9 * 4) == pytest.approx(3.0)
    assert compression_rate(351, 36) == pytest.approx(9.75)
    with pytest.raises(DomainError):
        compression_rate(10, 0)


def _report(f_optim, n=10, eps=4e-3):
    rows = []
    for d, f in enumerate(f_optim, start=1):
        nc = (n - 1) * d
        fn = noise_fidelity(nc, NoiseModel(eps))
        rows.append(SweepRow(d, nc, f, fn, f * fn))
    return DepthSweepReport(rows, eps, brickwall_target_cnots(n, 15))


def test_report_d_max_and_rescaling_invariance():
    rep = _report([0.3, 0.6, 0.8, 0.9, 0.95, 0.96, 0.965])
    f_all = [r.f_all for r in rep.rows]
    assert rep.d_max == int(np.argmax(f_all)) + 1
    scaled = _report([0.37 * r.f_optim for r in rep.rows])
    assert scaled.d_max == rep.d_max
    assert rep.gamma == pytest.approx(3 * 15 / rep.d_max)
    tie = _report([0.5, 0.5 / 0.996 ** 9])
    assert tie.rows[0].f_all == pytest.approx(tie.rows[1].f_all)
    assert tie.d_max == min(r.d_optim for r in tie.rows if r.f_all == tie.f_all_max)


def test_rescore_keeps_identity():
    rep = _report([0.3, 0.6, 0.8, 0.9])
    for eps in (0.0, 1e-3, 1.5e-2):
        new = rescore(rep, NoiseModel(eps))
        for r in new.rows:
            assert r.f_all == r.f_optim * (1 - eps) ** (9 * r.d_optim)
    assert rescore(rep, NoiseModel(0.0)).d_max == 4


# ---------------------------------------------------------------------------
# depth sweeps


@pytest.fixture(scope="module")
def small_sweep():
    spec = LossSpec.from_circuit(build_trotter_ising(4, 0.2, 4), "unitary")
    cfg = SweepConfig(restarts=2, seed=0, init="seeded", optimize=FAST)
    return depth_sweep(spec, [3, 1, 2], NoiseModel(0.0), cfg,
                       target_cnots=brickwall_target_cnots(4, 4))


def test_noise_free_sweep(small_sweep):
    rep = small_sweep
    assert [r.d_optim for r in rep.rows] == [1, 2, 3]
    for r in rep.rows:
        assert r.f_all == r.f_optim and r.f_noise == 1.0
        assert r.n_cnot == 3 * r.d_optim
    assert rep.d_max == 3
    assert set(rep.results) == {1, 2, 3}
    d = rep.to_dict()
    assert d["d_max"] == 3 and len(d["rows"]) == 3


def test_noisy_rescore_of_sweep(small_sweep):
    rep = rescore(small_sweep, NoiseModel(4e-3))
    for r in rep.rows:
        assert r.f_all == r.f_optim * (1 - 4e-3) ** (3 * r.d_optim)


def test_sweep_pruning():
    spec = LossSpec.from_circuit(build_trotter_ising(4, 0.05, 1), "unitary")
    cfg = SweepConfig(restarts=1, init="seeded", prune=True, optimize=FAST)
    rep = depth_sweep(spec, [1, 2, 3, 4, 40], NoiseModel(0.05), cfg)
    assert 40 in rep.pruned
    assert all(r.d_optim != 40 for r in rep.rows)
    best = max(r.f_all for r in rep.rows)
    assert noise_fidelity(3 * 40, NoiseModel(0.05)) < best


def test_sweep_failed_rows():
    spec = LossSpec.from_circuit(build_trotter_ising(4, 0.1, 1), "unitary")
    rep = depth_sweep(spec, [1, 2], NoiseModel(), SweepConfig(restarts=1, optimize=FAST),
                      topology=5)
    assert rep.failed == [1, 2]
    assert all(r.status.startswith("failed") and math.isnan(r.f_all) for r in rep.rows)
    with pytest.raises(BrickwallError):
        rep.d_max
    with pytest.raises(DomainError):
        depth_sweep(spec, [])


def test_sweep_threads_match_serial():
    spec = LossSpec.from_circuit(build_trotter_ising(4, 0.1, 2), "unitary")
    base = SweepConfig(restarts=2, init="seeded", optimize=OptimizeConfig(max_iters=50, lr=1e-2))
    a = depth_sweep(spec, [1, 2], NoiseModel(), base)
    b = depth_sweep(spec, [1, 2], NoiseModel(),
                    SweepConfig(restarts=2, init="seeded", threads=2,
                                optimize=OptimizeConfig(max_iters=50, lr=1e-2)))
    assert [r.f_optim for r in a.rows] == [r.f_optim for r in b.rows]


# ---------------------------------------------------------------------------
# multi-part compilation and diagnostics


def test_compile_plan_two_parts():
    c = build_trotter_ising(4, 0.1, 4)
    res = compile_plan(c, PartitionPlan((2, 2), (2, 2)), config=FAST, restarts=2)
    assert [p.mode for p in res.parts] == ["state", "unitary"]
    assert len(res.results) == 2
    assert 0 < res.f_optim_product <= 1
    assert res.f_optim_product == pytest.approx(res.results[0].f_optim * res.results[1].f_optim)
    assert all(a.depth == 2 for a in res.ansatzes)


def test_ee_trace_identity_is_zero():
    tr = ee_trace(build_trotter_ising(4, 0.0, 3))
    assert tr.steps == [0, 1, 2, 3]
    assert np.allclose(tr.state, 0) and np.allclose(tr.operator, 0)
    with pytest.raises(DomainError):
        ee_trace(build_trotter_ising(4, 0.0, 1), which="density")


def test_ee_trace_cnot_layer_bounded_by_one_bit():
    n = 6
    layer = Circuit.from_gates(n, [Gate.cnot(q, q + 1) for q in range(0, n - 1, 2)])
    plus, zero = np.array([1, 1]) / np.sqrt(2), np.array([1.0, 0.0])
    for states in ([plus] * n, [plus, zero] * (n // 2)):
        psi0 = mps_from_local_states(states)
        for cut in range(1, n):
            tr = ee_trace(layer, psi0, which="state", cut=cut)
            assert max(tr.state) <= 1 + 1e-12
    tr = ee_trace(layer, mps_from_local_states([plus, zero] * 3), which="state", cut=1)
    assert tr.state[-1] == pytest.approx(1.0)


def test_ee_trace_matches_dense():
    n, steps = 6, 8
    c = build_trotter_ising(n, 0.2, steps)
    tr = ee_trace(c, which="both")
    psi = basis(n, "0" * n)
    one = dense_circuit(build_trotter_ising(n, 0.2, 1))
    u = np.eye(2 ** n)
    ref_state, ref_op = [0.0], [0.0]
    from conftest import operator_schmidt_entropy
    for _ in range(steps):
        psi = one @ psi
        u = one @ u
        ref_state.append(schmidt_entropy(psi, n, n // 2))
        ref_op.append(operator_schmidt_entropy(u, n, n // 2))
    assert np.allclose(tr.state, ref_state, atol=1e-8)
    assert np.allclose(tr.operator, ref_op, atol=1e-8)


def test_observable_dynamics_trivial_cases():
    n = 4
    psi0 = mps_product_state(n, "0" * n)
    zz = np.kron(Z, Z)
    ident = build_ansatz(n, 1, "identity")
    series = observable_dynamics([ident, ident], psi0, zz, [1, 2])
    assert series.compiled[0] == pytest.approx(1.0)
    c = build_trotter_ising(n, 0.0, 4)
    parts = partition(c, PartitionPlan((2, 2), (1, 1)))
    series = observable_dynamics([ident, ident], psi0, zz, [1, 2], parts)
    assert np.allclose(series.ideal, 1.0)
    assert series.ideal_steps == [0, 1, 2, 3, 4]
    assert series.part_steps == [0, 2, 4]


def test_observable_dynamics_compiled_tracks_ideal():
    n = 6
    c = build_trotter_ising(n, 0.1, 12)
    plan = PartitionPlan((4, 4, 4), (4, 4, 4))
    res = compile_plan(c, plan, config=OptimizeConfig(max_iters=600, lr=1e-2, lr_final=1e-4),
                       restarts=1, init="seeded")
    psi0 = mps_product_state(n, "0" * n)
    series = observable_dynamics(res.ansatzes, psi0, np.kron(Z, Z), [2, 3], res.parts)
    ideal = dict(zip(series.ideal_steps, series.ideal))
    # state error grows at most additively over parts
    bound = sum(2 * math.sqrt(max(0.0, 1 - r.f_optim ** 2)) for r in res.results)
    for t, v in zip(series.part_steps, series.compiled):
        assert abs(v - ideal[t]) <= 2 * bound + 1e-9
    # cross-check the ideal series against a dense evolution
    psi = circuit_state(c, basis(n, "0" * n))
    zz = np.kron(np.kron(np.eye(4), np.kron(Z, Z)), np.eye(4))
    assert ideal[12] == pytest.approx(np.vdot(psi, zz @ psi).real, abs=1e-9)


def test_power_law_fit():
    assert fit_power_law([4, 8, 16], [0.1, 0.1, 0.1]) == pytest.approx(0.0, abs=1e-12)
    ns = np.array([6, 8, 10, 12])
    assert fit_power_law(ns, 1e-4 * ns ** 2) == pytest.approx(2.0, abs=1e-6)
    with pytest.raises(DomainError):
        fit_power_law([4], [0.1])


def test_scaling_study_small():
    rep = scaling_study([4, 5, 6], lambda n: build_trotter_ising(n, 0.1, 3), 2, config=FAST,
                        restarts=1, init="seeded")
    assert [r[0] for r in rep.rows] == [4, 5, 6]
    assert all(0 < r[1] <= 1 and r[2] == pytest.approx(1 - r[1]) for r in rep.rows)
    assert np.isfinite(rep.alpha)


def test_aqft_baseline_rows():
    rows = aqft_baseline(6, model=NoiseModel(4e-3))
    assert [r.k_max for r in rows] == [2, 3, 4, 5, 6]
    assert rows[-1].f_optim == pytest.approx(1.0, abs=1e-10)
    assert all(r.f_all == pytest.approx(r.f_optim * r.f_noise) for r in rows)
    assert np.all(np.diff([r.f_optim for r in rows]) > 0)
    qft = circuit_to_mpo(build_trotter_ising(6, 0.1, 1))[0]
    assert qft.n == 6


def test_report_files(small_sweep, tmp_path):
    rows = aqft_baseline(4)
    path = write_sweep_csv(small_sweep, tmp_path / "s.csv", rows)
    with path.open() as fh:
        table = list(csv.DictReader(fh))
    assert len(table) == 3 + len(rows)
    assert table[0]["kind"] == "optimized" and table[-1]["kind"] == "aqft"
    assert float(table[0]["F_all"]) == small_sweep.rows[0].f_all
    man = run_manifest({"a": 1}, [0], 128, 4e-3, "sweep")
    write_json(man, tmp_path / "m.json")
    back = json.loads((tmp_path / "m.json").read_text())
    assert back["seeds"] == [0] and back["eps2"] == 4e-3 and "version" in back
