"""End-to-end compilation: partitioning, noise-aware depth sweeps and diagnostics."""

from __future__ import annotations

import csv
import json
import math
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .circuits.ansatz import BrickWallAnsatz, build_ansatz
from .circuits.builders import aqft_cnot_count, build_aqft, build_qft_core
from .circuits.ir import Circuit
from .circuits.simulate import D_TARGET, circuit_to_mpo, circuit_to_mps, iter_simulation
from .compile_opt.optimize import (CompilationResult, LossSpec, OptimizeConfig,
                                    fidelity_unitary, optimize)
from .errors import BrickwallError, DomainError, PlanError
from .mps_mpo import (MPS, compress, entanglement_entropy, expect_local, mpo_identity,
                      mps_product_state)

#: Default two-qubit error rate.
EPS_DEFAULT = 4e-3


# ----------------------------------------------------------------------------
# partitioning


@dataclass(frozen=True)
class PartitionPlan:
    """Split of a layered target into ``m`` consecutive parts.

    ``d_target[j]`` counts target depth units (Trotter steps or brick
    layers) of part ``j``; ``d_optim[j]`` is the ansatz depth used for it.
    """

    d_target: tuple
    d_optim: tuple

    def __post_init__(self):
        object.__setattr__(self, "d_target", tuple(int(d) for d in self.d_target))
        object.__setattr__(self, "d_optim", tuple(int(d) for d in self.d_optim))
        if len(self.d_target) != len(self.d_optim) or not self.d_target:
            raise PlanError("d_target and d_optim need the same non-zero length")
        if min(self.d_target) < 1 or min(self.d_optim) < 1:
            raise PlanError("all part depths must be positive")

    @property
    def m(self) -> int:
        return len(self.d_target)

    @property
    def total_depth(self) -> int:
        return sum(self.d_target)

    @classmethod
    def uniform(cls, first: int, rest: int, m: int, d_optim: int) -> "PartitionPlan":
        return cls((first,) + (rest,) * (m - 1), (d_optim,) * m)

    def gamma(self) -> float:
        """Total compression rate ``3 sum d_target / sum d_optim`` for brick-wall targets."""
        return compression_rate(3 * self.total_depth, sum(self.d_optim))


@dataclass(frozen=True)
class Part:
    """One piece of a partitioned target."""

    index: int
    circuit: Circuit
    mode: str
    d_target: int
    d_optim: int


def _layers_per_unit(target: Circuit) -> int:
    return int(target.metadata.get("layers_per_step", 1))


def partition(target: Circuit, plan: PartitionPlan) -> list[Part]:
    """Cut ``target`` into consecutive parts following ``plan``.

    Part 0 is compiled in state mode, the rest in unitary mode.

    Raises:
        PlanError: If the plan depths do not add up to the target depth.
    """
    per = _layers_per_unit(target)
    if target.depth % per:
        raise PlanError(f"target depth {target.depth} is not a multiple of {per} layers per unit")
    units = target.depth // per
    if plan.total_depth != units:
        raise PlanError(f"plan covers {plan.total_depth} depth units, target has {units}")
    parts = []
    start = 0
    for j, (dt, do) in enumerate(zip(plan.d_target, plan.d_optim)):
        layers = target.layers[start * per:(start + dt) * per]
        meta = {**target.metadata, "part": j, "d_target": dt}
        if "steps" in meta:
            meta["steps"] = dt
        parts.append(Part(j, Circuit(target.n, layers, target.topology, meta),
                          "state" if j == 0 else "unitary", dt, do))
        start += dt
    return parts


# ----------------------------------------------------------------------------
# noise model


@dataclass(frozen=True)
class NoiseModel:
    """Analytic CNOT noise: every CNOT succeeds with probability ``1 - eps2``."""

    eps2: float = EPS_DEFAULT

    def __post_init__(self):
        if not 0.0 <= self.eps2 < 1.0:
            raise DomainError(f"eps2 must lie in [0, 1), got {self.eps2}")


def noise_fidelity(n_cnot: int, model: NoiseModel | float = NoiseModel()) -> float:
    """``(1 - eps2)^n_cnot``."""
    eps = model.eps2 if isinstance(model, NoiseModel) else float(model)
    if n_cnot < 0:
        raise DomainError("n_cnot must be non-negative")
    return (1.0 - eps) ** n_cnot


def overall_fidelity(f_optim: float, f_noise: float) -> float:
    """``F_all = F_optim F_noise``."""
    return f_optim * f_noise


def compression_rate(target_cnots: float, optim_cnots: float) -> float:
    """CNOTs of the conventionally compiled target over CNOTs of the optimized circuit.

    Raises:
        DomainError: If ``optim_cnots`` is not positive.
    """
    if optim_cnots <= 0:
        raise DomainError("optimized circuit must contain at least one CNOT")
    return target_cnots / optim_cnots


def brickwall_target_cnots(n: int, d_target: int) -> int:
    """Three CNOTs for each of the ``(n - 1) d_target`` gates of a brick-wall target."""
    return 3 * (n - 1) * d_target


# ----------------------------------------------------------------------------
# depth sweep


@dataclass(frozen=True)
class SweepConfig:
    """How each depth of a sweep is optimized.

    Restart 0 warm-starts from the previous depth's best solution (extended
    by layers that start near the identity) when ``warm_start`` is set; the
    other restarts use fresh initializations seeded by ``seed + restart``.
    With ``prune`` a depth is skipped once its noise ceiling ``F_noise``
    falls below the best ``F_all`` found so far, since such a depth cannot
    win.
    """

    restarts: int = 3
    seed: int = 0
    init: str = "near_identity"
    sigma: float = 0.01
    warm_start: bool = True
    warm_sigma: float = 0.01
    prune: bool = False
    threads: int = 1
    optimize: OptimizeConfig = field(default_factory=OptimizeConfig)


@dataclass(frozen=True)
class SweepRow:
    d_optim: int
    n_cnot: int
    f_optim: float
    f_noise: float
    f_all: float
    best_restart: int = 0
    iterations: int = 0
    wall_time: float = 0.0
    converged: bool = True
    status: str = "ok"


@dataclass
class DepthSweepReport:
    """Trade-off between compilation and noise over ansatz depths."""

    rows: list
    eps2: float
    target_cnots: float | None = None
    pruned: list = field(default_factory=list)
    failed: list = field(default_factory=list)
    results: dict = field(default_factory=dict, repr=False)

    @property
    def ok_rows(self) -> list:
        return [r for r in self.rows if r.status == "ok"]

    @property
    def d_max(self) -> int:
        """Depth of largest ``F_all`` (smallest depth on ties)."""
        rows = self.ok_rows
        if not rows:
            raise BrickwallError("no successful rows in sweep")
        best = max(r.f_all for r in rows)
        return min(r.d_optim for r in rows if r.f_all == best)

    @property
    def f_all_max(self) -> float:
        return max(r.f_all for r in self.ok_rows)

    def row(self, d_optim: int) -> SweepRow:
        for r in self.rows:
            if r.d_optim == d_optim:
                return r
        raise KeyError(d_optim)

    @property
    def gamma(self) -> float | None:
        if self.target_cnots is None:
            return None
        return compression_rate(self.target_cnots, self.row(self.d_max).n_cnot)

    def to_dict(self) -> dict:
        return {"eps2": self.eps2, "target_cnots": self.target_cnots,
                "d_max": self.d_max, "F_all_max": self.f_all_max, "gamma": self.gamma,
                "rows": [asdict(r) for r in self.rows], "pruned": list(self.pruned),
                "failed": list(self.failed)}


def _run_restarts(spec: LossSpec, topology, depth: int, config: SweepConfig,
                  warm: BrickWallAnsatz | None) -> tuple[CompilationResult, int]:
    starts = []
    for r in range(config.restarts):
        if r == 0 and warm is not None:
            starts.append(warm.extended(depth, sigma=config.warm_sigma,
                                        seed=config.seed + 7919 * depth))
        else:
            starts.append(build_ansatz(topology, depth, config.init, sigma=config.sigma,
                                       seed=config.seed + 1000 * depth + r))

    def job(a):
        return optimize(spec, a, config.optimize)

    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            results = list(pool.map(job, starts))
    else:
        results = [job(a) for a in starts]
    best = max(range(len(results)), key=lambda k: results[k].f_optim)
    return results[best], best


def depth_sweep(spec: LossSpec, depths: Sequence[int], model: NoiseModel = NoiseModel(),
                config: SweepConfig = SweepConfig(), topology=None,
                target_cnots: float | None = None,
                log: Callable[[str], None] | None = None) -> DepthSweepReport:
    """Compile ``spec`` at every depth and pick the one maximizing ``F_all``.

    Args:
        spec: Target and loss mode.
        depths: Ansatz depths to try (processed in increasing order).
        model: Noise model for ``F_noise``.
        config: Restarts, warm starts, pruning and optimizer settings.
        topology: Ansatz topology (chain of ``spec.n`` by default).
        target_cnots: CNOT count of the conventionally compiled target, for
            the compression rate.
    """
    if not depths:
        raise DomainError("depth list is empty")
    topology = spec.n if topology is None else topology
    rows, pruned, failed, results = [], [], [], {}
    warm = None
    best_all = -1.0
    for d in sorted(set(int(x) for x in depths)):
        probe = build_ansatz(topology, d, "identity")
        n_cnot = probe.n_cnot()
        f_noise = noise_fidelity(n_cnot, model)
        if config.prune and f_noise < best_all:
            pruned.append(d)
            if log:
                log(f"d={d}: pruned (noise ceiling {f_noise:.4f} < {best_all:.4f})")
            continue
        try:
            res, which = _run_restarts(spec, topology, d, config,
                                       warm if config.warm_start else None)
        except BrickwallError as exc:
            failed.append(d)
            rows.append(SweepRow(d, n_cnot, math.nan, f_noise, math.nan, status=f"failed: {exc}"))
            continue
        f_all = overall_fidelity(res.f_optim, f_noise)
        rows.append(SweepRow(d, n_cnot, res.f_optim, f_noise, f_all, which, res.iterations,
                             res.wall_time, res.converged))
        results[d] = res
        warm = res.ansatz
        best_all = max(best_all, f_all)
        if log:
            log(f"d={d}: F_optim={res.f_optim:.4f} F_noise={f_noise:.4f} F_all={f_all:.4f} "
                f"(restart {which}, {res.iterations} it, {res.wall_time:.1f}s)")
    return DepthSweepReport(rows, model.eps2, target_cnots, pruned, failed, results)


def rescore(report: DepthSweepReport, model: NoiseModel) -> DepthSweepReport:
    """Same optimization results under another noise model."""
    rows = []
    for r in report.rows:
        f_noise = noise_fidelity(r.n_cnot, model)
        rows.append(SweepRow(r.d_optim, r.n_cnot, r.f_optim, f_noise,
                             overall_fidelity(r.f_optim, f_noise), r.best_restart, r.iterations,
                             r.wall_time, r.converged, r.status))
    return DepthSweepReport(rows, model.eps2, report.target_cnots, [], list(report.failed),
                            report.results)


# ----------------------------------------------------------------------------
# multi-part compilation


@dataclass
class PlanResult:
    parts: list
    results: list

    @property
    def f_optim_product(self) -> float:
        return float(np.prod([r.f_optim for r in self.results]))

    @property
    def ansatzes(self) -> list:
        return [r.ansatz for r in self.results]


def compile_plan(target: Circuit, plan: PartitionPlan, psi0: MPS | None = None,
                 config: OptimizeConfig = OptimizeConfig(), restarts: int = 3, seed: int = 0,
                 d_target: int = D_TARGET, init: str = "near_identity",
                 sigma: float = 0.01) -> PlanResult:
    """Partition ``target`` and compile each part.

    Parts after the second warm-start from the previous unitary-mode
    solution when they have the same depths (they are translations of the
    same block), as one of the restarts.
    """
    parts = partition(target, plan)
    psi0 = mps_product_state(target.n, "0" * target.n) if psi0 is None else psi0
    results = []
    prev = None
    for part in parts:
        if part.mode == "state":
            spec = LossSpec.state(circuit_to_mps(part.circuit, psi0, d_target)[0], psi0)
        else:
            spec = LossSpec.unitary(circuit_to_mpo(part.circuit, d_target)[0])
        starts = [build_ansatz(target.topology, part.d_optim, init, sigma=sigma,
                               seed=seed + 100 * part.index + r) for r in range(restarts)]
        if prev is not None and prev.depth == part.d_optim and part.mode == "unitary":
            starts[0] = prev
        best = max((optimize(spec, a, config) for a in starts), key=lambda r: r.f_optim)
        results.append(best)
        if part.mode == "unitary":
            prev = best.ansatz
    return PlanResult(parts, results)


# ----------------------------------------------------------------------------
# diagnostics


@dataclass
class EETrace:
    """Half-chain entanglement entropy after every depth unit."""

    steps: list
    state: list | None
    operator: list | None
    cut: int
    d_target: int


def ee_trace(target: Circuit, psi0: MPS | None = None, d_target: int = D_TARGET,
             which: str = "both", cut: int | None = None) -> EETrace:
    """Entanglement entropy of ``U_k |psi0>`` and of ``U_k`` after each depth unit ``k``.

    Args:
        target: Layered circuit; ``layers_per_step`` metadata sets the unit.
        psi0: Initial state (``|0...0>`` by default).
        d_target: Bond cap of the simulation.
        which: ``"state"``, ``"operator"`` or ``"both"``.
        cut: Bond (default ``N // 2``).
    """
    if which not in ("state", "operator", "both"):
        raise DomainError(f"unknown trace kind {which!r}")
    n = target.n
    cut = n // 2 if cut is None else cut
    per = _layers_per_unit(target)
    steps = [0]
    state_ee = op_ee = None
    if which in ("state", "both"):
        psi0 = mps_product_state(n, "0" * n) if psi0 is None else psi0
        start, _ = compress(psi0, d_target)
        state_ee = [entanglement_entropy(start, cut)]
        for k, net, _ in iter_simulation(target, psi0, d_target):
            if (k + 1) % per == 0:
                state_ee.append(entanglement_entropy(_canonical(net, d_target), cut))
    if which in ("operator", "both"):
        op_ee = [0.0]
        for k, net, _ in iter_simulation(target, mpo_identity(n), d_target):
            if (k + 1) % per == 0:
                op_ee.append(entanglement_entropy(_canonical(net, d_target), cut))
    count = len(state_ee if state_ee is not None else op_ee)
    steps = list(range(count))
    return EETrace(steps, state_ee, op_ee, cut, d_target)


def _canonical(net, d_target):
    return net if net.canonical is not None else compress(net, d_target)[0]


@dataclass
class ObservableSeries:
    """Observable after every part (compiled) and every target step (ideal)."""

    part_steps: list
    compiled: list
    ideal_steps: list
    ideal: list


def observable_dynamics(ansatzes: Sequence[BrickWallAnsatz], psi0: MPS, observable,
                        sites: Sequence[int], parts: Sequence[Part] | None = None,
                        d_target: int = D_TARGET) -> ObservableSeries:
    """Evolve ``psi0`` part by part and evaluate a local observable.

    The compiled series holds the value at ``t = 0`` and after every
    compiled part; when the target ``parts`` are given the ideal series is
    evaluated after every depth unit of the target.
    """
    if any(a.n != psi0.n for a in ansatzes):
        raise DomainError("all parts must act on psi0's qubits")
    steps = [0]
    values = [expect_local(_canonical(psi0, d_target), observable, sites)]
    psi = psi0
    t = 0
    for j, a in enumerate(ansatzes):
        psi, _ = circuit_to_mps(a.to_circuit(), psi, d_target)
        t += parts[j].d_target if parts is not None else 1
        steps.append(t)
        values.append(expect_local(psi, observable, sites))
    ideal_steps, ideal = [], []
    if parts is not None:
        ideal_steps, ideal = [0], [values[0]]
        psi, t = psi0, 0
        for part in parts:
            per = _layers_per_unit(part.circuit)
            for k, net, _ in iter_simulation(part.circuit, psi, d_target):
                if (k + 1) % per == 0:
                    t += 1
                    ideal_steps.append(t)
                    ideal.append(expect_local(_canonical(net, d_target), observable, sites))
            psi = _canonical(net, d_target)
    return ObservableSeries(steps, values, ideal_steps, ideal)


def fit_power_law(ns: Sequence[float], infidelities: Sequence[float]) -> float:
    """Least-squares slope of ``log(1 - F)`` against ``log N``; non-positive values are skipped."""
    pts = [(math.log(n), math.log(e)) for n, e in zip(ns, infidelities) if e > 0]
    if len(pts) < 2:
        raise DomainError("need at least two positive infidelities to fit")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class ScalingReport:
    rows: list  # (N, F_optim, 1 - F_optim)
    alpha: float


def scaling_study(ns: Sequence[int], build_target: Callable[[int], Circuit], d_optim: int,
                  mode: str = "unitary", d_target: int = D_TARGET,
                  config: OptimizeConfig = OptimizeConfig(), restarts: int = 3,
                  seed: int = 0, init: str = "near_identity",
                  sigma: float = 0.01) -> ScalingReport:
    """``1 - F_optim`` against ``N`` and the fitted exponent ``alpha``."""
    if len(ns) < 3:
        raise DomainError("a scaling study needs at least three sizes")
    rows = []
    for n in ns:
        spec = LossSpec.from_circuit(build_target(n), mode, d_target=d_target)
        best = max((optimize(spec, build_ansatz(n, d_optim, init, sigma=sigma, seed=seed + r),
                             config) for r in range(restarts)), key=lambda r: r.f_optim)
        rows.append((n, best.f_optim, 1.0 - best.f_optim))
    return ScalingReport(rows, fit_power_law([r[0] for r in rows], [r[2] for r in rows]))


# ----------------------------------------------------------------------------
# AQFT baseline


@dataclass(frozen=True)
class BaselineRow:
    k_max: int
    n_cnot: int
    f_optim: float
    f_noise: float
    f_all: float


def aqft_baseline(n: int, k_values: Sequence[int] | None = None,
                  model: NoiseModel = NoiseModel(), d_target: int = D_TARGET,
                  convention: str = "binary") -> list[BaselineRow]:
    """Fidelity of AQFT circuits against the QFT core, with their noise cost."""
    qft, _ = circuit_to_mpo(build_qft_core(n, convention), d_target)
    rows = []
    for k in (range(2, n + 1) if k_values is None else k_values):
        approx, _ = circuit_to_mpo(build_aqft(n, k, convention), d_target)
        f = fidelity_unitary(qft, approx)
        n_cnot = aqft_cnot_count(n, k)
        f_noise = noise_fidelity(n_cnot, model)
        rows.append(BaselineRow(k, n_cnot, f, f_noise, overall_fidelity(f, f_noise)))
    return rows


# ----------------------------------------------------------------------------
# report files

SWEEP_COLUMNS = ("d_optim", "n_cnot", "F_optim", "F_noise", "F_all")


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n", encoding="utf-8")
    return path


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def write_sweep_csv(report: DepthSweepReport, path,
                    baseline: Sequence[BaselineRow] = ()) -> Path:
    """One row per depth; AQFT baseline rows (if any) follow with ``k_max`` set."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS + ("kind", "k_max"))
        for r in report.rows:
            w.writerow([r.d_optim, r.n_cnot, repr(r.f_optim), repr(r.f_noise), repr(r.f_all),
                        "optimized", ""])
        for b in baseline:
            w.writerow(["", b.n_cnot, repr(b.f_optim), repr(b.f_noise), repr(b.f_all), "aqft",
                        b.k_max])
    return path


def run_manifest(config: dict, seeds: Sequence[int], d_target: int, eps2: float,
                 command: str) -> dict:
    """Everything needed to reproduce a run."""
    return {"tool": "brickwall", "version": __version__, "command": command,
            "config": config, "seeds": list(seeds), "D_target": d_target, "eps2": eps2,
            "python": platform.python_version(), "numpy": np.__version__}
