"""Losses, fidelities and the Riemannian Adam compilation loop."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..circuits.ansatz import BrickWallAnsatz
from ..circuits.ir import Chain, Circuit, Grid
from ..circuits.simulate import D_TARGET, circuit_to_mpo, circuit_to_mps
from ..circuits.snake import snake_order
from ..errors import DomainError, ShapeError
from ..mps_mpo import MPO, MPS, inner, mps_product_state, trace_adjoint_product
from .network import ChainEngine, DenseEngine, operator_target, state_target
from .riemannian import OptimizerState, adam_step, project_to_tangent, retract

#: Largest qubit count the dense engine accepts (state mode / unitary mode).
DENSE_MAX_QUBITS = {"state": 20, "unitary": 10}


@dataclass(frozen=True)
class LossSpec:
    """What an ansatz is compiled against.

    ``mode="state"`` compares ``U_a |psi0>`` with the target MPS,
    ``mode="unitary"`` compares ``U_a`` with the target MPO. For grid
    ansatzes the target lives in snake order: ``position[q]`` is the chain
    site of grid qubit ``q``.
    """

    mode: str
    target: MPS | MPO
    psi0: MPS | None = None
    position: tuple | None = None

    def __post_init__(self):
        if self.mode == "state":
            if not isinstance(self.target, MPS) or not isinstance(self.psi0, MPS):
                raise ShapeError("state mode needs MPS target and psi0")
            if self.psi0.n != self.target.n:
                raise ShapeError("psi0 and target sizes differ")
        elif self.mode == "unitary":
            if not isinstance(self.target, MPO):
                raise ShapeError("unitary mode needs an MPO target")
        else:
            raise DomainError(f"unknown loss mode {self.mode!r}")

    @property
    def n(self) -> int:
        return self.target.n

    @property
    def norm(self) -> float:
        """``||target||^2`` under the type convention (1 or ``2^N``)."""
        return 1.0 if self.mode == "state" else float(2 ** self.n)

    @classmethod
    def state(cls, target: MPS, psi0: MPS | None = None, position=None) -> "LossSpec":
        psi0 = mps_product_state(target.n, "0" * target.n) if psi0 is None else psi0
        return cls("state", target, psi0, None if position is None else tuple(position))

    @classmethod
    def unitary(cls, target: MPO, position=None) -> "LossSpec":
        return cls("unitary", target, None, None if position is None else tuple(position))

    @classmethod
    def from_circuit(cls, circuit: Circuit, mode: str, psi0: MPS | None = None,
                     d_target: int = D_TARGET) -> "LossSpec":
        """Simulate ``circuit`` (compressed to ``d_target``) and wrap it as a target."""
        position = None
        if isinstance(circuit.topology, Grid):
            order = snake_order(circuit.topology)
            position = [0] * circuit.n
            for k, q in enumerate(order):
                position[q] = k
        if mode == "unitary":
            return cls.unitary(circuit_to_mpo(circuit, d_target)[0], position)
        if position is not None and psi0 is not None:
            raise DomainError("state-mode grid targets need psi0 in snake order; "
                              "build the LossSpec directly")
        # |0...0> reads the same in every site order
        psi0 = mps_product_state(circuit.n, "0" * circuit.n) if psi0 is None else psi0
        return cls.state(circuit_to_mps(circuit, psi0, d_target)[0], psi0, position)


def make_engine(spec: LossSpec, ansatz: BrickWallAnsatz, engine: str = "auto"):
    """Contraction engine for ``spec`` and the ansatz layout."""
    if ansatz.n != spec.n:
        raise ShapeError(f"ansatz has {ansatz.n} qubits, target {spec.n}")
    if engine == "auto":
        engine = "chain" if isinstance(ansatz.topology, Chain) and spec.position is None \
            else "dense"
    if engine == "chain":
        if spec.mode == "unitary":
            tensors = operator_target(spec.target.tensors)
        else:
            tensors = state_target(spec.target.tensors, spec.psi0.tensors)
        return ChainEngine(ansatz.topology, ansatz.depth, tensors)
    if engine != "dense":
        raise DomainError(f"unknown engine {engine!r}")
    n = spec.n
    if n > DENSE_MAX_QUBITS[spec.mode]:
        raise DomainError(f"dense engine limited to {DENSE_MAX_QUBITS[spec.mode]} qubits "
                          f"in {spec.mode} mode")
    if spec.mode == "unitary":
        tgt = spec.target.to_dense().reshape((2,) * n + (2 ** n,))
        start = np.eye(2 ** n, dtype=np.complex128).reshape((2,) * n + (2 ** n,))
    else:
        tgt = spec.target.to_dense().reshape((2,) * n + (1,))
        start = spec.psi0.to_dense().reshape((2,) * n + (1,))
    return DenseEngine(ansatz.topology, ansatz.depth, tgt, start, spec.position)


def _overlap_to_loss(spec: LossSpec, f: complex) -> float:
    return 2.0 * spec.norm - 2.0 * f.real


def _overlap_to_fidelity(spec: LossSpec, f: complex) -> float:
    if spec.mode == "state":
        return abs(f) ** 2
    return abs(f) / spec.norm


def loss(spec: LossSpec, a: BrickWallAnsatz) -> float:
    """``2 - 2 Re<psi_t|U_a|psi0>`` (state) or ``2 2^N - 2 Re Tr[U_t^dagger U_a]`` (unitary)."""
    return _overlap_to_loss(spec, make_engine(spec, a).value(a.params))


def optimization_fidelity(spec: LossSpec, a: BrickWallAnsatz) -> float:
    """``|<psi_t|U_a|psi0>|^2`` (state) or ``|Tr[U_t^dagger U_a]| / 2^N`` (unitary)."""
    return _overlap_to_fidelity(spec, make_engine(spec, a).value(a.params))


def gradient(spec: LossSpec, a: BrickWallAnsatz) -> np.ndarray:
    """Euclidean gradient of :func:`loss` for every trainable gate, shape ``(P, 2, 2)``.

    For a real direction ``H`` the directional derivative of the loss is
    ``2 Re sum(conj(grad) * H)``.
    """
    _, env = make_engine(spec, a).value_and_grad(a.params)
    return -np.conj(env)


def fidelity_state(a: MPS, b: MPS) -> float:
    """``|<a|b>|^2`` for normalized states."""
    return abs(inner(a, b)) ** 2


def fidelity_unitary(a: MPO, b: MPO) -> float:
    """``|Tr[a^dagger b]| / 2^N`` (the modulus, not its square)."""
    return abs(trace_adjoint_product(a, b)) / 2 ** a.n


@dataclass(frozen=True)
class OptimizeConfig:
    """Stopping rule and Adam hyperparameters.

    The run stops once the best loss has improved by less than ``tol``
    over ``patience`` iterations, once ``target_fidelity`` is reached, or after ``max_iters``.
    ``lr_final`` enables a cosine decay of the learning rate from ``lr`` to
    ``lr_final`` over ``max_iters``.
    """

    max_iters: int = 20000
    patience: int = 500
    tol: float = 1e-7
    seed: int | None = None
    lr: float = 1e-3
    lr_final: float | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    target_fidelity: float | None = None
    engine: str = "auto"

    def learning_rate(self, it: int) -> float:
        if self.lr_final is None or self.max_iters <= 1:
            return self.lr
        frac = min(it / (self.max_iters - 1), 1.0)
        return self.lr_final + 0.5 * (self.lr - self.lr_final) * (1.0 + math.cos(math.pi * frac))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class CompilationResult:
    """Outcome of :func:`optimize`; ``ansatz`` holds the best parameters seen."""

    ansatz: BrickWallAnsatz
    f_optim: float
    loss_history: np.ndarray
    fidelity_history: np.ndarray
    iterations: int
    wall_time: float
    converged: bool
    best_iteration: int
    state: OptimizerState = field(repr=False)

    @property
    def final_loss(self) -> float:
        return float(self.loss_history[self.best_iteration]) if len(self.loss_history) else math.nan

    def summary(self) -> dict:
        return {"d_optim": self.ansatz.depth, "n_cnot": self.ansatz.n_cnot(),
                "F_optim": self.f_optim, "iterations": self.iterations,
                "best_iteration": self.best_iteration, "wall_time": self.wall_time,
                "converged": self.converged}


def optimize(spec: LossSpec, a: BrickWallAnsatz, config: OptimizeConfig = OptimizeConfig(),
             state: OptimizerState | None = None, checkpoint: str | Path | None = None,
             checkpoint_every: int = 0) -> CompilationResult:
    """Maximize the compilation fidelity of ``a`` by Riemannian Adam.

    Each iteration evaluates the overlap and all gate environments at the
    current parameters, projects the Euclidean gradients onto the tangent
    spaces, takes an Adam step in the Lie algebra and retracts with the
    matrix exponential. The best parameters seen (by fidelity) are returned.

    Args:
        spec: Target and loss mode.
        a: Starting ansatz.
        config: Stopping rule and hyperparameters.
        state: Adam state to resume from (fresh when omitted).
        checkpoint: Optional path written every ``checkpoint_every``
            iterations and at the end.
    """
    engine = make_engine(spec, a, config.engine)
    rng = np.random.default_rng(config.seed)
    params = np.array(a.params)
    if state is None:
        state = OptimizerState.fresh(len(params), config.lr, config.beta1, config.beta2,
                                     config.eps)
    start_t = state.t
    losses, fids = [], []
    best_f, best_it, best_params = -1.0, 0, params.copy()
    anchor, anchor_it = math.inf, 0
    converged = False
    t0 = time.perf_counter()
    it = 0
    for it in range(config.max_iters):
        f, env = engine.value_and_grad(params)
        cur_loss = _overlap_to_loss(spec, f)
        fid = _overlap_to_fidelity(spec, f)
        losses.append(cur_loss)
        fids.append(fid)
        if fid > best_f:
            best_f, best_it, best_params = fid, it, params.copy()
        if cur_loss < anchor - config.tol:
            anchor, anchor_it = cur_loss, it
        if config.target_fidelity is not None and best_f >= config.target_fidelity:
            converged = True
            break
        if it - anchor_it >= config.patience:
            converged = True
            break
        grads = project_to_tangent(params, -np.conj(env))
        state, step = adam_step(state, grads, config.learning_rate(start_t + it))
        params = retract(params, step)
        if checkpoint is not None and checkpoint_every and (it + 1) % checkpoint_every == 0:
            save_checkpoint(checkpoint, a.with_params(params), state, rng)
    wall = time.perf_counter() - t0
    best = a.with_params(best_params)
    f_optim = _overlap_to_fidelity(spec, engine.value(best_params))
    if checkpoint is not None:
        save_checkpoint(checkpoint, best, state, rng)
    return CompilationResult(best, f_optim, np.asarray(losses), np.asarray(fids), it + 1, wall,
                             converged, best_it, state)


def save_checkpoint(path, ansatz: BrickWallAnsatz, state: OptimizerState,
                    rng: np.random.Generator | None = None) -> Path:
    """Write ansatz, Adam state and RNG state to an ``.npz`` file."""
    path = Path(path)
    meta = {"ansatz": {"topology": ansatz.topology.to_dict(), "depth": ansatz.depth},
            "t": state.t, "lr": state.lr, "beta1": state.beta1, "beta2": state.beta2,
            "eps": state.eps,
            "rng": None if rng is None else rng.bit_generator.state}
    with path.open("wb") as fh:
        np.savez(fh, params=ansatz.params, m=state.m, v=state.v,
                 meta=np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8))
    return path


def load_checkpoint(path) -> tuple[BrickWallAnsatz, OptimizerState, np.random.Generator | None]:
    """Inverse of :func:`save_checkpoint`."""
    from ..circuits.ir import topology_from_dict

    with np.load(Path(path)) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        ansatz = BrickWallAnsatz(topology_from_dict(meta["ansatz"]["topology"]),
                                 meta["ansatz"]["depth"], data["params"])
        state = OptimizerState(data["m"].copy(), data["v"].copy(), meta["t"], meta["lr"],
                               meta["beta1"], meta["beta2"], meta["eps"])
    rng = None
    if meta["rng"] is not None:
        rng = np.random.default_rng()
        rng.bit_generator.state = meta["rng"]
    return ansatz, state, rng


__all__ = ["LossSpec", "OptimizeConfig", "CompilationResult", "make_engine", "loss", "gradient",
           "optimization_fidelity", "fidelity_state", "fidelity_unitary", "optimize",
           "save_checkpoint", "load_checkpoint"]
