"""Loss evaluation, environment gradients and Riemannian Adam."""

from .network import ChainEngine, DenseEngine
from .optimize import (CompilationResult, LossSpec, OptimizeConfig, fidelity_state,
                       fidelity_unitary, gradient, load_checkpoint, loss, make_engine,
                       optimization_fidelity, optimize, save_checkpoint)
from .riemannian import OptimizerState, adam_step, project_to_tangent, retract, skew
