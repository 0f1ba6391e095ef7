"""Circuit IR, target builders, the brick-wall ansatz and circuit I/O."""

from .ansatz import (BrickWallAnsatz, build_ansatz, chain_cnot_count, grid_cnot_count,
                     random_near_identity)
from .builders import (aqft_cnot_count, build_aqft, build_bell_pair, build_haar_random,
                       build_qft_core, build_trotter_ising, haar_unitary, rk_phase)
from .ir import (Chain, Circuit, Gate, Grid, Topology, apply_dense, circuit_state,
                 circuit_unitary, topology_from_dict)
from .qasm import export_qasm, import_qasm, parse_qasm, to_qasm
from .serialize import circuit_from_dict, circuit_to_dict, load_circuit, save_circuit
from .simulate import D_TARGET, circuit_to_mpo, circuit_to_mps, iter_simulation
from .snake import route_to_chain, snake_map, snake_order
