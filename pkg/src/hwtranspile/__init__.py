"""Hardware-aware compilation for cross-resonance and neutral-atom devices.

The circuit IR and its unitary oracles live in :mod:`hwtranspile.ir`; each
target and pass has its own module.
"""

from .dd import DdSequence, Schedule, TimingModel, dd_benefit_sim, find_idle_windows, insert_dd, schedule
from .ecr import compile_ecr, decompose_cx, decompose_zz, resynthesize_1q
from .gr import compile_gr, compile_gr_baseline, decompose_collection, reassign_collections, sift
from .ir import Circuit, CircuitError, Operation, equiv_perm, equiv_phase, gate_counts, op, state_of, unitary_of
from .metrics import hellinger_fidelity, relative_strength
from .noise import NoiseModel, ghz_fidelity, sample_counts, simulate, state_fidelity
from .qasm import QasmError, dump, emit, load, parse
from .route import (
    CouplingGraph,
    RoutedCircuit,
    bv_circuit,
    greedy_baseline_route,
    merge_cx_swap,
    mirror_swaps,
    route,
    route_star_to_line,
    verify_routed,
)

__version__ = "0.1.0"
