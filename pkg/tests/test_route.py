import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hwtranspile.ir import Circuit, CircuitError, equiv_phase, gate_counts, op, unitary_of
from hwtranspile.route import (
    CX_THEN_SWAP,
    CouplingGraph,
    RoutedCircuit,
    bv_circuit,
    find_star_subcircuits,
    greedy_baseline_route,
    local_unitary_2q,
    merge_cx_swap,
    mirror_swaps,
    on_coupling,
    route,
    route_star_to_line,
    verify_routed,
)

from _circuits import random_circuit


def test_bv_is_one_star():
    segs = find_star_subcircuits(bv_circuit(5))
    assert len(segs) == 1
    assert segs[0].hub == 4
    assert sorted(segs[0].leaves) == [0, 1, 2, 3]


def test_disjoint_edges_are_not_a_star():
    assert find_star_subcircuits(Circuit(4, [op("cx", 0, 1), op("cx", 2, 3)])) == []


def test_two_hubs_split():
    c = Circuit(5, [op("cx", 0, 4), op("cx", 1, 4), op("cx", 2, 4), op("cx", 0, 1), op("cx", 0, 2), op("cx", 0, 3)])
    segs = find_star_subcircuits(c)
    assert [(s.hub, s.start, s.stop) for s in segs] == [(4, 0, 3), (0, 3, 6)]


@pytest.mark.parametrize("n, swaps", [(2, 0), (3, 1), (5, 3), (8, 6)])
def test_star_to_line_swap_count(n, swaps):
    c = bv_circuit(n)
    r = route_star_to_line(c, CouplingGraph.line(n))
    assert r.swap_count == swaps
    assert on_coupling(r.circuit, CouplingGraph.line(n))
    if n <= 6:
        assert verify_routed(c, r)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
def test_greedy_is_quadratic(n):
    r = greedy_baseline_route(bv_circuit(n), CouplingGraph.line(n))
    assert r.swap_count == (n - 1) * (n - 2) // 2
    if n <= 6:
        assert verify_routed(bv_circuit(n), r)


def test_merge_cx_swap_identity():
    assert len(CX_THEN_SWAP) == 2
    assert all(o.kind == "cx" for o in CX_THEN_SWAP)
    target = local_unitary_2q([op("cx", 0, 1), op("swap", 0, 1)])
    assert equiv_phase(local_unitary_2q(CX_THEN_SWAP), target, 1e-10)
    c = Circuit(2, [op("cx", 0, 1), op("swap", 0, 1)])
    out = merge_cx_swap(c)
    assert [o.kind for o in out.ops] == ["cx", "cx"]
    assert np.allclose(unitary_of(out), unitary_of(c), atol=1e-10)


def test_merge_without_pair_is_noop():
    c = Circuit(3, [op("cx", 0, 1), op("h", 1), op("swap", 0, 1), op("swap", 1, 2)])
    assert merge_cx_swap(c) == c


def test_routed_bv5_merge_count():
    r = route(bv_circuit(5), CouplingGraph.line(5))
    merged = merge_cx_swap(r.circuit)
    assert gate_counts(merged).two_qubit == 7
    assert verify_routed(bv_circuit(5), RoutedCircuit(merged, r.initial_layout, r.final_permutation))


def test_mirror_cx_pair():
    c = Circuit(2, [op("cx", 0, 1), op("cx", 1, 0)])
    m = mirror_swaps(c)
    assert gate_counts(m.circuit).two_qubit == 1
    assert m.final_permutation == (1, 0)
    assert verify_routed(c, m, 1e-10)


def test_mirror_cancels_same_orientation():
    m = mirror_swaps(Circuit(2, [op("cx", 0, 1), op("cx", 0, 1)]))
    assert m.circuit.ops == ()
    assert m.final_permutation == (0, 1)


def test_mirror_without_pair_is_noop():
    c = Circuit(2, [op("cx", 0, 1), op("h", 0)])
    m = mirror_swaps(c)
    assert m.circuit == c
    assert m.final_permutation == (0, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_passes_never_add_two_qubit_gates(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, 4, 20, two_q=("cx", "swap", "cz"))
    n2 = gate_counts(c).two_qubit
    m = mirror_swaps(c)
    assert gate_counts(m.circuit).two_qubit <= n2
    assert verify_routed(c, m)
    merged = merge_cx_swap(c)
    assert gate_counts(merged).two_qubit <= n2
    assert verify_routed(c, RoutedCircuit(merged, tuple(range(4)), tuple(range(4))))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_route_random_on_line(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, 4, 15)
    g = CouplingGraph.line(4)
    r = route(c, g)
    assert on_coupling(r.circuit, g)
    assert verify_routed(c, r)


def test_coupling_parse(tmp_path):
    assert CouplingGraph.parse("line:3").edges == [(0, 1), (1, 2)]
    star = CouplingGraph.parse("star:4")
    assert sorted(star.edges) == [(0, 3), (1, 3), (2, 3)]
    p = tmp_path / "edges.txt"
    p.write_text("# ring\n0 1\n1 2\n2 0\n")
    assert CouplingGraph.parse(str(p)).has_edge(2, 0)
    with pytest.raises((ValueError, OSError)):
        CouplingGraph.parse("grid:3")


def test_route_rejects_small_graph():
    with pytest.raises((CircuitError, ValueError)):
        route_star_to_line(bv_circuit(5), CouplingGraph.line(4))
