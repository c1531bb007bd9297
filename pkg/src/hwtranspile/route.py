"""Connectivity mapping onto coupling graphs.

A routed circuit acts on physical qubits.  Logical qubit ``i`` starts on
physical ``initial_layout[i]`` and ends on ``final_permutation[i]``, so

    U_routed @ P(initial_layout) == P(final_permutation) @ U_original

up to global phase, with ``P`` from :func:`permutation_matrix`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .ir import (
    Circuit,
    CircuitError,
    Operation,
    equiv_phase,
    op,
    permutation_matrix,
    unitary_of,
)


class CouplingGraph:
    def __init__(self, num_qubits: int, edges: Iterable[tuple[int, int]]):
        g = nx.Graph()
        g.add_nodes_from(range(num_qubits))
        for a, b in edges:
            if a == b:
                raise ValueError("self-loops are not allowed in a coupling graph")
            if not (0 <= a < num_qubits and 0 <= b < num_qubits):
                raise ValueError(f"edge ({a}, {b}) outside 0..{num_qubits - 1}")
            g.add_edge(a, b)
        self.num_qubits = num_qubits
        self.graph = g

    @classmethod
    def line(cls, n: int) -> "CouplingGraph":
        return cls(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def star(cls, n: int) -> "CouplingGraph":
        """Hub is the last vertex."""
        return cls(n, [(i, n - 1) for i in range(n - 1)])

    @classmethod
    def parse(cls, spec: str) -> "CouplingGraph":
        """``line:N``, ``star:N`` or a path to an edge-list file (``a b`` per line)."""
        kind, _, arg = spec.partition(":")
        if kind in ("line", "star") and arg.isdigit():
            return getattr(cls, kind)(int(arg))
        edges = []
        with open(spec, encoding="utf-8") as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if line:
                    a, b = line.replace(",", " ").split()
                    edges.append((int(a), int(b)))
        n = 1 + max((max(e) for e in edges), default=0)
        return cls(n, edges)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(tuple(sorted(e)) for e in self.graph.edges)

    def has_edge(self, a: int, b: int) -> bool:
        return self.graph.has_edge(a, b)

    def is_connected(self) -> bool:
        return nx.is_connected(self.graph)

    def path(self, a: int, b: int) -> list[int]:
        return nx.shortest_path(self.graph, a, b)

    def is_line(self) -> bool:
        degs = sorted(d for _, d in self.graph.degree)
        n = self.num_qubits
        return self.is_connected() and (n == 1 or degs == [1, 1] + [2] * (n - 2))

    def line_order(self) -> list[int]:
        """Vertices in path order for a line graph (lowest-index end first)."""
        if not self.is_line():
            raise ValueError("coupling graph is not a line")
        if self.num_qubits == 1:
            return [0]
        ends = sorted(v for v, d in self.graph.degree if d == 1)
        return nx.shortest_path(self.graph, ends[0], ends[1])


def on_coupling(circuit: Circuit, coupling: CouplingGraph) -> bool:
    return all(o.gate.arity != 2 or coupling.has_edge(*o.qubits) for o in circuit.ops)


@dataclass(frozen=True)
class RoutedCircuit:
    circuit: Circuit
    initial_layout: tuple[int, ...]
    final_permutation: tuple[int, ...]

    @property
    def swap_count(self) -> int:
        return sum(1 for o in self.circuit.ops if o.kind == "swap")

    def then(self, sigma: Sequence[int], circuit: Circuit) -> "RoutedCircuit":
        """Compose with a later relabelling ``sigma`` of physical wires."""
        return RoutedCircuit(circuit, self.initial_layout, tuple(sigma[p] for p in self.final_permutation))


def identity_routing(circuit: Circuit) -> RoutedCircuit:
    ident = tuple(range(circuit.num_qubits))
    return RoutedCircuit(circuit, ident, ident)


def verify_routed(original: Circuit, routed: RoutedCircuit, tol: float = 1e-8, up_to_final_z: bool = False) -> bool:
    """Check ``U_routed P(initial) = P(final) U_original`` up to global phase.

    With ``up_to_final_z`` any diagonal unitary may follow the right-hand side.
    """
    n = routed.circuit.num_qubits
    orig = pad(original, n)
    lhs = unitary_of(routed.circuit) @ permutation_matrix(routed.initial_layout)
    rhs = permutation_matrix(routed.final_permutation) @ unitary_of(orig)
    if up_to_final_z:
        d = lhs @ rhs.conj().T
        return bool(np.max(np.abs(d - np.diag(np.diag(d)))) <= tol)
    return equiv_phase(lhs, rhs, tol)


def pad(circuit: Circuit, n: int) -> Circuit:
    if n < circuit.num_qubits:
        raise CircuitError("cannot shrink a circuit")
    return Circuit(n, circuit.ops)


def relabel(o: Operation, mapping: Sequence[int]) -> Operation:
    if o.gate.is_global:
        return o
    return Operation(o.gate, tuple(mapping[q] for q in o.qubits))


# ---------------------------------------------------------------------------
# star detection


@dataclass(frozen=True)
class StarSegment:
    start: int  # index of the first two-qubit op
    stop: int  # one past the last two-qubit op
    hub: int
    leaves: tuple[int, ...]  # in order of first interaction


def _star_of(pairs: list[tuple[int, int]], min_leaves: int = 2) -> tuple[int, tuple[int, ...]] | None:
    common = set(pairs[0])
    for p in pairs[1:]:
        common &= set(p)
    for hub in sorted(common):
        leaves: list[int] = []
        for p in pairs:
            leaf = p[0] if p[1] == hub else p[1]
            if leaf not in leaves:
                leaves.append(leaf)
        if len(leaves) >= min_leaves:
            return hub, tuple(leaves)
    return None


def find_star_subcircuits(circuit: Circuit) -> list[StarSegment]:
    """Maximal contiguous runs of two-qubit ops sharing one hub with >= 2 leaves."""
    out: list[StarSegment] = []
    run: list[int] = []

    def close() -> None:
        if run:
            star = _star_of([circuit.ops[i].qubits for i in run])
            if star is not None:
                out.append(StarSegment(run[0], run[-1] + 1, star[0], star[1]))

    for i, o in enumerate(circuit.ops):
        if o.gate.arity != 2:
            continue
        if run:
            shared = set(o.qubits)
            for j in run:
                shared &= set(circuit.ops[j].qubits)
            if not shared:
                close()
                run = []
        run.append(i)
    close()
    return out


# ---------------------------------------------------------------------------
# routing


def _check_line(line: CouplingGraph, n: int) -> list[int]:
    order = line.line_order()
    if len(order) < n:
        raise CircuitError(f"line of {len(order)} qubits is too short for {n} logical qubits")
    return order


def route_star_to_line(circuit: Circuit, line: CouplingGraph, segment: StarSegment | None = None) -> RoutedCircuit:
    """Route a star-shaped circuit onto a line with ``n - 2`` SWAPs.

    The first leaf sits at the line's edge and the hub next to it; the other
    leaves follow in order of interaction.  After each later leaf's gate the
    hub swaps one step down the line.  Single-qubit ops and ops outside the
    segment run wherever their qubit currently is.
    """
    n = circuit.num_qubits
    order = _check_line(line, n)
    if segment is None:
        two_q = [i for i, o in enumerate(circuit.ops) if o.gate.arity == 2]
        if not two_q:
            raise CircuitError("circuit has no two-qubit gates to route")
        # a single edge counts here, though detection needs two leaves
        star = _star_of([circuit.ops[i].qubits for i in two_q], min_leaves=1)
        if star is None:
            raise CircuitError("circuit is not a single star")
        hub = star[0] if len(star[1]) > 1 else circuit.ops[two_q[0]].qubits[1]
        leaves = star[1] if len(star[1]) > 1 else (circuit.ops[two_q[0]].qubits[0],)
        segment = StarSegment(two_q[0], two_q[-1] + 1, hub, leaves)
    hub, leaves = segment.hub, segment.leaves
    rest = [q for q in range(n) if q != hub and q not in leaves]
    placement = [leaves[0], hub, *leaves[1:], *rest]
    layout = [0] * line.num_qubits  # logical -> physical
    for slot, q in enumerate(placement):
        layout[q] = order[slot]
    spare = [q for q in range(n, line.num_qubits)]
    for q, slot in zip(spare, range(n, line.num_qubits)):
        layout[q] = order[slot]
    initial = tuple(layout)
    cur = list(layout)
    ops: list[Operation] = []
    for i, o in enumerate(circuit.ops):
        if o.gate.arity != 2 or not (segment.start <= i < segment.stop):
            if o.gate.arity == 2 and not line.has_edge(cur[o.qubits[0]], cur[o.qubits[1]]):
                ops += _greedy_bring(o, cur, line)
            ops.append(relabel(o, cur))
            continue
        a, b = o.qubits
        leaf = a if b == hub else b
        if not line.has_edge(cur[hub], cur[leaf]):
            ops += _greedy_bring(op("cx", hub, leaf), cur, line, mover=0)
        ops.append(relabel(o, cur))
        if leaf != leaves[0]:
            # walk the hub past this leaf toward the end of the line
            _swap_logical(ops, cur, hub, leaf)
    return RoutedCircuit(Circuit(line.num_qubits, ops), initial, tuple(cur))


def _swap_logical(ops: list[Operation], cur: list[int], a: int, b: int) -> None:
    ops.append(op("swap", cur[a], cur[b]))
    cur[a], cur[b] = cur[b], cur[a]


def _greedy_bring(o: Operation, cur: list[int], graph: CouplingGraph, mover: int = 0) -> list[Operation]:
    """SWAPs moving operand ``mover`` of ``o`` along a shortest path next to the other."""
    moving, fixed = o.qubits[mover], o.qubits[1 - mover]
    inv = {p: q for q, p in enumerate(cur)}
    path = graph.path(cur[moving], cur[fixed])
    out: list[Operation] = []
    for p in path[1:-1]:
        other = inv[p]
        out.append(op("swap", cur[moving], p))
        inv[cur[moving]], inv[p] = other, moving
        cur[moving], cur[other] = p, cur[moving]
    return out


def greedy_baseline_route(
    circuit: Circuit, graph: CouplingGraph, initial_layout: Sequence[int] | None = None
) -> RoutedCircuit:
    """Before each non-local two-qubit op, move its first operand next to the second."""
    if not graph.is_connected():
        raise CircuitError("coupling graph must be connected")
    N = graph.num_qubits
    if circuit.num_qubits > N:
        raise CircuitError("coupling graph has fewer qubits than the circuit")
    cur = list(initial_layout) if initial_layout is not None else list(range(N))
    if sorted(cur) != list(range(N)):
        raise CircuitError("initial layout must be a permutation of the physical qubits")
    initial = tuple(cur)
    ops: list[Operation] = []
    for o in circuit.ops:
        if o.gate.arity == 2 and not graph.has_edge(cur[o.qubits[0]], cur[o.qubits[1]]):
            ops += _greedy_bring(o, cur, graph)
        ops.append(relabel(o, cur))
    return RoutedCircuit(Circuit(N, ops), initial, tuple(cur))


def route(circuit: Circuit, graph: CouplingGraph) -> RoutedCircuit:
    """Star-to-line when the circuit is one star on a line, greedy otherwise."""
    if graph.is_line() and graph.num_qubits >= circuit.num_qubits:
        try:
            return route_star_to_line(circuit, graph)
        except CircuitError:
            pass
    return greedy_baseline_route(circuit, graph)


# ---------------------------------------------------------------------------
# peephole identities, orientations pinned against the 4x4 oracle


def _cx(c: int, t: int) -> Operation:
    return op("cx", c, t)


def _pin(target: list[Operation]) -> list[Operation]:
    u = local_unitary_2q(target)
    for oc in itertools.product([(0, 1), (1, 0)], repeat=2):
        cand = [_cx(*oc[0]), _cx(*oc[1])]
        if equiv_phase(local_unitary_2q(cand), u, 1e-12):
            return cand
    raise AssertionError("no two-CX realisation found")


def local_unitary_2q(ops: Sequence[Operation]) -> np.ndarray:
    return unitary_of(Circuit(2, ops))


# CX(0,1) then SWAP, and SWAP then CX(0,1), as two CX on wires (0, 1)
CX_THEN_SWAP = _pin([_cx(0, 1), op("swap", 0, 1)])
SWAP_THEN_CX = _pin([op("swap", 0, 1), _cx(0, 1)])


def _pin_mirror() -> Operation:
    u = local_unitary_2q([_cx(0, 1), _cx(1, 0)])
    swap = unitary_of(Circuit(2, [op("swap", 0, 1)]))
    for c, t in ((0, 1), (1, 0)):
        if equiv_phase(u, swap @ local_unitary_2q([_cx(c, t)]), 1e-12):
            return _cx(c, t)
    raise AssertionError("no mirrored CX found")


# CX(0,1) then CX(1,0) == this CX followed by a SWAP
MIRRORED = _pin_mirror()


def _map2(template: Operation, a: int, b: int) -> Operation:
    m = {0: a, 1: b}
    return op(template.kind, *(m[q] for q in template.qubits))


def _next_on(ops: Sequence[Operation | None], i: int, qs: set[int], n: int) -> int | None:
    for j in range(i + 1, len(ops)):
        o = ops[j]
        if o is not None and qs & set(o.support(n)):
            return j
    return None


def merge_cx_swap(circuit: Circuit) -> Circuit:
    """Rewrite adjacent ``CX(a,b), SWAP(a,b)`` (either order) as two CX."""
    n = circuit.num_qubits
    ops: list[Operation | None] = list(circuit.ops)
    out: list[Operation] = []
    for i in range(len(ops)):
        o = ops[i]
        if o is None:
            continue
        if o.kind in ("cx", "swap"):
            j = _next_on(ops, i, set(o.qubits), n)
            if j is not None and set(ops[j].qubits) == set(o.qubits) and {o.kind, ops[j].kind} == {"cx", "swap"}:
                cx = o if o.kind == "cx" else ops[j]
                a, b = cx.qubits
                template = CX_THEN_SWAP if o.kind == "cx" else SWAP_THEN_CX
                out += [_map2(t, a, b) for t in template]
                ops[j] = None
                continue
        out.append(o)
    return circuit.with_ops(out)


def cancel_cx_pairs(circuit: Circuit) -> Circuit:
    """Drop adjacent identical CX pairs until none are left."""
    n = circuit.num_qubits
    ops: list[Operation | None] = list(circuit.ops)
    changed = True
    while changed:
        changed = False
        for i, o in enumerate(ops):
            if o is None or o.kind != "cx":
                continue
            j = _next_on(ops, i, set(o.qubits), n)
            if j is not None and ops[j] == o:
                ops[i] = ops[j] = None
                changed = True
    return circuit.with_ops(o for o in ops if o is not None)


def mirror_swaps(circuit: Circuit, coupling: CouplingGraph | None = None) -> RoutedCircuit:
    """Replace ``CX(a,b), CX(b,a)`` by one CX and relabel everything after it.

    Identical adjacent CX pairs are cancelled first.  With ``coupling``
    given, a rewrite is skipped when the relabelled remainder would leave
    the coupling graph.
    """
    circuit = cancel_cx_pairs(circuit)
    n = circuit.num_qubits
    ops = list(circuit.ops)
    sigma = list(range(n))  # wire of the input -> wire of the output
    out: list[Operation] = []
    i = 0
    pending = list(ops)
    consumed = [False] * len(pending)
    while i < len(pending):
        if consumed[i]:
            i += 1
            continue
        o = pending[i]
        if o.kind == "cx":
            j = _next_on([None if c else p for p, c in zip(pending, consumed)], i, set(o.qubits), n)
            if j is not None and pending[j].kind == "cx" and pending[j].qubits == o.qubits[::-1]:
                a, b = o.qubits
                trial = list(sigma)
                trial[a], trial[b] = sigma[b], sigma[a]
                if coupling is None or all(
                    p.gate.arity != 2 or coupling.has_edge(*relabel(p, trial).qubits)
                    for k, p in enumerate(pending[j + 1:], start=j + 1)
                    if not consumed[k]
                ):
                    out.append(_map2(MIRRORED, sigma[a], sigma[b]))
                    consumed[j] = True
                    sigma = trial
                    i += 1
                    continue
        out.append(relabel(o, sigma))
        i += 1
    return RoutedCircuit(circuit.with_ops(out), tuple(range(n)), tuple(sigma))


def bv_circuit(n: int, secret: Sequence[int] | None = None) -> Circuit:
    """Bernstein-Vazirani on ``n`` qubits; the last qubit is the oracle hub.

    Oracle CX gates run from the leaf nearest the hub outward.
    """
    if n < 2:
        raise ValueError("Bernstein-Vazirani needs at least 2 qubits")
    hub = n - 1
    secret = [1] * (n - 1) if secret is None else list(secret)
    if len(secret) != n - 1:
        raise ValueError("secret must have n - 1 bits")
    ops = [op("x", hub)] + [op("h", q) for q in range(n)]
    ops += [op("cx", q, hub) for q in range(n - 2, -1, -1) if secret[q]]
    ops += [op("h", q) for q in range(n)]
    return Circuit(n, ops)
