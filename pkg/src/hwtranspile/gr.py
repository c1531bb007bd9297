"""Lowering to the neutral-atom gateset {CZ, Rz, GR}.

Single-qubit gates can only be realised through the global rotation
``GR_phi(theta) = exp(-i theta S_phi)``, so the compiler

1. merges every run of single-qubit gates into one block per qubit and
   pushes diagonal blocks forward (they commute with CZ),
2. *sifts* the blocks into as few parallel collections as possible,
3. moves blocks between collections when that lowers the summed pulse area,
4. realises every collection as ``GR_phi(t) . Rz . GR_phi(-t)`` sandwiched by
   local Rz, with ``2t = max_j x_j pi`` (the minimal area for the set),
5. cleans up: Rz are pushed through CZ and merged, adjacent GR are fused.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ir import (
    Circuit,
    CircuitError,
    Operation,
    TWO_PI,
    ZERO_ANGLE,
    axis_rotation_matrix,
    gate_matrix,
    local_unitary,
    op,
    phxz_matrix,
    rx_matrix,
    rz_matrix,
    wrap_2pi,
)
from .su2 import is_unitary, outer_z_phases, to_su2

_EPS = 1e-9


@dataclass(frozen=True)
class PhXZParams:
    """``Z^(z+a) X^x Z^(-a)`` with all exponents in half turns."""

    x: float
    z: float
    a: float

    def matrix(self) -> np.ndarray:
        return phxz_matrix(self.x, self.z, self.a)


def _half_turns(angle: float) -> float:
    """Angle in radians to half turns in (-1, 1]."""
    t = wrap_2pi(angle) / math.pi
    return t - 2 if t > 1 else t


def phxz_of(u: np.ndarray) -> PhXZParams:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u):
        raise CircuitError("phxz_of needs a 2x2 unitary")
    u = to_su2(u)
    c = min(1.0, abs(u[0, 0]))
    x = 2 * math.acos(c) / math.pi
    if abs(u[1, 0]) < _EPS:
        return PhXZParams(0.0, _half_turns(float(np.angle(u[1, 1] / u[0, 0]))), 0.0)
    if x > 1 - _EPS:
        x = 1.0
    before, after = outer_z_phases(u, rx_matrix(math.pi * x))
    a = _half_turns(-before)
    z = _half_turns(after - math.pi * a)
    return PhXZParams(x, z, a)


# ---------------------------------------------------------------------------
# sifting


@dataclass
class Block:
    """Merged single-qubit gate sitting between two CZ boundaries on one qubit."""

    qubit: int
    unitary: np.ndarray
    params: PhXZParams
    slot: int
    prev_cz: int | None = None  # index into SiftResult.czs
    next_cz: int | None = None


@dataclass(frozen=True)
class GrCollection:
    members: dict[int, PhXZParams]
    slot: int

    @property
    def area(self) -> float:
        return max(p.x for p in self.members.values()) * math.pi


@dataclass
class SiftResult:
    num_qubits: int
    blocks: list[Block]
    czs: list[Operation]
    leading_rz: dict[int, float] = field(default_factory=dict)
    trailing_rz: dict[int, float] = field(default_factory=dict)

    @property
    def num_collections(self) -> int:
        return max((b.slot for b in self.blocks), default=0)

    @property
    def collections(self) -> list[GrCollection]:
        out = []
        for s in range(1, self.num_collections + 1):
            members = {b.qubit: b.params for b in self.blocks if b.slot == s}
            out.append(GrCollection(dict(sorted(members.items())), s))
        return out

    def net_area(self) -> float:
        return sum(c.area for c in self.collections if c.members)


def _merge_blocks(circuit: Circuit) -> list[tuple[str, object]]:
    """Per-qubit event streams of merged 1q unitaries separated by CZ indices."""
    n = circuit.num_qubits
    pending: dict[int, np.ndarray] = {}
    events: list[tuple[str, object]] = []
    for o in circuit.ops:
        if o.kind == "cz":
            for q in o.qubits:
                if q in pending:
                    events.append(("u", (q, pending.pop(q))))
            events.append(("cz", o))
        elif o.kind == "gr":
            m = gate_matrix(o.gate)
            for q in range(n):
                pending[q] = m @ pending.get(q, np.eye(2, dtype=complex))
        elif o.gate.arity == 1:
            if o.kind == "delay":
                continue
            q = o.qubits[0]
            pending[q] = gate_matrix(o.gate) @ pending.get(q, np.eye(2, dtype=complex))
        else:
            raise CircuitError(f"sift expects CZ and single-qubit gates, got {o.kind}")
    for q in sorted(pending):
        events.append(("u", (q, pending.pop(q))))
    return events


def _is_diagonal(u: np.ndarray) -> bool:
    return abs(u[0, 1]) < _EPS and abs(u[1, 0]) < _EPS


def _diag_angle(u: np.ndarray) -> float:
    return float(np.angle(u[1, 1] / u[0, 0]))


def sift(circuit: Circuit) -> SiftResult:
    """Greedy ASAP assignment of single-qubit blocks to parallel collections."""
    events = _merge_blocks(circuit)
    n = circuit.num_qubits
    carry: dict[int, np.ndarray] = {}  # diagonal blocks waiting for the next x != 0 block
    level = [0] * n  # latest slot that must precede the next block on each qubit
    last_cz: dict[int, int] = {}
    open_block: dict[int, Block] = {}
    blocks: list[Block] = []
    czs: list[Operation] = []
    for kind, payload in events:
        if kind == "cz":
            o = payload
            idx = len(czs)
            czs.append(o)
            m = max(level[q] for q in o.qubits)
            for q in o.qubits:
                level[q] = m
                if q in open_block:
                    open_block.pop(q).next_cz = idx
                last_cz[q] = idx
            continue
        q, u = payload
        if q in carry:
            u = u @ carry.pop(q)
        if _is_diagonal(u):
            carry[q] = u
            continue
        slot = level[q] + 1
        level[q] = slot
        b = Block(q, u, phxz_of(u), slot, prev_cz=last_cz.get(q))
        blocks.append(b)
        open_block[q] = b
    trailing = {q: _diag_angle(u) for q, u in sorted(carry.items())}
    return SiftResult(n, blocks, czs, trailing_rz=trailing)


# ---------------------------------------------------------------------------
# slot bounds via an explicit dependency walk


def _cz_intervals(res: SiftResult) -> list[tuple[int, int]]:
    """Allowed placement level of each CZ: after slot lo, before slot hi + 1."""
    K = res.num_collections
    out = []
    for i, cz in enumerate(res.czs):
        lo = 0
        hi = K
        for b in res.blocks:
            if b.qubit not in cz.qubits:
                continue
            if b.next_cz is not None and _precedes(res, b.qubit, b.next_cz, i):
                lo = max(lo, b.slot)
            if b.prev_cz is not None and _precedes(res, b.qubit, i, b.prev_cz):
                hi = min(hi, b.slot - 1)
        out.append((lo, hi))
    return out


def _precedes(res: SiftResult, q: int, first: int, last: int) -> bool:
    """CZ ``first`` comes no later than CZ ``last`` on qubit ``q``."""
    return q in res.czs[first].qubits and q in res.czs[last].qubits and first <= last


def block_bounds(res: SiftResult, b: Block) -> tuple[int, int]:
    """Slots ``b`` may move to while keeping every CZ placeable."""
    lo, hi = 1, res.num_collections
    for other in res.blocks:
        if other is b:
            continue
        # blocks chained to b through CZs bound its slot
        if _chained_before(res, other, b):
            lo = max(lo, other.slot + 1)
        elif _chained_before(res, b, other):
            hi = min(hi, other.slot - 1)
    return lo, hi


def _chained_before(res: SiftResult, a: Block, b: Block) -> bool:
    """True when block ``a`` must be in an earlier collection than block ``b``."""
    if a.next_cz is None or b.prev_cz is None:
        return False
    return _cz_path(res, a.qubit, a.next_cz, b.qubit, b.prev_cz)


def _cz_path(res: SiftResult, qa: int, start: int, qb: int, end: int) -> bool:
    # a CZ chain from ``start`` (touching qa) to ``end`` (touching qb) with no block in between
    if start > end:
        return False
    walls = {(b.qubit, b.prev_cz, b.next_cz) for b in res.blocks}
    reach = {start}
    frontier = [start]
    while frontier:
        i = frontier.pop()
        if i == end:
            return True
        for q in res.czs[i].qubits:
            for j in range(i + 1, end + 1):
                if q in res.czs[j].qubits:
                    if (q, i, j) not in walls and j not in reach:
                        reach.add(j)
                        frontier.append(j)
                    break
    return end in reach


def reassign_collections(res: SiftResult) -> SiftResult:
    """Move blocks between collections while the net GR area strictly drops."""
    limit = max(1, len(res.blocks) * max(1, res.num_collections)) + 1
    for _ in range(limit):
        best_gain = _EPS
        best_move = None
        base = res.net_area()
        for b in res.blocks:
            lo, hi = block_bounds(res, b)
            current = b.slot
            for s in range(lo, hi + 1):
                if s == current or any(o.qubit == b.qubit and o.slot == s for o in res.blocks):
                    continue
                b.slot = s
                gain = base - res.net_area()
                b.slot = current
                if gain > best_gain:
                    best_gain, best_move = gain, (b, s)
        if best_move is None:
            break
        best_move[0].slot = best_move[1]
        _compact(res)
    return res


def _compact(res: SiftResult) -> None:
    used = sorted({b.slot for b in res.blocks})
    remap = {s: i + 1 for i, s in enumerate(used)}
    for b in res.blocks:
        b.slot = remap[b.slot]


# ---------------------------------------------------------------------------
# collection decomposition


def _member_angles(u: np.ndarray, t: float, phi: float, orient: int) -> tuple[float, float, float]:
    """(before, mid, after) Rz angles realising ``u`` around a GR pair of half-area ``t``."""
    uu = to_su2(u)
    # |v10| = sin t sin(g/2) and |v00|^2 = cos^2 t + sin^2 t cos^2(g/2); atan2 keeps g accurate near pi
    c = math.sqrt(max(0.0, abs(uu[0, 0]) ** 2 - math.cos(t) ** 2))
    gamma = 2 * math.atan2(min(abs(uu[1, 0]), math.sin(t)), c)
    first = axis_rotation_matrix(orient * t, phi)
    second = axis_rotation_matrix(-orient * t, phi)
    v = second @ rz_matrix(gamma) @ first
    before, after = outer_z_phases(uu, v)
    return before, gamma, after


def _uniform(mats: dict[int, np.ndarray], num_qubits: int | None) -> bool:
    """Every qubit is a member and all share the same rotation angle."""
    if num_qubits is None or len(mats) != num_qubits:
        return False
    xs = [phxz_of(u).x for u in mats.values()]
    return max(xs) - min(xs) < 1e-9


def decompose_collection(
    members: dict[int, np.ndarray] | GrCollection,
    phi: float = 0.0,
    orient: int = 1,
    num_qubits: int | None = None,
) -> list[Operation]:
    """``Rz . GR_phi(t) . Rz . GR_phi(-t) . Rz`` with ``2t = max_j x_j pi``.

    Non-members see ``GR(t) GR(-t) = I`` and need no correction.
    ``orient=-1`` emits the negative half first.  When ``num_qubits`` is
    given and every qubit needs the same rotation angle a single
    ``GR_phi(orient * x pi)`` is used instead of the pair.
    """
    mats = _member_matrices(members)
    if not mats:
        raise CircuitError("cannot decompose an empty collection")
    xs = {q: phxz_of(u).x for q, u in mats.items()}
    t = max(xs.values()) * math.pi / 2
    if t < ZERO_ANGLE:
        return [r for q, u in sorted(mats.items()) for r in _rz_op(q, _diag_angle(to_su2(u)))]
    if _uniform(mats, num_qubits):
        theta = orient * 2 * t
        g = axis_rotation_matrix(theta, phi)
        pre, post = [], []
        for q, u in sorted(mats.items()):
            before, after = outer_z_phases(to_su2(u), g)
            pre += _rz_op(q, before)
            post += _rz_op(q, after)
        return [*pre, op("gr", params=[theta, wrap_2pi(phi)]), *post]
    pre: list[Operation] = []
    mid: list[Operation] = []
    post: list[Operation] = []
    for q, u in sorted(mats.items()):
        before, gamma, after = _member_angles(u, t, phi, orient)
        pre += _rz_op(q, before)
        mid += _rz_op(q, gamma)
        post += _rz_op(q, after)
    return [
        *pre,
        op("gr", params=[orient * t, wrap_2pi(phi)]),
        *mid,
        op("gr", params=[-orient * t, wrap_2pi(phi)]),
        *post,
    ]


def _member_matrices(members) -> dict[int, np.ndarray]:
    if isinstance(members, GrCollection):
        return {q: p.matrix() for q, p in members.members.items()}
    return dict(members)


def _rz_op(q: int, angle: float) -> list[Operation]:
    a = wrap_2pi(angle)
    return [] if a == 0.0 else [_rz_cached(q, a)]


@lru_cache(maxsize=65536)
def _rz_cached(q: int, a: float) -> Operation:
    return op("rz", q, params=[a])


def _count_rz(ops: Sequence[Operation]) -> int:
    return sum(1 for o in ops if o.kind == "rz")


def phase_candidates(members, orient: int = 1, num_qubits: int | None = None) -> list[float]:
    """Phases that zero at least one outer Rz, plus 0."""
    mats = _member_matrices(members)
    xs = {q: phxz_of(u).x for q, u in mats.items()}
    t = max(xs.values()) * math.pi / 2
    cands = {0.0}
    if t >= ZERO_ANGLE:
        uniform = _uniform(mats, num_qubits)
        for u in mats.values():
            if uniform:
                before, after = outer_z_phases(to_su2(u), axis_rotation_matrix(orient * 2 * t, 0.0))
            else:
                before, _, after = _member_angles(u, t, 0.0, orient)
            # shifting phi by d moves before -> before + d and after -> after - d
            cands.add(wrap_2pi(-before))
            cands.add(wrap_2pi(after))
    return sorted(cands)


def choose_phase(members, orient: int = 1, num_qubits: int | None = None) -> float:
    """Phase minimising the number of non-zero Rz emitted for the collection."""
    best = None
    for phi in phase_candidates(members, orient, num_qubits):
        cost = _count_rz(decompose_collection(members, phi, orient, num_qubits))
        if best is None or cost < best[0]:
            best = (cost, phi)
    return best[1]


# ---------------------------------------------------------------------------
# assembly and clean-up


def _assemble(res: SiftResult, choices: dict[int, tuple[float, int]], memo: dict | None = None) -> list[Operation]:
    """Collections interleaved with CZ levels; ``memo`` caches per-collection output."""
    memo = {} if memo is None else memo
    K = res.num_collections
    if "levels" not in memo:
        memo["levels"] = _stab_levels(_cz_intervals(res))
    levels = memo["levels"]
    out: list[Operation] = []
    for q, a in sorted(res.leading_rz.items()):
        out += _rz_op(q, a)
    by_level: dict[int, list[int]] = {}
    for i, lvl in enumerate(levels):
        by_level.setdefault(lvl, []).append(i)
    for i in by_level.get(0, []):
        out.append(res.czs[i])
    for s in range(1, K + 1):
        mats = {b.qubit: b.unitary for b in res.blocks if b.slot == s}
        if mats:
            phi, orient = choices.get(s, (0.0, 1))
            key = (s, phi, orient)
            if key not in memo:
                memo[key] = decompose_collection(mats, phi, orient, res.num_qubits)
            out += memo[key]
        for i in by_level.get(s, []):
            out.append(res.czs[i])
    for q, a in sorted(res.trailing_rz.items()):
        out += _rz_op(q, a)
    return out


def _stab_levels(intervals: list[tuple[int, int]]) -> list[int]:
    """Place each CZ at a level inside its interval using as few distinct levels as possible."""
    points: list[int] = []
    for lo, hi in sorted(intervals, key=lambda iv: iv[1]):
        if not points or points[-1] < lo:
            points.append(hi)
    levels = []
    for lo, hi in intervals:
        levels.append(min(p for p in points if lo <= p <= hi))
    return levels


def cleanup(ops: Sequence[Operation], num_qubits: int) -> list[Operation]:
    """Push Rz through CZ, merge them, and fuse adjacent equal-phase GR gates."""
    changed = True
    ops = list(ops)
    while changed:
        changed = False
        pending: dict[int, float] = {}
        out: list[Operation] = []

        def flush(qs) -> None:
            for q in sorted(qs):
                if q in pending:
                    out.extend(_rz_op(q, pending.pop(q)))

        inside = _pair_members(ops)
        for i, o in enumerate(ops):
            kind = o.gate.kind
            if kind == "rz":
                q = o.qubits[0]
                pending[q] = pending.get(q, 0.0) + o.gate.params[0]
            elif kind == "cz":
                out.append(o)
            else:
                # spectators of a GR pair see the identity, so their Rz pass through
                flush(inside.get(i, o.support(num_qubits)))
                out.append(o)
        flush(list(pending))
        fused: list[Operation] = []
        for o in out:
            if o.kind == "gr" and fused and fused[-1].kind == "gr" and \
                    abs(wrap_2pi(fused[-1].params[1] - o.params[1])) < ZERO_ANGLE:
                theta = fused[-1].params[0] + o.params[0]
                fused.pop()
                changed = True
                if abs(theta) >= ZERO_ANGLE:
                    fused.append(op("gr", params=[theta, o.params[1]]))
                continue
            fused.append(o)
        ops = fused
    return ops


def _pair_members(ops: Sequence[Operation]) -> dict[int, set[int]]:
    """Map both GR indices of every ``GR_phi(t) Rz.. GR_phi(-t)`` pair to the Rz qubits between."""
    found: dict[int, set[int]] = {}
    kinds = [o.gate.kind for o in ops]
    for i, o in enumerate(ops):
        if kinds[i] != "gr" or i in found:
            continue
        qs: set[int] = set()
        for j in range(i + 1, len(ops)):
            if kinds[j] == "rz":
                qs.add(ops[j].qubits[0])
                continue
            nxt = ops[j]
            if kinds[j] == "gr" and abs(nxt.params[0] + o.params[0]) < ZERO_ANGLE and \
                    abs(wrap_2pi(nxt.params[1] - o.params[1])) < ZERO_ANGLE:
                found[i] = found[j] = qs
            break
    return found


def drop_terminal_rz(ops: Sequence[Operation], num_qubits: int) -> list[Operation]:
    """Remove Rz followed on their qubit only by other diagonal gates.

    Such phases do not change computational-basis measurement statistics.
    """
    keep = [True] * len(ops)
    live = set(range(num_qubits))
    inside = _pair_members(ops)
    for i in range(len(ops) - 1, -1, -1):
        o = ops[i]
        if o.kind == "rz":
            if o.qubits[0] in live:
                keep[i] = False
        elif o.kind not in ("cz", "delay"):  # diagonal gates commute with a final Rz
            live -= set(inside.get(i, o.support(num_qubits)))
            if not live:
                break
    return [o for o, k in zip(ops, keep) if k]


def _score(ops: Sequence[Operation]) -> tuple[float, int, int]:
    area = sum(abs(o.params[0]) for o in ops if o.kind == "gr")
    grs = sum(1 for o in ops if o.kind == "gr")
    return (round(area, 9), grs, _count_rz(ops))


def lower_to_cz(circuit: Circuit) -> Circuit:
    """Rewrite two-qubit gates as CZ plus single-qubit gates; drop delays."""
    out: list[Operation] = []

    def cx(c: int, t: int) -> list[Operation]:
        return [op("h", t), op("cz", c, t), op("h", t)]

    for o in circuit.ops:
        k = o.kind
        if k == "delay":
            continue
        if o.gate.arity != 2:
            out.append(o)
            continue
        a, b = o.qubits
        if k == "cz":
            out.append(o)
        elif k == "cx":
            out += cx(a, b)
        elif k == "swap":
            out += cx(a, b) + cx(b, a) + cx(a, b)
        elif k == "rzz":
            out += cx(a, b) + [op("rz", b, params=[o.params[0]])] + cx(a, b)
        elif k in ("acecr", "ecr"):
            theta = o.params[0] if k == "acecr" else math.pi / 2
            # R_ZX(theta) . X_c  ==  X_c, then H_t R_ZZ(theta) H_t
            out += [op("x", a), op("h", b)] + cx(a, b) + [op("rz", b, params=[theta])] + cx(a, b) + [op("h", b)]
        else:
            raise CircuitError(f"unsupported gate {k!r} for the gr target")
    return circuit.with_ops(out)


def compile_gr(circuit: Circuit, reassign: bool = True, drop_final_rz: bool = False) -> Circuit:
    """Full neutral-atom lowering with sifting, area-minimal collections and clean-up.

    With ``drop_final_rz`` the result equals the input only up to diagonal
    phases applied just before measurement.
    """
    base = lower_to_cz(circuit)

    def finish(ops: Sequence[Operation]) -> list[Operation]:
        ops = cleanup(ops, base.num_qubits)
        return drop_terminal_rz(ops, base.num_qubits) if drop_final_rz else ops

    res = sift(base)
    if reassign:
        reassign_collections(res)
    choices: dict[int, tuple[float, int]] = {}
    memo: dict = {}
    for s in range(1, res.num_collections + 1):
        mats = {b.qubit: b.unitary for b in res.blocks if b.slot == s}
        if not mats:
            continue
        cands = set()
        for orient in (1, -1):
            for phi in phase_candidates(mats, orient, res.num_qubits):
                cands.add((phi, orient))
        for prev_phi, _ in choices.values():
            cands.add((prev_phi, 1))
            cands.add((prev_phi, -1))
        best = None
        for phi, orient in sorted(cands):
            trial = dict(choices)
            trial[s] = (phi, orient)
            score = _score(finish(_assemble(res, trial, memo)))
            if best is None or score < best[0]:
                best = (score, (phi, orient))
        choices[s] = best[1]
    return base.with_ops(finish(_assemble(res, choices, memo)))


def compile_gr_baseline(circuit: Circuit, drop_final_rz: bool = False) -> Circuit:
    """Hadamard-by-Hadamard lowering: ``H = Z . GR_x(pi/2) . sqrt(Z) . GR_x(-pi/2)``.

    Hadamards are packed in program order: one joins the newest layer when
    its qubit is still free there, otherwise it opens a new layer.  Layers
    share one GR pair.  Only H, CZ and Rz are accepted.
    """
    base = lower_to_cz(circuit)
    n = base.num_qubits
    layers: list[list[int]] = []
    busy: set[int] = set()  # qubits used (by H or CZ) since the newest layer opened
    after: list[list[Operation]] = [[]]  # ops emitted after layer k (index 0: before any)
    for o in base.ops:
        if o.kind == "h":
            q = o.qubits[0]
            if not layers or q in busy:
                layers.append([])
                after.append([])
                busy = set()
            layers[-1].append(q)
            busy.add(q)
        elif o.kind in ("cz", "rz"):
            after[-1].append(o)
            busy.update(o.qubits)
        else:
            raise CircuitError(f"baseline lowering handles only H, CZ and Rz, got {o.kind}")
    out: list[Operation] = list(after[0])
    for qs, tail in zip(layers, after[1:]):
        qs = sorted(qs)
        out.append(op("gr", params=[-math.pi / 2, 0.0]))
        out += [op("rz", q, params=[math.pi / 2]) for q in qs]
        out.append(op("gr", params=[math.pi / 2, 0.0]))
        out += [op("rz", q, params=[math.pi]) for q in qs]
        out += tail
    if drop_final_rz:
        out = drop_terminal_rz(out, n)
    return base.with_ops(out)


def equiv_up_to_final_z(u: np.ndarray, v: np.ndarray, tol: float = 1e-8) -> bool:
    """``u = D v`` for some diagonal unitary ``D``."""
    d = u @ v.conj().T
    off = d - np.diag(np.diag(d))
    return bool(np.max(np.abs(off)) <= tol and np.allclose(np.abs(np.diag(d)), 1.0, atol=tol))
