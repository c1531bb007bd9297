"""Timing-aware scheduling and dynamical-decoupling insertion.

Durations are integers in dt.  Every start time is a multiple of the
alignment ``m``.  A schedule can be turned back into a circuit with the
idle gaps written out as explicit ``delay`` gates, which makes the timing
survive a round trip through :func:`schedule`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .ir import Circuit, CircuitError, Operation, dag_of, op, state_of

DEFAULT_DURATIONS: dict[str, int] = {
    "rz": 0,
    "z": 0,
    "x": 160,
    "y": 160,
    "h": 160,
    "sx": 160,
    "rx": 160,
    "phxz": 160,
    "cx": 704,
    "cz": 704,
    "ecr": 704,
    "rzz": 704,
    "swap": 3 * 704,
    "acecr": 704,  # at |theta| = pi/2
    "acecr_zero": 160,  # echo-only limit at theta = 0
    "gr": 160,  # per pi/2 of pulse area
}


@dataclass(frozen=True)
class TimingModel:
    durations: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_DURATIONS))
    granularity: int = 16
    alignment: int = 16

    def __post_init__(self) -> None:
        if self.granularity < 1 or self.alignment < 1:
            raise ValueError("granularity and alignment must be >= 1")
        if any(v < 0 for v in self.durations.values()):
            raise ValueError("durations must be non-negative")
        object.__setattr__(self, "durations", dict(self.durations))

    def with_overrides(self, overrides: Mapping[str, int]) -> "TimingModel":
        d = dict(self.durations)
        d.update({k: int(v) for k, v in overrides.items()})
        return TimingModel(d, self.granularity, self.alignment)

    def _snap(self, value: float) -> int:
        g = self.granularity
        return int(round(value / g)) * g

    @property
    def pulse(self) -> int:
        """Duration of one physical single-qubit pulse."""
        return self.durations.get("x", 160)

    def duration(self, o: Operation) -> int:
        k = o.kind
        if k == "delay":
            return int(o.params[0])
        if k not in self.durations:
            raise CircuitError(f"no duration configured for gate {k!r}")
        if k == "acecr":
            zero = self.durations.get("acecr_zero", 160)
            full = self.durations["acecr"]
            return self._snap(zero + (full - zero) * abs(o.params[0]) / (math.pi / 2))
        if k == "gr":
            return self._snap(self.durations["gr"] * abs(o.params[0]) / (math.pi / 2))
        return self.durations[k]


@dataclass(frozen=True)
class TimedOp:
    op: Operation
    start: int
    duration: int

    @property
    def end(self) -> int:
        return self.start + self.duration


@dataclass(frozen=True)
class Schedule:
    circuit: Circuit
    items: tuple[TimedOp, ...]
    makespan: int
    timing: TimingModel

    def check(self) -> None:
        m = self.timing.alignment
        n = self.circuit.num_qubits
        busy: dict[int, list[tuple[int, int]]] = {}
        for it in self.items:
            if it.start % m:
                raise CircuitError(f"start {it.start} is not aligned to {m}")
            if it.end > self.makespan:
                raise CircuitError("operation ends after the makespan")
            if it.duration == 0:
                continue
            for q in it.op.support(n):
                busy.setdefault(q, []).append((it.start, it.end))
        for spans in busy.values():
            spans.sort()
            for (a0, a1), (b0, _) in zip(spans, spans[1:]):
                if b0 < a1:
                    raise CircuitError("overlapping operations on one qubit")


def _ceil_to(x: int, m: int) -> int:
    return -(-x // m) * m


def _floor_to(x: int, m: int) -> int:
    return (x // m) * m


def schedule(circuit: Circuit, timing: TimingModel | None = None, policy: str = "asap") -> Schedule:
    """ASAP or ALAP start times; ALAP keeps the ASAP makespan."""
    timing = timing or TimingModel()
    policy = policy.lower()
    if policy not in ("asap", "alap"):
        raise ValueError(f"unknown scheduling policy {policy!r}")
    m = timing.alignment
    durs = [timing.duration(o) for o in circuit.ops]
    g = dag_of(circuit)
    starts = [0] * len(durs)
    for i in range(len(durs)):
        ready = max((starts[p] + durs[p] for p in g.predecessors(i)), default=0)
        starts[i] = _ceil_to(ready, m)
    makespan = max((s + d for s, d in zip(starts, durs)), default=0)
    if policy == "alap":
        for i in range(len(durs) - 1, -1, -1):
            limit = min((starts[s] for s in g.successors(i)), default=makespan)
            starts[i] = _floor_to(limit - durs[i], m)
        # a shift to the left of a predecessor can never be needed: ALAP >= ASAP
    items = tuple(TimedOp(o, s, d) for o, s, d in zip(circuit.ops, starts, durs))
    return Schedule(circuit, items, makespan, timing)


@dataclass(frozen=True)
class IdleWindow:
    qubit: int
    start: int
    end: int
    leading: bool = False  # before the qubit's first operation

    @property
    def length(self) -> int:
        return self.end - self.start


def _busy_spans(sch: Schedule) -> dict[int, list[tuple[int, int]]]:
    """Per active qubit, sorted (start, end) of non-delay operations (zero-length included)."""
    n = sch.circuit.num_qubits
    spans: dict[int, list[tuple[int, int]]] = {}
    for it in sch.items:
        if it.op.kind == "delay":
            continue
        for q in it.op.support(n):
            spans.setdefault(q, []).append((it.start, it.end))
    for v in spans.values():
        v.sort()
    return spans


def find_idle_windows(sch: Schedule, min_length: int | None = None) -> list[IdleWindow]:
    """Gaps between operations on used qubits, including before the first and after the last.

    Gaps shorter than one single-qubit pulse are dropped.
    """
    min_length = sch.timing.pulse if min_length is None else min_length
    out: list[IdleWindow] = []
    for q, spans in sorted(_busy_spans(sch).items()):
        t = 0
        first = True
        for s, e in spans:
            if s - t >= max(min_length, 1):
                out.append(IdleWindow(q, t, s, leading=first))
            first = False
            t = max(t, e)
        if sch.makespan - t >= max(min_length, 1):
            out.append(IdleWindow(q, t, sch.makespan))
    return out


PULSES = {
    "cpmg": ("x", "x"),
    "xy4": ("x", "y", "x", "y"),
    "xy8": ("x", "y", "x", "y", "y", "x", "y", "x"),
}


@dataclass(frozen=True)
class DdSequence:
    kind: str = "xy4"
    repetitions: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", self.kind.lower())
        if self.kind not in PULSES:
            raise ValueError(f"unknown DD sequence {self.kind!r}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    @property
    def pulses(self) -> tuple[str, ...]:
        return PULSES[self.kind] * self.repetitions


def place_pulses(window: IdleWindow, k: int, d: int, m: int) -> list[int] | None:
    """Aligned start times for ``k`` evenly spread pulses, or None if they do not fit."""
    L = window.length
    if k * d > L:
        return None
    starts = []
    lo = _ceil_to(window.start, m)
    for i in range(1, k + 1):
        centre = window.start + (2 * i - 1) * L / (2 * k)
        s = int(round((centre - d / 2) / m)) * m
        s = max(s, lo)
        starts.append(s)
        lo = _ceil_to(s + d, m)
    # push back from the end when rounding ran past the window
    hi = window.end
    for i in range(k - 1, -1, -1):
        if starts[i] + d > hi:
            starts[i] = _floor_to(hi - d, m)
        hi = starts[i]
    if starts[0] < window.start or any(b < a + d for a, b in zip(starts, starts[1:])):
        return None
    return starts


def materialize(sch: Schedule, extra: Sequence[TimedOp] = ()) -> Circuit:
    """Circuit whose ASAP schedule reproduces ``sch`` (plus ``extra`` pulses).

    Gaps on every used qubit are filled with ``delay`` gates up to the makespan.
    """
    n = sch.circuit.num_qubits
    events = [(it.start, i, it) for i, it in enumerate(sch.items) if it.op.kind != "delay"]
    base = len(events)
    events += [(it.start, base + j, it) for j, it in enumerate(extra)]
    events.sort(key=lambda e: (e[0], e[1]))
    used = sorted({q for _, _, it in events for q in it.op.support(n)})
    clock = {q: 0 for q in used}
    ops: list[Operation] = []
    for start, _, it in events:
        for q in it.op.support(n):
            if start > clock[q]:
                ops.append(op("delay", q, params=[start - clock[q]]))
            clock[q] = max(clock[q], it.end)
        ops.append(it.op)
    for q in used:
        if sch.makespan > clock[q]:
            ops.append(op("delay", q, params=[sch.makespan - clock[q]]))
    return sch.circuit.with_ops(ops)


def insert_dd(sch: Schedule, seq: DdSequence) -> Circuit:
    """Fill each non-leading idle window with whole DD sequences.

    Repetitions are reduced per window to the largest count that fits;
    windows that cannot hold one full sequence are left idle.
    """
    m = sch.timing.alignment
    base = PULSES[seq.kind]
    extra: list[TimedOp] = []
    for w in find_idle_windows(sch):
        if w.leading:
            continue
        for reps in range(seq.repetitions, 0, -1):
            kinds = base * reps
            durs = {k: sch.timing.duration(op(k, w.qubit)) for k in set(kinds)}
            d = max(durs.values())
            starts = place_pulses(w, len(kinds), d, m)
            if starts is not None:
                extra += [TimedOp(op(k, w.qubit), s, durs[k]) for k, s in zip(kinds, starts)]
                break
    return materialize(sch, extra)


# ---------------------------------------------------------------------------
# coherent idle noise


def idle_spans(sch: Schedule) -> list[tuple[int, int, int]]:
    """(qubit, start, end) of every positive-length gap on used qubits, 0 to makespan."""
    out = []
    for q, spans in sorted(_busy_spans(sch).items()):
        t = 0
        for s, e in spans:
            if s > t:
                out.append((q, t, s))
            t = max(t, e)
        if sch.makespan > t:
            out.append((q, t, sch.makespan))
    return out


def with_idle_noise(sch: Schedule, epsilon: float, axis: str = "z") -> Circuit:
    """Circuit with a stray rotation of ``epsilon * t`` inserted on every idle span."""
    if axis not in ("z", "x"):
        raise ValueError("idle noise axis must be 'z' or 'x'")
    kind = "rz" if axis == "z" else "rx"
    events = [((it.start, 0, i), it.op) for i, it in enumerate(sch.items) if it.op.kind != "delay"]
    for j, (q, a, b) in enumerate(idle_spans(sch)):
        if epsilon != 0.0:
            events.append(((a, 1, j), op(kind, q, params=[epsilon * (b - a)])))
    events.sort(key=lambda e: e[0])
    return sch.circuit.with_ops(o for _, o in events)


def dd_benefit_sim(
    circuit_with_dd: Circuit,
    circuit_without: Circuit,
    epsilon: float,
    axis: str = "z",
    timing: TimingModel | None = None,
) -> tuple[float, float]:
    """``1 - |<ideal|noisy>|^2`` for both circuits under coherent idle noise.

    Each circuit is scheduled ASAP, so circuits produced by :func:`insert_dd`
    or :func:`materialize` keep their timing.
    """
    errs = []
    for c in (circuit_with_dd, circuit_without):
        if c.num_qubits > 6:
            raise CircuitError("dd_benefit_sim supports at most 6 qubits")
        sch = schedule(c, timing, "asap")
        ideal = state_of(c)
        noisy = state_of(with_idle_noise(sch, epsilon, axis))
        errs.append(max(0.0, 1.0 - abs(np.vdot(ideal, noisy)) ** 2))
    return errs[0], errs[1]
