"""Lowering to the echoed-cross-resonance gateset {Rz, Rx(pi/2), X, AceCR}.

Rz is virtual (free); Rx(pi/2) and X are one physical pulse each.
``AceCR(theta)`` is the echoed ZX interaction ``R_ZX(theta) . (X (x) I)``
with the echo X on the control qubit; a negative angle is the opposite
drive polarity.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .ir import (
    Circuit,
    CircuitError,
    Operation,
    ZERO_ANGLE,
    acecr_matrix,
    local_unitary,
    op,
    rx_matrix,
    rz_matrix,
    wrap_2pi,
)
from .su2 import outer_z_phases, to_su2

HALF_PI = math.pi / 2
_EPS = 1e-9


def acecr_unitary(theta: float, polarity: int = 1) -> np.ndarray:
    """4x4 matrix of AceCR(theta); ``polarity=-1`` flips the sign of theta."""
    if polarity not in (1, -1):
        raise ValueError("polarity must be +1 or -1")
    return acecr_matrix(polarity * theta)


def decompose_cx(cx: Operation) -> list[Operation]:
    """CX as Rz(pi/2).X on the control, Rx(pi/2) on the target, then AceCR.

    The echo X inside AceCR cancels the explicit X; the negative-polarity
    drive is the one that makes the composite exactly CX up to phase.
    """
    if cx.kind != "cx":
        raise CircuitError(f"decompose_cx expects cx, got {cx.kind}")
    c, t = cx.qubits
    return [
        op("rz", c, params=[HALF_PI]),
        op("x", c),
        op("rx", t, params=[HALF_PI]),
        op("acecr", c, t, params=[-HALF_PI]),
    ]


def decompose_zz(theta: float, qubits: Sequence[int] = (0, 1)) -> list[Operation]:
    """exp(-i theta ZZ / 2) with a single AceCR.

    The target is conjugated by a Hadamard to turn ZX into ZZ and an X on the
    control pre-cancels the echo.
    """
    if not math.isfinite(theta):
        raise CircuitError("zz angle must be finite")
    c, t = qubits
    # ZZ(theta + pi) = ZZ(theta) (Z x Z) up to phase, and Z x Z is virtual
    theta = math.remainder(theta, 2 * math.pi)  # into [-pi, pi]; sign flips are global phase
    fold: list[Operation] = []
    if abs(theta) > HALF_PI + ZERO_ANGLE:
        theta -= math.copysign(math.pi, theta)
        fold = [op("rz", c, params=[math.pi]), op("rz", t, params=[math.pi])]
    had = resynthesize_1q([op("h", t)])
    return [*fold, *had, op("x", c), op("acecr", c, t, params=[theta]), *had]


# ---------------------------------------------------------------------------
# single-qubit resynthesis


def _rz(q: int, angle: float) -> list[Operation]:
    a = wrap_2pi(angle)
    return [] if a == 0.0 else [op("rz", q, params=[a])]


def synthesize_1q(u: np.ndarray, qubit: int = 0) -> list[Operation]:
    """Cheapest {Rz, Rx(pi/2), X} sequence for a 2x2 unitary.

    Canonical forms by pulse count:

    * 0 pulses, diagonal: ``Rz(c)``
    * 1 pulse, anti-diagonal: ``Rz(c) X``
    * 1 pulse, |u00| = 1/sqrt(2): ``Rz(b) Rx(pi/2) Rz(a)``
    * 2 pulses otherwise: ``Rz(c) Rx(pi/2) Rz(theta + pi) Rx(pi/2) Rz(a)``
      with theta in [0, pi] the Bloch rotation polar angle.

    Sequences are in temporal order and angles lie in [0, 2*pi).
    """
    u = to_su2(np.asarray(u, dtype=complex))
    m00, m10 = abs(u[0, 0]), abs(u[1, 0])
    sx = rx_matrix(HALF_PI)
    if m10 < _EPS:
        return _rz(qubit, _phase(u[1, 1] / u[0, 0]))
    if m00 < _EPS:
        return [*_rz(qubit, -_phase(u[1, 0] / u[0, 1])), op("x", qubit)]
    if abs(m00 - 1 / math.sqrt(2)) < _EPS:
        before, after = outer_z_phases(u, sx)
        return [*_rz(qubit, before), op("rx", qubit, params=[HALF_PI]), *_rz(qubit, after)]
    theta = 2 * math.acos(min(1.0, m00))
    middle = theta + math.pi
    core = sx @ rz_matrix(middle) @ sx
    before, after = outer_z_phases(u, core)
    return [
        *_rz(qubit, before),
        op("rx", qubit, params=[HALF_PI]),
        *_rz(qubit, middle),
        op("rx", qubit, params=[HALF_PI]),
        *_rz(qubit, after),
    ]


def _phase(z: complex) -> float:
    return float(np.angle(z))


def resynthesize_1q(run: Sequence[Operation]) -> list[Operation]:
    """Merge a run of single-qubit operations on one qubit into native form."""
    if not run:
        return []
    qubits = {o.qubits for o in run}
    for o in run:
        if o.gate.arity != 1 or o.kind == "delay":
            raise CircuitError(f"{o.kind} is not a single-qubit gate")
    if len(qubits) != 1:
        raise CircuitError("resynthesize_1q needs every operation on the same qubit")
    (q,) = next(iter(qubits))
    return synthesize_1q(local_unitary(run), q)


def physical_pulses(ops: Iterable[Operation]) -> int:
    """Number of physical single-qubit pulses (Rz and delays are free)."""
    return sum(1 for o in ops if o.gate.arity == 1 and o.kind not in ("rz", "delay", "z"))


def is_native(o: Operation) -> bool:
    if o.kind in ("rz", "x", "acecr", "delay"):
        return True
    return o.kind == "rx" and abs(abs(o.params[0]) - HALF_PI) < ZERO_ANGLE


# ---------------------------------------------------------------------------
# full lowering


def _lower_two_qubit(o: Operation, direct_zz: bool) -> list[Operation]:
    k = o.kind
    if k == "cx":
        return decompose_cx(o)
    if k == "cz":
        _, t = o.qubits
        return [op("h", t), *decompose_cx(op("cx", *o.qubits)), op("h", t)]
    if k == "swap":
        a, b = o.qubits
        out: list[Operation] = []
        for c, t in ((a, b), (b, a), (a, b)):
            out += decompose_cx(op("cx", c, t))
        return out
    if k == "ecr":
        return [op("acecr", *o.qubits, params=[HALF_PI])]
    if k == "acecr":
        return [o]
    if k == "rzz":
        if direct_zz:
            return decompose_zz(o.params[0], o.qubits)
        c, t = o.qubits
        return [*decompose_cx(op("cx", c, t)), op("rz", t, params=[o.params[0]]), *decompose_cx(op("cx", c, t))]
    raise CircuitError(f"unsupported gate {k!r} for the ecr target")


def tag_zz_patterns(circuit: Circuit) -> Circuit:
    """Rewrite adjacent ``CX(a,b) Rz(theta)_b CX(a,b)`` into ``rzz(theta)``."""
    ops = list(circuit.ops)
    n = circuit.num_qubits
    out: list[Operation] = []
    used = [False] * len(ops)

    def next_on(start: int, qs: set[int]) -> int | None:
        for j in range(start, len(ops)):
            if not used[j] and qs & set(ops[j].support(n)):
                return j
        return None

    for i, o in enumerate(ops):
        if used[i]:
            continue
        if o.kind == "cx":
            a, b = o.qubits
            j = next_on(i + 1, {a, b})
            if j is not None and ops[j].kind == "rz" and ops[j].qubits == (b,):
                k = next_on(j + 1, {a, b})
                if k is not None and ops[k].kind == "cx" and ops[k].qubits == (a, b):
                    used[j] = used[k] = True
                    out.append(op("rzz", a, b, params=[ops[j].params[0]]))
                    continue
        out.append(o)
    return circuit.with_ops(out)


def lower_ecr(circuit: Circuit, direct_zz: bool = True) -> Circuit:
    """Decompose every gate into ECR natives without merging single-qubit runs."""
    if direct_zz:
        circuit = tag_zz_patterns(circuit)
    out: list[Operation] = []
    for o in circuit.ops:
        if o.kind == "gr":
            u = local_unitary([o])
            for q in range(circuit.num_qubits):
                out += synthesize_1q(u, q)
        elif o.gate.arity == 1:
            out.append(o)
        else:
            out += _lower_two_qubit(o, direct_zz)
    final: list[Operation] = []
    for o in out:
        final += [o] if is_native(o) else resynthesize_1q([o])
    return circuit.with_ops(final)


def merge_1q_runs(circuit: Circuit) -> Circuit:
    """Resynthesize every maximal same-qubit run of single-qubit gates."""
    pending: dict[int, list[Operation]] = {}
    out: list[Operation] = []

    def flush(q: int) -> None:
        run = pending.pop(q, [])
        out.extend(resynthesize_1q(run))

    for o in circuit.ops:
        if o.gate.arity == 1 and o.kind != "delay":
            pending.setdefault(o.qubits[0], []).append(o)
            continue
        for q in o.support(circuit.num_qubits):
            flush(q)
        out.append(o)
    for q in sorted(pending):
        flush(q)
    return circuit.with_ops(out)


def compile_ecr(circuit: Circuit, merge: bool = True, direct_zz: bool = True) -> Circuit:
    """Lower to the ECR gateset, then cancel pulses across former CX boundaries."""
    lowered = lower_ecr(circuit, direct_zz=direct_zz)
    return merge_1q_runs(lowered) if merge else lowered
