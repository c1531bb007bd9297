"""Circuit data model, dense unitary oracle and dependency analysis.

Conventions used throughout the package:

* ``Circuit.ops`` is in temporal order; when composing matrices later
  operations multiply on the left.
* Qubit 0 is the least-significant bit of a computational-basis index.
* Local two-qubit matrices are written with the first operand as the most
  significant bit (so ``CX`` on ``(control, target)`` is the textbook matrix).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

MAX_ORACLE_QUBITS = 12
ZERO_ANGLE = 1e-12
TWO_PI = 2 * math.pi

# kind -> (arity, number of params); arity 0 marks a global gate
GATE_SPECS: dict[str, tuple[int, int]] = {
    "x": (1, 0),
    "y": (1, 0),
    "z": (1, 0),
    "h": (1, 0),
    "sx": (1, 0),
    "rz": (1, 1),
    "rx": (1, 1),
    "phxz": (1, 3),
    "delay": (1, 1),
    "cx": (2, 0),
    "cz": (2, 0),
    "swap": (2, 0),
    "ecr": (2, 0),
    "acecr": (2, 1),
    "rzz": (2, 1),
    "gr": (0, 2),
}

# angles with a 4*pi period that are folded into (-2*pi, 2*pi]
_CANONICAL_ANGLE_KINDS = {"rz", "rx", "acecr", "rzz"}


class CircuitError(ValueError):
    """Raised for malformed gates, operations or circuits."""


def canonical_angle(theta: float) -> float:
    """Fold an angle into ``(-2*pi, 2*pi]``."""
    if -TWO_PI < theta <= TWO_PI:
        return theta
    folded = math.fmod(theta, 2 * TWO_PI)
    if folded > TWO_PI:
        folded -= 2 * TWO_PI
    elif folded <= -TWO_PI:
        folded += 2 * TWO_PI
    return folded


def wrap_2pi(theta: float) -> float:
    """Map an angle into ``[0, 2*pi)``, snapping values within 1e-12 of 0 or 2*pi to 0."""
    t = math.fmod(theta, TWO_PI)
    if t < 0:
        t += TWO_PI
    if t < ZERO_ANGLE or TWO_PI - t < ZERO_ANGLE:
        return 0.0
    return t


@dataclass(frozen=True)
class Gate:
    kind: str
    params: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in GATE_SPECS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        _, nparams = GATE_SPECS[self.kind]
        params = tuple(self.params)
        if len(params) != nparams:
            raise CircuitError(f"{self.kind} takes {nparams} parameter(s), got {len(params)}")
        if not all(math.isfinite(p) for p in params):
            raise CircuitError(f"{self.kind} parameters must be finite")
        if self.kind == "delay":
            if params[0] < 0 or params[0] != int(params[0]):
                raise CircuitError("delay takes a non-negative integer dt count")
            params = (int(params[0]),)
        elif self.kind in _CANONICAL_ANGLE_KINDS:
            params = (canonical_angle(float(params[0])),)
        else:
            params = tuple(float(p) for p in params)
        object.__setattr__(self, "params", params)

    @property
    def arity(self) -> int:
        return GATE_SPECS[self.kind][0]

    @property
    def is_global(self) -> bool:
        return self.arity == 0

    def matrix(self) -> np.ndarray:
        """Local matrix (2x2 or 4x4); global GR returns its single-qubit factor."""
        return gate_matrix(self)


@dataclass(frozen=True)
class Operation:
    gate: Gate
    qubits: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if any(q < 0 for q in qubits):
            raise CircuitError("qubit indices must be non-negative")
        if len(set(qubits)) != len(qubits):
            raise CircuitError(f"duplicate qubits in {self.gate.kind} operation")
        if len(qubits) != self.gate.arity:
            raise CircuitError(
                f"{self.gate.kind} acts on {self.gate.arity} qubit(s), got {len(qubits)}"
            )

    @property
    def kind(self) -> str:
        return self.gate.kind

    @property
    def params(self) -> tuple[float, ...]:
        return self.gate.params

    def support(self, num_qubits: int) -> tuple[int, ...]:
        """Qubits the operation touches; a global gate touches all of them."""
        return tuple(range(num_qubits)) if self.gate.is_global else self.qubits


def op(kind: str, *qubits: int, params: Sequence[float] = ()) -> Operation:
    """Shorthand constructor: ``op("rz", 0, params=[pi / 2])``."""
    return Operation(Gate(kind, tuple(params)), tuple(qubits))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple[Operation, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise CircuitError("a circuit needs at least one qubit")
        ops = tuple(self.ops)
        object.__setattr__(self, "ops", ops)
        for o in ops:
            for q in o.qubits:
                if q >= self.num_qubits:
                    raise CircuitError(
                        f"qubit {q} out of range for a {self.num_qubits}-qubit circuit"
                    )

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def with_ops(self, ops: Iterable[Operation]) -> "Circuit":
        return Circuit(self.num_qubits, tuple(ops))

    def active_qubits(self) -> set[int]:
        used: set[int] = set()
        for o in self.ops:
            if o.kind != "delay":
                used.update(o.support(self.num_qubits))
        return used


# ---------------------------------------------------------------------------
# matrices

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)
_CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
_ZX = np.kron(_Z, _X)
_ZZ = np.kron(_Z, _Z)


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def rx_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def axis_rotation_matrix(theta: float, phi: float) -> np.ndarray:
    """exp(-i theta (cos(phi) X + sin(phi) Y) / 2)."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [[c, -1j * s * np.exp(-1j * phi)], [-1j * s * np.exp(1j * phi), c]]
    )


def zpow_matrix(t: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * math.pi * t)])


def xpow_matrix(t: float) -> np.ndarray:
    g = np.exp(1j * math.pi * t / 2)
    c, s = math.cos(math.pi * t / 2), math.sin(math.pi * t / 2)
    return g * np.array([[c, -1j * s], [-1j * s, c]])


def phxz_matrix(x: float, z: float, a: float) -> np.ndarray:
    """Z^(z+a) X^x Z^(-a), exponents in half turns, rightmost factor acts first."""
    return zpow_matrix(z + a) @ xpow_matrix(x) @ zpow_matrix(-a)


def zx_rotation(theta: float) -> np.ndarray:
    """exp(-i theta ZX / 2)."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return c * np.eye(4) - 1j * s * _ZX


def zz_rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return c * np.eye(4) - 1j * s * _ZZ


def acecr_matrix(theta: float) -> np.ndarray:
    """ZX rotation preceded by the echo X on the control: R_ZX(theta) . (X (x) I)."""
    return zx_rotation(theta) @ np.kron(_X, _I2)


def gate_matrix(gate: Gate) -> np.ndarray:
    k, p = gate.kind, gate.params
    if k == "x":
        return _X.copy()
    if k == "y":
        return _Y.copy()
    if k == "z":
        return _Z.copy()
    if k == "h":
        return _H.copy()
    if k == "sx":
        return _SX.copy()
    if k == "rz":
        return rz_matrix(p[0])
    if k == "rx":
        return rx_matrix(p[0])
    if k == "phxz":
        return phxz_matrix(*p)
    if k == "delay":
        return _I2.copy()
    if k == "cx":
        return _CX.copy()
    if k == "cz":
        return _CZ.copy()
    if k == "swap":
        return _SWAP.copy()
    if k == "ecr":
        return acecr_matrix(math.pi / 2)
    if k == "acecr":
        return acecr_matrix(p[0])
    if k == "rzz":
        return zz_rotation(p[0])
    if k == "gr":
        return axis_rotation_matrix(p[0], p[1])
    raise CircuitError(f"no matrix for gate kind {k!r}")


def apply_matrix(tensor: np.ndarray, mat: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply ``mat`` to ``qubits`` of a tensor whose first ``n`` axes are qubit axes.

    Axis ``i`` of the tensor carries qubit ``n - 1 - i`` so that a C-order
    flattening puts qubit 0 in the least-significant bit.
    """
    k = len(qubits)
    m = mat.reshape((2,) * (2 * k))
    axes = [n - 1 - q for q in qubits]
    out = np.tensordot(m, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def _apply_op(tensor: np.ndarray, o: Operation, n: int) -> np.ndarray:
    if o.gate.is_global:
        m = gate_matrix(o.gate)
        for q in range(n):
            tensor = apply_matrix(tensor, m, [q], n)
        return tensor
    if o.kind == "delay":
        return tensor
    return apply_matrix(tensor, gate_matrix(o.gate), o.qubits, n)


def unitary_of(circuit: Circuit) -> np.ndarray:
    """Dense unitary of ``circuit``."""
    n = circuit.num_qubits
    if n > MAX_ORACLE_QUBITS:
        raise CircuitError(f"{n} qubits exceeds the {MAX_ORACLE_QUBITS}-qubit dense limit")
    dim = 1 << n
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for o in circuit.ops:
        u = _apply_op(u, o, n)
    return u.reshape(dim, dim)


def state_of(circuit: Circuit) -> np.ndarray:
    """Output state vector of ``circuit`` applied to |0...0>."""
    n = circuit.num_qubits
    if n > MAX_ORACLE_QUBITS:
        raise CircuitError(f"{n} qubits exceeds the {MAX_ORACLE_QUBITS}-qubit dense limit")
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    for o in circuit.ops:
        psi = _apply_op(psi, o, n)
    return psi.reshape(-1)


def local_unitary(ops: Sequence[Operation]) -> np.ndarray:
    """2x2 composite of a run of single-qubit operations, first op acting first."""
    u = np.eye(2, dtype=complex)
    for o in ops:
        if o.gate.arity != 1 and not o.gate.is_global:
            raise CircuitError(f"{o.kind} is not a single-qubit gate")
        u = gate_matrix(o.gate) @ u
    return u


# ---------------------------------------------------------------------------
# equivalence checks


def equiv_phase(u: np.ndarray, v: np.ndarray, tol: float = 1e-9) -> bool:
    """True when ``u`` equals ``v`` up to a global phase, entrywise within ``tol``."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise CircuitError(f"dimension mismatch {u.shape} vs {v.shape}")
    idx = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    if abs(u[idx]) < 1e-15 or abs(v[idx]) < 1e-15:
        return bool(np.max(np.abs(u - v)) <= tol)
    ratio = u[idx] / v[idx]
    phase = ratio / abs(ratio)
    return bool(np.max(np.abs(u - phase * v)) <= tol)


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """Matrix sending the value of qubit ``i`` to qubit ``perm[i]``."""
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise CircuitError(f"{list(perm)} is not a permutation of 0..{n - 1}")
    dim = 1 << n
    p = np.zeros((dim, dim))
    for b in range(dim):
        image = 0
        for i in range(n):
            if (b >> i) & 1:
                image |= 1 << perm[i]
        p[image, b] = 1.0
    return p


def equiv_perm(u: np.ndarray, v: np.ndarray, perm: Sequence[int], tol: float = 1e-9) -> bool:
    """True when ``u`` equals ``P_perm @ v`` up to global phase."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise CircuitError(f"dimension mismatch {u.shape} vs {v.shape}")
    if (1 << len(perm)) != u.shape[0]:
        raise CircuitError("permutation size does not match the matrix dimension")
    return equiv_phase(u, permutation_matrix(perm) @ v, tol)


# ---------------------------------------------------------------------------
# dependency graph and tallies


def dag_of(circuit: Circuit) -> nx.DiGraph:
    """Dependency DAG over operation indices.

    Edge ``a -> b`` exists when ``b`` is the next operation after ``a`` on
    some shared qubit.  Node attribute ``op`` holds the operation.
    """
    g = nx.DiGraph()
    last: dict[int, int] = {}
    n = circuit.num_qubits
    for i, o in enumerate(circuit.ops):
        g.add_node(i, op=o)
        for q in o.support(n):
            if q in last:
                g.add_edge(last[q], i)
            last[q] = i
    return g


def reorder(circuit: Circuit, order: Sequence[int]) -> Circuit:
    return circuit.with_ops(circuit.ops[i] for i in order)


@dataclass(frozen=True)
class GateCounts:
    by_kind: dict[str, int]
    two_qubit: int
    gr_area: float

    def __getitem__(self, kind: str) -> int:
        return self.by_kind.get(kind, 0)


def gate_counts(circuit: Circuit) -> GateCounts:
    by_kind: dict[str, int] = {}
    two_qubit = 0
    area = 0.0
    for o in circuit.ops:
        by_kind[o.kind] = by_kind.get(o.kind, 0) + 1
        if o.gate.arity == 2:
            two_qubit += 1
        if o.kind == "gr":
            area += abs(o.params[0])
    return GateCounts(dict(sorted(by_kind.items())), two_qubit, area)
