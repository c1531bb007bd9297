"""Density-matrix simulation with Pauli gate errors, SPAM and coherent idle drift.

Two error conventions are available for turning a quoted gate fidelity F
into a channel on the gate's support (dimension d):

``"average"`` (default)
    depolarizing ``rho -> (1 - p) rho + p I / d`` with ``p = (1 - F)(d + 1) / d``,
    reading F as an average gate fidelity.
``"pauli"``
    ``rho -> (1 - e) rho + e / (d^2 - 1) * sum_{P != I} P rho P`` with
    ``e = 1 - F``; F is the probability that no error happens.

SPAM error is one single-qubit channel per used qubit, applied before readout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Mapping

import numpy as np

from .ir import Circuit, CircuitError, Operation, apply_matrix, gate_matrix, state_of

MAX_DM_QUBITS = 8

_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class NoiseModel:
    spam: float = 0.98
    gr_per_qubit: float = 0.999
    rz: float = 0.99
    cz: float = 0.96
    one_qubit: float = 0.999
    two_qubit: float = 0.99
    idle_rate: float = 0.0  # rad per dt of stray rotation while idle
    idle_axis: str = "z"
    convention: str = "average"
    overrides: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("spam", "gr_per_qubit", "rz", "cz", "one_qubit", "two_qubit"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} fidelity must lie in (0, 1], got {v}")
        for k, v in self.overrides.items():
            if not 0.0 < v <= 1.0:
                raise ValueError(f"fidelity for {k} must lie in (0, 1], got {v}")
        if self.convention not in ("pauli", "average"):
            raise ValueError(f"unknown error convention {self.convention!r}")
        if self.idle_axis not in ("z", "x"):
            raise ValueError("idle axis must be 'z' or 'x'")
        object.__setattr__(self, "overrides", dict(self.overrides))

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)

    def with_(self, **kw) -> "NoiseModel":
        return replace(self, **kw)

    def fidelity(self, o: Operation) -> float:
        """Fidelity of one application; for GR this is the per-qubit value."""
        k = o.kind
        if k in self.overrides:
            return self.overrides[k]
        if k == "delay":
            return 1.0
        if k in ("rz", "z"):
            return self.rz
        if k == "gr":
            return self.gr_per_qubit
        if k == "cz":
            return self.cz
        return self.one_qubit if o.gate.arity == 1 else self.two_qubit


@dataclass
class DensityMatrix:
    data: np.ndarray
    num_qubits: int

    def check(self, tol: float = 1e-10) -> None:
        m = self.data
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > tol:
            raise ValueError("density matrix trace differs from 1")
        if np.min(np.linalg.eigvalsh(m)) < -1e-8:
            raise ValueError("density matrix is not positive semidefinite")

    @property
    def probabilities(self) -> np.ndarray:
        return np.clip(np.real(np.diag(self.data)), 0.0, None)


class _Sim:
    """``rho`` stored as a 2n-axis tensor: row qubit q is virtual qubit q + n."""

    def __init__(self, n: int):
        self.n = n
        t = np.zeros((2,) * (2 * n), dtype=complex)
        t[(0,) * (2 * n)] = 1.0
        self.t = t

    def unitary(self, u: np.ndarray, qubits) -> None:
        n = self.n
        self.t = apply_matrix(self.t, u, [q + n for q in qubits], 2 * n)
        self.t = apply_matrix(self.t, u.conj(), list(qubits), 2 * n)

    def pauli_channel(self, qubits, error: float, convention: str) -> None:
        if error <= 0.0:
            return
        k = len(qubits)
        d = 2**k
        if convention == "average":
            p = min(1.0, error * (d + 1) / d)
            # uniform mixture over all d^2 Paulis (identity included)
            w_id, w = 1 - p + p / d**2, p / d**2
        else:
            w_id, w = 1 - error, error / (d * d - 1)
        acc = w_id * self.t
        base = self.t
        for P in _pauli_products(k)[1:]:
            self.t = base
            self.unitary(P, qubits)
            acc = acc + w * self.t
        self.t = acc

    def matrix(self) -> np.ndarray:
        dim = 2**self.n
        return self.t.reshape(dim, dim)


@lru_cache(maxsize=None)
def _pauli_products(k: int) -> tuple[np.ndarray, ...]:
    out = []
    for combo in itertools.product(_PAULIS, repeat=k):
        m = np.array([[1.0 + 0j]])
        for p in combo:
            m = np.kron(m, p)
        out.append(m)
    return tuple(out)


def simulate(circuit: Circuit, noise: NoiseModel | None = None, timing=None) -> DensityMatrix:
    """Final density matrix from ``|0...0>``.

    Every gate is followed by an error channel on its support.  GR gates get
    an independent single-qubit channel on each qubit.  With a timing model
    and a non-zero ``idle_rate`` a stray rotation is applied on each idle span.
    """
    n = circuit.num_qubits
    if n > MAX_DM_QUBITS:
        raise CircuitError(f"density-matrix simulation is limited to {MAX_DM_QUBITS} qubits")
    noise = noise or NoiseModel()
    events: list[tuple[Operation, bool]] = [(o, True) for o in circuit.ops]
    if timing is not None and noise.idle_rate != 0.0:
        from .dd import schedule, with_idle_noise

        sch = schedule(circuit, timing, "asap")
        drifted = with_idle_noise(sch, noise.idle_rate, noise.idle_axis)
        gate_ids = {id(o) for o in circuit.ops}
        events = [(o, id(o) in gate_ids) for o in drifted.ops]
    sim = _Sim(n)
    used: set[int] = set()
    for o, is_gate in events:
        if o.kind == "delay":
            continue
        qs = o.support(n)
        used.update(qs)
        if o.gate.is_global:
            m = gate_matrix(o.gate)
            for q in qs:
                sim.unitary(m, [q])
        else:
            sim.unitary(gate_matrix(o.gate), qs)
        if not is_gate:
            continue
        err = 1.0 - noise.fidelity(o)
        if o.gate.is_global:
            for q in qs:
                sim.pauli_channel([q], err, noise.convention)
        else:
            sim.pauli_channel(qs, err, noise.convention)
    for q in sorted(used):
        sim.pauli_channel([q], 1.0 - noise.spam, noise.convention)
    return DensityMatrix(sim.matrix(), n)


def state_fidelity(rho: DensityMatrix | np.ndarray, psi: np.ndarray) -> float:
    """``<psi| rho |psi>``."""
    m = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if m.shape != (psi.size, psi.size):
        raise ValueError("state and density matrix dimensions differ")
    return float(np.clip(np.real(np.vdot(psi, m @ psi)), 0.0, 1.0))


def ghz_state(n: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    v[0] = v[-1] = 1 / math.sqrt(2)
    return v


def ghz_fidelity(rho: DensityMatrix | np.ndarray) -> float:
    """``(P_0..0 + P_1..1) / 2 + |rho_{0..0, 1..1}|`` from populations and coherence.

    Equals the overlap with the GHZ state whose relative phase matches the
    measured coherence.
    """
    m = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return float(0.5 * np.real(m[0, 0] + m[-1, -1]) + abs(m[0, -1]))


def ideal_state(circuit: Circuit) -> np.ndarray:
    return state_of(circuit)


def sample_counts(rho: DensityMatrix | np.ndarray, shots: int, seed: int | None = 0) -> dict[str, int]:
    """Multinomial samples of computational-basis outcomes.

    ``rho`` may be a density matrix or a vector of outcome probabilities.

    Bitstrings list qubit ``n-1`` first, so the last character is qubit 0.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if isinstance(rho, DensityMatrix):
        probs, n = rho.probabilities, rho.num_qubits
    else:
        arr = np.asarray(rho)
        probs = np.clip(np.real(np.diag(arr) if arr.ndim == 2 else arr), 0.0, None)
        n = int(round(math.log2(probs.size)))
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, probs)
    return {format(i, f"0{n}b"): int(c) for i, c in enumerate(draws) if c}


def exact_counts(probs: np.ndarray, shots: int) -> dict[str, int]:
    """Expected counts rounded to integers (used as the ideal reference)."""
    n = int(round(math.log2(len(probs))))
    return {format(i, f"0{n}b"): int(round(p * shots)) for i, p in enumerate(probs) if round(p * shots)}

