"""Random circuit generators shared by the test modules."""

import math

import numpy as np

from hwtranspile.ir import Circuit, op

ONE_Q = ("x", "y", "z", "h", "sx", "rz", "rx", "phxz")
TWO_Q = ("cx", "cz", "swap", "ecr", "acecr", "rzz")
NICE = (0.0, math.pi / 4, math.pi / 2, -math.pi / 2, math.pi, 3 * math.pi / 2)


def _angle(rng: np.random.Generator) -> float:
    if rng.random() < 0.4:
        return float(NICE[rng.integers(len(NICE))])
    return float(rng.uniform(-math.pi, math.pi))


def random_op(rng, n: int, one_q=ONE_Q, two_q=TWO_Q, p_two: float = 0.4):
    if n >= 2 and two_q and rng.random() < p_two:
        kind = two_q[rng.integers(len(two_q))]
        a, b = (int(x) for x in rng.choice(n, size=2, replace=False))
        params = [_angle(rng)] if kind in ("acecr", "rzz") else []
        return op(kind, a, b, params=params)
    kind = one_q[rng.integers(len(one_q))]
    q = int(rng.integers(n))
    if kind in ("rz", "rx"):
        return op(kind, q, params=[_angle(rng)])
    if kind == "phxz":
        return op(kind, q, params=[float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))])
    return op(kind, q)


def random_circuit(rng, n: int, m: int, **kw) -> Circuit:
    return Circuit(n, [random_op(rng, n, **kw) for _ in range(m)])


def ghz_fan() -> Circuit:
    """H on 0 then CX fan 0->1, 0->3, 1->2 written with CZ and Hadamards."""
    return Circuit(4, [
        op("h", 0), op("h", 1), op("cz", 0, 1), op("h", 1),
        op("h", 3), op("cz", 0, 3), op("h", 3),
        op("h", 2), op("cz", 1, 2), op("h", 2),
    ])
