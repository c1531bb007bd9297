import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hwtranspile.dd import schedule
from hwtranspile.ecr import (
    acecr_unitary,
    compile_ecr,
    decompose_cx,
    decompose_zz,
    is_native,
    physical_pulses,
    resynthesize_1q,
    synthesize_1q,
)
from hwtranspile.ir import Circuit, equiv_phase, local_unitary, op, unitary_of
from hwtranspile.route import local_unitary_2q

from _circuits import random_circuit

PI = math.pi
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2)


def _expm_herm(h):
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)) @ v.conj().T


def rz(q, a):
    return op("rz", q, params=[a])


def rx(q, a):
    return op("rx", q, params=[a])


def test_acecr_zero_is_echo_x():
    assert np.allclose(acecr_unitary(0.0), np.kron(X, I2), atol=1e-12)


def test_acecr_half_pi_against_exponential():
    expected = _expm_herm(PI / 4 * np.kron(Z, X)) @ np.kron(X, I2)
    assert np.allclose(acecr_unitary(PI / 2), expected, atol=1e-12)


def test_decompose_cx_matches_oracle():
    cx = op("cx", 0, 1)
    seq = decompose_cx(cx)
    assert [o.kind for o in seq] == ["rz", "x", "rx", "acecr"]
    assert equiv_phase(local_unitary_2q(seq), local_unitary_2q([cx]), 1e-12)
    twice = Circuit(2, seq + seq)
    assert equiv_phase(unitary_of(twice), np.eye(4), 1e-12)


def test_decompose_cx_reversed_operands():
    cx = op("cx", 1, 0)
    assert equiv_phase(unitary_of(Circuit(2, decompose_cx(cx))), unitary_of(Circuit(2, [cx])), 1e-12)


@pytest.mark.parametrize("theta", [0.0, PI / 2, -0.4, 2.5, 7.0])
def test_decompose_zz_single_acecr(theta):
    seq = decompose_zz(theta)
    assert sum(o.kind == "acecr" for o in seq) == 1
    assert all(abs(o.params[0]) <= PI / 2 + 1e-12 for o in seq if o.kind == "acecr")
    assert equiv_phase(local_unitary_2q(seq), _expm_herm(theta / 2 * np.kron(Z, Z)), 1e-9)


def _kinds_angles(ops):
    return [(o.kind, round(o.params[0] % (2 * PI), 9) if o.params else None) for o in ops]


@pytest.mark.parametrize(
    "run, expected",
    [
        ([op("x", 0), rz(0, PI), op("x", 0), rz(0, PI / 2), op("x", 0)], [rz(0, 3 * PI / 2), op("x", 0)]),
        ([op("x", 0), rx(0, PI / 2)], [rz(0, PI), rx(0, PI / 2), rz(0, PI)]),
        ([rz(0, PI / 2), rx(0, PI / 2), rz(0, PI / 2), rx(0, PI / 2), rz(0, PI / 2)], [rz(0, PI), rx(0, PI / 2), rz(0, PI)]),
        (
            [rz(0, PI / 2), rx(0, PI / 2), rz(0, 3 * PI / 2), rz(0, PI / 3), rz(0, PI / 2), rx(0, PI / 2)],
            [rz(0, 3 * PI / 2), rx(0, PI / 2), rz(0, 5 * PI / 3), rx(0, PI / 2), rz(0, PI)],
        ),
    ],
)
def test_resynthesis_rewrites(run, expected):
    out = resynthesize_1q(run)
    assert _kinds_angles(out) == _kinds_angles(expected)
    assert equiv_phase(local_unitary(out), local_unitary(run), 1e-9)


@settings(max_examples=60, deadline=None)
@given(st.floats(-PI, PI), st.floats(0, PI), st.floats(-PI, PI))
def test_synthesize_random_su2(a, b, c):
    u = local_unitary([rz(0, a), rx(0, b), rz(0, c)])
    out = synthesize_1q(u)
    assert all(is_native(o) for o in out)
    assert physical_pulses(out) <= 2
    assert equiv_phase(local_unitary(out), u, 1e-9)


def test_warm_up_saves_one_pulse():
    c = Circuit(2, [rx(1, -PI / 2), op("cx", 0, 1)])
    merged = schedule(compile_ecr(c)).makespan
    plain = schedule(compile_ecr(c, merge=False)).makespan
    assert plain - merged == 160


def test_bare_cx_is_decompose_cx():
    cx = op("cx", 0, 1)
    assert list(compile_ecr(Circuit(2, [cx])).ops) == decompose_cx(cx)


def test_rzz_goes_direct():
    c = Circuit(2, [op("rzz", 0, 1, params=[0.3])])
    out = compile_ecr(c)
    assert sum(o.kind == "acecr" for o in out.ops) == 1
    assert equiv_phase(unitary_of(out), unitary_of(c), 1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans(), st.booleans())
def test_compile_ecr_sound_and_native(seed, merge, direct):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, 3, 15)
    out = compile_ecr(c, merge=merge, direct_zz=direct)
    assert all(is_native(o) for o in out.ops)
    assert equiv_phase(unitary_of(out), unitary_of(c), 1e-9)
