import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hwtranspile.ir import Circuit, op
from hwtranspile.qasm import QasmError, emit, format_angle, load, parse

from _circuits import random_circuit


def test_single_x():
    assert parse("qreg q[1]; x q[0];") == Circuit(1, [op("x", 0)])


def test_acecr_and_global_gr():
    c = parse("qreg q[2]; acecr(pi/2) q[0],q[1];")
    assert c.ops == (op("acecr", 0, 1, params=[math.pi / 2]),)
    g = parse("qreg q[3]; gr(pi/2,0) q;")
    assert g.ops == (op("gr", params=[math.pi / 2, 0.0]),)
    assert g.num_qubits == 3


def test_emit_empty_and_angles():
    assert emit(Circuit(2)) == "qreg q[2];\n"
    assert emit(Circuit(1, [op("rz", 0, params=[3 * math.pi / 2])])) == "qreg q[1];\nrz(3*pi/2) q[0];\n"
    assert format_angle(-math.pi / 4) == "-pi/4"
    assert format_angle(0.1234) == repr(0.1234)


def test_comments_and_expressions():
    c = parse("// header\nqreg q[2];\nrz(-2*pi/3 + 0.5) q[1]; // tail\ncx q[0], q[1];\n")
    assert c.ops[0].params[0] == pytest.approx(-2 * math.pi / 3 + 0.5)
    assert c.ops[1] == op("cx", 0, 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip_random(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, 4, 50)
    assert parse(emit(c)) == c


@pytest.mark.parametrize(
    "text, line",
    [
        ("x q[0];", 1),
        ("qreg q[2];\nfoo q[0];", 2),
        ("qreg q[2];\ncx q[0];", 2),
        ("qreg q[2];\nx q[5];", 2),
        ("qreg q[2];\nrz q[0];", 2),
        ("qreg q[2];\n\nrz(pi q[0];", 3),
        ("qreg q[2];\ncx q[1],q[1];", 2),
        ("qreg q[1];\nx q[0]", 2),
    ],
)
def test_malformed_has_location(text, line):
    with pytest.raises(QasmError) as info:
        parse(text)
    assert info.value.line == line
    assert info.value.col >= 1


def test_load_file(tmp_path):
    p = tmp_path / "c.q2"
    p.write_text("qreg q[2];\nh q[0];\ncx q[0],q[1];\n", encoding="utf-8")
    assert load(p) == Circuit(2, [op("h", 0), op("cx", 0, 1)])
