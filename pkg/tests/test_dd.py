import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hwtranspile.dd import (
    DdSequence,
    TimingModel,
    dd_benefit_sim,
    find_idle_windows,
    insert_dd,
    materialize,
    schedule,
)
from hwtranspile.ir import Circuit, CircuitError, equiv_phase, op, unitary_of

from _circuits import random_circuit


def ramsey(length: int) -> Circuit:
    return Circuit(1, [op("sx", 0), op("delay", 0, params=[length]), op("sx", 0)])


def test_single_x():
    sch = schedule(Circuit(1, [op("x", 0)]))
    assert [it.start for it in sch.items] == [0]
    assert sch.makespan == 160


def test_back_to_back():
    sch = schedule(Circuit(1, [op("x", 0), op("x", 0)]))
    assert [it.start for it in sch.items] == [0, 160]


def test_unaligned_start_rounds_up():
    timing = TimingModel().with_overrides({"y": 100})
    sch = schedule(Circuit(1, [op("y", 0), op("x", 0)]), timing)
    assert sch.items[1].start == 112


def test_alap_keeps_makespan_and_moves_late():
    c = Circuit(2, [op("x", 0), op("x", 1), op("x", 1), op("cx", 0, 1)])
    asap, alap = schedule(c, policy="asap"), schedule(c, policy="alap")
    assert asap.makespan == alap.makespan
    assert alap.items[0].start == 160
    alap.check()


def test_missing_duration_is_an_error():
    timing = TimingModel({"x": 160})
    with pytest.raises(CircuitError):
        schedule(Circuit(1, [op("h", 0)]), timing)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["asap", "alap"]))
def test_schedule_is_valid(seed, policy):
    rng = np.random.default_rng(seed)
    sch = schedule(random_circuit(rng, 3, 15), policy=policy)
    sch.check()


def test_idle_windows():
    assert find_idle_windows(schedule(Circuit(1, [op("x", 0), op("x", 0)]))) == []
    sch = schedule(Circuit(3, [op("x", 0), op("cx", 0, 1)]))
    wins = find_idle_windows(sch)
    assert [(w.qubit, w.start, w.end, w.leading) for w in wins] == [(1, 0, 160, True)]
    assert all(w.qubit != 2 for w in wins)


def test_two_xy4_in_long_idle():
    # about 60 us at 0.222 ns per dt
    idle = 270_000
    c = Circuit(1, [op("x", 0), op("delay", 0, params=[idle]), op("x", 0)])
    out = insert_dd(schedule(c), DdSequence("xy4", 2))
    pulses = [o for o in out.ops if o.kind in ("x", "y")][1:-1]
    assert [o.kind for o in pulses] == list("xyxyxyxy")
    starts = [it.start for it in schedule(out).items if it.op.kind in ("x", "y")][1:-1]
    gaps = np.diff(starts)
    assert gaps.max() - gaps.min() <= 16
    assert equiv_phase(unitary_of(out), unitary_of(c), 1e-9)


def test_short_window_is_skipped():
    c = Circuit(1, [op("x", 0), op("delay", 0, params=[300]), op("x", 0)])
    out = insert_dd(schedule(c), DdSequence("xy4", 1))
    assert not any(o.kind == "y" for o in out.ops)
    assert sum(o.kind == "x" for o in out.ops) == 2


def test_materialize_round_trip():
    rng = np.random.default_rng(5)
    sch = schedule(random_circuit(rng, 3, 12), policy="alap")
    again = schedule(materialize(sch))
    assert again.makespan == sch.makespan
    starts = {id(it.op): it.start for it in again.items}
    assert all(starts[id(it.op)] == it.start for it in sch.items if it.op.kind != "delay")


def test_zero_noise_gives_zero_error():
    c = ramsey(2048)
    dd = insert_dd(schedule(c), DdSequence("xy4"))
    assert dd_benefit_sim(dd, c, 0.0) == (0.0, 0.0)


@pytest.mark.parametrize("kind", ["cpmg", "xy4", "xy8"])
def test_z_drift_is_echoed(kind):
    L = 2048
    eps = (math.pi / 4) / L
    c = ramsey(L)
    dd = insert_dd(schedule(c), DdSequence(kind))
    with_dd, bare = dd_benefit_sim(dd, c, eps, "z")
    assert bare > 1e-2
    assert with_dd <= 1e-6


def test_x_drift_needs_universal_sequence():
    L = 2048
    eps = (math.pi / 4) / L
    c = ramsey(L)
    cpmg = insert_dd(schedule(c), DdSequence("cpmg"))
    xy4 = insert_dd(schedule(c), DdSequence("xy4"))
    assert dd_benefit_sim(cpmg, c, eps, "x")[0] >= 1e-2
    assert dd_benefit_sim(xy4, c, eps, "x")[0] <= 1e-6


def test_bad_sequence():
    with pytest.raises(ValueError):
        DdSequence("udd")
    with pytest.raises(ValueError):
        DdSequence("xy4", 0)
