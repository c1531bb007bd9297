import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hwtranspile.gr import compile_gr, compile_gr_baseline
from hwtranspile.ir import Circuit, CircuitError, op, state_of
from hwtranspile.noise import (
    DensityMatrix,
    NoiseModel,
    ghz_fidelity,
    ghz_state,
    sample_counts,
    simulate,
    state_fidelity,
)

from _circuits import ghz_fan, random_circuit


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_noiseless_is_pure_state(seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, 3, 12)
    psi = state_of(c)
    rho = simulate(c, NoiseModel.noiseless())
    assert np.allclose(rho.data, np.outer(psi, psi.conj()), atol=1e-10)


@pytest.mark.parametrize("convention", ["average", "pauli"])
def test_single_x_closed_form(convention):
    f = 0.97
    noise = NoiseModel.noiseless().with_(one_qubit=f, convention=convention)
    rho = simulate(Circuit(1, [op("x", 0)]), noise)
    if convention == "average":
        p = (1 - f) * 3 / 2
        expected = 1 - p / 2
    else:
        # X and Y flip |1>, Z does not
        expected = 1 - 2 * (1 - f) / 3
    assert state_fidelity(rho, np.array([0, 1])) == pytest.approx(expected, abs=1e-10)


def test_spam_on_used_qubits_only():
    noise = NoiseModel.noiseless().with_(spam=0.9)
    rho = simulate(Circuit(2, [op("x", 0)]), noise)
    probs = rho.probabilities
    assert probs[0b00] + probs[0b01] == pytest.approx(1.0)


def test_density_matrix_is_valid():
    rng = np.random.default_rng(2)
    rho = simulate(random_circuit(rng, 3, 15), NoiseModel())
    rho.check()


def test_ghz_estimates():
    c = ghz_fan()
    noise = NoiseModel()
    base = ghz_fidelity(simulate(compile_gr_baseline(c, drop_final_rz=True), noise))
    opt = ghz_fidelity(simulate(compile_gr(c, drop_final_rz=True), noise))
    assert base == pytest.approx(0.71, abs=0.02)
    assert opt == pytest.approx(0.78, abs=0.02)
    assert opt > base


def test_state_fidelity_cases():
    psi = ghz_state(2)
    assert state_fidelity(np.outer(psi, psi.conj()), psi) == pytest.approx(1.0)
    assert state_fidelity(np.eye(4) / 4, psi) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        state_fidelity(np.eye(2) / 2, psi)


def test_sampling():
    rho = simulate(Circuit(2, [op("x", 0), op("x", 1)]), NoiseModel.noiseless())
    assert sample_counts(rho, 100, seed=1) == {"11": 100}
    mixed = DensityMatrix(np.eye(2) / 2, 1)
    a = sample_counts(mixed, 1_000_000, seed=7)
    assert a == sample_counts(mixed, 1_000_000, seed=7)
    sigma = math.sqrt(1e6 * 0.25)
    assert abs(a["0"] - 500_000) < 3 * sigma


def test_limits_and_validation():
    with pytest.raises(CircuitError):
        simulate(Circuit(9), NoiseModel())
    with pytest.raises(ValueError):
        NoiseModel(cz=1.5)
    with pytest.raises(ValueError):
        NoiseModel(convention="amplitude")
