import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floqsim.core import Circuit, Gate, MeasurePauli, PauliString
from floqsim.vector import (StateVector, TooManyBranches, apply, enumerate_branches, expectation,
                            gate_matrix, measure_pauli_prob, run)

from conftest import random_clifford_circuit

P = PauliString.parse


def prep(n, *ops):
    sv = StateVector.zeros(n)
    for op in ops:
        sv = apply(sv, op)
    return sv


def test_z_on_zero():
    assert expectation(StateVector.zeros(1), P("Z")) == pytest.approx(1)


def test_rz_pi_flips_x():
    sv = prep(1, Gate("H", (0,)), Gate("RZ", (0,), math.pi))
    assert expectation(sv, P("X")) == pytest.approx(-1)


@given(st.floats(-2 * math.pi, 2 * math.pi))
def test_rz_bloch_rotation(phi):
    sv = prep(1, Gate("H", (0,)), Gate("RZ", (0,), phi))
    assert expectation(sv, P("X")) == pytest.approx(math.cos(phi), abs=1e-10)
    assert expectation(sv, P("Y")) == pytest.approx(math.sin(phi), abs=1e-10)


def test_cnot_makes_bell():
    sv = prep(2, Gate("H", (0,)), Gate("CNOT", (0, 1)))
    assert expectation(sv, P("XX")) == pytest.approx(1)
    assert expectation(sv, P("ZZ")) == pytest.approx(1)


def test_measure_prob_plus():
    sv = prep(1, Gate("H", (0,)))
    p, post = measure_pauli_prob(sv, P("Z"), 1)
    assert p == pytest.approx(0.5)
    assert expectation(post, P("Z")) == pytest.approx(1)
    p0, none = measure_pauli_prob(StateVector.zeros(1), P("Z"), -1)
    assert p0 == pytest.approx(0) and none is None


def test_expectation_rejects_non_hermitian():
    with pytest.raises(ValueError):
        expectation(StateVector.zeros(1), P("iZ"))


def test_index_out_of_range():
    with pytest.raises((ValueError, IndexError)):
        apply(StateVector.zeros(1), Gate("H", (3,)))


@pytest.mark.parametrize("name", ["H", "S", "SDG", "X", "Y", "Z", "SQRT_Y", "SQRT_Y_DAG"])
def test_gates_unitary(name):
    u = gate_matrix(name)
    assert np.allclose(u @ u.conj().T, np.eye(2), atol=1e-12)


@given(st.sampled_from(["RX", "RY", "RZ"]), st.floats(-7, 7))
def test_rotation_inverse(name, angle):
    rng = np.random.default_rng(1)
    sv = prep(2, Gate("H", (0,)), Gate("CNOT", (0, 1)), Gate("RY", (1,), 0.3))
    back = apply(apply(sv, Gate(name, (1,), angle)), Gate(name, (1,), -angle))
    assert np.allclose(back.amplitudes, sv.amplitudes, atol=1e-10)
    assert rng is not None


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_branch_probabilities_sum_to_one(seed):
    c = random_clifford_circuit(4, 20, np.random.default_rng(seed))
    total = sum(b.prob for b in enumerate_branches(c))
    assert total == pytest.approx(1, abs=1e-9)


def test_branch_limit():
    ops = [Gate("H", (q,)) for q in range(5)]
    ops += [MeasurePauli(PauliString.single(5, q, "Z"), f"m{q}") for q in range(5)]
    with pytest.raises(TooManyBranches):
        enumerate_branches(Circuit(5, tuple(ops)), max_branches=8)


def test_norm_preserved_along_run():
    c = random_clifford_circuit(5, 40, np.random.default_rng(3))
    _, sv = run(c, 7)
    assert sv.norm() == pytest.approx(1, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_merged_enumeration_matches_full(seed):
    from floqsim.core import Sym
    from floqsim.vector import parity_expectations

    rng = np.random.default_rng(seed)
    c = random_clifford_circuit(4, 25, rng, n_meas=5)
    exprs = {}
    for j in range(4):
        tags = [t for t in c.tags if rng.random() < 0.5]
        exprs[f"e{j}"] = Sym(tags, int(rng.choice([1, -1])))
    exprs["const"] = -1
    full = {k: sum(b.prob * (e.evaluate(b.record) if isinstance(e, Sym) else e)
                   for b in enumerate_branches(c)) for k, e in exprs.items()}
    merged = parity_expectations(c, exprs)
    for k in exprs:
        assert merged[k] == pytest.approx(full[k], abs=1e-9)
