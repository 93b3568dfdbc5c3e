import math

import numpy as np
import pytest

from floqsim.circuits import CNOT_CHAIN, build_experiment, ft_labels, logical_gate_circuit, parse_label
from floqsim.core import Circuit, Gate, MeasurePauli, PauliString
from floqsim.frames import sample
from floqsim.runner import exact_expectations, run_experiment
from floqsim.tomo import CNOT_UNITARY, _SIG, label_ket

I2 = np.eye(2)
UNITARY = {
    "Xs": np.kron(_SIG["X"], I2), "Ys": np.kron(_SIG["Y"], I2), "Zs": np.kron(_SIG["Z"], I2),
    "Xd": np.kron(I2, _SIG["X"]), "Yd": np.kron(I2, _SIG["Y"]), "Zd": np.kron(I2, _SIG["Z"]),
    "CNOT": CNOT_UNITARY,
}


def ideal(label, gate, basis):
    psi = UNITARY[gate] @ label_ket(*parse_label(label))
    ops = {"s": np.kron(_SIG[basis[0]], I2), "d": np.kron(I2, _SIG[basis[1]]),
           "sd": np.kron(_SIG[basis[0]], _SIG[basis[1]])}
    return {k: float(np.real(psi.conj() @ m @ psi)) for k, m in ops.items()}


@pytest.mark.parametrize("bits,out", [
    ((0, 0, 0), (0, 0, 0)), ((0, 0, 1), (1, 0, 0)), ((1, 0, 0), (0, 0, 1)),
    ((0, 1, 0), (1, 1, 1)), ((1, 1, 1), (0, 1, 0)),
])
def test_cnot_chain_truth_table(bits, out):
    # chain positions 0..4 = D1, ancilla, D4, ancilla, D7; ancillas start in |0>
    ops = [Gate("X", (p,)) for p, b in zip((0, 2, 4), bits) if b]
    ops += [Gate("CNOT", ct) for ct in CNOT_CHAIN]
    ops += [MeasurePauli(PauliString.single(5, q, "Z"), f"m{q}") for q in range(5)]
    rec = sample(Circuit(5, tuple(ops)), 8, 0)
    got = tuple(int(rec.values(f"m{p}")[0] == -1) for p in (0, 2, 4))
    assert got == out
    assert rec.values("m1")[0] == 1 and rec.values("m3")[0] == 1


def test_truth_table_row_in_signs():
    # (Z1, Z4, Z7) = (+1, +1, -1) -> (-1, +1, +1)
    test_cnot_chain_truth_table((0, 0, 1), (1, 0, 0))


@pytest.mark.parametrize("gate", list(UNITARY))
@pytest.mark.parametrize("label", ft_labels())
def test_gate_on_ft_states(code, gate, label):
    for basis in ("ZZ", "XX", "XZ", "ZX"):
        exp = build_experiment(code, label, basis, 4, [(gate, 2)])
        res = run_experiment(exp, 256, seed=5, backend="tableau")
        want = ideal(label, gate, basis)
        for k, v in want.items():
            got = res.values[k]
            if abs(v) > 0.5:
                assert np.all(got == round(v)), (basis, k)
            else:
                assert abs(got.mean()) < 0.3, (basis, k)


def test_gate_round_constraints(code):
    with pytest.raises(ValueError):
        logical_gate_circuit(code, "RZd", 1, 0.3)
    with pytest.raises(ValueError):
        logical_gate_circuit(code, "RXd", 2, 0.3)
    with pytest.raises(ValueError):
        logical_gate_circuit(code, "RZd", 2)
    with pytest.raises(ValueError):
        logical_gate_circuit(code, "T", 2)


def test_ft_flags(code):
    for g in ("Xs", "Zs", "Xd", "Zd"):
        assert logical_gate_circuit(code, g, 2).ft
    assert not logical_gate_circuit(code, "CNOT", 2).ft
    assert not logical_gate_circuit(code, "RZd", 2, 0.1).ft


@pytest.mark.parametrize("phi", [0.0, 0.7, math.pi / 2, 2.5, -1.2])
def test_rzd_bloch_rotation(code, phi):
    want = {"X": math.cos(phi), "Y": math.sin(phi), "Z": 0.0}
    for letter, v in want.items():
        exp = build_experiment(code, "+,+", "X" + letter, 2, [("RZd", 2, phi)])
        e = exact_expectations(exp.circuit, {"d": exp.logical.value_d}, max_branches=2**16)
        assert e["d"] == pytest.approx(v, abs=1e-9)


@pytest.mark.parametrize("phi", [0.4, math.pi / 2])
def test_rxd_bloch_rotation(code, phi):
    want = {"Z": math.cos(phi), "Y": -math.sin(phi)}
    for letter, v in want.items():
        exp = build_experiment(code, "+,0", "X" + letter, 3, [("RXd", 3, phi)])
        e = exact_expectations(exp.circuit, {"d": exp.logical.value_d}, max_branches=2**16)
        assert e["d"] == pytest.approx(v, abs=1e-9)


@pytest.mark.parametrize("gate,label,basis,v", [("RZs", "+,0", "YZ", 1), ("RXs", "0,0", "YZ", -1)])
def test_static_rotations(code, gate, label, basis, v):
    exp = build_experiment(code, label, basis, 1, [(gate, 1, math.pi / 2)])
    e = exact_expectations(exp.circuit, {"s": exp.logical.value_s}, max_branches=2**16)
    assert e["s"] == pytest.approx(v, abs=1e-9)
