from collections import Counter

import numpy as np
import pytest

from floqsim.circuits import (LOWERINGS, all_labels, build_experiment, encode_circuit, ft_labels,
                              ideal_value, parse_label, stabilizer_round_circuit)
from floqsim.core import Circuit, MeasurePauli, NoiseSite, ResetZ
from floqsim.fbs import ROUND_DURATION_NS, READOUT_NS, round_type, tag
from floqsim.runner import exact_expectations, run_experiment
from floqsim.vector import enumerate_branches

GOLDEN_ROUND_A = """MPP +X3*X6 r1.x47
MPP +X4*X7 r1.x58
MPP +X5*X8 r1.x69
MPP +X1*X4 r1.x25"""


def test_labels():
    assert len(all_labels()) == 36
    assert len(ft_labels()) == 16
    assert parse_label("−,+i") == ("-", "+i")
    with pytest.raises(ValueError):
        parse_label("+,2")


def test_unknown_label(code):
    with pytest.raises(ValueError):
        encode_circuit("q,0", code)


def test_round_text_golden(code):
    assert stabilizer_round_circuit(code, "A").to_text().strip() == GOLDEN_ROUND_A


@pytest.mark.parametrize("lowering", LOWERINGS)
def test_round_text_roundtrip(code, lowering):
    c = stabilizer_round_circuit(code, "C", lowering)
    assert Circuit.from_text(c.to_text(), c.n_qubits) == c


@pytest.mark.parametrize("q", "ABCD")
def test_ancilla_round_has_four_measurements(code, q):
    c = stabilizer_round_circuit(code, q, "ancilla")
    meas = [op for op in c if isinstance(op, MeasurePauli)]
    assert len(meas) == 4
    assert all(op.pauli.weight == 1 for op in meas)
    assert sum(isinstance(op, ResetZ) for op in c) == 4


def test_round_index_mismatch(code):
    with pytest.raises(ValueError):
        stabilizer_round_circuit(code, "A", index=2)


def test_round_duration():
    assert ROUND_DURATION_NS == 920 and READOUT_NS == 720


def _round_distribution(code, q, lowering):
    enc = encode_circuit("+,0", code, "direct").circuit
    i = "ABCD".index(q) + 1
    rnd = stabilizer_round_circuit(code, q, lowering, index=i)
    c = Circuit(code.n_qubits, tuple(enc) + tuple(rnd))
    small, _ = c.compact()
    tags = [tag(i, ch) for ch in code.schedule[q]]
    dist = Counter()
    for br in enumerate_branches(small):
        dist[tuple(br.record[t] for t in tags)] += br.prob
    return {k: round(v, 9) for k, v in dist.items() if v > 1e-12}


@pytest.mark.parametrize("q", "ABCD")
@pytest.mark.parametrize("lowering", ["ancilla", "ancilla-noreset"])
def test_lowerings_agree(code, q, lowering):
    assert _round_distribution(code, q, lowering) == _round_distribution(code, q, "direct")


def test_zz_encoding_measures_x_stabilizers(code):
    enc = encode_circuit("1,0", code, "ancilla")
    tags = enc.circuit.tags
    assert "enc.SXA" in tags and "enc.SXC" in tags
    assert enc.ft and enc.postselect == ()
    assert enc.initial["SZB"] == 1


def test_minus_i_dynamical_oracle(code):
    exp = build_experiment(code, "+,-i", "XY", 1)
    e = exact_expectations(exp.circuit, {"d": exp.logical.value_d}, max_branches=2**16)
    assert e["d"] == pytest.approx(-1)
    assert set(exp.encoding.postselect) == {"enc.y1x4z2", "enc.z2z3"}
    assert not exp.ft


@pytest.mark.parametrize("lowering", LOWERINGS)
@pytest.mark.parametrize("label", ["+,0", "1,-", "0,0", "-,+"])
def test_noiseless_rounds_silent(code, label, lowering):
    basis = "".join("Z" if c in "01" else "X" for c in parse_label(label))
    exp = build_experiment(code, label, basis, 24, lowering=lowering)
    res = run_experiment(exp, 128, seed=3, backend="tableau")
    assert res.retention == 1.0
    s, d = ideal_value(label, basis)
    assert np.all(res.values["s"] == s) and np.all(res.values["d"] == d)


def test_x_error_on_d5_fires_z_detector(code):
    exp = build_experiment(code, "+,0", "XZ", 8)
    start, _ = exp.segments["round2"]          # round 2 is a B round (Z checks)
    assert round_type(2) == "B"
    ops = list(exp.circuit)
    ops.insert(start, NoiseSite("pauli", (4,), 1.0, "X"))
    c = Circuit(exp.circuit.n_qubits, tuple(ops))
    from floqsim.runner import sample_values

    exprs = {d.label: d.expr for d in exp.detectors}
    vals = sample_values(c, exprs, 64, seed=1, backend="tableau")
    fired = sorted(k for k, v in vals.items() if np.all(v == -1))
    assert fired and fired[0].startswith("r2.SZ")
    quiet = [k for k, v in vals.items() if np.all(v == 1)]
    assert len(fired) + len(quiet) == len(vals)


def test_segments_cover_circuit(code):
    exp = build_experiment(code, "+,0", "ZZ", 4, [("CNOT", 2)], lowering="ancilla")
    spans = sorted(exp.segments.values())
    assert spans[0][0] == 0 and spans[-1][1] == len(exp.circuit)
    assert all(a[1] == b[0] for a, b in zip(spans, spans[1:]))
    assert "CNOT@2" in exp.segments


def test_gate_outside_experiment(code):
    with pytest.raises(ValueError):
        build_experiment(code, "+,0", "XZ", 2, [("Xs", 3)])
