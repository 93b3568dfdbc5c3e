import itertools

import numpy as np
import pytest

from floqsim.circuits import build_experiment, ft_labels, ideal_value
from floqsim.core import PauliString, commutes
from floqsim.fbs import (CHECKS, DEFAULT_SCHEDULE, CodeError, ScheduleError, SignFrame, build_code,
                         computable_stabilizers, data_pauli, detect, form_after, is_ft_basis,
                         logical_measurement, measurement_bases, round_type, tag, update_sign_frame,
                         xor_fold)
from floqsim.runner import exact_expectations, run_experiment


def test_default_schedule(code):
    assert code.schedule == DEFAULT_SCHEDULE
    assert len(code.ancillas) == 12 and code.n_qubits == 21
    assert code.round_duration_ns == 920


def test_named_operators(code):
    assert code.stabilizers["SZD"] == data_pauli("Z1Z2Z4Z5Z7Z8")
    assert code.dynamical["B"]["X"] == data_pauli("X1X7")
    assert code.static["X"] == data_pauli("X4X5X6")
    assert code.static["Z"] == data_pauli("Z2Z5Z8")


def test_dynamical_table(code):
    expect = {"A": ("X1X4", "Z1Z3"), "B": ("X1X7", "Z7Z8"),
              "C": ("X4X7", "Z7Z9"), "D": ("X3X9", "Z8Z9")}
    for q, (x, z) in expect.items():
        assert code.dynamical[q]["X"] == data_pauli(x)
        assert code.dynamical[q]["Z"] == data_pauli(z)
        assert not commutes(code.dynamical[q]["X"], code.dynamical[q]["Z"])


def test_logicals_commute_with_gauge(code):
    for p in code.static.values():
        for g in code.gauge_checks.values():
            assert commutes(p, g)
    assert not commutes(code.static["X"], code.static["Z"])


def test_round_products_give_stabilizers(code):
    from floqsim.fbs import ROUND_STABILIZER

    for q, (stab, factors) in ROUND_STABILIZER.items():
        prod = PauliString.identity(9)
        for f in factors:
            assert f in code.schedule[q]
            prod = prod * code.gauge_checks[f]
        assert prod == code.stabilizers[stab]


@pytest.mark.parametrize("q,slot", list(itertools.product("ABCD", range(4))))
def test_schedule_mutation_rejected(q, slot):
    sched = {k: list(v) for k, v in DEFAULT_SCHEDULE.items()}
    others = [c for c in CHECKS if c not in sched[q]]
    for repl in others:
        sched[q][slot] = repl
        with pytest.raises((CodeError, ScheduleError)):
            build_code(sched)
        sched = {k: list(v) for k, v in DEFAULT_SCHEDULE.items()}


def _all_plus(n_rounds):
    return {tag(i, c): 1 for i in range(0, n_rounds + 2) for c in CHECKS}


def test_gamma_trivial_outcomes():
    f = SignFrame()
    out = _all_plus(40)
    for _ in range(40):
        f = update_sign_frame(f, out)
        assert f.gamma_x == 1 and f.gamma_z == 1


def test_gamma_x47_flips_x_at_round_two():
    out = _all_plus(3)
    out[tag(1, "x47")] = -1
    f = update_sign_frame(update_sign_frame(SignFrame(), out), out)
    assert f.r == 2 and f.gamma_x == -1 and f.gamma_z == 1
    assert f.gamma_y == -1


def test_missing_outcome_raises():
    out = _all_plus(3)
    del out[tag(1, "x47")]
    f = update_sign_frame(SignFrame(), out)
    with pytest.raises(ScheduleError):
        update_sign_frame(f, out)


def test_round_types():
    assert [round_type(i) for i in range(1, 9)] == list("ABCDABCD")
    assert form_after(0) == "A"


@pytest.mark.parametrize("basis,n", [("ZZ", 2), ("XX", 2), ("XZ", 1), ("ZX", 1), ("YY", 0)])
def test_computable_stabilizer_count(code, basis, n):
    stabs = computable_stabilizers(code, measurement_bases(code, basis, 4))
    assert len(stabs) == n
    assert is_ft_basis(basis) == (n == 2)


def test_zz_after_round_d(code):
    assert sorted(computable_stabilizers(code, measurement_bases(code, "ZZ", 4))) == ["SZB", "SZD"]
    assert computable_stabilizers(code, measurement_bases(code, "XZ", 4)) == ["SXC"]


def test_bad_basis(code):
    with pytest.raises(ValueError):
        measurement_bases(code, "XQ", 1)


def test_minus_one_eigenstate(code):
    exp = build_experiment(code, "-,1", "XZ", 0)
    e = exact_expectations(exp.circuit, {"s": exp.logical.value_s, "d": exp.logical.value_d})
    assert e["s"] == pytest.approx(-1) and e["d"] == pytest.approx(-1)


def test_logical_measurement_missing_data(code):
    data = {k: 1 for k in range(1, 9)}
    with pytest.raises(KeyError):
        logical_measurement(code, "ZZ", 4, data, SignFrame())


def test_detect_record_length():
    with pytest.raises(ValueError):
        detect({tag(1, "x47"): 1}, 1, {"SXA": 1})


def test_xor_fold():
    assert xor_fold([1, -1, -1, 1]) == [1, -1, 1, -1]


@pytest.mark.parametrize("r", [1, 2, 3])
@pytest.mark.parametrize("label,basis", [("+,0", "XZ"), ("1,-", "ZX"), ("0,1", "ZZ"), ("-,+", "XX")])
def test_preservation_vector_oracle(code, label, basis, r):
    exp = build_experiment(code, label, basis, r)
    e = exact_expectations(exp.circuit, {"s": exp.logical.value_s, "d": exp.logical.value_d},
                           max_branches=2**16)
    assert (e["s"], e["d"]) == pytest.approx(ideal_value(label, basis), abs=1e-9)


@pytest.mark.parametrize("label", ft_labels())
def test_preservation_all_ft_states(code, label):
    for r in range(1, 13):
        for basis in ("ZZ", "XX", "XZ", "ZX"):
            exp = build_experiment(code, label, basis, r)
            res = run_experiment(exp, 64, seed=r, backend="tableau")
            s, d = ideal_value(label, basis)
            if s:
                assert np.all(res.values["s"] == s)
            if d:
                assert np.all(res.values["d"] == d)
            assert res.retention == 1.0
