import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floqsim import tomo
from floqsim.tomo import (BASES, CNOT_UNITARY, LQPT_INPUTS, basis_probabilities, channel_transfer_matrix,
                          from_pauli_vector, gate_fidelity, is_density_matrix, label_ket, lqpt, lqst,
                          pauli_index, pauli_vector, process_and_gate_fidelity, pure_state,
                          state_fidelity, trace_distance, transfer_matrix)


def random_rho(rng, rank=None):
    rank = rank or int(rng.integers(1, 5))
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_unitary(rng):
    q, r = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def exact_counts(rho, scale=1.0):
    return {b: list(basis_probabilities(rho, b) * scale) for b in BASES}


def sampled_counts(rho, shots, rng):
    return {b: list(rng.multinomial(shots, np.clip(basis_probabilities(rho, b), 0, None) /
                                    np.clip(basis_probabilities(rho, b), 0, None).sum()))
            for b in BASES}


def test_lqst_zero_zero():
    rho = lqst(exact_counts(pure_state(label_ket("0", "0"))))
    assert np.allclose(rho, np.diag([1, 0, 0, 0]), atol=1e-6)


def test_lqst_sampled_trace_distance():
    rng = np.random.default_rng(0)
    for _ in range(5):
        rho = random_rho(rng)
        est = lqst(sampled_counts(rho, 100_000, rng))
        assert trace_distance(est, rho) <= 0.02


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(5, 200))
def test_lqst_always_physical(seed, shots):
    rng = np.random.default_rng(seed)
    counts = {b: list(rng.integers(0, shots, size=4) + (1 if b == "ZZ" else 0)) for b in BASES}
    for b in BASES:
        if sum(counts[b]) == 0:
            counts[b][0] = 1
    assert is_density_matrix(lqst(counts))


def test_lqst_errors():
    c = exact_counts(np.eye(4) / 4)
    with pytest.raises(ValueError):
        lqst({**c, "XY": [0, 0, 0, 0]})
    c.pop("ZZ")
    with pytest.raises(KeyError):
        lqst(c)


def test_pauli_vector_examples():
    p = pauli_vector(pure_state(label_ket("0", "0")))
    for lab in ("II", "IZ", "ZI", "ZZ"):
        assert p[pauli_index(lab)] == pytest.approx(1)
    assert np.abs(np.delete(p, [pauli_index(x) for x in ("II", "IZ", "ZI", "ZZ")])).max() < 1e-12
    mixed = pauli_vector(np.eye(4) / 4)
    assert mixed[0] == pytest.approx(1) and np.abs(mixed[1:]).max() < 1e-12
    bell = pauli_vector(pure_state(np.array([1, 0, 0, 1]) / np.sqrt(2)))
    assert bell[pauli_index("XX")] == pytest.approx(1)
    assert bell[pauli_index("YY")] == pytest.approx(-1)
    assert bell[pauli_index("ZZ")] == pytest.approx(1)


def test_pauli_vector_zero_trace():
    with pytest.raises(ValueError):
        pauli_vector(np.zeros((4, 4)))


@given(st.integers(0, 2**31))
def test_pauli_vector_roundtrip(seed):
    rho = random_rho(np.random.default_rng(seed))
    p = pauli_vector(rho)
    assert p[0] == pytest.approx(1) and np.all(np.abs(p) <= 1 + 1e-12)
    assert np.allclose(pauli_vector(from_pauli_vector(p)), p, atol=1e-9)


def _pairs(channel):
    ins = [pauli_vector(pure_state(label_ket(a, b))) for a, b in LQPT_INPUTS]
    outs = [channel(pure_state(label_ket(a, b))) for a, b in LQPT_INPUTS]
    return ins, [pauli_vector(o) for o in outs]


def test_lqpt_identity():
    ins, outs = _pairs(lambda r: r)
    assert np.allclose(lqpt(ins, outs), np.eye(16), atol=1e-9)


def test_lqpt_ideal_cnot():
    ins, outs = _pairs(lambda r: CNOT_UNITARY @ r @ CNOT_UNITARY.T)
    R = lqpt(ins, outs)
    assert np.allclose(R, transfer_matrix(CNOT_UNITARY), atol=1e-9)
    assert np.allclose(np.abs(R).sum(axis=1), 1)
    assert process_and_gate_fidelity(R, transfer_matrix(CNOT_UNITARY)) == pytest.approx((1, 1))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 1))
def test_lqpt_recovers_cptp_map(seed, p):
    u = random_unitary(np.random.default_rng(seed))

    def channel(r):
        return (1 - p) * u @ r @ u.conj().T + p * np.eye(4) / 4

    ins, outs = _pairs(channel)
    kraus = [np.sqrt(1 - p) * u] + [np.sqrt(p) / 4 * s for s in tomo.pauli_basis()]
    assert np.allclose(lqpt(ins, outs), channel_transfer_matrix(kraus), atol=1e-8)


def test_lqpt_rank_deficient():
    ins, outs = _pairs(lambda r: r)
    ins[3] = ins[2]
    with pytest.raises(np.linalg.LinAlgError, match="condition"):
        lqpt(ins, outs)


def test_lqpt_cptp_flag_keeps_unitary():
    ins, outs = _pairs(lambda r: CNOT_UNITARY @ r @ CNOT_UNITARY.T)
    assert np.allclose(lqpt(ins, outs, cptp=True), transfer_matrix(CNOT_UNITARY), atol=1e-8)


def test_fidelity_formulas():
    assert gate_fidelity(0.802) == pytest.approx(0.8416)
    assert gate_fidelity(1.0) == 1.0
    fp, _ = process_and_gate_fidelity(transfer_matrix(CNOT_UNITARY), np.eye(16))
    assert fp == pytest.approx(0.25)


@given(st.integers(0, 2**31))
def test_self_process_fidelity(seed):
    R = transfer_matrix(random_unitary(np.random.default_rng(seed)))
    assert process_and_gate_fidelity(R, R)[0] == pytest.approx(1)


def test_state_fidelity_examples():
    rng = np.random.default_rng(1)
    psi = random_unitary(rng)[:, 0]
    t = pure_state(psi)
    assert state_fidelity(t, t) == pytest.approx(1)
    assert state_fidelity(np.eye(4) / 4, t) == pytest.approx(0.25)
