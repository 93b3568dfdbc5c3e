
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floqsim.bs import (BS_STATES, _pair_cost, bs_mode_circuits, decode_batch, decode_static_mwpm,
                        run_bs)
from floqsim.fitting import fit_exp_decay
from floqsim.noise import NoiseModel
from floqsim.runner import exact_expectations


def brute_force(defects):
    """(min cost, set of logical flips achieving it) over all matchings with boundaries."""
    if not defects:
        return 0, {0}
    first, rest = defects[0], defects[1:]
    best, flips = None, set()
    cost, f = brute_force(rest)
    options = [(1 + cost, f)]
    for j, other in enumerate(rest):
        c, space = _pair_cost(first, other)
        cost, f = brute_force(rest[:j] + rest[j + 1:])
        options.append((c + cost, {x ^ space for x in f}))
    for c, f in options:
        if best is None or c < best:
            best, flips = c, set(f)
        elif c == best:
            flips |= f
    return best, flips


def test_no_events_no_correction():
    assert decode_static_mwpm(np.zeros((5, 2), dtype=bool)) == 0


def test_timelike_pair_unchanged():
    ev = np.zeros((6, 2), dtype=bool)
    ev[2, 0] = ev[3, 0] = True
    assert decode_static_mwpm(ev) == 0


def test_spacelike_pair_flips():
    ev = np.zeros((4, 2), dtype=bool)
    ev[1, 0] = ev[1, 1] = True
    assert decode_static_mwpm(ev) == 1


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31))
def test_decoder_matches_brute_force(rounds, seed):
    rng = np.random.default_rng(seed)
    ev = rng.random((rounds, 2)) < 0.3
    if ev.sum() > 8:
        ev[:] = False
    defects = [(int(t), int(k)) for t, k in zip(*np.nonzero(ev))]
    _, flips = brute_force(defects)
    assert decode_static_mwpm(ev) in flips


def test_decode_batch_consistent():
    rng = np.random.default_rng(1)
    ev = rng.random((200, 4, 2)) < 0.2
    out = decode_batch(ev)
    assert all(out[i] == decode_static_mwpm(ev[i]) for i in range(200))


@pytest.mark.parametrize("label", ["0", "1", "+", "-"])
def test_noiseless_memory_exact(code, label):
    exp = bs_mode_circuits(label, 3, code)
    want = {"0": 1, "1": -1, "+": 1, "-": -1}[label]
    e = exact_expectations(exp.circuit, {"L": exp.logical})
    assert e["L"] == pytest.approx(want, abs=1e-9)
    run = run_bs(exp, 256, seed=2)
    assert np.all(run.logical == want) and run.retained.all()


def test_noiseless_plus_five_rounds(code):
    run = run_bs(bs_mode_circuits("+", 5, code, lowering="ancilla"), 512, seed=4)
    assert np.all(run.logical == 1) and np.all(run.corrected == 1)


@pytest.mark.parametrize("label,basis", [("0", "Z"), ("+", "X"), ("+i", "Y"), ("1", "Z")])
def test_y90_four_times_is_identity(code, label, basis):
    base = bs_mode_circuits(label, 2, code, basis=basis)
    turned = bs_mode_circuits(label, 2, code, [("Y90", 1)] * 4, basis=basis)
    a = exact_expectations(base.circuit, {"L": base.logical})["L"]
    b = exact_expectations(turned.circuit, {"L": turned.logical})["L"]
    assert a == pytest.approx(b, abs=1e-9)


def test_y90_maps_zero_to_plus(code):
    exp = bs_mode_circuits("0", 2, code, [("Y90", 1)], basis="X")
    assert exact_expectations(exp.circuit, {"L": exp.logical})["L"] == pytest.approx(1)


@pytest.mark.parametrize("gate,label,basis,want", [("X", "0", "Z", -1), ("Z", "+", "X", -1),
                                                    ("Y", "0", "Z", -1), ("I", "-", "X", -1)])
def test_transversal_paulis(code, gate, label, basis, want):
    exp = bs_mode_circuits(label, 2, code, [(gate, 1)], basis=basis)
    assert exact_expectations(exp.circuit, {"L": exp.logical})["L"] == pytest.approx(want)


def test_bad_inputs(code):
    with pytest.raises(ValueError):
        bs_mode_circuits("2", 1, code)
    with pytest.raises(ValueError):
        bs_mode_circuits("0", 1, code, [("H", 1)])
    assert set(BS_STATES) >= {"0", "1", "+", "-"}


def test_corrected_beats_raw_at_default_noise(code):
    raw, cor = [], []
    rounds = [1, 2, 3, 4, 5, 6]
    for r in rounds:
        run = run_bs(bs_mode_circuits("0", r, code, lowering="ancilla"), 20_000, NoiseModel(), seed=r)
        raw.append(run.mean("raw"))
        cor.append(run.mean("correct"))
    assert fit_exp_decay(rounds, cor).params["eps"] < fit_exp_decay(rounds, raw).params["eps"]


def test_detection_dips_at_edges(code):
    run = run_bs(bs_mode_circuits("0", 8, code, lowering="ancilla"), 20_000, NoiseModel(), seed=9)
    z = run.detection_rate[:, 2:]          # Z-check rows; final row is recomputed from data
    middle = z[2:-2].mean()
    assert z[0].mean() < middle and z[-1].mean() < middle
