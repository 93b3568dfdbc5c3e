"""Circuit generation for the FBS code: encodings, stabilizer rounds, gates, readout.

Two lowerings exist.  ``direct`` measures each check as one joint Pauli
measurement.  ``ancilla`` is CZ-native: every check gets its own ancilla
(reset, H, CZs to the data, H, Z readout) with data qubits idling under
dynamical decoupling during the readout window.  ``ancilla-noreset`` skips the
reset, so consecutive readouts of one ancilla accumulate and are folded back
in post-processing.

All sign corrections are software: circuits never branch on outcomes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

from .core import Circuit, Gate, IdleDD, MeasurePauli, PauliString, ResetZ, Sym
from .fbs import (N_DATA, ROUND_STABILIZER, ROUNDS, STABILIZER_TEXT, FbsCode,
                  LogicalResult, SignFrame, data_pauli, data_tag, detectors,
                  form_after, is_ft_basis, logical_measurement, measurement_bases,
                  round_type, tag, update_sign_frame)

LOWERINGS = ("direct", "ancilla", "ancilla-noreset")
STATES = {"0": ("Z", 1), "1": ("Z", -1), "+": ("X", 1), "-": ("X", -1),
          "+i": ("Y", 1), "-i": ("Y", -1)}

# 14 nearest-neighbour CNOTs on the chain D1 - a1 - D4 - a2 - D7 (chain
# positions 0..4) mapping (b1, b4, b7) -> (b4^b7, b4, b1^b4) with both
# ancillas returned to |0>; found by breadth-first search over GF(2) maps.
CNOT_CHAIN = ((0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (4, 3), (3, 2), (2, 1),
              (1, 0), (3, 4), (2, 3), (1, 2), (0, 1), (4, 3))


def parse_label(label) -> tuple[str, str]:
    """``"+,0"`` or ``("+", "0")`` -> ("+", "0"); accepts the unicode minus."""
    if isinstance(label, str):
        parts = label.replace("−", "-").replace(" ", "").split(",")
    else:
        parts = [str(p).replace("−", "-") for p in label]
    if len(parts) != 2 or any(p not in STATES for p in parts):
        raise ValueError(f"unknown logical state label {label!r}")
    return parts[0], parts[1]


def all_labels() -> list[str]:
    return [f"{a},{b}" for a in STATES for b in STATES]


def ft_labels() -> list[str]:
    return [f"{a},{b}" for a in "01+-" for b in "01+-"]


class _Builder:
    """Accumulates instructions on the 9 data + 12 check-ancilla register."""

    def __init__(self, code: FbsCode, lowering: str):
        if lowering not in LOWERINGS:
            raise ValueError(f"lowering must be one of {LOWERINGS}")
        self.code = code
        self.lowering = lowering
        self.n = code.n_qubits
        self.ops: list = []

    def g(self, name, *qubits, angle=None):
        self.ops.append(Gate(name, tuple(qubits), angle))

    def cnot(self, c, t):
        if self.lowering == "direct":
            self.g("CNOT", c, t)
        else:
            self.g("H", t)
            self.g("CZ", c, t)
            self.g("H", t)

    def rz(self, q, angle):
        """Z rotation, emitted as a Clifford gate when the angle allows it."""
        k = angle / (math.pi / 2)
        if abs(k - round(k)) < 1e-12:
            name = {0: None, 1: "S", 2: "Z", 3: "SDG"}[int(round(k)) % 4]
            if name:
                self.g(name, q)
        else:
            self.g("RZ", q, angle=angle)

    def measure(self, pauli: PauliString, t: str):
        self.ops.append(MeasurePauli(pauli.embed(self.n) if pauli.n_qubits < self.n else pauli, t))

    def circuit(self) -> Circuit:
        return Circuit(self.n, tuple(self.ops))


def _to_z(b: _Builder, q: int, letter: str):
    if letter == "X":
        b.g("H", q)
    elif letter == "Y":
        b.g("SDG", q)
        b.g("H", q)


def _from_z(b: _Builder, q: int, letter: str):
    if letter == "X":
        b.g("H", q)
    elif letter == "Y":
        b.g("H", q)
        b.g("S", q)


def _measure_group(b: _Builder, items: Sequence[tuple[PauliString, int, str]], reset: bool = True,
                   order: Sequence[int] | None = None):
    """Measure commuting Paulis ``(pauli, ancilla, tag)`` in parallel.

    Ancilla lowering: prepare all ancillas, rotate data so each Pauli becomes
    Z-type, CZ column by column, rotate back, then read out all ancillas
    together while data qubits idle.  ``order`` fixes the data order of the
    CZs (default: column by column).
    """
    if b.lowering == "direct":
        for p, _, t in items:
            b.measure(p, t)
        return
    letters: dict[int, str] = {}
    for p, _, _ in items:
        for q, c in p.sparse().items():
            if letters.setdefault(q, c) != c:
                raise ValueError("parallel checks disagree on a data qubit basis")
    for _, a, _ in items:
        if reset:
            b.ops.append(ResetZ(a))
        b.g("H", a)
    for q in sorted(letters):
        _to_z(b, q, letters[q])
    rank = (lambda q: order.index(q)) if order is not None else (lambda q: q % 3)
    pairs = [(rank(q), q, a) for p, a, _ in items for q in p.support]
    for _, q, a in sorted(pairs):
        b.g("CZ", a, q)
    for q in sorted(letters):
        _from_z(b, q, letters[q])
    for _, a, _ in items:
        b.g("H", a)
    for _, a, t in items:
        b.measure(PauliString.single(b.n, a, "Z"), t)
    b.ops.append(IdleDD(tuple(range(N_DATA))))


def _round_ops(b: _Builder, i: int):
    code = b.code
    q = round_type(i)
    items = [(code.gauge_checks[c], code.ancillas[c], tag(i, c)) for c in code.schedule[q]]
    _measure_group(b, items, reset=b.lowering != "ancilla-noreset")


def stabilizer_round_circuit(code: FbsCode, q: str, lowering: str = "direct",
                             index: int | None = None) -> Circuit:
    """One round of the period-4 schedule; ``index`` is the 1-based round number used in tags."""
    if q not in ROUNDS:
        raise ValueError(f"round must be one of {ROUNDS}")
    i = index if index is not None else ROUNDS.index(q) + 1
    if round_type(i) != q:
        raise ValueError(f"round index {i} is a {round_type(i)} round, not {q}")
    b = _Builder(code, lowering)
    _round_ops(b, i)
    return b.circuit()


# ---------------------------------------------------------------------------
# Encoding


@dataclass(frozen=True)
class Encoding:
    """Encoding circuit plus what post-processing needs to know about it.

    ``initial`` maps each weight-6 stabilizer to its prepared value (an int,
    or a :class:`Sym` over encoding-measurement tags).  ``frame`` is the
    starting sign frame, carrying any software Pauli used to relabel a
    measured branch onto the requested state.
    """
    label: tuple
    circuit: Circuit
    ft: bool
    initial: Mapping[str, Any]
    frame: SignFrame
    postselect: tuple = ()


def _pauli_ops(b: _Builder, text: str):
    for letter, k in zip(text[::2], text[1::2]):
        b.g(letter, int(k) - 1)


def _rows_ghz(b: _Builder):
    for r in range(3):
        q0 = 3 * r
        b.g("H", q0)
        b.cnot(q0, q0 + 1)
        b.cnot(q0 + 1, q0 + 2)


def _columns_ghz(b: _Builder):
    for c in range(3):
        b.g("H", c)
        b.cnot(c, c + 3)
        b.cnot(c + 3, c + 6)
    for q in range(N_DATA):
        b.g("H", q)


# CZ data order of the single-ancilla weight-6 measurements.  The first three
# partners form an L, so no mid-sequence ancilla fault leaves a row or column
# (a static logical) on the data; found by exhaustive fault injection.
W6_ORDER = {
    "SXA": (3, 4, 6, 5, 7, 8), "SXC": (0, 1, 3, 2, 4, 5),
    "SZB": (1, 2, 4, 5, 7, 8), "SZD": (0, 3, 1, 4, 6, 7),
}


def _weight6_measure(b: _Builder, names: Sequence[str]):
    anc = {"SXA": "x58", "SXC": "x25", "SZB": "z56", "SZD": "z45"}
    for s in names:
        item = (data_pauli(STABILIZER_TEXT[s]), b.code.ancillas[anc[s]], f"enc.{s}")
        _measure_group(b, [item], order=W6_ORDER.get(s))


def _rotate_static(b: _Builder, letter: str, angle: float):
    """exp(-i angle/2 P_s) through one ancilla (the P_s parity is computed and uncomputed)."""
    support = {"Z": (1, 4, 7), "X": (3, 4, 5)}[letter]
    a = b.code.ancillas["x58"]
    b.ops.append(ResetZ(a))
    if letter == "X":
        for q in support:
            b.g("H", q)
    for q in support:
        b.cnot(q, a)
    b.rz(a, angle)
    for q in reversed(support):
        b.cnot(q, a)
    if letter == "X":
        for q in support:
            b.g("H", q)


def encode_circuit(label, code: FbsCode, lowering: str = "direct") -> Encoding:
    """Prepare logical Pauli state ``label`` = (static, dynamical) from all-|0>."""
    s_lab, d_lab = parse_label(label)
    (sb, ss), (db, ds) = STATES[s_lab], STATES[d_lab]
    b = _Builder(code, lowering)
    initial = dict.fromkeys(("SXA", "SZB", "SXC", "SZD"), 1)
    frame = SignFrame()
    base_s = "X" if sb == "Y" else sb
    base_d = db
    if db == "Y":
        base_d = "X" if base_s == "Z" else "Z"
    if base_s == "Z" and base_d == "X":
        _columns_ghz(b)
    elif base_s == "X" and base_d == "Z":
        _rows_ghz(b)
    elif base_s == "Z":  # Z,Z product state
        pass
    else:  # X,X product state
        for q in range(N_DATA):
            b.g("H", q)
    # logical flips, chosen among the round-A operators
    if sb in "XZ" and ss == -1:
        _pauli_ops(b, {"Z": "X4X5X6", "X": "Z2Z5Z8"}[sb])
    if db in "XZ" and ds == -1:
        _pauli_ops(b, {"Z": "X1X4", "X": "Z1Z3"}[db])
    if sb == "Y":
        _rotate_static(b, "Z", ss * math.pi / 2)
    measured = ()
    if base_s == base_d:
        measured = ("SXA", "SXC") if base_s == "Z" else ("SZB", "SZD")
        _weight6_measure(b, measured)
        for s in measured:
            initial[s] = Sym.of(f"enc.{s}")
    post = ()
    if db == "Y":
        # Y_d = (Y1 X4 Z2)(Z2 Z3); its parity picks the branch, relabelled in software
        a1, a2 = code.ancillas["x14"], code.ancillas["z23"]
        _measure_group(b, [(data_pauli("Y1X4Z2"), a1, "enc.y1x4z2"),
                           (data_pauli("Z2Z3"), a2, "enc.z2z3")])
        parity = Sym(("enc.y1x4z2", "enc.z2z3"))
        frame = frame.with_virtual("Zd", parity * ds)
        post = ("enc.y1x4z2", "enc.z2z3")
    ft = sb in "XZ" and db in "XZ"
    frame = replace(frame, initial=dict(initial))
    return Encoding((s_lab, d_lab), b.circuit(), ft, initial, frame, post)


# ---------------------------------------------------------------------------
# Logical gates


@dataclass(frozen=True)
class GateFragment:
    """Circuit inserted after round ``after_round`` plus its frame rule."""
    name: str
    after_round: int
    circuit: Circuit
    rule: Callable[[SignFrame], SignFrame]
    ft: bool


STATIC_PAULI = {"Xs": "X4X5X6", "Zs": "Z2Z5Z8", "Ys": "Z2X4Y5X6Z8"}
DYN_ROUND = {"Pd": "B", "RZd": "B", "RXd": "C", "CNOT": "B"}


def _identity_rule(frame: SignFrame) -> SignFrame:
    return frame


def _cnot_rule(frame: SignFrame) -> SignFrame:
    v = dict(frame.virtual)
    # conjugate pending software Paulis through the CNOT, then add Z_s^(Gamma_X)
    v["Xd"] = v["Xd"] * v["Xs"]
    v["Zs"] = v["Zs"] * v["Zd"] * frame.gamma_x
    return replace(frame, virtual=v)


def logical_gate_circuit(code: FbsCode, gate: str, after_round: int, angle: float | None = None,
                         lowering: str = "direct") -> GateFragment:
    """Gate fragment for ``gate`` inserted right after round ``after_round``.

    Gates: ``Xs Ys Zs`` (any round), ``Xd Yd Zd`` / ``RZd`` / ``CNOT`` (after a
    B round), ``RXd`` (after a C round), ``RZs`` / ``RXs`` (any round).
    """
    b = _Builder(code, lowering)
    rule = _identity_rule
    ft = True
    form = form_after(after_round)
    if gate in STATIC_PAULI:
        _pauli_ops(b, STATIC_PAULI[gate])
    elif gate in ("Xd", "Yd", "Zd"):
        _require(form, "B", gate)
        _pauli_ops(b, str_of(code.dynamical["B"][gate[0]]))
    elif gate == "RZd":
        _require(form, "B", gate)
        a = code.ancillas["z78"]
        b.ops.append(ResetZ(a))
        b.cnot(6, a)
        b.cnot(7, a)
        b.rz(a, _angle(angle))
        b.cnot(7, a)
        b.cnot(6, a)
        rule = lambda f: f.with_virtual("Xd", f.gamma_z)  # noqa: E731
        ft = False
    elif gate == "RXd":
        _require(form, "C", gate)
        a = code.ancillas["x47"]
        b.ops.append(ResetZ(a))
        b.g("H", 3)
        b.g("H", 6)
        b.cnot(3, a)
        b.cnot(6, a)
        b.rz(a, _angle(angle))
        b.cnot(6, a)
        b.cnot(3, a)
        b.g("H", 3)
        b.g("H", 6)
        rule = lambda f: f.with_virtual("Zd", f.gamma_x)  # noqa: E731
        ft = False
    elif gate in ("RZs", "RXs"):
        _rotate_static(b, gate[1], _angle(angle))
        ft = False
    elif gate == "CNOT":
        _require(form, "B", gate)
        chain = (0, code.ancillas["x14"], 3, code.ancillas["x47"], 6)
        for q in (chain[1], chain[3]):
            b.ops.append(ResetZ(q))
        for c, t in CNOT_CHAIN:
            b.cnot(chain[c], chain[t])
        rule = _cnot_rule
        ft = False
    else:
        raise ValueError(f"unknown logical gate {gate!r}")
    return GateFragment(gate, after_round, b.circuit(), rule, ft)


def str_of(p: PauliString) -> str:
    return "".join(f"{c}{q + 1}" for q, c in sorted(p.sparse().items()))


def _angle(angle):
    if angle is None:
        raise ValueError("rotation gates need an angle")
    return float(angle)


def _require(form: str, want: str, gate: str):
    if form != want:
        raise ValueError(f"{gate} must be inserted after a {want} round, not after {form}")


# ---------------------------------------------------------------------------
# Readout


def readout_circuit(code: FbsCode, basis: str, r: int, lowering: str = "direct") -> Circuit:
    """Single-qubit data readout for logical basis ``basis`` after ``r`` rounds."""
    b = _Builder(code, lowering)
    bases = measurement_bases(code, basis, r)
    for q in range(N_DATA):
        letter = bases[q]
        if lowering == "direct":
            b.measure(PauliString.single(b.n, q, letter), data_tag(q + 1))
        else:
            _to_z(b, q, letter)
            b.measure(PauliString.single(b.n, q, "Z"), data_tag(q + 1))
    return b.circuit()


# ---------------------------------------------------------------------------
# Whole experiments


@dataclass(frozen=True)
class Experiment:
    """A complete encode / rounds / gates / readout circuit with symbolic post-processing.

    ``logical`` holds the static and dynamical values and the recomputed
    stabilizers as :class:`Sym` expressions over the outcome tags.
    ``segments`` maps ``encode``, ``round{i}``, ``{gate}@{i}`` and ``readout``
    to half-open instruction ranges of ``circuit``.
    """
    label: tuple
    basis: str
    n_rounds: int
    circuit: Circuit
    frame: SignFrame
    logical: LogicalResult
    detectors: list
    ft: bool
    encoding: Encoding
    segments: dict = field(default_factory=dict)


def folded_record(circuit: Circuit) -> dict:
    """Tag -> value after undoing ancilla accumulation.

    A single-qubit Z readout of a qubit that was read before without an
    intervening reset reports the product of both values; multiplying by the
    previous raw outcome recovers the fresh one.  With resets this is the
    identity map.
    """
    last: dict[int, Sym] = {}
    out = {}
    for ins in circuit:
        if isinstance(ins, ResetZ):
            last.pop(ins.qubit, None)
        elif isinstance(ins, MeasurePauli):
            raw = Sym.of(ins.tag)
            sp = ins.pauli.sparse()
            if len(sp) == 1 and next(iter(sp.values())) == "Z":
                q = next(iter(sp))
                out[ins.tag] = raw * last[q] if q in last else raw
                last[q] = raw
            else:
                out[ins.tag] = raw
    return out


def build_experiment(code: FbsCode, label, basis: str, n_rounds: int,
                     gates: Sequence[tuple] = (), lowering: str = "direct") -> Experiment:
    """Encode ``label``, run ``n_rounds`` rounds with ``gates`` inserted, read out in ``basis``.

    ``gates`` items are ``(gate, after_round)`` or ``(gate, after_round, angle)``.
    """
    enc = encode_circuit(label, code, lowering)
    by_round: dict[int, list] = {}
    for g in gates:
        name, after = g[0], g[1]
        if not 0 <= after <= n_rounds:
            raise ValueError(f"gate {name} after round {after} is outside the experiment")
        by_round.setdefault(after, []).append(
            logical_gate_circuit(code, name, after, g[2] if len(g) > 2 else None, lowering))
    parts = [("encode", enc.circuit)] + [(f"{f.name}@0", f.circuit) for f in by_round.get(0, [])]
    for i in range(1, n_rounds + 1):
        b = _Builder(code, lowering)
        _round_ops(b, i)
        parts.append((f"round{i}", b.circuit()))
        parts.extend((f"{f.name}@{i}", f.circuit) for f in by_round.get(i, []))
    parts.append(("readout", readout_circuit(code, basis, n_rounds, lowering)))
    segments, start = {}, 0
    for name, part in parts:
        segments[name] = (start, start + len(part))
        start += len(part)
    parts = [p for _, p in parts]
    circuit = Circuit(code.n_qubits, tuple(op for p in parts for op in p))
    record = folded_record(circuit)
    frame = enc.frame
    ft = enc.ft
    for i in range(0, n_rounds + 1):
        if i:
            frame = update_sign_frame(frame, record)
        for frag in by_round.get(i, []):
            frame = frag.rule(frame)
            ft = ft and frag.ft
    data = {k: record[data_tag(k)] for k in range(1, N_DATA + 1)}
    res = logical_measurement(code, basis, n_rounds, data, frame)
    initial = {s: (v.evaluate(record) if isinstance(v, Sym) else v) for s, v in enc.initial.items()}
    dets = detectors(n_rounds, initial, res.stabilizers, record=record)
    return Experiment(enc.label, basis, n_rounds, circuit, frame, res, dets,
                      ft and is_ft_basis(basis), enc, segments)


def ideal_value(label, basis: str) -> tuple[float, float]:
    """Noiseless expectations of the static and dynamical operators in ``basis``."""
    out = []
    for lab, letter in zip(parse_label(label), basis):
        b, s = STATES[lab]
        out.append(float(s) if b == letter else 0.0)
    return out[0], out[1]
