"""Floquet-Bacon-Shor code on a 3x3 lattice: schedule, sign frames, readout, detectors.

Data qubits D1..D9 are indices 0..8 (row-major).  A static logical qubit is
carried by the Bacon-Shor gauge structure; a dynamical one lives in the gauge
and hops between operator forms as the period-4 schedule A, B, C, D proceeds.
The sign of the dynamical operators after round ``r`` is a product of earlier
check outcomes, tracked by :class:`SignFrame`.

Outcome tags: ``r{i}.{check}`` for round ``i`` (1-based), ``m.D{k}`` for the
final single-qubit data readout.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Mapping

import numpy as np

from .core import PauliString, Sym, commutes

N_DATA = 9
ROUNDS = "ABCD"
STABILIZERS = ("SXA", "SZB", "SXC", "SZD")
ROUND_DURATION_NS = 920
READOUT_NS = 720

CHECKS = {
    "z12": "Z1Z2", "z23": "Z2Z3", "z45": "Z4Z5", "z56": "Z5Z6", "z78": "Z7Z8", "z89": "Z8Z9",
    "x14": "X1X4", "x25": "X2X5", "x36": "X3X6", "x47": "X4X7", "x58": "X5X8", "x69": "X6X9",
}

DEFAULT_SCHEDULE = {
    "A": ("x47", "x58", "x69", "x25"),
    "B": ("z23", "z56", "z89", "z45"),
    "C": ("x14", "x25", "x36", "x58"),
    "D": ("z12", "z45", "z78", "z56"),
}

# stabilizer measured in each round, as a product of three of that round's checks
ROUND_STABILIZER = {
    "A": ("SXA", ("x47", "x58", "x69")),
    "B": ("SZB", ("z23", "z56", "z89")),
    "C": ("SXC", ("x14", "x25", "x36")),
    "D": ("SZD", ("z12", "z45", "z78")),
}
STABILIZER_ROUND = {s: q for q, (s, _) in ROUND_STABILIZER.items()}
STABILIZER_TEXT = {
    "SXA": "X4X5X6X7X8X9", "SZB": "Z2Z3Z5Z6Z8Z9",
    "SXC": "X1X2X3X4X5X6", "SZD": "Z1Z2Z4Z5Z7Z8",
}

STATIC_TEXT = {"X": "X4X5X6", "Z": "Z2Z5Z8", "Y": "Z2X4Y5X6Z8"}
DYNAMICAL_TEXT = {
    "A": {"X": "X1X4", "Z": "Z1Z3", "Y": "Y1Z3X4"},
    "B": {"X": "X1X7", "Z": "Z7Z8", "Y": "X1Y7Z8"},
    "C": {"X": "X4X7", "Z": "Z7Z9", "Y": "X4Y7Z9"},
    "D": {"X": "X3X9", "Z": "Z8Z9", "Y": "X3Z8Y9"},
}

# sign update factor per round index residue: (check, round offset) pairs and
# an optional initial-stabilizer factor
GAMMA = {
    "X": {1: ((("x69", 0), ("x25", 0)), "SXC"),
          2: ((("x47", -1),), None),
          3: ((("x14", 0),), None),
          0: ((("x36", -1), ("x58", -1)), "SXA")},
    "Z": {1: ((("z12", -1), ("z56", -1)), "SZB"),
          2: ((("z23", 0), ("z45", 0)), "SZD"),
          3: ((("z89", -1),), None),
          0: ((("z78", 0),), None)},
}


class CodeError(ValueError):
    """The lattice/schedule data violates a structural invariant."""


class ScheduleError(KeyError):
    """A sign update referenced an outcome that is not in the record."""


def data_pauli(text: str, n: int = N_DATA) -> PauliString:
    """``"X1X4"`` -> PauliString on ``n`` qubits with D_k at index k-1."""
    letters = {}
    for letter, k in zip(text[::2], text[1::2]):
        letters[int(k) - 1] = letter
    return PauliString.from_letters(n, letters)


def round_type(i: int) -> str:
    """Round letter of 1-based round index ``i``."""
    if i < 1:
        raise ValueError("rounds are numbered from 1")
    return ROUNDS[(i - 1) % 4]


def form_after(r: int) -> str:
    """Operator form of the dynamical logicals after ``r`` rounds (A right after encoding)."""
    return "A" if r == 0 else round_type(r)


def tag(i: int, check: str) -> str:
    return f"r{i}.{check}"


def data_tag(k: int) -> str:
    return f"m.D{k}"


@dataclass(frozen=True)
class FbsCode:
    data_qubits: tuple
    ancillas: Mapping[str, int]
    gauge_checks: Mapping[str, PauliString]
    schedule: Mapping[str, tuple]
    stabilizers: Mapping[str, PauliString]
    static: Mapping[str, PauliString]
    dynamical: Mapping[str, Mapping[str, PauliString]]
    round_duration_ns: int = ROUND_DURATION_NS

    @property
    def n_qubits(self) -> int:
        return N_DATA + len(self.ancillas)

    def round_checks(self, q: str) -> tuple:
        return self.schedule[q]

    def stabilizer_of_round(self, q: str) -> tuple[str, tuple]:
        return ROUND_STABILIZER[q]

    def dynamical_at(self, r: int, letter: str) -> PauliString:
        return self.dynamical[form_after(r)][letter]


def _fail(msg):
    raise CodeError(msg)


def validate(code: FbsCode) -> None:
    """Check every structural invariant; raises :class:`CodeError`."""
    g = code.gauge_checks
    if len(g) != 12 or any(p.weight != 2 for p in g.values()):
        _fail("need 12 weight-2 gauge checks")
    if set(code.schedule) != set(ROUNDS):
        _fail("schedule must list rounds A-D")
    for q, checks in code.schedule.items():
        if len(checks) != 4 or len(set(checks)) != 4:
            _fail(f"round {q} must measure 4 distinct checks")
        kind = "x" if q in "AC" else "z"
        if any(c not in g or c[0] != kind for c in checks):
            _fail(f"round {q} mixes check types or names unknown checks")
        for a, b in itertools.combinations(checks, 2):
            if not commutes(g[a], g[b]):
                _fail(f"round {q}: {a} and {b} do not commute")
        stab, factors = ROUND_STABILIZER[q]
        if not set(factors) <= set(checks):
            _fail(f"round {q} does not contain the factors of {stab}")
        prod = PauliString.identity(N_DATA)
        for c in factors:
            prod = prod * g[c]
        if prod != code.stabilizers[stab]:
            _fail(f"checks of round {q} do not multiply to {stab}")
    xs, zs = code.static["X"], code.static["Z"]
    if commutes(xs, zs):
        _fail("static X and Z must anticommute")
    for name, p in code.static.items():
        for c, gp in g.items():
            if not commutes(p, gp):
                _fail(f"static {name} anticommutes with {c}")
    if (xs * zs) * PauliString(N_DATA, 0, 0, 1) != code.static["Y"]:
        _fail("static Y must equal i X Z")
    for q in ROUNDS:
        d = code.dynamical[q]
        if str(d["X"]) != str(data_pauli(DYNAMICAL_TEXT[q]["X"])) or \
                str(d["Z"]) != str(data_pauli(DYNAMICAL_TEXT[q]["Z"])):
            _fail(f"dynamical operators of form {q} do not match the reference table")
        if (d["X"] * d["Z"]) * PauliString(N_DATA, 0, 0, 1) != d["Y"]:
            _fail(f"dynamical Y of form {q} is not i X Z")
        for c in code.schedule[q]:
            for letter in "XZ":
                if not commutes(d[letter], g[c]):
                    _fail(f"form-{q} dynamical {letter} is not conserved by {c}")
    _validate_gamma(code)


def _validate_gamma(code: FbsCode) -> None:
    """Each sign-update factor must be present in the schedule and turn the old
    operator form into the new one."""
    g = code.gauge_checks
    for P, table in GAMMA.items():
        for res, (refs, stab) in table.items():
            i = res if res else 4
            i += 4  # a representative round index with i-1 >= 1 references valid
            prod = PauliString.identity(N_DATA)
            for c, off in refs:
                if c not in code.schedule[round_type(i + off)]:
                    _fail(f"gamma_{P} at i={res} mod 4 references {c} absent from round "
                          f"{round_type(i + off)}")
                prod = prod * g[c]
            if stab is not None:
                prod = prod * code.stabilizers[stab]
            old = code.dynamical[round_type(i - 1)][P]
            new = code.dynamical[round_type(i)][P]
            if old * prod != new:
                _fail(f"gamma_{P} at i={res} mod 4 does not map form "
                      f"{round_type(i - 1)} to {round_type(i)}")


def build_code(schedule: Mapping[str, tuple] | None = None,
               check_oracle: bool = True) -> FbsCode:
    """Construct and validate the 3x3 code.

    ``schedule`` may override the per-round check lists; any override must
    pass the same invariants and the noiseless preservation check.
    """
    sched = {q: tuple(v) for q, v in (schedule or DEFAULT_SCHEDULE).items()}
    gauge = {name: data_pauli(t) for name, t in CHECKS.items()}
    stabs = {name: data_pauli(t) for name, t in STABILIZER_TEXT.items()}
    static = {k: data_pauli(t) for k, t in STATIC_TEXT.items()}
    dyn = {q: {k: data_pauli(t) for k, t in v.items()} for q, v in DYNAMICAL_TEXT.items()}
    ancillas = {name: N_DATA + i for i, name in enumerate(CHECKS)}
    code = FbsCode(tuple(range(N_DATA)), ancillas, gauge, sched, stabs, static, dyn)
    validate(code)
    if check_oracle:
        _preservation_oracle(tuple((q, sched[q]) for q in ROUNDS))
    return code


# ---------------------------------------------------------------------------
# Sign frames


@dataclass(frozen=True)
class SignFrame:
    """Accumulated signs of the dynamical operators after ``r`` rounds.

    Values are +-1 ints or :class:`~floqsim.core.Sym` parity expressions.
    ``initial`` holds the encoded stabilizer values; ``None`` means unknown,
    in which case the first measured value is adopted when needed.
    ``virtual`` records Pauli corrections applied in software (keys ``Xs``,
    ``Zs``, ``Xd``, ``Zd``; value -1 means the Pauli is applied).
    """
    r: int = 0
    gamma_x: Any = 1
    gamma_z: Any = 1
    initial: Mapping[str, Any] = field(default_factory=lambda: dict.fromkeys(STABILIZERS, 1))
    virtual: Mapping[str, Any] = field(default_factory=lambda: dict.fromkeys(("Xs", "Zs", "Xd", "Zd"), 1))

    @property
    def gamma_y(self):
        return self.gamma_x * self.gamma_z

    def gamma(self, letter: str):
        return {"X": self.gamma_x, "Z": self.gamma_z, "Y": self.gamma_y}[letter]

    def with_virtual(self, name: str, value) -> "SignFrame":
        v = dict(self.virtual)
        v[name] = v[name] * value
        return replace(self, virtual=v)

    def outcome_multiplier(self, qubit: str, letter: str):
        """Factor by which software Paulis flip a logical outcome ('s' or 'd')."""
        vx, vz = self.virtual["X" + qubit], self.virtual["Z" + qubit]
        return {"X": vz, "Z": vx, "Y": vx * vz}[letter]


def _lookup(outcomes: Mapping, key: str):
    try:
        return outcomes[key]
    except KeyError:
        raise ScheduleError(f"outcome {key} is required by the sign update") from None


def measured_stabilizer(outcomes: Mapping, i: int):
    """Value of the weight-6 stabilizer measured in round ``i``."""
    _, factors = ROUND_STABILIZER[round_type(i)]
    v = 1
    for c in factors:
        v = v * _lookup(outcomes, tag(i, c))
    return v


def update_sign_frame(frame: SignFrame, outcomes: Mapping) -> SignFrame:
    """Advance the frame past round ``frame.r + 1`` using its outcomes.

    Round 1 contributes nothing: encodings define the dynamical logicals in
    their round-A form, which every round-A check conserves.
    """
    i = frame.r + 1
    if i == 1:
        return replace(frame, r=1)
    initial = dict(frame.initial)
    out = {}
    for P in "XZ":
        refs, stab = GAMMA[P][i % 4]
        g = 1
        for c, off in refs:
            g = g * _lookup(outcomes, tag(i + off, c))
        if stab is not None:
            if initial[stab] is None:
                first = ROUNDS.index(STABILIZER_ROUND[stab]) + 1
                initial[stab] = measured_stabilizer(outcomes, first) if first < i else 1
            g = g * initial[stab]
        out[P] = g
    return replace(frame, r=i, gamma_x=frame.gamma_x * out["X"],
                   gamma_z=frame.gamma_z * out["Z"], initial=initial)


def advance(frame: SignFrame, outcomes: Mapping, n_rounds: int) -> SignFrame:
    for _ in range(n_rounds):
        frame = update_sign_frame(frame, outcomes)
    return frame


# ---------------------------------------------------------------------------
# Logical readout


def _required_letters(code: FbsCode, basis: str, r: int) -> dict[int, str]:
    need: dict[int, str] = {}
    ops = [code.static[basis[0]], code.dynamical_at(r, basis[1])]
    for op in ops:
        for q, c in op.sparse().items():
            if need.get(q, c) != c:
                raise CodeError(f"basis {basis} needs conflicting letters on D{q + 1}")
            need[q] = c
    return need


def computable_stabilizers(code: FbsCode, bases: Mapping[int, str]) -> list[str]:
    out = []
    for s in STABILIZERS:
        if all(bases.get(q) == c for q, c in code.stabilizers[s].sparse().items()):
            out.append(s)
    return out


@lru_cache(maxsize=None)
def _bases_cached(basis: str, r_form: str) -> tuple:
    code = _reference_code()
    r = ROUNDS.index(r_form) + 1
    need = _required_letters(code, basis, r)
    free = [q for q in range(N_DATA) if q not in need]
    best, best_n = None, -1
    for choice in itertools.product("XZ", repeat=len(free)):
        bases = dict(need)
        bases.update(zip(free, choice))
        n = len(computable_stabilizers(code, bases))
        if n > best_n:
            best, best_n = bases, n
    return tuple(sorted(best.items()))


def measurement_bases(code: FbsCode, basis: str, r: int) -> dict[int, str]:
    """Single-qubit readout letter per data index for logical basis ``basis``.

    Qubits outside the logical operators are read in X or Z so that as many
    stabilizers as possible can be recomputed.
    """
    _check_basis(basis)
    return dict(_bases_cached(basis, form_after(r)))


def _check_basis(basis: str):
    if len(basis) != 2 or any(c not in "XYZ" for c in basis):
        raise ValueError(f"logical basis must be two letters from XYZ, got {basis!r}")


def is_ft_basis(basis: str) -> bool:
    return basis in ("XX", "ZZ")


@dataclass(frozen=True)
class LogicalResult:
    value_s: Any
    value_d: Any
    stabilizers: Mapping[str, Any]
    ft: bool


def _parity(op: PauliString, data: Mapping[int, Any]):
    v = 1 if op.phase == 0 else -1
    for q in op.support:
        try:
            v = v * data[q + 1]
        except KeyError:
            raise KeyError(f"missing outcome for data qubit D{q + 1}") from None
    return v


def logical_measurement(code: FbsCode, basis: str, r: int, data: Mapping[int, Any],
                        frame: SignFrame) -> LogicalResult:
    """Logical values from single-qubit data outcomes ``data`` (keys 1..9).

    ``data`` must have been read in :func:`measurement_bases`; values may be
    ints, arrays or :class:`Sym`.
    """
    _check_basis(basis)
    bases = measurement_bases(code, basis, r)
    missing = [k for k in range(1, N_DATA + 1) if k not in data]
    if missing:
        raise KeyError(f"missing outcomes for data qubits {missing}")
    ps, pd = basis
    vs = _parity(code.static[ps], data) * frame.outcome_multiplier("s", ps)
    vd = (frame.gamma(pd) * _parity(code.dynamical_at(r, pd), data)
          * frame.outcome_multiplier("d", pd))
    stabs = {s: _parity(code.stabilizers[s], data) for s in computable_stabilizers(code, bases)}
    return LogicalResult(vs, vd, stabs, is_ft_basis(basis))


# ---------------------------------------------------------------------------
# Detectors


@dataclass(frozen=True)
class Detector:
    label: str
    expr: Any  # Sym or +-1; value -1 means a detection event


def detectors(n_rounds: int, initial: Mapping[str, Any],
              final: Mapping[str, Any] | None = None,
              first_round: int = 1, record: Mapping | None = None) -> list[Detector]:
    """Symbolic detectors for rounds ``first_round..n_rounds`` plus the final readout.

    Each round's stabilizer is compared with the same stabilizer four rounds
    earlier, or with its encoded value; ``final`` maps stabilizer name to its
    value recomputed from data outcomes.  ``record`` maps round tags to their
    (possibly folded) values; by default each tag stands for itself.
    """
    out = []
    rec = record if record is not None else _SymRecord()
    latest = dict(initial)
    for i in range(first_round, n_rounds + 1):
        stab = ROUND_STABILIZER[round_type(i)][0]
        v = measured_stabilizer(rec, i)
        if latest.get(stab) is not None:
            out.append(Detector(f"r{i}.{stab}", v * latest[stab]))
        latest[stab] = v
    for stab, v in (final or {}).items():
        if latest.get(stab) is not None:
            out.append(Detector(f"final.{stab}", v * latest[stab]))
    return out


class _SymRecord(dict):
    def __missing__(self, key):
        return Sym.of(key)


@dataclass
class DetectorStream:
    labels: list
    events: np.ndarray   # (n_detectors, shots) bool
    retained: np.ndarray  # (shots,) bool

    @property
    def retention(self) -> float:
        return float(self.retained.mean()) if self.retained.size else 1.0


def evaluate_detectors(dets: list[Detector], record) -> DetectorStream:
    """Evaluate detectors on a :class:`~floqsim.frames.BatchRecord` or a single-shot dict."""
    if hasattr(record, "evaluate"):
        shots = record.shots
        ev = np.array([record.evaluate(d.expr) == -1 for d in dets], dtype=bool).reshape(len(dets), shots)
    else:
        ev = np.array([[_value(d.expr, record) == -1] for d in dets], dtype=bool).reshape(len(dets), 1)
    return DetectorStream([d.label for d in dets], ev, ~ev.any(axis=0))


def _value(expr, record):
    return expr.evaluate(record) if isinstance(expr, Sym) else expr


def detect(records: Mapping[str, int], n_rounds: int, initial: Mapping[str, Any],
           final: Mapping[str, Any] | None = None) -> DetectorStream:
    """Detection events of one shot from its outcome record."""
    need = {tag(i, c) for i in range(1, n_rounds + 1)
            for c in ROUND_STABILIZER[round_type(i)][1]}
    missing = need - set(records)
    if missing:
        raise ValueError(f"record lacks {len(missing)} round outcomes, e.g. {sorted(missing)[0]}")
    return evaluate_detectors(detectors(n_rounds, initial, final), records)


def xor_fold(values: list) -> list:
    """Undo the accumulation of unreset ancillas: m'_k = m_k * m_{k-1}."""
    out = []
    prev = 1
    for v in values:
        out.append(v * prev)
        prev = v
    return out


# ---------------------------------------------------------------------------
# Construction-time oracle


@lru_cache(maxsize=1)
def _reference_code() -> FbsCode:
    return build_code(check_oracle=False)


@lru_cache(maxsize=8)
def _preservation_oracle(schedule_items: tuple, n_rounds: int = 12, seed: int = 7) -> None:
    """Noiseless tableau check that Gamma-corrected dynamical operators are conserved."""
    from .tableau import Tableau

    schedule = dict(schedule_items)
    gauge = {name: data_pauli(t) for name, t in CHECKS.items()}
    rng = np.random.default_rng(seed)
    for start in "ZX":
        t = Tableau(N_DATA)
        if start == "X":
            for q in range(N_DATA):
                t.h(q)
        # fix the opposite-type stabilizers by measuring them
        initial = {}
        for s in STABILIZERS:
            if s[1] != start:
                initial[s] = t.measure(data_pauli(STABILIZER_TEXT[s]), rng)
            else:
                initial[s] = 1
        d0 = t.peek(data_pauli(DYNAMICAL_TEXT["A"][start]))
        s0 = t.peek(data_pauli(STATIC_TEXT[start]))
        frame = SignFrame(initial=initial)
        rec = {}
        for i in range(1, n_rounds + 1):
            for c in schedule[round_type(i)]:
                rec[tag(i, c)] = t.measure(gauge[c], rng)
            frame = update_sign_frame(frame, rec)
            d = t.peek(data_pauli(DYNAMICAL_TEXT[form_after(i)][start]))
            if d * frame.gamma(start) != d0 or t.peek(data_pauli(STATIC_TEXT[start])) != s0:
                raise CodeError(f"schedule fails to conserve the logical {start} operators "
                                f"at round {i}")
