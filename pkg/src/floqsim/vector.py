"""Dense statevector simulator used as the brute-force oracle.

Qubit 0 is the most significant tensor factor, matching
:meth:`floqsim.core.PauliString.to_matrix`.  Gates act in place on a
``(2,)*n`` view of the amplitudes; no full unitary is ever built.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (Circuit, Gate, IdleDD, MeasurePauli, NoiseSite, PauliString, ResetZ)

MAX_QUBITS = 21
NORM_TOL = 1e-10

_SQ2 = 1 / np.sqrt(2)
_FIXED = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2,
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]).astype(complex),
    "SQRT_Y": np.array([[1, -1], [1, 1]], dtype=complex) * _SQ2,
    "SQRT_Y_DAG": np.array([[1, 1], [-1, 1]], dtype=complex) * _SQ2,
}


def gate_matrix(name: str, angle: float | None = None) -> np.ndarray:
    if name in _FIXED:
        return _FIXED[name]
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if name == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if name == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if name == "RZ":
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    raise ValueError(f"no matrix for {name}")


def _slot(n: int, **fixed) -> tuple:
    idx = [slice(None)] * n
    for q, v in fixed.items():
        idx[int(q[1:])] = v
    return tuple(idx)


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "StateVector":
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds the statevector budget of {MAX_QUBITS}")
        amp = np.zeros(2 ** n, dtype=complex)
        amp[0] = 1
        return cls(n, amp)

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _check(sv: StateVector, qubits):
    for q in qubits:
        if not 0 <= q < sv.n_qubits:
            raise IndexError(f"qubit {q} out of range for {sv.n_qubits} qubits")


def apply_pauli(sv: StateVector, p: PauliString) -> StateVector:
    """Return ``P|psi>`` (phase included)."""
    n = sv.n_qubits
    if p.n_qubits > n:
        raise ValueError("Pauli acts on more qubits than the state has")
    t = sv.tensor.copy()
    for q, letter in p.sparse().items():
        if letter in ("Z", "Y"):
            t[_slot(n, **{f"q{q}": 1})] *= -1
        if letter in ("X", "Y"):
            t = np.flip(t, axis=q)
        if letter == "Y":
            t = t * 1j
    return StateVector(n, np.ascontiguousarray(t).reshape(-1) * p.sign)


def _apply_1q(t: np.ndarray, u: np.ndarray, q: int) -> np.ndarray:
    t = np.tensordot(u, t, axes=([1], [q]))
    return np.moveaxis(t, 0, q)


def apply(sv: StateVector, ins) -> StateVector:
    """Apply a unitary instruction (gates and deterministic Pauli noise)."""
    n = sv.n_qubits
    if isinstance(ins, Gate):
        _check(sv, ins.qubits)
        t = sv.tensor
        if ins.name == "CZ":
            a, b = ins.qubits
            t = t.copy()
            t[_slot(n, **{f"q{a}": 1, f"q{b}": 1})] *= -1
        elif ins.name == "CNOT":
            c, tg = ins.qubits
            t = t.copy()
            sel = _slot(n, **{f"q{c}": 1})
            sub = t[sel]
            axis = tg - (1 if tg > c else 0)
            t[sel] = np.flip(sub, axis=axis)
        else:
            t = _apply_1q(t, gate_matrix(ins.name, ins.angle), ins.qubits[0])
        return StateVector(n, np.ascontiguousarray(t).reshape(-1))
    if isinstance(ins, NoiseSite) and ins.kind == "pauli":
        _check(sv, ins.qubits)
        p = PauliString.from_letters(n, dict(zip(ins.qubits, ins.letters)))
        return apply_pauli(sv, p)
    if isinstance(ins, IdleDD):
        _check(sv, ins.qubits)
        return sv
    raise TypeError(f"{ins!r} is not a unitary instruction")


def expectation(sv: StateVector, p: PauliString) -> float:
    if not p.is_hermitian:
        raise ValueError("expectation of a non-Hermitian Pauli")
    val = np.vdot(sv.amplitudes, apply_pauli(sv, p).amplitudes)
    return float(val.real)


def measure_pauli_prob(sv: StateVector, p: PauliString, outcome: int):
    """Probability of ``outcome`` and the collapsed, renormalised state.

    Returns ``(prob, None)`` for a zero-probability branch.
    """
    if not p.is_hermitian:
        raise ValueError("measured Pauli must be Hermitian")
    if outcome not in (1, -1):
        raise ValueError("outcome must be +1 or -1")
    proj = 0.5 * (sv.amplitudes + outcome * apply_pauli(sv, p).amplitudes)
    prob = float(np.vdot(proj, proj).real)
    if prob < 1e-14:
        return 0.0, None
    return prob, StateVector(sv.n_qubits, proj / np.sqrt(prob))


def collapse(sv: StateVector, p: PauliString, outcome: int) -> StateVector:
    prob, out = measure_pauli_prob(sv, p, outcome)
    if out is None:
        raise ValueError(f"outcome {outcome} of {p} has zero probability")
    return out


# ---------------------------------------------------------------------------
# Whole-circuit execution


def _noise_sample(ins: NoiseSite, n: int, rng) -> PauliString | None:
    letters = {}
    if ins.kind == "pauli":
        if rng.random() < ins.p:
            letters = dict(zip(ins.qubits, ins.letters))
    elif ins.kind == "depolarize1":
        for q in ins.qubits:
            if rng.random() < ins.p:
                letters[q] = "XYZ"[rng.integers(3)]
    elif ins.kind == "depolarize2":
        for a, b in zip(ins.qubits[::2], ins.qubits[1::2]):
            if rng.random() < ins.p:
                k = 1 + rng.integers(15)
                letters[a], letters[b] = "IXYZ"[k // 4], "IXYZ"[k % 4]
    else:
        letter = ins.kind[0].upper()
        for q in ins.qubits:
            if rng.random() < ins.p:
                letters[q] = letter
    letters = {q: c for q, c in letters.items() if c != "I"}
    return PauliString.from_letters(n, letters) if letters else None


def run(circuit: Circuit, rng=None, state: StateVector | None = None):
    """Sample one trajectory.  Returns ``(record, final_state)``."""
    rng = np.random.default_rng(rng)
    sv = state if state is not None else StateVector.zeros(circuit.n_qubits)
    n = sv.n_qubits
    record = {}
    for ins in circuit:
        if isinstance(ins, MeasurePauli):
            p = ins.pauli.embed(n) if ins.pauli.n_qubits < n else ins.pauli
            p_plus, s_plus = measure_pauli_prob(sv, p, 1)
            if s_plus is not None and rng.random() < p_plus:
                m, sv = 1, s_plus
            else:
                m, sv = -1, collapse(sv, p, -1)
            if ins.flip and rng.random() < ins.flip:
                m = -m
            record[ins.tag] = m
        elif isinstance(ins, ResetZ):
            z = PauliString.single(n, ins.qubit, "Z")
            p0, s0 = measure_pauli_prob(sv, z, 1)
            if s0 is not None and rng.random() < p0:
                sv = s0
            else:
                sv = apply_pauli(collapse(sv, z, -1), PauliString.single(n, ins.qubit, "X"))
        elif isinstance(ins, NoiseSite):
            err = _noise_sample(ins, n, rng)
            if err is not None:
                sv = apply_pauli(sv, err)
        else:
            sv = apply(sv, ins)
    return record, sv


@dataclass
class Branch:
    prob: float
    record: dict
    state: StateVector


class TooManyBranches(RuntimeError):
    pass


def enumerate_branches(circuit: Circuit, max_branches: int = 2 ** 12,
                       state: StateVector | None = None) -> list[Branch]:
    """Exhaustive outcome tree of a noiseless circuit (flip probabilities included).

    Raises :class:`TooManyBranches` when the live branch count would exceed
    ``max_branches``.
    """
    start = state if state is not None else StateVector.zeros(circuit.n_qubits)
    n = start.n_qubits
    branches = [Branch(1.0, {}, start)]
    for ins in circuit:
        if isinstance(ins, (MeasurePauli, ResetZ)):
            if isinstance(ins, MeasurePauli):
                p = ins.pauli.embed(n) if ins.pauli.n_qubits < n else ins.pauli
            else:
                p = PauliString.single(n, ins.qubit, "Z")
            nxt = []
            for br in branches:
                for m in (1, -1):
                    pr, st = measure_pauli_prob(br.state, p, m)
                    if st is None:
                        continue
                    if isinstance(ins, ResetZ):
                        if m == -1:
                            st = apply_pauli(st, PauliString.single(n, ins.qubit, "X"))
                        nxt.append(Branch(br.prob * pr, br.record, st))
                        continue
                    if ins.flip:
                        nxt.append(Branch(br.prob * pr * (1 - ins.flip), {**br.record, ins.tag: m}, st))
                        nxt.append(Branch(br.prob * pr * ins.flip, {**br.record, ins.tag: -m}, st))
                    else:
                        nxt.append(Branch(br.prob * pr, {**br.record, ins.tag: m}, st))
            if len(nxt) > max_branches:
                raise TooManyBranches(f"more than {max_branches} branches")
            branches = nxt
        elif isinstance(ins, NoiseSite):
            if ins.kind != "pauli" or ins.p not in (0.0, 1.0):
                raise ValueError("branch enumeration supports only deterministic noise sites")
            if ins.p == 1.0:
                branches = [Branch(b.prob, b.record, apply(b.state, ins)) for b in branches]
        else:
            branches = [Branch(b.prob, b.record, apply(b.state, ins)) for b in branches]
    return branches


def _state_key(sv: StateVector, digits: int = 9) -> bytes:
    """Amplitudes rounded after fixing the global phase on the largest entry."""
    a = sv.amplitudes
    k = int(np.argmax(np.abs(a) > np.abs(a).max() - 1e-6))
    a = a * (abs(a[k]) / a[k])
    return np.round(a, digits).tobytes()


def parity_expectations(circuit: Circuit, exprs, max_branches: int = 2 ** 12,
                        state: StateVector | None = None) -> dict:
    """Exact noiseless expectations of outcome products by merged enumeration.

    ``exprs`` maps names to objects with ``tags`` and ``sign`` (or constants).
    A branch keeps only its state and the running parity of every expression,
    so branches that agree on both are merged; gauge randomness then stays
    bounded instead of doubling with every random outcome.
    """
    names = [k for k, e in exprs.items() if hasattr(e, "tags")]
    member = {}
    for j, k in enumerate(names):
        for t in exprs[k].tags:
            member.setdefault(t, []).append(j)
    start = state if state is not None else StateVector.zeros(circuit.n_qubits)
    n = start.n_qubits
    live = {(b"", (1,) * len(names)): (1.0, start)}

    def add(out, prob, st, par):
        key = (_state_key(st), par)
        old = out.get(key)
        out[key] = (prob + (old[0] if old else 0.0), st)

    for ins in circuit:
        if isinstance(ins, (MeasurePauli, ResetZ)):
            if isinstance(ins, MeasurePauli):
                p = ins.pauli.embed(n) if ins.pauli.n_qubits < n else ins.pauli
                hit = member.get(ins.tag, [])
            else:
                p = PauliString.single(n, ins.qubit, "Z")
                hit = []
            nxt: dict = {}
            for (_, par), (prob, sv) in live.items():
                for m in (1, -1):
                    pr, st = measure_pauli_prob(sv, p, m)
                    if st is None:
                        continue
                    if isinstance(ins, ResetZ):
                        if m == -1:
                            st = apply_pauli(st, PauliString.single(n, ins.qubit, "X"))
                        add(nxt, prob * pr, st, par)
                        continue
                    for val, w in ((m, 1 - ins.flip), (-m, ins.flip)):
                        if w:
                            q = tuple(v * val if j in hit else v for j, v in enumerate(par))
                            add(nxt, prob * pr * w, st, q)
            if len(nxt) > max_branches:
                raise TooManyBranches(f"more than {max_branches} merged branches")
            live = nxt
        elif isinstance(ins, NoiseSite):
            if ins.kind != "pauli" or ins.p not in (0.0, 1.0):
                raise ValueError("branch enumeration supports only deterministic noise sites")
            if ins.p == 1.0:
                live = {k: (pr, apply(sv, ins)) for k, (pr, sv) in live.items()}
        else:
            live = {k: (pr, apply(sv, ins)) for k, (pr, sv) in live.items()}
    out = {k: float(e) for k, e in exprs.items() if k not in names}
    for j, k in enumerate(names):
        out[k] = exprs[k].sign * float(sum(pr * par[j] for (_, par), (pr, _) in live.items()))
    return out
