"""Pauli algebra in the symplectic representation and the circuit instruction set.

A :class:`PauliString` stores its X and Z parts as integer bitmasks (bit ``q``
belongs to qubit ``q``) and an overall phase ``i**k``.  Letters decode as
``(x, z) = (0,0) I, (1,0) X, (1,1) Y, (0,1) Z``; a ``Y`` letter is the Hermitian
Pauli ``Y``, not ``XZ``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_TEXT_PHASE = {"": 0, "+": 0, "+i": 1, "i": 1, "-": 2, "-i": 3}
_PHASE_VALUE = {0: 1, 1: 1j, 2: -1, 3: -1j}


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x_bits: int = 0
    z_bits: int = 0
    phase: int = 0  # exponent k of i**k

    def __post_init__(self):
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be non-negative")
        limit = 1 << self.n_qubits
        if self.x_bits < 0 or self.z_bits < 0 or self.x_bits >= limit or self.z_bits >= limit:
            raise ValueError("bitmask does not fit in n_qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    # -- construction -------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def from_letters(cls, n: int, letters: Mapping[int, str], phase: int = 0) -> "PauliString":
        x = z = 0
        for q, letter in letters.items():
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} out of range for {n} qubits")
            letter = letter.upper()
            if letter in ("X", "Y"):
                x |= 1 << q
            if letter in ("Z", "Y"):
                z |= 1 << q
            if letter not in "IXYZ":
                raise ValueError(f"bad Pauli letter {letter!r}")
        return cls(n, x, z, phase)

    @classmethod
    def single(cls, n: int, q: int, letter: str) -> "PauliString":
        return cls.from_letters(n, {q: letter})

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        """Parse ``"-iXIZY"`` style text (qubit 0 leftmost)."""
        m = re.fullmatch(r"\s*([+-]?i?)([IXYZ_]*)\s*", text)
        if m is None:
            raise ValueError(f"cannot parse Pauli string {text!r}")
        sign, body = m.groups()
        body = body.replace("_", "I")
        return cls.from_letters(len(body), {q: c for q, c in enumerate(body) if c != "I"},
                                _TEXT_PHASE[sign])

    # -- views --------------------------------------------------------
    def letter(self, q: int) -> str:
        return "IZXY"[((self.x_bits >> q) & 1) * 2 + ((self.z_bits >> q) & 1)]

    @property
    def letters(self) -> str:
        return "".join(self.letter(q) for q in range(self.n_qubits))

    @property
    def support(self) -> tuple[int, ...]:
        mask = self.x_bits | self.z_bits
        return tuple(q for q in range(self.n_qubits) if (mask >> q) & 1)

    @property
    def weight(self) -> int:
        return _popcount(self.x_bits | self.z_bits)

    @property
    def sign(self) -> complex:
        return _PHASE_VALUE[self.phase]

    @property
    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    def sparse(self) -> dict[int, str]:
        return {q: self.letter(q) for q in self.support}

    def __str__(self) -> str:
        return _PHASE_TEXT[self.phase] + self.letters

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    def __neg__(self) -> "PauliString":
        return PauliString(self.n_qubits, self.x_bits, self.z_bits, self.phase + 2)

    def unsigned(self) -> "PauliString":
        return PauliString(self.n_qubits, self.x_bits, self.z_bits, 0)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_multiply(self, other)

    def embed(self, n: int) -> "PauliString":
        """Same operator on a register of ``n >= n_qubits`` qubits."""
        if n < self.n_qubits:
            raise ValueError("cannot shrink a Pauli string")
        return PauliString(n, self.x_bits, self.z_bits, self.phase)

    def to_matrix(self):
        import numpy as np

        mats = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]),
                "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1])}
        out = np.array([[1.0 + 0j]])
        # qubit 0 is the most significant tensor factor
        for q in range(self.n_qubits):
            out = np.kron(out, mats[self.letter(q)])
        return self.sign * out


def _check_dims(a: PauliString, b: PauliString):
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")


def pauli_multiply(a: PauliString, b: PauliString) -> PauliString:
    """Exact product ``a*b``."""
    _check_dims(a, b)
    x1, z1, x2, z2 = a.x_bits, a.z_bits, b.x_bits, b.z_bits
    y1 = x1 & z1
    xo1 = x1 & ~z1
    zo1 = z1 & ~x1
    y2 = x2 & z2
    xo2 = x2 & ~z2
    zo2 = z2 & ~x2
    plus = _popcount(y1 & zo2) + _popcount(xo1 & y2) + _popcount(zo1 & xo2)
    minus = _popcount(y1 & xo2) + _popcount(xo1 & zo2) + _popcount(zo1 & y2)
    return PauliString(a.n_qubits, x1 ^ x2, z1 ^ z2, a.phase + b.phase + plus - minus)


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_dims(a, b)
    return (_popcount(a.x_bits & b.z_bits) + _popcount(a.z_bits & b.x_bits)) % 2 == 0


def parity_product(outcomes: Sequence):
    """Product of +-1 outcomes.  Works elementwise for numpy arrays of shots."""
    if len(outcomes) == 0:
        raise ValueError("parity of an empty outcome list")
    out = outcomes[0]
    for v in outcomes[1:]:
        out = out * v
    return out


# ---------------------------------------------------------------------------
# Circuit instructions

ONE_QUBIT_GATES = ("H", "S", "SDG", "X", "Y", "Z", "SQRT_Y", "SQRT_Y_DAG", "RX", "RY", "RZ")
TWO_QUBIT_GATES = ("CNOT", "CZ")
ROTATIONS = ("RX", "RY", "RZ")
CLIFFORD_GATES = ("H", "S", "SDG", "X", "Y", "Z", "SQRT_Y", "SQRT_Y_DAG", "CNOT", "CZ")


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        name = self.name.upper()
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if name in ONE_QUBIT_GATES:
            arity = 1
        elif name in TWO_QUBIT_GATES:
            arity = 2
        else:
            raise ValueError(f"unknown gate {name}")
        if len(self.qubits) != arity:
            raise ValueError(f"{name} takes {arity} qubit(s)")
        if arity == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"{name} on a repeated qubit")
        if name in ROTATIONS:
            if self.angle is None or not math.isfinite(self.angle):
                raise ValueError(f"{name} needs a finite angle")
        elif self.angle is not None:
            raise ValueError(f"{name} takes no angle")

    @property
    def is_clifford(self) -> bool:
        return self.name in CLIFFORD_GATES


@dataclass(frozen=True)
class MeasurePauli:
    """Joint Pauli-product measurement recorded under ``tag``.

    ``flip`` is the probability that the reported outcome is inverted.
    """
    pauli: PauliString
    tag: str
    flip: float = 0.0

    def __post_init__(self):
        if not self.pauli.is_hermitian:
            raise ValueError("measured Pauli must be Hermitian")
        if self.pauli.weight == 0:
            raise ValueError("measuring the identity")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.pauli.support


@dataclass(frozen=True)
class ResetZ:
    qubit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


NOISE_KINDS = ("depolarize1", "depolarize2", "x_error", "y_error", "z_error", "pauli")


@dataclass(frozen=True)
class NoiseSite:
    """Stochastic Pauli channel.

    ``depolarize1`` acts independently on each listed qubit, ``depolarize2`` on
    consecutive pairs.  ``pauli`` applies the fixed Pauli ``letters`` (one per
    qubit) with probability ``p``; it is used for fault injection.
    """
    kind: str
    qubits: tuple[int, ...]
    p: float = 0.0
    letters: str = ""

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("noise probability outside [0, 1]")
        if self.kind == "depolarize2" and len(self.qubits) % 2:
            raise ValueError("depolarize2 needs qubit pairs")
        if self.kind == "pauli" and len(self.letters) != len(self.qubits):
            raise ValueError("pauli noise needs one letter per qubit")


@dataclass(frozen=True)
class IdleDD:
    """Data qubits idling (with dynamical decoupling) during an ancilla readout window."""
    qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))


Instruction = Gate | MeasurePauli | ResetZ | NoiseSite | IdleDD


def instruction_qubits(ins: Instruction) -> tuple[int, ...]:
    if isinstance(ins, MeasurePauli):
        return ins.pauli.support
    if isinstance(ins, ResetZ):
        return (ins.qubit,)
    return ins.qubits


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    instructions: tuple = field(default_factory=tuple)

    def __post_init__(self):
        ins = tuple(self.instructions)
        object.__setattr__(self, "instructions", ins)
        tags = set()
        for op in ins:
            if isinstance(op, MeasurePauli):
                if op.pauli.n_qubits != self.n_qubits:
                    raise ValueError(f"measurement {op.tag} sized for {op.pauli.n_qubits} qubits")
                if op.tag in tags:
                    raise ValueError(f"duplicate measurement tag {op.tag!r}")
                tags.add(op.tag)
            for q in instruction_qubits(op):
                if not 0 <= q < self.n_qubits:
                    raise ValueError(f"qubit {q} out of range in {op}")

    def __len__(self):
        return len(self.instructions)

    def __iter__(self):
        return iter(self.instructions)

    def __add__(self, other: "Circuit") -> "Circuit":
        n = max(self.n_qubits, other.n_qubits)
        return Circuit(n, tuple(_resize(i, n) for i in self.instructions + other.instructions))

    @property
    def tags(self) -> list[str]:
        return [op.tag for op in self.instructions if isinstance(op, MeasurePauli)]

    @property
    def has_rotations(self) -> bool:
        return any(isinstance(op, Gate) and op.name in ROTATIONS for op in self.instructions)

    def used_qubits(self) -> list[int]:
        used = set()
        for op in self.instructions:
            used.update(instruction_qubits(op))
        return sorted(used)

    def resized(self, n: int) -> "Circuit":
        return Circuit(n, tuple(_resize(i, n) for i in self.instructions))

    def remapped(self, mapping: Mapping[int, int], n: int) -> "Circuit":
        return Circuit(n, tuple(_remap(i, mapping, n) for i in self.instructions))

    def compact(self, keep: Iterable[int] = ()) -> tuple["Circuit", dict[int, int]]:
        """Drop unused qubits.  Returns the circuit and the old->new index map."""
        used = sorted(set(self.used_qubits()) | set(keep))
        mapping = {q: i for i, q in enumerate(used)}
        return self.remapped(mapping, len(used)), mapping

    def without_noise(self) -> "Circuit":
        out = []
        for op in self.instructions:
            if isinstance(op, NoiseSite):
                continue
            if isinstance(op, MeasurePauli) and op.flip:
                op = MeasurePauli(op.pauli, op.tag)
            out.append(op)
        return Circuit(self.n_qubits, tuple(out))

    def to_text(self) -> str:
        return "\n".join(format_instruction(op) for op in self.instructions) + "\n"

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "Circuit":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        header = None
        if lines and lines[0].startswith("QUBITS"):
            header = int(lines.pop(0).split()[1])
        n = n_qubits if n_qubits is not None else header
        ops = [parse_instruction(ln, n) for ln in lines]
        if n is None:
            n = 1 + max((q for op in ops for q in instruction_qubits(op)), default=-1)
            ops = [_resize(op, n) for op in ops]
        return cls(n, tuple(ops))


def _resize(op: Instruction, n: int) -> Instruction:
    if isinstance(op, MeasurePauli) and op.pauli.n_qubits != n:
        return MeasurePauli(op.pauli.embed(n), op.tag, op.flip)
    return op


def _remap(op: Instruction, m: Mapping[int, int], n: int) -> Instruction:
    if isinstance(op, Gate):
        return Gate(op.name, tuple(m[q] for q in op.qubits), op.angle)
    if isinstance(op, MeasurePauli):
        p = op.pauli
        letters = {m[q]: p.letter(q) for q in p.support}
        return MeasurePauli(PauliString.from_letters(n, letters, p.phase), op.tag, op.flip)
    if isinstance(op, ResetZ):
        return ResetZ(m[op.qubit])
    if isinstance(op, NoiseSite):
        return NoiseSite(op.kind, tuple(m[q] for q in op.qubits), op.p, op.letters)
    if isinstance(op, IdleDD):
        return IdleDD(tuple(m[q] for q in op.qubits))
    raise TypeError(op)


def format_instruction(op: Instruction) -> str:
    if isinstance(op, Gate):
        name = op.name if op.angle is None else f"{op.name}({op.angle!r})"
        return " ".join([name, *map(str, op.qubits)])
    if isinstance(op, MeasurePauli):
        sparse = " ".join(f"{c}{q}" for q, c in op.pauli.sparse().items())
        sign = "-" if op.pauli.phase == 2 else "+"
        flip = f" flip={op.flip!r}" if op.flip else ""
        return f"MPP {sign}{sparse.replace(' ', '*')} {op.tag}{flip}"
    if isinstance(op, ResetZ):
        return f"R {op.qubit}"
    if isinstance(op, NoiseSite):
        letters = f" letters={op.letters}" if op.letters else ""
        return f"NOISE {op.kind} {op.p!r} " + " ".join(map(str, op.qubits)) + letters
    if isinstance(op, IdleDD):
        return "IDLE " + " ".join(map(str, op.qubits))
    raise TypeError(op)


def parse_instruction(line: str, n: int | None = None) -> Instruction:
    parts = line.split()
    head = parts[0]
    if head == "MPP":
        body, tag = parts[1], parts[2]
        flip = float(parts[3].split("=", 1)[1]) if len(parts) > 3 else 0.0
        phase = 2 if body[0] == "-" else 0
        letters = {}
        for term in body.lstrip("+-").split("*"):
            letters[int(term[1:])] = term[0]
        width = n if n is not None else max(letters) + 1
        return MeasurePauli(PauliString.from_letters(width, letters, phase), tag, flip)
    if head == "R":
        return ResetZ(int(parts[1]))
    if head == "IDLE":
        return IdleDD(tuple(int(q) for q in parts[1:]))
    if head == "NOISE":
        letters = ""
        rest = parts[3:]
        if rest and rest[-1].startswith("letters="):
            letters = rest.pop()[len("letters="):]
        return NoiseSite(parts[1], tuple(int(q) for q in rest), float(parts[2]), letters)
    m = re.fullmatch(r"([A-Z_]+)(?:\((.*)\))?", head)
    if m is None:
        raise ValueError(f"cannot parse instruction {line!r}")
    angle = float(m.group(2)) if m.group(2) is not None else None
    return Gate(m.group(1), tuple(int(q) for q in parts[1:]), angle)


class Sym:
    """Symbolic +-1 value: ``sign * prod(outcome[tag] for tag in tags)``.

    Post-processing formulas are written as plain products of +-1 values; fed
    ``Sym`` inputs they produce the parity expression instead of a number,
    which can then be evaluated over a whole batch of shots at once.
    """
    __slots__ = ("tags", "sign")

    def __init__(self, tags=(), sign: int = 1):
        self.tags = frozenset(tags)
        self.sign = sign

    @classmethod
    def of(cls, tag: str) -> "Sym":
        return cls((tag,))

    def __mul__(self, other):
        if isinstance(other, Sym):
            return Sym(self.tags ^ other.tags, self.sign * other.sign)
        if other in (1, -1):
            return Sym(self.tags, self.sign * int(other))
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return Sym(self.tags, -self.sign)

    def __eq__(self, other):
        if isinstance(other, Sym):
            return self.tags == other.tags and self.sign == other.sign
        return not self.tags and self.sign == other

    def __hash__(self):
        return hash((self.tags, self.sign))

    def __repr__(self):
        body = "*".join(sorted(self.tags)) or "1"
        return f"{'-' if self.sign < 0 else ''}{body}"

    def evaluate(self, record):
        """Value on a concrete record (tag -> +-1 or arrays of +-1)."""
        out = self.sign
        for t in self.tags:
            out = out * record[t]
        return out


def symbolic_record(tags) -> dict[str, Sym]:
    return {t: Sym.of(t) for t in tags}
