"""Exhaustive single-fault injection for Clifford circuits.

Each fault is one column of a bit-packed Pauli frame, so a full sweep over
every location costs a single pass through the circuit.  A fault is
*harmless* when it flips none of the deterministic logical observables, and
*detected* when it flips at least one detector.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .core import Circuit, Gate, IdleDD, MeasurePauli, NoiseSite, ResetZ, Sym
from .frames import BatchRecord, FrameSampler, unpack
from .tableau import NonCliffordError

PAULIS = "XYZ"
PAIRS = tuple(a + b for a in "IXYZ" for b in "IXYZ")[1:]


@dataclass(frozen=True)
class Fault:
    """Pauli ``letters`` on ``qubits`` right after instruction ``after``.

    ``after = -1`` places the fault before the first instruction; ``letters``
    equal to ``"M"`` flips the outcome of the measurement at ``after``.
    """
    after: int
    qubits: tuple
    letters: str

    def __str__(self):
        if self.letters == "M":
            return f"flip(m@{self.after})"
        return "".join(f"{c}{q}" for c, q in zip(self.letters, self.qubits)) + f"@{self.after}"


def _touched(ins) -> tuple:
    if isinstance(ins, Gate):
        return ins.qubits
    if isinstance(ins, MeasurePauli):
        return tuple(ins.pauli.support)
    if isinstance(ins, ResetZ):
        return (ins.qubit,)
    if isinstance(ins, IdleDD):
        return ins.qubits
    return ()


def fault_sites(circuit: Circuit, two_qubit: bool = False,
                within: Iterable[tuple] | None = None) -> list[Fault]:
    """Every single-qubit Pauli after every operation on the qubits it touches.

    Also includes faults on every used qubit before the first operation (only
    qubits touched inside the windows when ``within`` is given) and a
    classical flip of every measurement.  With ``two_qubit`` each two-qubit
    gate additionally gets all 15 correlated Paulis on its pair.  ``within``
    restricts locations to half-open ``(start, stop)`` instruction ranges.
    """
    windows = None if within is None else [range(a, b) for a, b in within]
    used = sorted({q for k, ins in enumerate(circuit) for q in _touched(ins)
                   if windows is None or any(k in w for w in windows)})
    out = []
    if windows is None or any(0 in w for w in windows):
        out = [Fault(-1, (q,), c) for q in used for c in PAULIS]
    for k, ins in enumerate(circuit):
        if isinstance(ins, NoiseSite) or (windows is not None and not any(k in w for w in windows)):
            continue
        if isinstance(ins, MeasurePauli):
            out.append(Fault(k, (), "M"))
        qs = _touched(ins)
        out.extend(Fault(k, (q,), c) for q in qs for c in PAULIS)
        if two_qubit and isinstance(ins, Gate) and len(qs) == 2:
            out.extend(Fault(k, qs, p) for p in PAIRS if "I" not in p)
    return out


def propagate(circuit: Circuit, faults: list[Fault], seed: int = 0) -> BatchRecord:
    """Measurement flips caused by each fault (one column per fault).

    The bits are flips relative to a fault-free run; deterministic products of
    outcomes therefore flip exactly when the fault changes them.
    """
    if circuit.has_rotations:
        raise NonCliffordError("fault propagation needs a Clifford circuit")
    n = max(len(faults), 1)
    fs = FrameSampler(circuit, n, seed)
    at: dict[int, list[int]] = {}
    for i, f in enumerate(faults):
        at.setdefault(f.after, []).append(i)

    def inject(k, flip=None):
        for i in at.get(k, ()):
            f = faults[i]
            pos = np.array([i])
            if f.letters == "M":
                if flip is not None:
                    fs._toggle(flip[None, :], 0, pos)
                continue
            for q, c in zip(f.qubits, f.letters):
                if c != "I":
                    fs._flip_letter(q, np.array([" XYZ".index(c)]), pos)

    inject(-1)
    rows = []
    for k, ins in enumerate(circuit):
        if isinstance(ins, Gate):
            fs.gate(ins)
        elif isinstance(ins, MeasurePauli):
            flip = fs.measure(MeasurePauli(ins.pauli, ins.tag), None)
            inject(k, flip)
            rows.append(flip)
            continue
        elif isinstance(ins, ResetZ):
            fs.reset(ins.qubit)
        elif isinstance(ins, (NoiseSite, IdleDD)):
            pass
        else:
            raise TypeError(ins)
        inject(k)
    tags = circuit.tags
    bits = np.array(rows, dtype=np.uint64).reshape(len(tags), fs.words)
    return BatchRecord(tags, bits, len(faults))


def _flips(rec: BatchRecord, expr: Sym) -> np.ndarray:
    return unpack(rec.parity(Sym(expr.tags)), rec.shots)


def deterministic(circuit: Circuit, exprs: Mapping[str, Sym], trials: int = 128,
                  seed: int = 0) -> dict[str, bool]:
    """Whether each outcome product is fixed in the noiseless circuit.

    Gauge randomness is replayed ``trials`` times with no fault; a product
    that never changes is deterministic up to probability ``2**-trials``.
    """
    fs_rec = propagate(circuit, [Fault(-2, (), "I")] * trials, seed)
    return {k: (not isinstance(e, Sym)) or not _flips(fs_rec, e).any() for k, e in exprs.items()}


@dataclass
class FaultReport:
    faults: list
    detected: np.ndarray          # bool per fault
    flipped: dict                 # observable name -> bool per fault

    @property
    def logical(self) -> np.ndarray:
        out = np.zeros(len(self.faults), dtype=bool)
        for v in self.flipped.values():
            out |= v
        return out

    @property
    def undetected_logical(self) -> list:
        bad = self.logical & ~self.detected
        return [f for f, b in zip(self.faults, bad) if b]

    @property
    def fault_tolerant(self) -> bool:
        return not self.undetected_logical


def inject_all(circuit: Circuit, detectors: Iterable[Sym], observables: Mapping[str, Sym],
               two_qubit: bool = False, within: Iterable[tuple] | None = None,
               seed: int = 0) -> FaultReport:
    """Classify every single fault of ``circuit`` against detectors and observables."""
    faults = fault_sites(circuit, two_qubit, within)
    rec = propagate(circuit, faults, seed)
    detected = np.zeros(len(faults), dtype=bool)
    for d in detectors:
        detected |= _flips(rec, d)
    flipped = {k: _flips(rec, e) for k, e in observables.items() if isinstance(e, Sym)}
    return FaultReport(faults, detected, flipped)


__all__ = ["Fault", "FaultReport", "fault_sites", "propagate", "deterministic", "inject_all"]
