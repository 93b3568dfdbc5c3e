"""Distance-3 Bacon-Shor mode on the same lattice, with a matching decoder.

Each integrated round measures all six XX and then all six ZZ checks, which
yields all four weight-6 stabilizers at once.  Z errors are caught by the two
X stabilizers (row pairs) and X errors by the two Z stabilizers (column
pairs), so each error type sees a three-bit repetition code with two checks.
Those are decoded independently by minimum-weight matching.

``Y(pi/2)`` is a transversal sqrt(Y) followed by a relabelling of the lattice
(transpose), tracked as a layout permutation rather than moved qubits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import networkx as nx
import numpy as np

from .circuits import STATES, _Builder, _measure_group, _pauli_ops  # noqa: F401
from .core import Circuit, PauliString, Sym
from .fbs import CHECKS, N_DATA, FbsCode, data_pauli, data_tag

BS_STATES = ("0", "1", "+", "-", "+i", "-i")
BS_GATES = ("I", "X", "Y", "Z", "Y90")
# repetition-code checks, ordered (left pair, right pair); the shared middle
# column/row carries the logical representative
X_CHECKS = ("SXC", "SXA")   # rows 1-2, rows 2-3: detect Z errors, protect X_L
Z_CHECKS = ("SZD", "SZB")   # cols 1-2, cols 2-3: detect X errors, protect Z_L
STAB_FACTORS = {
    "SXA": ("x47", "x58", "x69"), "SXC": ("x14", "x25", "x36"),
    "SZB": ("z23", "z56", "z89"), "SZD": ("z12", "z45", "z78"),
}
STAB_SUPPORT = {"SXA": (3, 4, 5, 6, 7, 8), "SXC": (0, 1, 2, 3, 4, 5),
                "SZB": (1, 2, 4, 5, 7, 8), "SZD": (0, 1, 3, 4, 6, 7)}
LOGICAL_SUPPORT = {"X": (3, 4, 5), "Z": (1, 4, 7)}
TRANSPOSE = (0, 3, 6, 1, 4, 7, 2, 5, 8)


def _compose(layout: tuple, perm: tuple) -> tuple:
    """Layout after relabelling lattice site s as site perm[s]."""
    return tuple(layout[perm[s]] for s in range(N_DATA))


def _check_on(layout: tuple, name: str, n: int) -> PauliString:
    text = CHECKS[name]
    letters = {layout[int(k) - 1]: c for c, k in zip(text[::2], text[1::2])}
    return PauliString.from_letters(n, letters)


@dataclass(frozen=True)
class BsExperiment:
    """BS memory/gate circuit with symbolic detectors per repetition code.

    ``x_events`` / ``z_events`` have shape (rounds + 1, 2): one row per round
    plus the final row from data outcomes (``None`` entries where the final
    readout cannot recompute the stabilizer).
    """
    label: str
    basis: str
    n_rounds: int
    circuit: Circuit
    logical: Sym
    x_events: list
    z_events: list
    logical_sign: int = 1

    def all_detectors(self) -> list:
        return [e for rows in (self.x_events, self.z_events) for row in rows for e in row
                if e is not None]


def _encode(b: _Builder, label: str):
    basis, sign = STATES[label]
    if basis == "Z":  # column X-GHZ: Z_L = Z2Z5Z8 = +1
        for c in range(3):
            b.g("H", c)
            b.cnot(c, c + 3)
            b.cnot(c + 3, c + 6)
        for q in range(N_DATA):
            b.g("H", q)
    else:  # row Z-GHZ: X_L = X4X5X6 = +1
        for r in range(3):
            b.g("H", 3 * r)
            b.cnot(3 * r, 3 * r + 1)
            b.cnot(3 * r + 1, 3 * r + 2)
    if basis in "XZ" and sign == -1:
        _pauli_ops(b, "X4X5X6" if basis == "Z" else "Z2Z5Z8")
    if basis == "Y":
        from .circuits import _rotate_static

        _rotate_static(b, "Z", sign * math.pi / 2)


def _integrated_round(b: _Builder, t: int, layout: tuple):
    code = b.code
    for kind in "xz":
        names = [c for c in CHECKS if c[0] == kind]
        items = [(_check_on(layout, c, b.n), code.ancillas[c], f"b{t}.{c}") for c in names]
        _measure_group(b, items)


def _apply_gate(b: _Builder, gate: str, layout: tuple) -> tuple[tuple, int]:
    """Emit transversal ``gate``; returns (new layout, sign picked up by Z_L readout)."""
    if gate == "I":
        return layout, 1
    if gate in ("X", "Y", "Z"):
        for q in range(N_DATA):
            b.g(gate, q)
        return layout, 1
    if gate == "Y90":
        for q in range(N_DATA):
            b.g("SQRT_Y", q)
        return _compose(layout, TRANSPOSE), 1
    raise ValueError(f"unknown BS gate {gate!r}")


def bs_mode_circuits(label: str, n_rounds: int, code: FbsCode, gates: Sequence[tuple] = (),
                     basis: str | None = None, lowering: str = "direct") -> BsExperiment:
    """Encode ``label``, run integrated rounds with transversal gates, read out.

    ``gates`` holds ``(gate, after_round)`` pairs with gates from
    :data:`BS_GATES`.  ``basis`` defaults to the basis of ``label``.
    """
    if label not in BS_STATES:
        raise ValueError(f"unknown BS state {label!r}")
    basis = basis or STATES[label][0]
    if basis not in "XYZ":
        raise ValueError("readout basis must be X, Y or Z")
    b = _Builder(code, lowering)
    _encode(b, label)
    layout = tuple(range(N_DATA))
    by_round: dict[int, list] = {}
    for g, after in gates:
        by_round.setdefault(after, []).append(g)
    x_rows, z_rows = [], []
    for g in by_round.get(0, []):
        layout, _ = _apply_gate(b, g, layout)
    prev = {s: 1 for s in STAB_FACTORS}
    for t in range(1, n_rounds + 1):
        _integrated_round(b, t, layout)
        vals = {s: Sym(f"b{t}.{c}" for c in f) for s, f in STAB_FACTORS.items()}
        x_rows.append([vals[s] * prev[s] for s in X_CHECKS])
        z_rows.append([vals[s] * prev[s] for s in Z_CHECKS])
        prev = vals
        for g in by_round.get(t, []):
            layout, _ = _apply_gate(b, g, layout)
    # single-qubit readout: logical support in the basis, the rest chosen for detection
    read = {}
    if basis == "Y":
        for site, c in zip((1, 3, 4, 5, 7), "ZXYXZ"):
            read[site] = c
    else:
        for site in LOGICAL_SUPPORT[basis]:
            read[site] = basis
    for site in range(N_DATA):
        read.setdefault(site, basis if basis != "Y" else "X")
    for site in range(N_DATA):
        q = layout[site]
        b.measure(PauliString.single(b.n, q, read[site]), data_tag(site + 1))
    data = {site: Sym.of(data_tag(site + 1)) for site in range(N_DATA)}
    logical = Sym()
    if basis == "Y":
        for site in (1, 3, 4, 5, 7):
            logical = logical * data[site]
    else:
        for site in LOGICAL_SUPPORT[basis]:
            logical = logical * data[site]
    final = {}
    for s, support in STAB_SUPPORT.items():
        if all(read[site] == ("X" if s[1] == "X" else "Z") for site in support):
            v = Sym()
            for site in support:
                v = v * data[site]
            final[s] = v * prev[s]
    x_rows.append([final.get(s) for s in X_CHECKS])
    z_rows.append([final.get(s) for s in Z_CHECKS])
    return BsExperiment(label, basis, n_rounds, b.circuit(), logical, x_rows, z_rows)


# ---------------------------------------------------------------------------
# Matching decoder


def _pair_cost(a: tuple, b: tuple) -> tuple[int, int]:
    (ta, ka), (tb, kb) = a, b
    space = abs(ka - kb)
    return abs(ta - tb) + space, space


@lru_cache(maxsize=1 << 16)
def _decode_cached(defects: tuple) -> int:
    if not defects:
        return 0
    g = nx.Graph()
    n = len(defects)
    for i in range(n):
        for j in range(i + 1, n):
            w, _ = _pair_cost(defects[i], defects[j])
            g.add_edge(i, j, weight=-w)
        # each defect has a private boundary copy; boundary copies pair freely
        g.add_edge(i, n + i, weight=-1)
        for j in range(i):
            g.add_edge(n + i, n + j, weight=0)
    matching = nx.max_weight_matching(g, maxcardinality=True)
    flip = 0
    for i, j in matching:
        if i < n and j < n:
            flip ^= _pair_cost(defects[i], defects[j])[1]
    return flip


def decode_static_mwpm(events) -> int:
    """Logical flip (0/1) for one repetition code from its detection events.

    ``events`` is a (rounds, 2) boolean array.  A defect in column 0 or 1 is
    matched to another defect (time-like distance plus one space step across
    the logical representative) or to its nearby boundary (cost 1, no flip).
    """
    ev = np.asarray(events, dtype=bool)
    defects = tuple((int(t), int(k)) for t, k in zip(*np.nonzero(ev)))
    return _decode_cached(defects)


def decode_batch(events: np.ndarray) -> np.ndarray:
    """Vectorised decoding of (shots, rounds, 2) events via unique syndromes."""
    shots = events.shape[0]
    flat = events.reshape(shots, -1)
    uniq, inverse = np.unique(flat, axis=0, return_inverse=True)
    flips = np.array([decode_static_mwpm(u.reshape(events.shape[1:])) for u in uniq], dtype=np.int8)
    return flips[inverse.reshape(-1)]


@dataclass
class BsRun:
    logical: np.ndarray       # raw +-1
    corrected: np.ndarray     # after matching
    retained: np.ndarray      # no detection event anywhere
    detection_rate: np.ndarray  # (rounds + 1, 4) mean event rate per stabilizer

    def mean(self, post: str = "raw") -> float:
        if post == "raw":
            return float(self.logical.mean())
        if post == "correct":
            return float(self.corrected.mean())
        if post == "detect":
            v = self.logical[self.retained]
            return float(v.mean()) if v.size else float("nan")
        raise ValueError(post)


def run_bs(exp: BsExperiment, shots: int, noise=None, seed: int = 0, backend: str = "auto") -> BsRun:
    from .runner import sample_values

    exprs = {"L": exp.logical}
    keys = []
    for name, rows in (("x", exp.x_events), ("z", exp.z_events)):
        for t, row in enumerate(rows):
            for k, e in enumerate(row):
                if e is not None:
                    exprs[f"{name}{t}.{k}"] = e
                    keys.append((name, t, k))
    vals = sample_values(exp.circuit, exprs, shots, noise, seed, backend)
    T = exp.n_rounds + 1
    ev = {"x": np.zeros((shots, T, 2), dtype=bool), "z": np.zeros((shots, T, 2), dtype=bool)}
    for name, t, k in keys:
        ev[name][:, t, k] = vals[f"{name}{t}.{k}"] == -1
    logical = vals["L"].astype(np.int8)
    # Z_L outcomes are protected by the Z checks, X_L by the X checks; Y needs both
    flip = np.zeros(shots, dtype=np.int8)
    if exp.basis in "ZY":
        flip ^= decode_batch(ev["z"])
    if exp.basis in "XY":
        flip ^= decode_batch(ev["x"])
    corrected = logical * (1 - 2 * flip)
    retained = ~(ev["x"].any(axis=(1, 2)) | ev["z"].any(axis=(1, 2)))
    rate = np.concatenate([ev["x"].mean(axis=0), ev["z"].mean(axis=0)], axis=1)
    return BsRun(logical, corrected.astype(np.int8), retained, rate)
