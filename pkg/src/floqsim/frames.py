"""Batched Pauli-frame sampler.

A single noiseless tableau run fixes a reference record; every shot is then a
Pauli frame (bit-packed, 64 shots per word) propagated through the Clifford
circuit.  Noise toggles frame bits, measurements read the anticommutation of
the frame with the measured Pauli, and after every measurement (and reset) the
frame is multiplied by the measured operator with probability 1/2 so gauge
randomness is reproduced shot by shot.

Noise is drawn against an optional *envelope* model: candidate faults are
sampled at the envelope rate and kept when a per-candidate uniform falls below
the actual rate.  Two runs with the same seed and envelope therefore share
their random numbers, which is what finite-difference gradients need.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Circuit, Gate, IdleDD, MeasurePauli, NoiseSite, ResetZ, Sym
from .tableau import NonCliffordError, run_circuit, shot_rng

_ONE = np.uint64(1)
_DENSE_ABOVE = 0.05


def pack(bits: np.ndarray) -> np.ndarray:
    """Bool array (..., shots) -> uint64 words (..., ceil(shots/64)), little-endian bits."""
    bits = np.asarray(bits, dtype=bool)
    shots = bits.shape[-1]
    words = -(-shots // 64)
    padded = np.zeros(bits.shape[:-1] + (words * 64,), dtype=bool)
    padded[..., :shots] = bits
    return np.packbits(padded, axis=-1, bitorder="little").view(np.uint64)


def unpack(words: np.ndarray, shots: int) -> np.ndarray:
    b = np.unpackbits(np.ascontiguousarray(words).view(np.uint8), axis=-1, bitorder="little")
    return b[..., :shots].astype(bool)


def popcount(words: np.ndarray, shots: int) -> int:
    """Number of set bits among the first ``shots`` positions."""
    full, rem = divmod(shots, 64)
    total = int(np.bitwise_count(words[..., :full]).sum())
    if rem:
        mask = np.uint64((1 << rem) - 1)
        total += int(np.bitwise_count(words[..., full] & mask).sum())
    return total


@dataclass
class BatchRecord:
    """Outcome bits for a batch of shots; bit 1 means outcome -1."""
    tags: list[str]
    bits: np.ndarray  # (n_meas, words) uint64
    shots: int

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tags)}

    def packed(self, tag: str) -> np.ndarray:
        return self.bits[self.index[tag]]

    def values(self, tag: str) -> np.ndarray:
        """+-1 int8 outcomes of one tag."""
        return 1 - 2 * unpack(self.packed(tag), self.shots).astype(np.int8)

    def __getitem__(self, tag):
        return self.values(tag)

    def parity(self, expr: Sym) -> np.ndarray:
        """Packed bits of a symbolic product; bit 1 means value -1."""
        out = np.zeros(self.bits.shape[1], dtype=np.uint64)
        for t in expr.tags:
            out ^= self.bits[self.index[t]]
        if expr.sign == -1:
            out ^= ~np.uint64(0)
        return out

    def evaluate(self, expr) -> np.ndarray:
        """+-1 int8 array of a symbolic expression (or a constant)."""
        if not isinstance(expr, Sym):
            return np.full(self.shots, int(expr), dtype=np.int8)
        return 1 - 2 * unpack(self.parity(expr), self.shots).astype(np.int8)

    def shot(self, k: int) -> dict:
        col = unpack(self.bits[:, k // 64:k // 64 + 1], 64)[:, k % 64]
        return {t: (-1 if col[i] else 1) for i, t in enumerate(self.tags)}


class FrameSampler:
    def __init__(self, circuit: Circuit, shots: int, seed: int = 0, batch: int = 0):
        self.circuit = circuit
        self.shots = shots
        self.words = -(-shots // 64)
        self.rng = np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), 1 << 32 | batch]))
        n = circuit.n_qubits
        self.x = np.zeros((n, self.words), dtype=np.uint64)
        self.z = self._random_words(n)

    def _random_words(self, *shape) -> np.ndarray:
        return self.rng.integers(0, 2**64, size=shape + (self.words,), dtype=np.uint64,
                                 endpoint=False)

    def _hits(self, p: float, p_env: float, n_choices: int):
        """Sample shots hit by a fault with probability ``p``; returns (positions, choice)."""
        if p_env <= 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        if p_env > _DENSE_ABOVE:
            u = self.rng.random(self.shots)
            choice = self.rng.integers(n_choices, size=self.shots)
            keep = u < p
            return np.flatnonzero(keep), choice[keep]
        k = int(self.rng.binomial(self.shots, p_env))
        pos = self.rng.choice(self.shots, size=k, replace=False) if k else np.zeros(0, np.int64)
        u = self.rng.random(k) * p_env
        choice = self.rng.integers(n_choices, size=k)
        keep = u < p
        return pos[keep], choice[keep]

    def _toggle(self, arr: np.ndarray, q: int, pos: np.ndarray):
        if len(pos):
            np.bitwise_xor.at(arr[q], pos >> 6, _ONE << (pos & 63).astype(np.uint64))

    def _flip_letter(self, q: int, letter: int, pos: np.ndarray):
        # letter code 1=X 2=Y 3=Z
        if len(pos) == 0:
            return
        self._toggle(self.x, q, pos[(letter == 1) | (letter == 2)])
        self._toggle(self.z, q, pos[(letter == 3) | (letter == 2)])

    def noise(self, ins: NoiseSite, env: NoiseSite | None):
        p_env = max(ins.p, env.p if env is not None else 0.0)
        if ins.kind == "depolarize1":
            for q in ins.qubits:
                pos, c = self._hits(ins.p, p_env, 3)
                self._flip_letter(q, c + 1, pos)
        elif ins.kind == "depolarize2":
            for a, b in zip(ins.qubits[::2], ins.qubits[1::2]):
                pos, c = self._hits(ins.p, p_env, 15)
                c = c + 1
                self._flip_letter(a, c // 4, pos)
                self._flip_letter(b, c % 4, pos)
        elif ins.kind == "pauli":
            pos, _ = self._hits(ins.p, p_env, 1)
            for q, letter in zip(ins.qubits, ins.letters):
                self._flip_letter(q, np.full(len(pos), " XYZ".index(letter)), pos)
        else:
            code = " XYZ".index(ins.kind[0].upper())
            for q in ins.qubits:
                pos, _ = self._hits(ins.p, p_env, 1)
                self._flip_letter(q, np.full(len(pos), code), pos)

    def gate(self, g: Gate):
        x, z = self.x, self.z
        q = g.qubits
        if g.name in ("H", "SQRT_Y", "SQRT_Y_DAG"):
            x[q[0]], z[q[0]] = z[q[0]].copy(), x[q[0]].copy()
        elif g.name in ("S", "SDG"):
            z[q[0]] ^= x[q[0]]
        elif g.name in ("X", "Y", "Z"):
            pass
        elif g.name == "CNOT":
            c, t = q
            x[t] ^= x[c]
            z[c] ^= z[t]
        elif g.name == "CZ":
            a, b = q
            z[a] ^= x[b]
            z[b] ^= x[a]
        else:
            raise NonCliffordError(f"{g.name} cannot be frame-simulated")

    def measure(self, m: MeasurePauli, env: MeasurePauli | None) -> np.ndarray:
        flip = np.zeros(self.words, dtype=np.uint64)
        letters = m.pauli.sparse()
        for q, c in letters.items():
            if c == "X":
                flip ^= self.z[q]
            elif c == "Z":
                flip ^= self.x[q]
            else:
                flip ^= self.x[q] ^ self.z[q]
        p_env = max(m.flip, env.flip if env is not None else 0.0)
        if p_env > 0:
            pos, _ = self._hits(m.flip, p_env, 1)
            if len(pos):
                np.bitwise_xor.at(flip, pos >> 6, _ONE << (pos & 63).astype(np.uint64))
        r = self._random_words()
        for q, c in letters.items():
            if c in "XY":
                self.x[q] ^= r
            if c in "ZY":
                self.z[q] ^= r
        return flip

    def reset(self, q: int):
        self.x[q] = 0
        self.z[q] = self._random_words()


def reference_record(circuit: Circuit, seed: int = 0) -> dict:
    record, _ = run_circuit(circuit.without_noise(), shot_rng(seed, 2**40))
    return record


def sample(circuit: Circuit, shots: int, seed: int = 0, envelope: Circuit | None = None,
           batch_size: int = 2 ** 20) -> BatchRecord:
    """Sample ``shots`` noisy shots of a Clifford circuit carrying explicit noise.

    ``envelope`` must be the same circuit with noise probabilities >= those of
    ``circuit`` (see module docstring).
    """
    if circuit.has_rotations:
        raise NonCliffordError("frame sampling needs a Clifford circuit")
    if envelope is not None and len(envelope) != len(circuit):
        raise ValueError("envelope circuit does not match")
    ref = reference_record(circuit, seed)
    tags = circuit.tags
    ref_bits = np.array([ref[t] == -1 for t in tags], dtype=bool)
    chunks = []
    done = 0
    b = 0
    while done < shots:
        n = min(batch_size, shots - done)
        fs = FrameSampler(circuit, n, seed, b)
        rows = []
        env_iter = iter(envelope) if envelope is not None else None
        for ins in circuit:
            env = next(env_iter) if env_iter is not None else None
            if isinstance(ins, Gate):
                fs.gate(ins)
            elif isinstance(ins, MeasurePauli):
                rows.append(fs.measure(ins, env))
            elif isinstance(ins, NoiseSite):
                fs.noise(ins, env)
            elif isinstance(ins, ResetZ):
                fs.reset(ins.qubit)
            elif isinstance(ins, IdleDD):
                pass
            else:
                raise TypeError(ins)
        bits = np.array(rows, dtype=np.uint64).reshape(len(tags), fs.words)
        bits ^= np.where(ref_bits[:, None], ~np.uint64(0), np.uint64(0))
        chunks.append(unpack(bits, n) if len(chunks) or n < shots else bits)
        done += n
        b += 1
    if len(chunks) == 1 and chunks[0].dtype == np.uint64:
        return BatchRecord(tags, chunks[0], shots)
    return BatchRecord(tags, pack(np.concatenate(chunks, axis=1)), shots)
