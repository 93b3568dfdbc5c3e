"""Stabilizer tableau simulator (Aaronson-Gottesman) with joint Pauli measurements.

Rows ``0..n-1`` are destabilizers, rows ``n..2n-1`` stabilizers.  The X and Z
parts are boolean ``(2n, n)`` arrays, so every gate is a handful of column
operations over all rows at once.
"""
from __future__ import annotations

import numpy as np

from .core import Circuit, Gate, IdleDD, MeasurePauli, NoiseSite, PauliString, ResetZ


class NonCliffordError(ValueError):
    pass


def _g_sum(x1, z1, x2, z2) -> np.ndarray:
    """Exponent of i picked up when multiplying rows (x1,z1)*(x2,z2), summed over qubits."""
    y1 = x1 & z1
    xo1 = x1 & ~z1
    zo1 = z1 & ~x1
    y2 = x2 & z2
    xo2 = x2 & ~z2
    zo2 = z2 & ~x2
    plus = (y1 & zo2) | (xo1 & y2) | (zo1 & xo2)
    minus = (y1 & xo2) | (xo1 & zo2) | (zo1 & y2)
    return plus.sum(axis=-1).astype(np.int64) - minus.sum(axis=-1).astype(np.int64)


def _bits(p: PauliString, n: int):
    x = np.array([(p.x_bits >> q) & 1 for q in range(n)], dtype=bool)
    z = np.array([(p.z_bits >> q) & 1 for q in range(n)], dtype=bool)
    return x, z


class Tableau:
    def __init__(self, n_qubits: int):
        n = n_qubits
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=bool)
        self.x[np.arange(n), np.arange(n)] = True
        self.z[n + np.arange(n), np.arange(n)] = True

    @property
    def n_qubits(self) -> int:
        return self.n

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n, t.x, t.z, t.r = self.n, self.x.copy(), self.z.copy(), self.r.copy()
        return t

    # -- views --------------------------------------------------------
    def _row_pauli(self, i: int) -> PauliString:
        xb = sum(1 << q for q in np.flatnonzero(self.x[i]))
        zb = sum(1 << q for q in np.flatnonzero(self.z[i]))
        return PauliString(self.n, xb, zb, 2 if self.r[i] else 0)

    def stabilizers(self) -> list[PauliString]:
        return [self._row_pauli(i) for i in range(self.n, 2 * self.n)]

    def destabilizers(self) -> list[PauliString]:
        return [self._row_pauli(i) for i in range(self.n)]

    def check_invariants(self):
        """Raise if the symplectic pairing or stabilizer commutation is broken."""
        x, z = self.x.astype(np.int64), self.z.astype(np.int64)
        form = (x @ z.T + z @ x.T) % 2
        n = self.n
        want = np.zeros((2 * n, 2 * n), dtype=np.int64)
        want[np.arange(n), n + np.arange(n)] = 1
        want[n + np.arange(n), np.arange(n)] = 1
        if not np.array_equal(form, want):
            raise AssertionError("tableau lost its symplectic structure")

    # -- gates --------------------------------------------------------
    def h(self, q):
        self.r ^= self.x[:, q] & self.z[:, q]
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def s(self, q):
        self.r ^= self.x[:, q] & self.z[:, q]
        self.z[:, q] ^= self.x[:, q]

    def cnot(self, c, t):
        self.r ^= self.x[:, c] & self.z[:, t] & ~(self.x[:, t] ^ self.z[:, c])
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    def pauli_x(self, q):
        self.r ^= self.z[:, q]

    def pauli_z(self, q):
        self.r ^= self.x[:, q]

    def apply_pauli(self, p: PauliString):
        """Conjugate every row by ``p`` (flips signs of anticommuting rows)."""
        px, pz = _bits(p, self.n)
        anti = ((self.x & pz).sum(axis=1) + (self.z & px).sum(axis=1)) % 2
        self.r ^= anti.astype(bool)

    def apply_gate(self, g: Gate):
        name, qs = g.name, g.qubits
        if name == "H":
            self.h(qs[0])
        elif name == "S":
            self.s(qs[0])
        elif name == "SDG":
            for _ in range(3):
                self.s(qs[0])
        elif name == "X":
            self.pauli_x(qs[0])
        elif name == "Z":
            self.pauli_z(qs[0])
        elif name == "Y":
            self.pauli_x(qs[0])
            self.pauli_z(qs[0])
        elif name == "SQRT_Y":
            self.pauli_z(qs[0])
            self.h(qs[0])
        elif name == "SQRT_Y_DAG":
            self.h(qs[0])
            self.pauli_z(qs[0])
        elif name == "CNOT":
            self.cnot(*qs)
        elif name == "CZ":
            self.h(qs[1])
            self.cnot(*qs)
            self.h(qs[1])
        else:
            raise NonCliffordError(f"{name} is not Clifford; use the statevector backend")

    # -- measurement --------------------------------------------------
    def _rowmult(self, targets: np.ndarray, src_x, src_z, src_r):
        """rows[targets] <- rows[targets] * src (phase exact)."""
        if len(targets) == 0:
            return
        g = _g_sum(self.x[targets], self.z[targets], src_x[None, :], src_z[None, :])
        total = 2 * self.r[targets].astype(np.int64) + 2 * int(src_r) + g
        self.r[targets] = (total % 4) == 2
        self.x[targets] ^= src_x
        self.z[targets] ^= src_z

    def peek(self, p: PauliString) -> int:
        """+1/-1 if ``p`` (up to sign) is a stabilizer, else 0."""
        px, pz = _bits(p, self.n)
        n = self.n
        anti = ((self.x & pz).sum(axis=1) + (self.z & px).sum(axis=1)) % 2 == 1
        if anti[n:].any():
            return 0
        return self._deterministic_value(p, anti[:n])

    def _deterministic_value(self, p: PauliString, destab_anti) -> int:
        n = self.n
        ax = np.zeros(n, dtype=bool)
        az = np.zeros(n, dtype=bool)
        phase = 0
        for i in np.flatnonzero(destab_anti):
            row = n + i
            phase += 2 * int(self.r[row]) + int(_g_sum(ax, az, self.x[row], self.z[row]))
            ax ^= self.x[row]
            az ^= self.z[row]
        # accumulated product equals i**phase * P_unsigned; eigenvalue of signed p
        eig = 1 if phase % 4 == 0 else -1
        return eig * (1 if p.phase == 0 else -1)

    def measure(self, p: PauliString, rng=None, forced: int | None = None) -> int:
        """Measure Hermitian ``p``; returns the +-1 outcome and updates the state."""
        if not p.is_hermitian:
            raise ValueError("measured Pauli must be Hermitian (phase +-1)")
        if p.n_qubits != self.n:
            p = p.embed(self.n)
        n = self.n
        px, pz = _bits(p, n)
        anti = ((self.x & pz).sum(axis=1) + (self.z & px).sum(axis=1)) % 2 == 1
        stab_anti = np.flatnonzero(anti[n:])
        if len(stab_anti) == 0:
            return self._deterministic_value(p, anti[:n])
        prow = n + stab_anti[0]
        others = np.flatnonzero(anti)
        others = others[others != prow]
        self._rowmult(others, self.x[prow].copy(), self.z[prow].copy(), self.r[prow])
        self.x[prow - n], self.z[prow - n], self.r[prow - n] = self.x[prow], self.z[prow], self.r[prow]
        if forced is not None:
            m = forced
        else:
            rng = np.random.default_rng(rng)
            m = 1 if rng.integers(2) == 0 else -1
        self.x[prow], self.z[prow] = px, pz
        # stabilized by m * p, where p already carries its own sign
        self.r[prow] = (m * (1 if p.phase == 0 else -1)) == -1
        return m

    def reset(self, q: int, rng=None):
        z = PauliString.single(self.n, q, "Z")
        if self.measure(z, rng) == -1:
            self.pauli_x(q)


def apply_clifford(t: Tableau, ins) -> Tableau:
    """Return a new tableau with the Clifford instruction applied."""
    if not isinstance(ins, Gate):
        raise NonCliffordError(f"{ins!r} is not a gate")
    out = t.copy()
    out.apply_gate(ins)
    return out


def measure_pauli(t: Tableau, p: PauliString, rng=None) -> tuple[int, Tableau]:
    out = t.copy()
    m = out.measure(p, rng)
    return m, out


def shot_rng(seed: int, shot: int = 0) -> np.random.Generator:
    """Counter-based stream keyed by (seed, shot)."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & (2**64 - 1), int(shot)]))


def sample_noise_pauli(ins: NoiseSite, n: int, rng) -> PauliString | None:
    from .vector import _noise_sample

    return _noise_sample(ins, n, rng)


def run_circuit(circuit: Circuit, rng, check: bool = False) -> tuple[dict, Tableau]:
    """Simulate one shot of an (already noise-instrumented) Clifford circuit."""
    t = Tableau(circuit.n_qubits)
    record = {}
    for ins in circuit:
        if isinstance(ins, Gate):
            t.apply_gate(ins)
        elif isinstance(ins, MeasurePauli):
            m = t.measure(ins.pauli, rng)
            if ins.flip and rng.random() < ins.flip:
                m = -m
            record[ins.tag] = m
        elif isinstance(ins, ResetZ):
            t.reset(ins.qubit, rng)
        elif isinstance(ins, NoiseSite):
            err = sample_noise_pauli(ins, circuit.n_qubits, rng)
            if err is not None:
                t.apply_pauli(err)
        elif isinstance(ins, IdleDD):
            pass
        else:
            raise TypeError(ins)
        if check:
            t.check_invariants()
    return record, t


def run_shot(circuit: Circuit, noise=None, seed: int = 0, shot: int = 0) -> dict:
    """One noisy shot; ``noise`` is a :class:`floqsim.noise.NoiseModel` or None."""
    if circuit.has_rotations:
        raise NonCliffordError("circuit contains rotation gates; use the statevector backend")
    if noise is not None:
        from .noise import instrument

        circuit = instrument(circuit, noise)
    record, _ = run_circuit(circuit, shot_rng(seed, shot))
    return record
