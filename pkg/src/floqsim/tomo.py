"""Two-qubit logical state and process tomography.

Histograms are ordered ``[--, -+, +-, ++]`` (static outcome first).  Pauli
vectors have 16 entries indexed ``4*i + j`` for ``sigma_i (x) sigma_j`` with
``i, j`` over ``I, X, Y, Z``.
"""
from __future__ import annotations

import itertools
from typing import Mapping

import numpy as np

PAULI_LETTERS = "IXYZ"
_SIG = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}
BASES = tuple(a + b for a in "ZXY" for b in "ZXY")
OUTCOMES = ((-1, -1), (-1, 1), (1, -1), (1, 1))
TOL = 1e-9


def pauli_basis() -> list[np.ndarray]:
    return [np.kron(_SIG[a], _SIG[b]) for a in PAULI_LETTERS for b in PAULI_LETTERS]


_BASIS = pauli_basis()


def pauli_index(label: str) -> int:
    return 4 * PAULI_LETTERS.index(label[0]) + PAULI_LETTERS.index(label[1])


def is_density_matrix(rho: np.ndarray, tol: float = TOL) -> bool:
    rho = np.asarray(rho)
    if rho.shape != (4, 4) or not np.allclose(rho, rho.conj().T, atol=tol):
        return False
    if abs(np.trace(rho) - 1) > tol:
        return False
    return bool(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() >= -tol)


def pauli_vector(rho: np.ndarray) -> np.ndarray:
    tr = np.trace(rho).real
    if abs(tr) < 1e-15:
        raise ValueError("density matrix has zero trace")
    return np.array([np.trace(rho @ s).real for s in _BASIS]) / tr


def from_pauli_vector(p: np.ndarray) -> np.ndarray:
    return sum(c * s for c, s in zip(p, _BASIS)) / 4


def pure_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


# ---------------------------------------------------------------------------
# State tomography


def counts_from_values(vs, vd) -> list[int]:
    """Histogram ``[--, -+, +-, ++]`` from paired +-1 outcome arrays."""
    vs, vd = np.asarray(vs), np.asarray(vd)
    return [int(np.sum((vs == a) & (vd == b))) for a, b in OUTCOMES]


def basis_probabilities(rho: np.ndarray, basis: str) -> np.ndarray:
    """Exact outcome probabilities of measuring ``rho`` in two-letter ``basis``."""
    p = pauli_vector(rho)
    return _design(basis) @ p


def _design(basis: str) -> np.ndarray:
    """Rows: outcomes; columns: Pauli-vector entries.  prob = row . p."""
    a_idx = pauli_index(basis[0] + "I")
    b_idx = pauli_index("I" + basis[1])
    ab_idx = pauli_index(basis)
    rows = np.zeros((4, 16))
    for k, (a, b) in enumerate(OUTCOMES):
        rows[k, 0] = 0.25
        rows[k, a_idx] += 0.25 * a
        rows[k, b_idx] += 0.25 * b
        rows[k, ab_idx] += 0.25 * a * b
    return rows


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.nonzero(u * np.arange(1, len(v) + 1) > css - 1)[0][-1]
    theta = (css[k] - 1) / (k + 1)
    return np.maximum(v - theta, 0)


def project_density(m: np.ndarray) -> np.ndarray:
    """Closest (Frobenius) density matrix: Hermitize, project eigenvalues onto the simplex."""
    h = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(h)
    w = _project_simplex(w)
    return (v * w) @ v.conj().T


def lqst(counts: Mapping[str, list]) -> np.ndarray:
    """Density matrix from 9-basis histograms by constrained least squares.

    Linear inversion of the outcome frequencies, projection onto physical
    states, then one projected-gradient step on the frequency residual.
    """
    rows, freqs = [], []
    for basis in BASES:
        if basis not in counts:
            raise KeyError(f"missing histogram for basis {basis}")
        c = np.asarray(counts[basis], dtype=float)
        if c.shape != (4,) or c.sum() <= 0:
            raise ValueError(f"histogram for {basis} is empty or malformed")
        rows.append(_design(basis))
        freqs.append(c / c.sum())
    A = np.vstack(rows)
    f = np.concatenate(freqs)
    # p_II is fixed to 1 by normalisation
    rhs = f - A[:, 0]
    sol, *_ = np.linalg.lstsq(A[:, 1:], rhs, rcond=None)
    p = np.concatenate([[1.0], sol])
    rho = project_density(from_pauli_vector(p))
    # one projected-gradient refinement of ||A p(rho) - f||^2
    grad_p = 2 * A.T @ (A @ pauli_vector(rho) - f)
    grad_p[0] = 0
    step = 1.0 / (8 * np.linalg.norm(A, 2) ** 2)
    rho = project_density(rho - step * from_pauli_vector(grad_p) * 4)
    return rho


def state_fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """Tr(rho target) for a pure target."""
    return float(np.trace(rho @ target).real)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum())


# ---------------------------------------------------------------------------
# Process tomography


def transfer_matrix(unitary: np.ndarray) -> np.ndarray:
    """Pauli transfer matrix R_ij = Tr(s_i U s_j U^dag) / 4."""
    u = np.asarray(unitary)
    return np.array([[np.trace(si @ u @ sj @ u.conj().T).real / 4 for sj in _BASIS]
                     for si in _BASIS])


def channel_transfer_matrix(kraus: list) -> np.ndarray:
    return np.array([[sum(np.trace(si @ k @ sj @ k.conj().T) for k in kraus).real / 4
                      for sj in _BASIS] for si in _BASIS])


def _choi(R: np.ndarray) -> np.ndarray:
    return sum(R[i, j] * np.kron(_BASIS[j].T, _BASIS[i]) for i in range(16) for j in range(16)) / 16


def _from_choi(J: np.ndarray) -> np.ndarray:
    return np.array([[np.trace(J @ np.kron(_BASIS[j].T, _BASIS[i])).real
                      for j in range(16)] for i in range(16)])


def lqpt(inputs, outputs, cptp: bool = False, max_condition: float = 1e8) -> np.ndarray:
    """Transfer matrix from (input, output) Pauli-vector pairs by least squares.

    The result is made trace preserving (first row forced to ``e_0``) and
    clipped to [-1, 1]; ``cptp`` additionally clips the Choi spectrum.
    """
    P_in = np.column_stack([np.asarray(v, dtype=float) for v in inputs])
    P_out = np.column_stack([np.asarray(v, dtype=float) for v in outputs])
    if P_in.shape[0] != 16 or P_in.shape != P_out.shape:
        raise ValueError("expected 16-component input and output vectors")
    cond = np.linalg.cond(P_in)
    if not np.isfinite(cond) or cond > max_condition:
        raise np.linalg.LinAlgError(f"input states are rank deficient (condition number {cond:.3g})")
    R = np.linalg.lstsq(P_in.T, P_out.T, rcond=None)[0].T
    if cptp:
        J = _choi(R)
        w, v = np.linalg.eigh((J + J.conj().T) / 2)
        R = _from_choi((v * np.maximum(w, 0)) @ v.conj().T)
    R[0] = 0
    R[0, 0] = 1
    return np.clip(R, -1, 1)


def process_fidelity(R_exp: np.ndarray, R_ideal: np.ndarray) -> float:
    return float(np.trace(R_ideal.T @ R_exp) / 16)


def gate_fidelity(f_p: float, d: int = 4) -> float:
    return (d * f_p + 1) / (d + 1)


def process_and_gate_fidelity(R_exp, R_ideal) -> tuple[float, float]:
    fp = process_fidelity(np.asarray(R_exp), np.asarray(R_ideal))
    return fp, gate_fidelity(fp)


# ---------------------------------------------------------------------------
# Logical states


_KET = {
    "0": np.array([1, 0], dtype=complex), "1": np.array([0, 1], dtype=complex),
    "+": np.array([1, 1], dtype=complex) / np.sqrt(2), "-": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "+i": np.array([1, 1j]) / np.sqrt(2), "-i": np.array([1, -1j]) / np.sqrt(2),
}


def label_ket(s: str, d: str) -> np.ndarray:
    return np.kron(_KET[s], _KET[d])


CNOT_UNITARY = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
LQPT_INPUTS = [(a, b) for a, b in itertools.product(("0", "1", "-", "-i"), repeat=2)]
