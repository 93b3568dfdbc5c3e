"""Sampling experiments through the frame, tableau or statevector backends."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import Circuit, Sym
from .frames import sample as frame_sample
from .noise import NoiseModel, instrument
from .vector import MAX_QUBITS, parity_expectations, run as vector_run

BACKENDS = ("auto", "tableau", "vector")


def choose_backend(circuit: Circuit, backend: str = "auto") -> str:
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}")
    if backend == "auto":
        return "vector" if circuit.has_rotations else "tableau"
    if backend == "tableau" and circuit.has_rotations:
        raise ValueError("the stabilizer backend cannot run rotation gates")
    return backend


def sample_values(circuit: Circuit, exprs: Mapping[str, object], shots: int,
                  noise: NoiseModel | None = None, seed: int = 0, backend: str = "auto",
                  envelope: NoiseModel | None = None) -> dict[str, np.ndarray]:
    """Sample ``shots`` runs and evaluate each symbolic expression.

    Returns name -> int8 array of +-1 values.  The stabilizer path propagates
    bit-packed Pauli frames against one tableau reference shot; ``envelope``
    fixes the random stream for common-random-number comparisons.
    """
    backend = choose_backend(circuit, backend)
    noisy = instrument(circuit, noise) if noise is not None else circuit
    if backend == "tableau":
        env = instrument(circuit, envelope) if envelope is not None else None
        rec = frame_sample(noisy, shots, seed, env)
        return {k: rec.evaluate(e) for k, e in exprs.items()}
    small, mapping = noisy.compact()
    if small.n_qubits > MAX_QUBITS:
        raise ValueError(f"{small.n_qubits} qubits exceed the statevector budget")
    rng = np.random.default_rng(seed)
    out = {k: np.empty(shots, dtype=np.int8) for k in exprs}
    for s in range(shots):
        rec, _ = vector_run(small, rng)
        for k, e in exprs.items():
            out[k][s] = e.evaluate(rec) if isinstance(e, Sym) else e
    return out


def exact_expectations(circuit: Circuit, exprs: Mapping[str, object],
                       max_branches: int = 2 ** 12) -> dict[str, float]:
    """Noiseless expectation of each expression by merged outcome enumeration."""
    small, _ = circuit.compact()
    return parity_expectations(small, exprs, max_branches)


@dataclass
class RunResult:
    values: dict
    retained: np.ndarray

    @property
    def shots(self) -> int:
        return len(self.retained)

    @property
    def retention(self) -> float:
        return float(self.retained.mean()) if self.shots else 0.0

    def mean(self, name: str, post: str = "raw") -> float:
        v = self.values[name].astype(float)
        if post == "detect":
            v = v[self.retained]
        return float(v.mean()) if v.size else float("nan")


def run_experiment(exp, shots: int, noise: NoiseModel | None = None, seed: int = 0,
                   backend: str = "auto", envelope: NoiseModel | None = None,
                   extra: Mapping[str, object] | None = None) -> RunResult:
    """Sample an FBS :class:`~floqsim.circuits.Experiment`.

    Values ``s`` and ``d`` are the logical outcomes, ``sd`` their product; a
    shot is retained when every detector is trivial.
    """
    exprs = {"s": exp.logical.value_s, "d": exp.logical.value_d,
             "sd": exp.logical.value_s * exp.logical.value_d}
    for i, det in enumerate(exp.detectors):
        exprs[f"det{i}"] = det.expr
    exprs.update(extra or {})
    vals = sample_values(exp.circuit, exprs, shots, noise, seed, backend, envelope)
    retained = np.ones(shots, dtype=bool)
    for i in range(len(exp.detectors)):
        retained &= vals.pop(f"det{i}") == 1
    return RunResult(vals, retained)
