"""Circuit-level noise: the model, circuit instrumentation and the error budget."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Callable

from .core import Circuit, Gate, IdleDD, MeasurePauli, NoiseSite, ResetZ

COMPONENTS = ("p_1q", "p_cz", "p_m", "p_dd")
LABELS = {"p_1q": "1Q", "p_cz": "CZ", "p_m": "M", "p_dd": "DD"}


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing gate noise, classical readout flips and idle error during readout.

    Defaults are the median device error rates.
    """
    p_1q: float = 0.0007
    p_cz: float = 0.0097
    p_m: float = 0.0158
    p_dd: float = 0.0143

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
                raise ValueError(f"{f.name}={v!r} is not a probability")

    @classmethod
    def zero(cls) -> "NoiseModel":
        return cls(0.0, 0.0, 0.0, 0.0)

    def scaled(self, factor: float) -> "NoiseModel":
        return NoiseModel(*(min(1.0, getattr(self, k) * factor) for k in COMPONENTS))

    def with_rate(self, name: str, value: float) -> "NoiseModel":
        if name not in COMPONENTS:
            raise KeyError(name)
        return replace(self, **{name: value})

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in COMPONENTS}


def instrument(circuit: Circuit, model: NoiseModel) -> Circuit:
    """Insert noise sites after every gate, set readout flips and expand idle windows.

    Sites are emitted even at zero probability so that two instrumentations
    of one circuit line up instruction by instruction (needed for envelopes).
    """
    out = []
    for ins in circuit:
        if isinstance(ins, Gate):
            out.append(ins)
            if len(ins.qubits) == 1:
                out.append(NoiseSite("depolarize1", ins.qubits, model.p_1q))
            else:
                out.append(NoiseSite("depolarize2", ins.qubits, model.p_cz))
        elif isinstance(ins, MeasurePauli):
            out.append(MeasurePauli(ins.pauli, ins.tag, model.p_m))
        elif isinstance(ins, IdleDD):
            out.append(NoiseSite("depolarize1", ins.qubits, model.p_dd))
        elif isinstance(ins, (ResetZ, NoiseSite)):
            out.append(ins)
        else:
            raise TypeError(f"no noise rule for {ins!r}")
    return Circuit(circuit.n_qubits, tuple(out))


@dataclass(frozen=True)
class ErrorBudget:
    total: float
    weights: dict
    contributions: dict

    @property
    def percentages(self) -> dict:
        if self.total <= 0:
            return {k: 0.0 for k in self.contributions}
        return {k: 100.0 * v / self.total for k, v in self.contributions.items()}

    @property
    def others(self) -> float:
        return self.total - sum(self.contributions.values())

    def rows(self) -> list[tuple]:
        pct = self.percentages
        return [(LABELS[k], self.weights[k], self.contributions[k], pct[k]) for k in COMPONENTS]


def error_budget(infidelity: Callable[[NoiseModel, NoiseModel], float],
                 model: NoiseModel = NoiseModel(), step: float = 0.25) -> ErrorBudget:
    """Gradient weights by central differences around half of each rate.

    ``infidelity(rates, envelope)`` must simulate with common random numbers
    for a fixed envelope; the envelope passed here is ``model`` itself, which
    dominates every evaluation point.  The other components stay at full rate.
    """
    total = float(infidelity(model, model))
    weights, contrib = {}, {}
    for k in COMPONENTS:
        p = getattr(model, k)
        if p == 0:
            weights[k] = 0.0
            contrib[k] = 0.0
            continue
        lo, hi = 0.5 * p * (1 - step), 0.5 * p * (1 + step)
        f_hi = infidelity(model.with_rate(k, hi), model)
        f_lo = infidelity(model.with_rate(k, lo), model)
        w = (f_hi - f_lo) / (hi - lo)
        if not math.isfinite(w):
            raise FloatingPointError(f"gradient for {k} is not finite; increase the shot count")
        weights[k] = w
        contrib[k] = p * w
    return ErrorBudget(total, weights, contrib)


def physical_baseline(tau: float, t1: float, t2e: float) -> float:
    """Idle error of one physical qubit over ``tau``: 1 - exp(-tau/T2e)/2 - exp(-tau/T1)/2."""
    if tau < 0 or t1 <= 0 or t2e <= 0:
        raise ValueError("durations must be positive")
    return 1.0 - math.exp(-tau / t2e) / 2 - math.exp(-tau / t1) / 2
