"""Simulator for the Floquet-Bacon-Shor code on a 3x3 lattice."""
from .circuits import build_experiment, encode_circuit, logical_gate_circuit, readout_circuit
from .core import Circuit, PauliString, Sym
from .fbs import FbsCode, build_code, update_sign_frame, validate
from .noise import NoiseModel, error_budget, instrument, physical_baseline
from .runner import run_experiment, sample_values

__all__ = [
    "Circuit", "PauliString", "Sym", "FbsCode", "build_code", "validate", "update_sign_frame",
    "NoiseModel", "instrument", "error_budget", "physical_baseline", "build_experiment",
    "encode_circuit", "logical_gate_circuit", "readout_circuit", "run_experiment", "sample_values",
]
__version__ = "0.1.0"
