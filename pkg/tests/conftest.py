import numpy as np
import pytest

from floqsim.core import Circuit, Gate, MeasurePauli, PauliString
from floqsim.fbs import build_code

CLIFFORD_1Q = ("H", "S", "SDG", "X", "Y", "Z", "SQRT_Y")


@pytest.fixture(scope="session")
def code():
    return build_code()


def random_clifford_circuit(n: int, depth: int, rng, n_meas: int = 4) -> Circuit:
    """Random gates with joint Pauli measurements sprinkled in."""
    ops = []
    k = 0
    for _ in range(depth):
        r = rng.random()
        if r < 0.45:
            ops.append(Gate(str(rng.choice(CLIFFORD_1Q)), (int(rng.integers(n)),)))
        elif r < 0.85:
            a, b = rng.choice(n, size=2, replace=False)
            ops.append(Gate(str(rng.choice(["CNOT", "CZ"])), (int(a), int(b))))
        elif k < n_meas:
            letters = {}
            for q in rng.choice(n, size=int(rng.integers(1, 4)), replace=False):
                letters[int(q)] = str(rng.choice(list("XYZ")))
            ops.append(MeasurePauli(PauliString.from_letters(n, letters), f"m{k}"))
            k += 1
    while k < n_meas:
        ops.append(MeasurePauli(PauliString.single(n, k % n, "Z"), f"m{k}"))
        k += 1
    return Circuit(n, tuple(ops))


ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, name, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {name}  {detail}")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria")
