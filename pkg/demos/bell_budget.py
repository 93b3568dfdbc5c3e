"""Bell-state fidelity after the logical CNOT and its per-component error budget."""
import argparse

from floqsim.fbs import build_code
from floqsim.harness import ExperimentConfig, bell_budget


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shots", type=int, default=200_000)
    args = ap.parse_args()
    eb = bell_budget(build_code(), ExperimentConfig("error-budget", shots=args.shots))
    print(f"detected Bell fidelity {1 - eb.total:.3f}")
    print(f"{'comp':>4} {'weight':>7} {'contrib':>8} {'share':>6}")
    for name, w, c, pct in eb.rows():
        print(f"{name:>4} {w:>7.2f} {100 * c:>7.2f}% {pct:>5.1f}%")
    print(f"others {100 * eb.others:.2f}%")


if __name__ == "__main__":
    main()
