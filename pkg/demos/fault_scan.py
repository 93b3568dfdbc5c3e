"""Exhaustive single-fault scan of one encoding plus readout."""
import argparse

from floqsim.circuits import LOWERINGS, build_experiment
from floqsim.faults import deterministic, inject_all
from floqsim.fbs import build_code


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--state", default="0,1")
    ap.add_argument("--basis", default="ZZ")
    ap.add_argument("--lowering", default="ancilla", choices=LOWERINGS)
    args = ap.parse_args()
    exp = build_experiment(build_code(), args.state, args.basis, 4, lowering=args.lowering)
    obs = {"s": exp.logical.value_s, "d": exp.logical.value_d}
    fixed = deterministic(exp.circuit, obs)
    obs = {k: v for k, v in obs.items() if fixed[k]}
    rep = inject_all(exp.circuit, [d.expr for d in exp.detectors], obs, two_qubit=True,
                     within=[exp.segments["encode"], exp.segments["readout"]])
    print(f"{len(rep.faults)} faults, {int(rep.detected.sum())} detected, "
          f"{int(rep.logical.sum())} flip a logical, checked {sorted(obs)}")
    bad = rep.undetected_logical
    print("fault tolerant" if not bad else "undetected logical faults: " + ", ".join(map(str, bad[:10])))


if __name__ == "__main__":
    main()
