"""Raw vs post-selected decay of <X_s Z_d> over stabilizer rounds."""
import argparse

from floqsim.harness import parse_config, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shots", type=int, default=50_000)
    ap.add_argument("--rounds", type=int, default=12)
    args = ap.parse_args()
    doc = run(parse_config("experiment = fbs-memory\nstates = +,0", shots=args.shots, rounds=args.rounds))
    res = doc["result"]
    print(f"{'round':>5} {'raw':>8} {'detect':>8} {'kept':>7}")
    for r in res["rounds"]:
        print(f"{r['round']:>5} {r['raw']:>8.4f} {r['detect']:>8.4f} {r['retention']:>7.3f}")
    for key in ("raw", "detect"):
        p = res["fits"][key]["params"]
        print(f"{key:>6}: error per round {100 * p['eps']:.2f}%")


if __name__ == "__main__":
    main()
