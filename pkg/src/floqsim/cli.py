"""``floqsim <experiment> --config FILE`` command line entry point."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .harness import KINDS, ConfigError, parse_config, run, to_csv

EXIT_OK, EXIT_CONFIG, EXIT_SIM = 0, 2, 3
log = logging.getLogger("floqsim")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="floqsim", description="Run a logical-qubit simulation experiment.")
    p.add_argument("experiment", choices=KINDS)
    p.add_argument("--config", type=Path, help="flat key = value file")
    p.add_argument("--seed", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--out", type=Path, help="write the JSON document here instead of stdout")
    p.add_argument("--csv", action="store_true", help="also write a CSV table next to --out")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        text = args.config.read_text() if args.config else ""
        cfg = parse_config(text, experiment=args.experiment, seed=args.seed, shots=args.shots)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("running %s with %d shots, seed %d", cfg.kind, cfg.shots, cfg.seed)
    try:
        doc = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM
    text = json.dumps(doc, indent=2)
    if args.out:
        args.out.write_text(text + "\n")
        if args.csv:
            args.out.with_suffix(".csv").write_text(to_csv(doc))
    else:
        print(text)
        if args.csv:
            print(to_csv(doc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
