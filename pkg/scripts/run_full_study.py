#!/usr/bin/env python3
"""Full-scale robust-versus-naive study (10 000 scenarios per investor kind).

This is the opt-in long run; the CI-scale variant is `robustdrift study`
with the bundled config.  Expect roughly 10 minutes on four cores.

Usage:
    python scripts/run_full_study.py [--paths 10000] [--jobs 4] [--out out_full]
"""

import argparse
import sys
import time

from robustdrift.cli import default_config_path, main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(default_config_path()))
    parser.add_argument("--paths", type=int, default=10_000)
    parser.add_argument("--jobs", type=int, default=4)
    parser.add_argument("--out", default="out_full")
    args = parser.parse_args()

    start = time.perf_counter()
    code = cli_main(
        [
            "study",
            "--config", args.config,
            "--paths", str(args.paths),
            "--jobs", str(args.jobs),
            "--out", args.out,
        ]
    )
    print(f"done in {time.perf_counter() - start:.0f}s -> {args.out}/study.csv")
    return code


if __name__ == "__main__":
    sys.exit(main())
