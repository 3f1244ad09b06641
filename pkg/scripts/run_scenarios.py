"""Run every bundled scenario through the CLI and report wall-clock time.

    python3 scripts/run_scenarios.py [--out results] [--only chain tree]
"""

import argparse
import time
from pathlib import Path

from lisfdr.cli import main
from lisfdr.io import read_csv

ROOT = Path(__file__).resolve().parent.parent


def run(path: Path, out: Path) -> float:
    t = time.perf_counter()
    rc = main(["simulate", "--scenario", str(path), "--out", str(out)])
    if rc != 0:
        raise SystemExit(f"{path.name} exited with {rc}")
    return time.perf_counter() - t


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=ROOT / "results")
    ap.add_argument("--only", nargs="*", help="scenario names (file stems) to run")
    args = ap.parse_args()

    for path in sorted((ROOT / "scenarios").glob("*.txt")):
        if args.only and path.stem not in args.only:
            continue
        elapsed = run(path, args.out / path.stem)
        print(f"== {path.stem}: {elapsed:.0f}s")
        for row in read_csv(args.out / path.stem / "metrics.csv"):
            print(f"   {row['procedure']:>9} alpha={row['alpha']:<5} fdr={float(row['fdr']):.4f} "
                  f"fnr={float(row['fnr']):.4f} atp={float(row['atp']):.1f}")
