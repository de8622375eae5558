"""Regenerate every CSV behind the standard figure set in one go.

Runs the bscout CLI in process, one subcommand per figure, into --out-dir.
--quick cuts the Monte Carlo trial counts and grid densities so a full pass
finishes in well under a minute for smoke checks; the defaults reproduce the
plot-resolution data (a few minutes, dominated by the million-trial points
in fig2 and validate).
"""

import argparse
import sys
import time
from pathlib import Path

from bscout.cli import main as bscout_main


def run(argv: list[str]) -> int:
    print(f"$ bscout {' '.join(argv)}")
    t0 = time.perf_counter()
    rc = bscout_main(argv)
    print(f"  -> exit {rc} in {time.perf_counter() - t0:.1f} s")
    return rc


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="figures", metavar="DIR",
                        help="where the CSV files land (default: ./figures)")
    parser.add_argument("--config", default=None, metavar="PATH",
                        help="scenario TOML (default: bundled three-device scenario)")
    parser.add_argument("--quick", action="store_true",
                        help="coarse grids and 20k trials, for smoke runs")
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    common = []
    if args.config is not None:
        common += ["--config", args.config]
    if args.quick:
        common += ["--trials", "20000"]

    step = "6" if args.quick else "2"
    theta_step = "5" if args.quick else "1"
    pc_step = "25" if args.quick else "5"
    jobs = [
        ["fig2", "--pt-dbm", f"0:60:{step}", "--out", str(out / "fig2.csv")],
        ["fig3", "--pc-uw", f"5:250:{pc_step}", "--out", str(out / "fig3.csv")],
        ["fig4", "--pt-dbm", f"0:60:{step}", "--out", str(out / "fig4.csv")],
        ["fig5", "--rate-mbps", "10:20:0.5", "--out", str(out / "fig5.csv")],
        ["fig6", "--theta-deg", f"0:359:{theta_step}", "--out", str(out / "fig6b.csv")],
        ["fig6", "--d11", "0.5:3.5:0.15", "--out", str(out / "fig6c.csv")],
        ["validate", "--pt-dbm", "10:30:10"],
    ]
    for job in jobs:
        rc = run(job + common)
        if rc != 0:
            print(f"stopping: {job[0]} exited {rc}", file=sys.stderr)
            return rc
    print(f"all figure data written to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
