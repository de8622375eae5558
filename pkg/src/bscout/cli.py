"""Command-line sweeps pairing the closed forms with Monte Carlo estimates.

Each figure command loads a scenario, runs a grid (transmit power, circuit
power, rate or device position), and writes plot-ready CSV with a one-line
provenance header (config hash, seed, tool version). validate runs the full
analytic-vs-simulation comparison table and fails loudly on disagreement.

Exit codes: 0 on success, 1 on usage or runtime errors, 2 when validation
finds a disagreement.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

from . import __version__, analytic, montecarlo
from .harvester import InfeasibleError
from .montecarlo import RcScheme
from .scenario import (
    ConfigError,
    Scenario,
    circle_geometry,
    dbm_to_watts,
    load_config,
)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the documented contract is 1
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _grid(text: str) -> list[float]:
    """Parse 'LO:HI:STEP' (inclusive endpoints) or a single number."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) == 3:
            lo, hi, step = (float(p) for p in parts)
            if step > 0.0 and hi >= lo and all(map(math.isfinite, (lo, hi, step))):
                n = int(math.floor((hi - lo) / step + 1e-9)) + 1
                return [lo + i * step for i in range(n)]
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected NUM or LO:HI:STEP, got {text!r}")


def _single(values: list[float], flag: str) -> float:
    if len(values) != 1:
        raise ConfigError(f"{flag} takes a single value for this command, got {values}")
    return values[0]


def _prepare(args: argparse.Namespace) -> Scenario:
    scn = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.gc_order is not None:
        overrides["gc_order"] = args.gc_order
    system = dataclasses.replace(scn.system, **overrides) if overrides else scn.system
    links = scn.links
    if args.eh is not None:
        links = tuple(
            dataclasses.replace(link, eh=dataclasses.replace(link.eh, mode=args.eh))
            for link in links
        )
    return Scenario(system=system, legacy=scn.legacy, links=links)


def _at_power(scn: Scenario, pt_dbm: float) -> Scenario:
    system = dataclasses.replace(scn.system, transmit_power=dbm_to_watts(pt_dbm))
    return scn._replace(system=system)


def _with_eh_mode(scn: Scenario, mode: str) -> Scenario:
    links = tuple(
        dataclasses.replace(link, eh=dataclasses.replace(link.eh, mode=mode))
        for link in scn.links
    )
    return scn._replace(links=links)


def _config_hash(scn: Scenario) -> str:
    return hashlib.sha256(repr(scn).encode()).hexdigest()[:12]


def _out_path(args: argparse.Namespace, default_name: str) -> Path:
    if args.out is not None:
        path = Path(args.out)
    else:
        path = Path(os.environ.get("BSC_OUT_DIR", ".")) / default_name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(path: Path, scn: Scenario, columns: list[str],
               rows: Iterable[Iterable[float]], notes: Iterable[str] = ()) -> int:
    rows = list(rows)
    with open(path, "w", newline="") as fh:
        fh.write(f"# config={_config_hash(scn)} seed={scn.system.seed} "
                 f"version={__version__}\n")
        for note in notes:
            fh.write(f"# note: {note}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([f"{v:.12g}" for v in row])
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def _pool_map(fn: Callable, items: list) -> list:
    # grid points are independent; buffered results keep the output in grid order
    workers = min(8, os.cpu_count() or 1, max(len(items), 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cmd_fig2(args: argparse.Namespace) -> int:
    """Backscatter outage vs transmit power: closed forms, MC, linear-EH variants."""
    scn = _prepare(args)
    scn_lin = _with_eh_mode(scn, "linear")
    nlinks = len(scn.links)

    def row(pt_dbm: float) -> list[float]:
        s = _at_power(scn, pt_dbm)
        s_lin = _at_power(scn_lin, pt_dbm)
        vals = [pt_dbm]
        for k in range(nlinks):
            est = montecarlo.estimate_backscatter_outage(s, k)
            vals += [
                analytic.backscatter_outage_exact(s, k),
                analytic.backscatter_outage_gc(s, k),
                analytic.backscatter_outage_highsnr(s, k),
                analytic.backscatter_outage_floor(s, k),
                est.probability,
                est.stderr,
            ]
        vals += [analytic.backscatter_best(s), analytic.backscatter_worst(s)]
        vals += [analytic.backscatter_outage_exact(s_lin, k) for k in range(nlinks)]
        vals += [analytic.backscatter_best(s_lin), analytic.backscatter_worst(s_lin)]
        return vals

    columns = ["pt_dbm"]
    for k in range(1, nlinks + 1):
        columns += [f"bsc{k}_exact", f"bsc{k}_gc", f"bsc{k}_highsnr",
                    f"bsc{k}_floor", f"bsc{k}_mc", f"bsc{k}_mc_stderr"]
    columns += ["bsc_best", "bsc_worst"]
    columns += [f"bsc{k}_exact_lin" for k in range(1, nlinks + 1)]
    columns += ["bsc_best_lin", "bsc_worst_lin"]
    rows = _pool_map(row, args.pt_dbm)
    return _write_csv(_out_path(args, "fig2.csv"), scn, columns, rows)


_FIG3_SCHEMES = [
    ("adaptive", RcScheme.adaptive()),
    ("fixed03", RcScheme.fixed(0.3)),
    ("fixed05", RcScheme.fixed(0.5)),
    ("fixed07", RcScheme.fixed(0.7)),
    ("random", RcScheme.random_uniform()),
]


def cmd_fig3(args: argparse.Namespace) -> int:
    """Outage capacity vs circuit power for the RC schemes, fixed transmit power."""
    scn = _at_power(_prepare(args), _single(args.pt_dbm, "--pt-dbm"))
    k = len(scn.links) - 1 if args.link is None else args.link - 1
    if not (0 <= k < len(scn.links)):
        raise ConfigError(f"--link {args.link} out of range (scenario has "
                          f"{len(scn.links)} links)")
    rate = scn.system.backscatter_rate
    notes = []

    def row(pc_uw: float) -> list[float]:
        link = dataclasses.replace(scn.links[k], circuit_power=pc_uw * 1e-6)
        links = scn.links[:k] + (link,) + scn.links[k + 1:]
        s = scn._replace(links=links)
        vals = [pc_uw]
        try:
            feasible = 1.0
            ests = [montecarlo.estimate_backscatter_outage(s, k, scheme)
                    for _, scheme in _FIG3_SCHEMES]
            for est in ests:
                vals += [rate * (1.0 - est.probability), rate * est.stderr]
        except InfeasibleError:
            feasible = 0.0
            vals += [0.0, 0.0] * len(_FIG3_SCHEMES)
            notes.append(f"pc_uw={pc_uw:g} exceeds harvester saturation; capacity 0")
        vals.insert(1, feasible)
        return vals

    columns = ["pc_uw", "feasible"]
    for name, _ in _FIG3_SCHEMES:
        columns += [f"cap_{name}", f"cap_{name}_stderr"]
    rows = _pool_map(row, args.pc_uw)
    notes.sort()
    return _write_csv(_out_path(args, "fig3.csv"), scn, columns, rows, notes)


def _legacy_columns(nlinks: int) -> list[str]:
    cols = ["no_sl"]
    cols += [f"leg{k}" for k in range(1, nlinks + 1)]
    cols += ["leg_best", "leg_worst"]
    cols += [f"leg{k}_floor" for k in range(1, nlinks + 1)]
    cols += ["leg_best_floor", "leg_worst_floor"]
    return cols


def _legacy_values(s: Scenario) -> list[float]:
    nlinks = len(s.links)
    vals = [analytic.legacy_no_backscatter(s)]
    vals += [analytic.legacy_outage(s, k) for k in range(nlinks)]
    vals += [analytic.legacy_best(s, method="exact"),
             analytic.legacy_worst(s, method="exact")]
    vals += [analytic.legacy_outage_floor(s, k) for k in range(nlinks)]
    vals += [analytic.legacy_best_floor(s, method="exact"),
             analytic.legacy_worst_floor(s, method="exact")]
    return vals


def cmd_fig4(args: argparse.Namespace) -> int:
    """Legacy outage vs transmit power: no-interference baseline, per-device,
    selection extremes and their floors."""
    scn = _prepare(args)

    def row(pt_dbm: float) -> list[float]:
        return [pt_dbm] + _legacy_values(_at_power(scn, pt_dbm))

    columns = ["pt_dbm"] + _legacy_columns(len(scn.links))
    rows = _pool_map(row, args.pt_dbm)
    return _write_csv(_out_path(args, "fig4.csv"), scn, columns, rows)


def cmd_fig5(args: argparse.Namespace) -> int:
    """Legacy outage vs target rate at fixed transmit power."""
    scn = _at_power(_prepare(args), _single(args.pt_dbm, "--pt-dbm"))

    def row(rate_mbps: float) -> list[float]:
        system = dataclasses.replace(scn.system, legacy_rate=rate_mbps * 1e6)
        return [rate_mbps] + _legacy_values(scn._replace(system=system))

    columns = ["rate_mbps"] + _legacy_columns(len(scn.links))
    rows = _pool_map(row, args.rate_mbps)
    return _write_csv(_out_path(args, "fig5.csv"), scn, columns, rows)


def _fig6_scenario(scn: Scenario, theta: float, d11: float, d1p: float,
                   dp: float) -> Scenario:
    placement = circle_geometry(theta, radius=d11, br_offset=d1p, lr_distance=dp)
    link = dataclasses.replace(
        scn.links[0], d_lt_bd=placement.d_lt_bd, d_bd_br=placement.d_bd_br,
        d_lt_br=placement.d_lt_br, d_bd_lr=placement.d_bd_lr,
    )
    legacy = dataclasses.replace(scn.legacy, distance=dp)
    return Scenario(system=scn.system, legacy=legacy, links=(link,))


def cmd_fig6(args: argparse.Namespace) -> int:
    """Single-device geometry sweep: outage vs device angle, or vs feeder
    distance at two fixed angles."""
    scn = _at_power(_prepare(args), _single(args.pt_dbm, "--pt-dbm"))

    if args.d11 is not None:
        angles = [math.pi / 4.0, 5.0 * math.pi / 4.0]

        def drow(d11: float) -> list[float]:
            vals = [d11]
            for theta in angles:
                s = _fig6_scenario(scn, theta, d11, args.d1p, args.dp)
                vals += [analytic.legacy_outage(s, 0),
                         analytic.backscatter_outage_exact(s, 0)]
            return vals

        columns = ["d11", "leg_pi4", "bsc_pi4", "leg_5pi4", "bsc_5pi4"]
        rows = _pool_map(drow, args.d11)
        return _write_csv(_out_path(args, "fig6c.csv"), scn, columns, rows)

    def trow(theta_deg: float) -> list[float]:
        theta = math.radians(theta_deg)
        s = _fig6_scenario(scn, theta, args.d11_fixed, args.d1p, args.dp)
        return [theta_deg, theta,
                analytic.legacy_outage(s, 0),
                analytic.backscatter_outage_exact(s, 0)]

    columns = ["theta_deg", "theta_rad", "legacy", "backscatter"]
    rows = _pool_map(trow, args.theta_deg)
    return _write_csv(_out_path(args, "fig6b.csv"), scn, columns, rows)


class ValidationRow(NamedTuple):
    name: str
    pt_dbm: float
    analytic: float
    mc: float
    stderr: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return abs(self.analytic - self.mc) <= self.tolerance


def validation_rows(scn: Scenario, pt_dbm_values: list[float]) -> list[ValidationRow]:
    """Pair every closed form with its Monte Carlo estimate on a power grid."""
    nlinks = len(scn.links)
    tasks = []
    for pt in pt_dbm_values:
        s = _at_power(scn, pt)
        for k in range(nlinks):
            tasks.append((f"bsc{k + 1}", pt,
                          lambda s=s, k=k: analytic.backscatter_outage_exact(s, k),
                          lambda s=s, k=k: montecarlo.estimate_backscatter_outage(s, k)))
        tasks.append(("bsc_best", pt,
                      lambda s=s: analytic.backscatter_best(s),
                      lambda s=s: montecarlo.estimate_backscatter_selection(s, "best")))
        tasks.append(("bsc_worst", pt,
                      lambda s=s: analytic.backscatter_worst(s),
                      lambda s=s: montecarlo.estimate_backscatter_selection(s, "worst")))
        for k in range(nlinks):
            tasks.append((f"leg{k + 1}", pt,
                          lambda s=s, k=k: analytic.legacy_outage(s, k),
                          lambda s=s, k=k: montecarlo.estimate_legacy_outage(s, k)))
        tasks.append(("leg_best", pt,
                      lambda s=s: analytic.legacy_best(s, method="exact"),
                      lambda s=s: montecarlo.estimate_legacy_outage(s, "best")))
        tasks.append(("leg_worst", pt,
                      lambda s=s: analytic.legacy_worst(s, method="exact"),
                      lambda s=s: montecarlo.estimate_legacy_outage(s, "worst")))
        tasks.append(("no_sl", pt,
                      lambda s=s: analytic.legacy_no_backscatter(s),
                      lambda s=s: montecarlo.estimate_legacy_outage(s, "none")))

    def run(task) -> ValidationRow:
        name, pt, an_fn, mc_fn = task
        est = mc_fn()
        an = an_fn()
        tol = max(3.0 * est.stderr, 2e-3)
        return ValidationRow(name=name, pt_dbm=pt, analytic=an,
                             mc=est.probability, stderr=est.stderr, tolerance=tol)

    return _pool_map(run, tasks)


def cmd_validate(args: argparse.Namespace) -> int:
    """Analytic-vs-MC comparison table; exit 2 if any pairing disagrees."""
    scn = _prepare(args)
    rows = validation_rows(scn, args.pt_dbm)
    failures = 0
    print(f"# config={_config_hash(scn)} seed={scn.system.seed} "
          f"trials={scn.system.trials} version={__version__}")
    print(f"{'quantity':<10} {'pt_dbm':>7} {'analytic':>12} {'mc':>12} "
          f"{'stderr':>10} verdict")
    for r in rows:
        verdict = "pass" if r.ok else "FAIL"
        failures += 0 if r.ok else 1
        print(f"{r.name:<10} {r.pt_dbm:>7.1f} {r.analytic:>12.6f} {r.mc:>12.6f} "
              f"{r.stderr:>10.2e} {verdict}")
    if failures:
        print(f"{failures} of {len(rows)} pairings exceeded tolerance")
        return 2
    print(f"all {len(rows)} pairings within tolerance")
    return 0


_SWEEP_VARS = {
    "pt_dbm": "transmit power in dBm",
    "legacy_rate_mbps": "legacy target rate in Mbit/s",
    "backscatter_rate_kbps": "backscatter target rate in kbit/s",
    "circuit_power_uw": "device circuit power in microwatts (all devices)",
}


def _sweep_scenario(scn: Scenario, var: str, value: float) -> Scenario:
    if var == "pt_dbm":
        return _at_power(scn, value)
    if var == "legacy_rate_mbps":
        return scn._replace(system=dataclasses.replace(scn.system,
                                                       legacy_rate=value * 1e6))
    if var == "backscatter_rate_kbps":
        return scn._replace(system=dataclasses.replace(scn.system,
                                                       backscatter_rate=value * 1e3))
    links = tuple(dataclasses.replace(link, circuit_power=value * 1e-6)
                  for link in scn.links)
    return scn._replace(links=links)


def cmd_sweep(args: argparse.Namespace) -> int:
    """Generic one-variable analytic sweep over every outage quantity."""
    scn = _prepare(args)
    nlinks = len(scn.links)

    def row(value: float) -> list[float]:
        s = _sweep_scenario(scn, args.var, value)
        vals = [value]
        vals += [analytic.backscatter_outage_exact(s, k) for k in range(nlinks)]
        vals += [analytic.backscatter_best(s), analytic.backscatter_worst(s)]
        vals += [analytic.legacy_no_backscatter(s)]
        vals += [analytic.legacy_outage(s, k) for k in range(nlinks)]
        vals += [analytic.legacy_best(s, method="exact"),
                 analytic.legacy_worst(s, method="exact")]
        return vals

    columns = [args.var]
    columns += [f"bsc{k}_exact" for k in range(1, nlinks + 1)]
    columns += ["bsc_best", "bsc_worst", "no_sl"]
    columns += [f"leg{k}" for k in range(1, nlinks + 1)]
    columns += ["leg_best", "leg_worst"]
    rows = _pool_map(row, args.grid)
    return _write_csv(_out_path(args, "sweep.csv"), scn, columns, rows)


def build_parser() -> _Parser:
    parser = _Parser(prog="bscout",
                     description="Outage sweeps for ambient backscatter links "
                                 "and the legacy transmission they share.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="scenario TOML (default: bundled three-device scenario)")
    common.add_argument("--seed", type=int, metavar="U64",
                        help="Monte Carlo seed override")
    common.add_argument("--trials", type=int, metavar="N",
                        help="Monte Carlo trials override")
    common.add_argument("--gc-order", type=int, metavar="M",
                        help="Gauss-Chebyshev order override")
    common.add_argument("--eh", choices=("nonlinear", "linear"),
                        help="energy-harvester mode override")
    common.add_argument("--out", metavar="PATH",
                        help="output file (default: $BSC_OUT_DIR/<cmd>.csv)")

    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("fig2", parents=[common],
                       help="backscatter outage vs transmit power")
    p.add_argument("--pt-dbm", type=_grid, default="0:60:2", metavar="LO:HI:STEP")
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("fig3", parents=[common],
                       help="outage capacity vs circuit power per RC scheme")
    p.add_argument("--pt-dbm", type=_grid, default="20", metavar="DBM")
    p.add_argument("--pc-uw", type=_grid, default="5:250:5", metavar="LO:HI:STEP")
    p.add_argument("--link", type=int, default=None, metavar="K",
                   help="1-based device index to sweep (default: last device)")
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("fig4", parents=[common],
                       help="legacy outage vs transmit power")
    p.add_argument("--pt-dbm", type=_grid, default="0:60:2", metavar="LO:HI:STEP")
    p.set_defaults(func=cmd_fig4)

    p = sub.add_parser("fig5", parents=[common],
                       help="legacy outage vs target rate")
    p.add_argument("--pt-dbm", type=_grid, default="30", metavar="DBM")
    p.add_argument("--rate-mbps", type=_grid, default="10:20:0.5", metavar="LO:HI:STEP")
    p.set_defaults(func=cmd_fig5)

    p = sub.add_parser("fig6", parents=[common],
                       help="single-device geometry sweep (angle or distance)")
    p.add_argument("--pt-dbm", type=_grid, default="30", metavar="DBM")
    p.add_argument("--theta-deg", type=_grid, default="0:359:1", metavar="LO:HI:STEP")
    p.add_argument("--d11", type=_grid, default=None, metavar="LO:HI:STEP",
                   help="sweep feeder distance at theta = pi/4 and 5pi/4 instead")
    p.add_argument("--d11-fixed", type=float, default=2.0, metavar="M",
                   help="feeder distance for the angle sweep (default 2)")
    p.add_argument("--d1p", type=float, default=4.0, metavar="M",
                   help="transmitter-to-backscatter-receiver distance (default 4)")
    p.add_argument("--dp", type=float, default=10.0, metavar="M",
                   help="legacy link distance (default 10)")
    p.set_defaults(func=cmd_fig6)

    p = sub.add_parser("validate", parents=[common],
                       help="analytic vs Monte Carlo comparison table")
    p.add_argument("--pt-dbm", type=_grid, default="10:30:10", metavar="LO:HI:STEP")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sweep", parents=[common],
                       help="generic one-variable analytic sweep")
    p.add_argument("--var", choices=sorted(_SWEEP_VARS), required=True,
                   help="; ".join(f"{k}: {v}" for k, v in sorted(_SWEEP_VARS.items())))
    p.add_argument("--grid", type=_grid, required=True, metavar="LO:HI:STEP")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InfeasibleError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
