"""Command-line front end.

    bosoncap capacity --nbar 1 --nth 0
    bosoncap sweep --quantity gaussian --nbar-min 0.01 --nbar-max 10 --points 50 --spacing log
    bosoncap sweep --preset fig6 --output fig6.csv
    bosoncap verify all --seed 7

Exit status: 0 success, 1 domain error or failed check, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import capacity as cap
from . import receivers as rx
from .verification import SUITES, run_suite

QUANTITIES = ("gaussian", "holevo", "hom", "het", "fixed", "ook-spd", "ppm-spd",
              "bpsk-dolinar", "mpsk-holevo", "pie-se")
PURE_LOSS_ONLY = {"ook-spd", "ppm-spd", "bpsk-dolinar", "mpsk-holevo", "pie-se"}
CAPACITY_COLUMNS = ("quantity", "nbar", "nth", "capacity_bits", "regime")
PIE_SE_COLUMNS = ("series", "nbar", "se_bits", "pie_bits_per_photon")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SweepConfig:
    quantity: str
    nbar_min: float
    nbar_max: float
    points: int
    log_spacing: bool = True
    nth: float = 0.0
    eta: float = 1.0
    input_thermal: Optional[float] = None
    order: int = 2
    seed: int = 0
    fmt: str = "csv"

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise UsageError(f"unknown quantity {self.quantity!r}")
        if self.points < 2:
            raise UsageError("--points must be at least 2")
        if self.log_spacing and self.nbar_min <= 0:
            raise UsageError("log spacing needs --nbar-min > 0")
        if self.nbar_max < self.nbar_min:
            raise UsageError("--nbar-max must not be below --nbar-min")
        if self.fmt not in ("csv", "json"):
            raise UsageError(f"unknown format {self.fmt!r}")

    @property
    def noise(self):
        """Received noise photons: from the environment if given, else ``nth``."""
        if self.input_thermal is not None:
            return (1.0 - self.eta) * self.input_thermal
        return self.nth

    def grid(self):
        if self.log_spacing:
            return np.geomspace(self.nbar_min, self.nbar_max, self.points)
        return np.linspace(self.nbar_min, self.nbar_max, self.points)


def _num(v):
    return f"{v:.12g}"


def _json_num(v):
    return float(_num(v))


def thread_count():
    raw = os.environ.get("CAPACITY_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        val = int(raw)
    except ValueError:
        raise UsageError(f"CAPACITY_THREADS must be a positive integer, got {raw!r}")
    if val < 1:
        raise UsageError(f"CAPACITY_THREADS must be a positive integer, got {raw!r}")
    return val


def _ordered_map(fn, items):
    """Map in parallel when allowed; results always come back in input order."""
    workers = thread_count()
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def capacity_point(quantity, nbar, nth, order=2):
    """``(bits, regime)`` for one quantity; regime is empty where meaningless."""
    if quantity in PURE_LOSS_ONLY and nth != 0:
        raise ValueError(f"{quantity} is defined for the pure-loss channel only (nth=0)")
    if quantity == "gaussian":
        res = cap.gaussian_capacity(nbar, nth)
        return res.capacity, res.regime
    if quantity == "fixed":
        return cap.fixed_measurement_capacity(nbar, nth)
    simple = {
        "holevo": lambda: cap.holevo_received(nbar, nth),
        "hom": lambda: cap.homodyne_rate(nbar, nth),
        "het": lambda: cap.heterodyne_rate(nbar, nth),
        "ook-spd": lambda: rx.ook_spd_capacity(nbar),
        "ppm-spd": lambda: rx.ppm_spd_capacity(nbar),
        "bpsk-dolinar": lambda: rx.bpsk_dolinar_capacity(nbar),
        "mpsk-holevo": lambda: rx.mpsk_holevo(order, nbar),
    }
    return simple[quantity](), ""


def capacity_rows(quantity, grid, nth, order=2):
    def one(n):
        bits, regime = capacity_point(quantity, float(n), nth, order)
        return {"quantity": quantity, "nbar": float(n), "nth": float(nth), "capacity_bits": bits, "regime": regime}

    return _ordered_map(one, list(grid))


def pie_se_rows(grid):
    names = list(rx.SERIES)
    jobs = [(name, float(n)) for name in names for n in grid]

    def one(job):
        name, n = job
        pt = rx.pie_se_curves([n], [name])[name][0]
        return {"series": name, "nbar": pt.nbar, "se_bits": pt.se, "pie_bits_per_photon": pt.pie}

    return _ordered_map(one, jobs)


def render(rows, columns, fmt):
    if fmt == "json":
        out = [{k: (_json_num(r[k]) if isinstance(r[k], float) else r[k]) for k in columns} for r in rows]
        return json.dumps(out, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_num(r[k]) if isinstance(r[k], float) else r[k] for k in columns])
    return buf.getvalue()


def run_sweep(cfg):
    """Rows and column names for a sweep configuration."""
    grid = cfg.grid()
    if cfg.quantity == "pie-se":
        if cfg.noise != 0:
            raise ValueError("pie-se is defined for the pure-loss channel only (nth=0)")
        return pie_se_rows(grid), PIE_SE_COLUMNS
    return capacity_rows(cfg.quantity, grid, cfg.noise, cfg.order), CAPACITY_COLUMNS


PRESETS = {
    # homodyne, heterodyne and the optimal Gaussian receiver on the pure-loss channel
    "fig4": dict(quantities=("gaussian", "hom", "het"), nbar_min=0.0, nbar_max=6.0, points=121,
                 log_spacing=False, nths=(0.0,)),
    # optimal Gaussian receiver for noise photons 0..5
    "fig5": dict(quantities=("gaussian",), nbar_min=0.0, nbar_max=10.0, points=101,
                 log_spacing=False, nths=(0.0, 1.0, 2.0, 3.0, 4.0, 5.0)),
    # photon efficiency versus spectral efficiency for every receiver series
    "fig6": dict(quantities=("pie-se",), nbar_min=1e-5, nbar_max=1e3, points=81,
                 log_spacing=True, nths=(0.0,)),
}


def run_preset(name, args):
    p = PRESETS[name]
    nbar_min = p["nbar_min"] if args.nbar_min is None else args.nbar_min
    nbar_max = p["nbar_max"] if args.nbar_max is None else args.nbar_max
    points = p["points"] if args.points is None else args.points
    rows, columns = [], None
    for quantity in p["quantities"]:
        for nth in p["nths"]:
            cfg = SweepConfig(quantity, nbar_min, nbar_max, points, p["log_spacing"], nth=nth, fmt=args.format)
            r, columns = run_sweep(cfg)
            rows.extend(r)
    return rows, columns


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="bosoncap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def noise_flags(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--nth", type=float, default=None, help="received noise photons per mode")
        g.add_argument("--input-thermal", type=float, default=None,
                       help="environment thermal photons; noise becomes (1-eta)*input_thermal")
        p.add_argument("--eta", type=float, default=1.0, help="channel transmissivity")

    pc = sub.add_parser("capacity", help="Gaussian-receiver capacity at one point")
    pc.add_argument("--nbar", type=float, required=True, help="mean received photons per mode")
    noise_flags(pc)
    pc.add_argument("--format", choices=("json", "csv"), default="json")

    ps = sub.add_parser("sweep", help="emit a capacity series over a grid of nbar")
    ps.add_argument("--quantity", choices=QUANTITIES)
    ps.add_argument("--preset", choices=tuple(PRESETS))
    ps.add_argument("--nbar-min", type=float, default=None)
    ps.add_argument("--nbar-max", type=float, default=None)
    ps.add_argument("--points", type=int, default=None)
    ps.add_argument("--spacing", choices=("log", "linear"), default="log")
    noise_flags(ps)
    ps.add_argument("--M", dest="order", type=int, default=2, help="PSK order for mpsk-holevo")
    ps.add_argument("--seed", type=int, default=None)
    ps.add_argument("--format", choices=("csv", "json"), default="csv")
    ps.add_argument("--output", "-o", default=None, help="write to this file instead of stdout")

    pv = sub.add_parser("verify", help="run numerical self-checks")
    pv.add_argument("suite", choices=tuple(SUITES) + ("all",))
    pv.add_argument("--seed", type=int, default=None)
    pv.add_argument("--trials", type=int, default=None, help="random interferometers per n (identity-optimal)")
    pv.add_argument("--samples", type=int, default=None, help="Monte Carlo samples per instance (oracles)")
    pv.add_argument("--circuits", type=int, default=None, help="random circuits (feedforward)")
    return parser


def _noise(args):
    if args.input_thermal is not None:
        if not (0 < args.eta <= 1):
            raise ValueError(f"eta must lie in (0, 1], got {args.eta}")
        if args.input_thermal < 0:
            raise ValueError("input thermal photon number must be non-negative")
        return (1.0 - args.eta) * args.input_thermal
    return 0.0 if args.nth is None else args.nth


def cmd_capacity(args, out):
    nth = _noise(args)
    res = cap.gaussian_capacity(args.nbar, nth)
    row = {"nbar": res.nbar, "nth": res.nth, "capacity_bits": res.capacity, "regime": res.regime}
    if args.format == "json":
        out.write(json.dumps({k: (_json_num(v) if isinstance(v, float) else v) for k, v in row.items()}) + "\n")
    else:
        out.write(render([row], ("nbar", "nth", "capacity_bits", "regime"), "csv"))
    return 0


def cmd_sweep(args, out):
    if (args.quantity is None) == (args.preset is None):
        raise UsageError("give exactly one of --quantity or --preset")
    if args.preset is not None:
        rows, columns = run_preset(args.preset, args)
    else:
        if args.nbar_min is None or args.nbar_max is None or args.points is None:
            raise UsageError("--nbar-min, --nbar-max and --points are required with --quantity")
        if not (0 < args.eta <= 1):
            raise ValueError(f"eta must lie in (0, 1], got {args.eta}")
        cfg = SweepConfig(args.quantity, args.nbar_min, args.nbar_max, args.points, args.spacing == "log",
                          nth=0.0 if args.nth is None else args.nth, eta=args.eta,
                          input_thermal=args.input_thermal, order=args.order,
                          seed=0 if args.seed is None else args.seed, fmt=args.format)
        rows, columns = run_sweep(cfg)
    text = render(rows, columns, args.format)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        out.write(text)
    return 0


def cmd_verify(args, out, err):
    seed = args.seed
    if seed is None:
        seed = 0
        err.write("notice: no --seed given, using seed 0\n")
    results = run_suite(args.suite, seed, trials=args.trials, samples=args.samples, circuits=args.circuits)
    checks = [dict(c.to_dict(), suite=s) for s, cs in results.items() for c in cs]
    passed = all(c["passed"] for c in checks)
    report = {"suite": args.suite, "seed": seed, "passed": passed, "checks": checks}
    out.write(json.dumps(report, indent=1) + "\n")
    return 0 if passed else 1


def main(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        if args.command == "capacity":
            return cmd_capacity(args, out)
        if args.command == "sweep":
            return cmd_sweep(args, out)
        return cmd_verify(args, out, err)
    except UsageError as exc:
        err.write(f"bosoncap: usage error: {exc}\n")
        return 2
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        err.write(f"bosoncap: error: {exc}\n")
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
