"""Command-line front end.

Every subcommand builds an :class:`ExperimentConfig` and hands it to
:func:`run`; ``annulab run CONFIG.json`` runs a stored config directly.
Machine records (one JSON object per line) go to ``--out`` or stdout, the
human table and timings go to stderr.

Exit codes: 0 success, 1 usage or config error, 2 operation error,
3 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, resolve_family
from .core import seed_grid
from .database import OrbitDatabase, dumps

EXIT_OK, EXIT_USAGE, EXIT_OPERATION, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class Result:
    """What an operation produced: machine records, table lines, plot rows, database rows."""

    def __init__(self, records=None, table=None, plot=None, orbits=None, failed=False):
        self.records = records or []
        self.table = table or []
        self.plot = plot  # (header, rows)
        self.orbits = orbits or []
        self.failed = failed


def _seeds(params, spec=None) -> np.ndarray:
    if params.get("seeds"):
        return np.asarray(params["seeds"], dtype=float).reshape(-1, 2)
    nx, ny = params["grid"]
    lo = 0.0 if spec is None or spec.closed else 1e-3
    return seed_grid(int(nx), int(ny), (lo, 1.0 - lo))


def _orbit_plot(orbits) -> tuple[list[str], list[list]]:
    rows = []
    for i, o in enumerate(orbits):
        for x, y in o["points"]:
            rows.append([i, o["period"], o["rotation"], repr(float(x)), repr(float(y))])
    return ["orbit", "period", "rotation", "x", "y"], rows


def _orbit_table(orbits) -> list[str]:
    lines = [f"{'p/q':>7} {'period':>6} {'residual':>9} {'sym':>5}  first point"]
    for o in orbits:
        x, y = o["points"][0]
        lines.append(f"{o['rotation']:>7} {o['period']:>6} {o['residual']:9.1e} {str(o.get('symmetric')):>5}"
                     f"  ({x:.9f}, {y:.9f})")
    return lines


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def op_rotation(cfg: ExperimentConfig) -> Result:
    from .rotation import rotation_interval

    p = cfg.resolved_params()
    spec = cfg.map_spec()
    iv = rotation_interval(spec, _seeds(p, spec), int(p["n_max"]), float(p["tol"]), float(p["radius"]))
    recs = iv.records()
    summary = {"interval": [iv.lower, iv.upper], "degenerate": iv.degenerate, "excluded": iv.excluded,
               "lower_witness": list(iv.lower_witness), "upper_witness": list(iv.upper_witness)}
    table = [f"rotation interval [{iv.lower:.12f}, {iv.upper:.12f}]" + ("  (degenerate)" if iv.degenerate else ""),
             f"seeds {len(recs)}, excluded {iv.excluded}"]
    plot = (["x", "y", "rho", "converged"], [[repr(r["seed"][0]), repr(r["seed"][1]), repr(r["value"]),
                                              int(r["converged"])] for r in recs])
    return Result(recs + [summary], table, plot)


def op_farey(cfg: ExperimentConfig) -> Result:
    from .rotation import farey_enumerate, format_rationals

    p = cfg.resolved_params()
    rs = farey_enumerate(float(p["lo"]), float(p["hi"]), int(p["q_max"]), int(p["n0"]))
    txt = format_rationals(rs)
    return Result([{"rationals": txt, "count": len(txt)}], [" ".join(txt)])


def op_orbits(cfg: ExperimentConfig) -> Result:
    from .periodic import search_pq

    p = cfg.resolved_params()
    spec = cfg.map_spec()
    target = Fraction(str(p["target"]))
    if p.get("seeds") is None and p["grid"] == [4, 21]:
        # default: seeds at the height of the target (exact for twists), spread in x
        q = target.denominator
        ys = np.clip(float(target) + np.array([0.0, -0.02, 0.02]), 0.0, 1.0)
        seeds = np.array([(j / (4 * q), y) for y in ys for j in range(4)])
    else:
        seeds = _seeds(p, spec)
    res = search_pq(spec, target, seeds, float(p["tol"]))
    orbits = [o.to_dict() for o in res.orbits]
    summary = {"target": str(target), "orbits": len(orbits), "converged": res.converged,
               "singular_skipped": res.singular_skipped, "failed": res.failed}
    return Result(orbits + [summary], _orbit_table(orbits), _orbit_plot(orbits), orbits)


def op_symmetric(cfg: ExperimentConfig) -> Result:
    from .reversible import symmetric_orbit_search

    p = cfg.resolved_params()
    spec = cfg.map_spec()
    recs = [r.to_dict() for r in symmetric_orbit_search(spec, int(p["m_max"]), int(p["resolution"]), float(p["tol"]))]
    return Result(recs, _orbit_table(recs), _orbit_plot(recs), recs)


def op_scan_coprime(cfg: ExperimentConfig) -> Result:
    from .periodic import coprime_period_scan

    p = cfg.resolved_params()
    spec = cfg.map_spec()
    rep = coprime_period_scan(spec, int(p["n0"]), int(p["q_max"]), tol=float(p["tol"]),
                              n_max=int(p["n_max"]), rot_tol=float(p["rot_tol"]))
    orbits = [o.to_dict() for o in rep.orbits]
    table = [f"interval [{rep.interval.lower:.9f}, {rep.interval.upper:.9f}]"
             + ("  degenerate: no targets can be enumerated" if rep.degenerate else "")]
    for r in rep.results:
        table.append(f"  target {r.target}: {len(r.orbits)} orbit(s)")
    table += _orbit_table(orbits)
    table.append(rep.summary()["truncation"])
    return Result(orbits + [rep.summary()], table, _orbit_plot(orbits), orbits)


def op_scan_symmetric(cfg: ExperimentConfig) -> Result:
    from .periodic import coprime_period_scan
    from .reversible import symmetric_period_scan

    p = cfg.resolved_params()
    spec = cfg.map_spec()
    generic = coprime_period_scan(spec, int(p["n0"]), int(p["q_max"])) if p["cross_check"] else None
    rep = symmetric_period_scan(spec, int(p["n0"]), int(p["q_max"]), float(p["tol"]), generic,
                                int(p["resolution"]))
    recs = [r.to_dict() for r in rep.records]
    table = _orbit_table(recs) + [json.dumps(rep.summary(), sort_keys=True)]
    return Result(recs + [rep.summary()], table, _orbit_plot(recs), recs)


def op_hh_levels(cfg: ExperimentConfig) -> Result:
    from .henon_heiles import critical_levels, critical_values, hh_gradient

    levels = critical_levels()
    recs = [{"state": [s.q1, s.q2, s.p1, s.p2], "value": v,
             "residual": float(np.max(np.abs(hh_gradient(s))))} for s, v in levels]
    values = critical_values(levels)
    table = [f"{'q1':>12} {'q2':>12} {'H':>20}"] + [f"{r['state'][0]:12.9f} {r['state'][1]:12.9f} {r['value']:20.17f}"
                                                    for r in recs]
    table.append("critical values: " + ", ".join(f"{v:.15g}" for v in values))
    return Result(recs + [{"critical_values": values}], table)


def op_hh_section(cfg: ExperimentConfig) -> Result:
    from .henon_heiles import poincare_return, section_point

    p = cfg.resolved_params()
    c, dt = float(p["c"]), float(p["dt"])
    recs, rows = [], []
    for i, (q2, p2) in enumerate(p["seeds"]):
        pts = poincare_return(c, section_point(c, q2, p2), int(p["crossings"]), dt)
        for sp in pts:
            recs.append({"seed": i, "q2": sp.q2, "p2": sp.p2, "time": sp.time, "energy_residual": sp.energy_residual})
            rows.append([i, repr(sp.q2), repr(sp.p2), repr(sp.time), repr(sp.energy_residual)])
    table = [f"{len(recs)} section points from {len(p['seeds'])} seed(s) at c = {c}"]
    return Result(recs, table, (["seed", "q2", "p2", "time", "energy_residual"], rows))


def op_hh_orbits(cfg: ExperimentConfig) -> Result:
    from .henon_heiles import hh_symmetric_orbits

    p = cfg.resolved_params()
    rep = hh_symmetric_orbits(float(p["c"]), int(p["m_max"]), int(p["resolution"]), float(p["tol"]), float(p["dt"]))
    recs = [o.to_dict() for o in rep.orbits]
    table = [f"{'q2':>14} {'period':>12} {'closure':>9} {'rho':>5} {'sigma':>5}"]
    for o in rep.orbits:
        table.append(f"{o.q2:14.10f} {o.period:12.8f} {o.closure_residual:9.1e} {str(o.rho_symmetric):>5} "
                     f"{str(o.sigma_symmetric):>5}")
    rows = [[i, repr(a), repr(b)] for i, o in enumerate(rep.orbits) for a, b in o.section_points]
    summary = {"c": rep.c, "orbits": len(recs), "roots": rep.roots, "failed_closures": len(rep.failed)}
    return Result(recs + [summary], table, (["orbit", "q2", "p2"], rows), recs)


def op_verify(cfg: ExperimentConfig) -> Result:
    from .suites import run_suite

    suite = cfg.resolved_params()["suite"]
    try:
        checks = run_suite(suite, cfg.seed)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None
    recs = [dict(c.to_dict(), suite=suite) for c in checks]
    table = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}  ({c.elapsed:.2f} s)" for c in checks]
    return Result(recs, table, failed=not all(c.passed for c in checks))


OPERATIONS = {
    "rotation": op_rotation,
    "farey": op_farey,
    "orbits": op_orbits,
    "symmetric": op_symmetric,
    "scan-coprime": op_scan_coprime,
    "scan-symmetric": op_scan_symmetric,
    "hh-levels": op_hh_levels,
    "hh-section": op_hh_section,
    "hh-orbits": op_hh_orbits,
    "verify": op_verify,
}


def _write_plot(path: Path, plot):
    header, rows = plot
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def run(cfg: ExperimentConfig, quiet: bool = False, stdout=None, stderr=None) -> int:
    """Execute one configured operation and write its artifacts; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    t0 = time.perf_counter()
    try:
        if cfg.family is not None:
            resolve_family(cfg.family)
        res = OPERATIONS[cfg.operation](cfg)
    except ConfigError as exc:
        print(f"annulab: config error: {exc}", file=stderr)
        return EXIT_USAGE
    except Exception as exc:  # surfaced as an operation failure with a diagnostic
        print(f"annulab: {cfg.operation} failed: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_OPERATION
    text = "".join(dumps(r) + "\n" for r in res.records)
    out = cfg.outputs.get("records")
    if out:
        Path(out).write_text(text)
    else:
        stdout.write(text)
    if cfg.outputs.get("plot") and res.plot is not None:
        _write_plot(Path(cfg.outputs["plot"]), res.plot)
    if cfg.outputs.get("database") and res.orbits:
        db = OrbitDatabase(cfg.outputs["database"])
        added = db.add(res.orbits)
        if not quiet:
            print(f"database: {added} new record(s), {len(db)} total", file=stderr)
    if not quiet:
        for line in res.table:
            print(line, file=stderr)
        print(f"[{cfg.operation}] {time.perf_counter() - t0:.2f} s", file=stderr)
    return EXIT_VERIFY if res.failed else EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--out", help="machine records (JSON lines); default stdout")
    p.add_argument("--plot", help="CSV plot data")
    p.add_argument("--db", help="orbit database to append to")
    p.add_argument("--seed", type=int, default=0, help="Monte Carlo / sampling seed")
    p.add_argument("--quiet", action="store_true", help="no table or timings on stderr")
    p.add_argument("--dump-config", action="store_true", help="print the config and exit")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="annulab", description="Periodic orbits of annulus maps and the Hénon-Heiles system.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rotation", help="rotation numbers and the rotation interval")
    p.add_argument("--family", required=True)
    p.add_argument("--grid", type=int, nargs=2, metavar=("NX", "NY"))
    p.add_argument("--n-max", type=int)
    p.add_argument("--tol", type=float)
    _common(p)

    p = sub.add_parser("farey", help="irreducible p/q in (lo, hi) with q <= q_max, gcd(q, n0) = 1")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--q-max", type=int, required=True)
    p.add_argument("--n0", type=int, default=1)
    _common(p)

    p = sub.add_parser("orbits", help="(p, q) periodic orbits for one target")
    p.add_argument("--family", required=True)
    p.add_argument("--target", required=True, help="p/q")
    p.add_argument("--grid", type=int, nargs=2, metavar=("NX", "NY"))
    p.add_argument("--tol", type=float)
    _common(p)

    p = sub.add_parser("symmetric", help="symmetric orbits through the symmetry lines")
    p.add_argument("--family", required=True)
    p.add_argument("--m-max", type=int)
    p.add_argument("--resolution", type=int)
    p.add_argument("--tol", type=float)
    _common(p)

    for name, helptext in (("scan-coprime", "orbits with periods prime to n0"),
                           ("scan-symmetric", "symmetric orbits with periods prime to n0")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--family", required=True)
        p.add_argument("--n0", type=int)
        p.add_argument("--q-max", type=int)
        p.add_argument("--tol", type=float)
        if name == "scan-symmetric":
            p.add_argument("--no-cross-check", action="store_true")
        _common(p)

    p = sub.add_parser("hh-levels", help="critical points and values of H")
    _common(p)

    p = sub.add_parser("hh-section", help="Poincaré section points (q1 = 0, p1 > 0)")
    p.add_argument("--c", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--crossings", type=int)
    p.add_argument("--seed-point", type=float, nargs=2, action="append", metavar=("Q2", "P2"))
    _common(p)

    p = sub.add_parser("hh-orbits", help="rho-symmetric periodic orbits")
    p.add_argument("--c", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--m-max", type=int)
    p.add_argument("--resolution", type=int)
    p.add_argument("--tol", type=float)
    _common(p)

    p = sub.add_parser("verify", help="run an acceptance suite")
    p.add_argument("suite")
    _common(p)

    p = sub.add_parser("run", help="run a stored config file")
    p.add_argument("config")
    p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("db", help="query an orbit database")
    p.add_argument("path")
    p.add_argument("--family")
    p.add_argument("--symmetric", choices=["yes", "no"])
    p.add_argument("--n0", type=int)
    p.add_argument("--period", type=int)
    p.add_argument("--stats", action="store_true")
    return ap


_PARAM_FLAGS = {
    "grid": "grid", "n_max": "n_max", "tol": "tol", "lo": "lo", "hi": "hi", "q_max": "q_max", "n0": "n0",
    "target": "target", "m_max": "m_max", "resolution": "resolution", "c": "c", "dt": "dt",
    "crossings": "crossings",
}


def config_from_args(args) -> ExperimentConfig:
    params = {}
    for attr, key in _PARAM_FLAGS.items():
        v = getattr(args, attr, None)
        if v is not None:
            params[key] = list(v) if isinstance(v, (list, tuple)) else v
    if getattr(args, "seed_point", None):
        params["seeds"] = [list(s) for s in args.seed_point]
    if getattr(args, "no_cross_check", False):
        params["cross_check"] = False
    if args.command == "verify":
        params["suite"] = args.suite
    outputs = {k: v for k, v in (("records", args.out), ("plot", args.plot), ("database", args.db)) if v}
    return ExperimentConfig(args.command, getattr(args, "family", None), params, outputs, args.seed)


def _db_command(args, stdout) -> int:
    db = OrbitDatabase(args.path)
    if args.stats:
        stdout.write(dumps(db.stats()) + "\n")
        return EXIT_OK
    sym = None if args.symmetric is None else args.symmetric == "yes"
    for r in db.query(args.family, sym, args.n0, args.period):
        stdout.write(dumps(r) + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    stdout, stderr = sys.stdout, sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command == "db":
            return _db_command(args, stdout)
        if args.command == "run":
            cfg = ExperimentConfig.from_json(Path(args.config).read_text())
            return run(cfg, quiet=args.quiet)
        cfg = config_from_args(args)
    except UsageError as exc:
        print(f"annulab: {exc}", file=stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"annulab: config error: {exc}", file=stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"annulab: {exc}", file=stderr)
        return EXIT_USAGE
    if args.dump_config:
        stdout.write(cfg.to_json())
        return EXIT_OK
    return run(cfg, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
