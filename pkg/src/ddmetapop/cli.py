"""Command-line front end.

    ddmetapop classify fig2_A2
    ddmetapop simulate --scenario my.yaml --T 5000 --out tail.csv
    ddmetapop sweep fig8_grid --threads 4 --format json

Exit status: 0 on success, 2 for configuration or domain errors, 3 for
numerical failures.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from . import _kernels as K
from ._parallel import THREADS_ENV
from .analysis import (
    classify_extinction, detect_period, find_fixed_points, persistence_tail_stats,
    total_population_compare,
)
from .errors import ConfigurationError, DomainError, NumericalError
from .scenario import Scenario, SimSettings, list_bundled, load_scenario
from .spectral import r_index, spectral_radius
from .sweep import SweepSpec, run_sweep

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

COMMANDS = ("classify", "simulate", "fixed-point", "period", "persist", "compare-total", "sweep")
DEFAULT_FORMAT = {"simulate": "csv", "compare-total": "csv", "sweep": "csv"}

HINTS = {
    "classify": "No plot: the verdict is a JSON document.",
    "simulate": ("set datafile separator ','; set key autotitle columnhead\n"
                 "plot 'tail.csv' using 1:2 with linespoints, '' using 1:3 with linespoints"),
    "fixed-point": "No plot: fixed points are a JSON list.",
    "period": "No plot: the orbit summary is a JSON document.",
    "persist": "No plot: persistence statistics are a JSON document.",
    "compare-total": ("set datafile separator ','; set key autotitle columnhead\n"
                      "plot 'compare.csv' using 1:2 with lines title 'coupled', "
                      "'' using 1:3 with lines dashtype 2 title 'isolated'"),
    "sweep": ("# two axes: colour cells by period class\n"
              "set datafile separator ','; set key off\n"
              "plot 'sweep.csv' using 1:2:(column(3) eq 'Above8' ? 9 : "
              "(column(3) eq 'Invalid' ? 0 : real(substr(strcol(3),2,2)))) with image\n"
              "# one axis with --tails: bifurcation diagram\n"
              "plot 'tails.csv' using 1:3 with dots, '' using 1:4 with dots"),
}


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario_ref", nargs="?", metavar="SCENARIO",
                        help="bundled scenario name or path to a YAML file")
    common.add_argument("--scenario", dest="scenario_opt", metavar="PATH",
                        help="scenario file (alternative to the positional argument)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--threads", type=int,
                        help=f"worker threads (default: ${THREADS_ENV} or the CPU count)")
    common.add_argument("--T", type=int, dest="T", help="number of steps")
    common.add_argument("--burn-in", type=int, dest="burn_in")
    common.add_argument("--window", type=int, help="retained tail length")
    common.add_argument("--tol", type=float, help="relative period tolerance")
    common.add_argument("--seed-grid", type=int, default=4,
                        help="fixed-point seeds per axis (default 4)")
    common.add_argument("--tails", action="store_true",
                        help="sweep: emit retained tail states instead of the cell table")
    common.add_argument("--backend", choices=("compiled", "python"),
                        help=f"iteration kernel (default: {K.BACKEND})")
    common.add_argument("--gnuplot-hint", action="store_true",
                        help="print a plotting recipe for this command and exit")

    p = argparse.ArgumentParser(prog="ddmetapop", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "classify": "stability verdict for the extinction state (JSON)",
        "simulate": "trajectory tail (CSV columns t, x_1..x_n)",
        "fixed-point": "zero and positive fixed points with stability (JSON)",
        "period": "period class of the attractor reached from x0 (JSON)",
        "persist": "post-burn-in persistence statistics (JSON)",
        "compare-total": "final total population, coupled vs isolated, along a scan",
        "sweep": "one- or two-parameter period scan",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    sub.add_parser("list", help="list bundled scenarios")
    return p


def _scenario(args) -> Scenario:
    if args.scenario_ref and args.scenario_opt:
        raise ConfigurationError("give the scenario either positionally or with --scenario, not both")
    ref = args.scenario_opt or args.scenario_ref
    if not ref:
        raise ConfigurationError("no scenario given")
    return load_scenario(ref)


def _sim(args, base: SimSettings) -> SimSettings:
    kw = {k: getattr(args, k) for k in ("T", "burn_in", "window", "tol") if getattr(args, k) is not None}
    if "T" in kw and "burn_in" not in kw:
        kw["burn_in"] = None
    return replace(base, **kw)


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _classify(sc, args, fmt):
    model = sc.model()
    verdict = classify_extinction(model)
    rep = spectral_radius(model.jacobian_at_origin())
    doc = {"scenario": sc.name, **verdict.to_dict(), "r_index": r_index(model),
           "iterations": rep.iterations, "residual": rep.residual}
    return _dumps(doc)


def _simulate(sc, args, fmt):
    sim = _sim(args, sc.defaults)
    tr = sc.model().simulate(sim.x0, sim.T, sim.effective_burn_in, sim.window, backend=args.backend)
    if fmt == "csv":
        return tr.to_csv()
    return _dumps({"scenario": sc.name, "t_first": tr.t_first, "T": tr.T, "burn_in": tr.burn_in,
                   "states": tr.states, "eta1_min": tr.eta1_min, "l1_min": tr.l1_min,
                   "sup_min": tr.sup_min})


def _fixed_point(sc, args, fmt):
    pts = find_fixed_points(sc.model(), seed_grid=args.seed_grid, backend=args.backend)
    if fmt == "csv":
        n = sc.n
        lines = [",".join([f"x_{i + 1}" for i in range(n)] + ["residual", "classification",
                                                               "jacobian_radius"])]
        for fp in pts:
            lines.append(",".join([format(float(v), ".17g") for v in fp.point]
                                  + [format(fp.residual, ".17g"), fp.classification.value,
                                     format(fp.jacobian_radius, ".17g")]))
        return "\n".join(lines) + "\n"
    return _dumps({"scenario": sc.name, "fixed_points": [fp.to_dict() for fp in pts]})


def _period(sc, args, fmt):
    sim = _sim(args, sc.defaults)
    s = detect_period(sc.model(), sim.x0, sim.T, sim.effective_burn_in, sim.window, sim.tol,
                      backend=args.backend)
    return _dumps({"scenario": sc.name, **s.to_dict()})


def _persist(sc, args, fmt):
    sim = _sim(args, sc.defaults)
    st = persistence_tail_stats(sc.model(), [sim.x0], sim.T, sim.effective_burn_in,
                                threads=args.threads, backend=args.backend)
    return _dumps({"scenario": sc.name, "T": sim.T, "burn_in": sim.effective_burn_in, **st.to_dict()})


def _compare(sc, args, fmt):
    if sc.compare is None:
        raise ConfigurationError(f"scenario {sc.name!r} has no compare section")
    sim = _sim(args, sc.compare.sim)
    table = total_population_compare(sc, sc.compare.axis, sim.x0, sim.T, threads=args.threads,
                                     backend=args.backend)
    if fmt == "csv":
        crit = "none" if table.critical_value is None else format(table.critical_value, ".17g")
        print(f"critical_value={crit}", file=sys.stderr)
        return table.to_csv()
    return _dumps({"scenario": sc.name, **table.to_dict()})


def _sweep(sc, args, fmt):
    spec = SweepSpec.from_scenario(sc, T=args.T, burn_in=args.burn_in, window=args.window, tol=args.tol)
    res = run_sweep(spec, threads=args.threads, keep_tails=args.tails, backend=args.backend)
    if args.tails:
        return res.tails_csv()
    return res.to_csv() if fmt == "csv" else res.to_json() + "\n"


HANDLERS = {
    "classify": _classify, "simulate": _simulate, "fixed-point": _fixed_point, "period": _period,
    "persist": _persist, "compare-total": _compare, "sweep": _sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print("\n".join(list_bundled()))
        return 0
    if args.gnuplot_hint:
        print(HINTS[args.command])
        return 0
    fmt = args.format or DEFAULT_FORMAT.get(args.command, "json")
    try:
        sc = _scenario(args)
        _emit(args, HANDLERS[args.command](sc, args, fmt))
    except (ConfigurationError, DomainError) as exc:
        print(f"ddmetapop: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"ddmetapop: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"ddmetapop: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
