"""Command-line entry point ``anelastic``.

Every subcommand writes its artifacts into ``--out`` (default: the current
directory). Exit status is 0 on success, 2 when the input is rejected and 3
when the integration fails numerically; in the last case whatever was
computed before the failure is still written.
"""

import argparse
import csv
import dataclasses
import json
import logging
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import kernels
from .density import make_q_eps, verify_profile_properties
from .diagnostics import COLUMNS, MONITOR_COLUMNS, energy_identity_residual, hardy_suite, hardy_uniformity
from .errors import ConfigInvalid, NumericalFailure, ValidationError
from .galerkin import RunConfig, build_model, run
from .pressure import PressureSystem

log = logging.getLogger("anelastic")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def shipped_configs():
    """Names of the configs bundled with the package."""
    root = resources.files("anelastic") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_shipped(name):
    """Raw dict of a bundled config."""
    text = (resources.files("anelastic") / "configs" / f"{name}.json").read_text()
    return json.loads(text)


def parse_config(path, overrides=None):
    """Read a JSON config file into a validated :class:`RunConfig`.

    ``path`` may also name a bundled config (``taylor_green``, ...).

    Raises
    ------
    ConfigInvalid
    """
    p = Path(path)
    try:
        if p.exists():
            data = json.loads(p.read_text())
        elif str(path) in shipped_configs():
            data = load_shipped(str(path))
        else:
            raise ConfigInvalid([f"config: no such file {path}"])
    except json.JSONDecodeError as exc:
        raise ConfigInvalid([f"config: not valid JSON ({exc})"]) from exc
    if not isinstance(data, dict):
        raise ConfigInvalid(["config: top level must be an object"])
    data = dict(data, **(overrides or {}))
    return RunConfig.from_dict(data)


# -- output helpers -----------------------------------------------------------

def fmt(x):
    """Locale-free shortest round-trip float text."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_json(path, data):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _overrides(args):
    o = {}
    if args.seed is not None:
        o["seed"] = args.seed
    if args.cadence is not None:
        o["cadence"] = args.cadence
    return o


def _write_run(out, result, model, extra=None):
    write_csv(out / "diagnostics.csv", COLUMNS, ([r[c] for c in COLUMNS] for r in result.records))
    write_csv(out / "monitors.csv", MONITOR_COLUMNS, ([r[c] for c in MONITOR_COLUMNS] for r in result.records))
    summary = result.summary(model)
    summary["backend"] = kernels.BACKEND
    summary["energy_identity_residual"] = energy_identity_residual(result.records) if result.records else None
    summary.update(extra or {})
    write_json(out / "summary.json", summary)
    return summary


def _maybe_dump(args, model):
    if args.dump_pressure_matrix:
        PressureSystem(model.ops).dump(args.dump_pressure_matrix)


def _execute(config, args, extra=None, post=None):
    out = _out_dir(args)
    model = build_model(config)
    _maybe_dump(args, model)
    try:
        result = run(config, model)
    except NumericalFailure as exc:
        partial = getattr(exc, "partial", None)
        if partial is not None:
            _write_run(out, partial, model, extra)
        raise
    if post is not None:
        extra = dict(extra or {}, **post(model, result))
    return _write_run(out, result, model, extra)


# -- subcommands --------------------------------------------------------------

def cmd_run(args):
    if not args.config:
        raise ConfigInvalid(["config: --config is required for run"])
    config = parse_config(args.config, _overrides(args))
    summary = _execute(config, args)
    print(f"steps={summary['steps']} energy={summary['final'].get('energy', float('nan')):.6e}")


def taylor_green_error(model, result):
    """Relative L2 error of the final sample against the decaying exact field."""
    first, last = result.samples[0], result.samples[-1]
    decay = math.exp(-2 * math.pi**2 * last.t)
    ev, ew = last.v - first.v * decay, last.w - first.w * decay
    err = math.sqrt(model.l2_sq(ev, ew) / model.l2_sq(first.v * decay, first.w * decay))
    return {"taylor_green": {"t": last.t, "relative_l2_error": err}}


def cmd_taylor_green(args):
    overrides = _overrides(args)
    config = parse_config(args.config, overrides) if args.config else RunConfig.from_dict(dict(load_shipped("taylor_green"), **overrides))
    if config.initial.get("kind") != "taylor-green" or config.density.get("kind", "constant") != "constant":
        raise ConfigInvalid(["taylor-green: needs constant density and taylor-green initial data"])
    summary = _execute(config, args, post=taylor_green_error)
    tg = summary["taylor_green"]
    print(f"t={tg['t']:.6g} relative_l2_error={tg['relative_l2_error']:.3e}")


def cmd_vacuum_sweep(args):
    from .vacuum import epsilon_sweep

    if not args.config:
        raise ConfigInvalid(["config: --config is required for vacuum-sweep"])
    config = parse_config(args.config, _overrides(args))
    out = _out_dir(args)
    result = epsilon_sweep(config, args.j0, args.j1, workers=args.workers)
    write_csv(out / "sweep.csv", ("epsilon", "quantity", "max_over_t"), result.sweep_rows())
    write_csv(out / "pairwise.csv", ("j", "sup_diff", "grad_diff_integral"), result.pairwise_rows())
    write_json(out / "summary.json", {
        "config": dataclasses.asdict(config) if dataclasses.is_dataclass(config) else config,
        "schedule": result.schedule,
        "runs": [r.summary for r in result.runs],
        "cauchy_ok": result.cauchy_ok(),
        "uniform_ratios": result.uniform_ratios(),
        "initial_differences": result.initial_differences,
    })
    for j, sup, grad in result.pairwise_rows():
        print(f"j={j} sup_diff={sup:.6e} grad_diff_integral={grad:.6e}")


def cmd_hardy(args):
    out = _out_dir(args)
    rows = hardy_suite()
    write_csv(out / "hardy.csv", ("k", "epsilon", "family", "ratio"), ((r.k, r.epsilon, r.family, r.ratio) for r in rows))
    spread = hardy_uniformity(rows)
    write_json(out / "hardy_summary.json", {"spread": {f"{k}|{f}": s for (k, f), s in spread.items()}})
    print(f"rows={len(rows)} max_spread={max(spread.values()):.4f}")


def cmd_verify_profile(args):
    out = _out_dir(args)
    eps_values = args.epsilon or [2.0**-j for j in range(1, 9)]
    reports = []
    for eps in eps_values:
        rep = verify_profile_properties(make_q_eps(eps), args.resolution)
        reports.append(dataclasses.asdict(rep) | {"passed": rep.passed})
    sups = [r["property5_sup"] for r in reports]
    data = {"resolution": args.resolution, "reports": reports, "property5_ratio": max(sups) / min(sups)}
    write_json(out / "profile_report.json", data)
    for r in reports:
        print(f"eps={r['eps']:.6g} passed={r['passed']} property5_sup={r['property5_sup']:.6g}")
    print(f"property5_ratio={data['property5_ratio']:.4f}")
    return EXIT_OK if all(r["passed"] for r in reports) else 1


def cmd_stability_probe(args):
    from .vacuum import stability_probe

    if not args.config:
        raise ConfigInvalid(["config: --config is required for stability-probe"])
    config = parse_config(args.config, _overrides(args))
    out = _out_dir(args)
    rep = stability_probe(config, args.eta, seed=config.seed)
    write_csv(out / "stability.csv", ("t", "diff_l2_sq", "diff_weighted_sq"),
              zip(rep.times, rep.diff_l2_sq, rep.diff_weighted_sq))
    write_json(out / "summary.json", {
        "config": config.resolved(), "eta": rep.eta, "seed": config.seed,
        "sup_diff_sq": rep.sup_diff_sq, "initial_diff_sq": rep.initial_diff_sq,
        "c_meas": rep.c_meas, "gronwall_fit": rep.gronwall_fit, "bound_ok": rep.bound_ok,
        "grad_diff_integral": rep.grad_diff_integral,
    })
    print(f"sup_diff={rep.sup_diff:.6e} c_meas={rep.c_meas:.4f} bound_ok={rep.bound_ok}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file or bundled config name")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--dump-pressure-matrix", metavar="PATH", default=None,
                        help="write the gauge-fixed pressure matrix as little-endian float64")
    common.add_argument("--cadence", type=int, default=None, help="steps between samples")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="anelastic", description="Anelastic Navier-Stokes Galerkin solver")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="integrate a config").set_defaults(func=cmd_run)
    sub.add_parser("taylor-green", parents=[common], help="Taylor-Green check against the exact decay") \
        .set_defaults(func=cmd_taylor_green)
    p = sub.add_parser("vacuum-sweep", parents=[common], help="eps-continuation toward the vacuum profile")
    p.add_argument("--j0", type=int, default=2)
    p.add_argument("--j1", type=int, default=6)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_vacuum_sweep)
    sub.add_parser("hardy", parents=[common], help="weighted Hardy ratio suite").set_defaults(func=cmd_hardy)
    p = sub.add_parser("verify-profile", parents=[common], help="check the regularized profile q_eps")
    p.add_argument("--epsilon", type=float, action="append")
    p.add_argument("--resolution", type=int, default=4096)
    p.set_defaults(func=cmd_verify_profile)
    p = sub.add_parser("stability-probe", parents=[common], help="paired runs with a perturbed initial state")
    p.add_argument("--eta", type=float, default=1e-4)
    p.set_defaults(func=cmd_stability_probe)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        status = args.func(args)
    except ConfigInvalid as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_INVALID
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK if status is None else status


if __name__ == "__main__":
    sys.exit(main())
