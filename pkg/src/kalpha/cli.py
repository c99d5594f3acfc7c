"""Command-line front end: simulate, diagnose, classify, pair.

Every artifact is versioned (format_version field) and carries a
manifest sufficient to reproduce it; rerunning a command with the same
arguments and tool version reproduces the output byte for byte apart
from the manifest timestamp.  Exit codes: 0 success, 2 argument or
domain error, 3 I/O error, 4 internal-consistency error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .diagnostics import (DEFAULT_BURN_IN, build_exceedance_report,
                          growth_scan, moment_scan, pruitt_slope)
from .measure import (ConsistencyError, EnvelopeSpec, KAlphaParams,
                      classify_support)
from .numerics import QuadratureError
from .paths import (RNG_NAME, read_event_path, simulate_large_jumps,
                    simulate_many, simulate_small_jumps, write_event_path)
from .spaces import pair_white_noise, parse_test_function

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INTERNAL = 4

FORMAT_VERSION = 1

# published report shapes: kind -> {field: type}; None means nullable
SCHEMAS = {
    "exceedance_report": {
        "format_version": int, "kind": str, "envelope": str, "burn_in": float,
        "horizon": float, "per_path": list, "aggregate": dict, "manifest": dict,
    },
    "moment_scan": {
        "format_version": int, "kind": str, "alpha": float, "eta": float,
        "caps": list, "values": list, "growth_ratios": list,
        "divergence_flagged": bool, "status": str, "manifest": dict,
    },
    "pruitt_slope": {
        "format_version": int, "kind": str, "alpha": float, "etas": list,
        "r_grid": list, "rows": list, "tail_increasing": dict,
        "beta_estimate": float, "manifest": dict,
    },
    "growth_scan": {
        "format_version": int, "kind": str, "alpha": float, "eta": float,
        "rows": list, "manifest": dict,
    },
    "support_verdict": {
        "format_version": int, "kind": str, "alpha": float, "in_S_prime": bool,
        "in_K_prime": bool, "in_K_beta": dict, "reasons": dict, "manifest": dict,
    },
    "pairing": {
        "format_version": int, "kind": str, "phi": str, "value_sign": int,
        "value_logmag": float, "crosscheck_rel_err": float,
        "truncation_warning": bool, "manifest": dict,
    },
}


def validate_document(doc: dict) -> None:
    """Check a report against its published schema; raises ValueError."""
    kind = doc.get("kind")
    if kind not in SCHEMAS:
        raise ValueError(f"unknown document kind {kind!r}")
    for name, typ in SCHEMAS[kind].items():
        if name not in doc:
            raise ValueError(f"{kind} document missing field {name!r}")
        val = doc[name]
        if typ is float:
            ok = isinstance(val, (int, float)) and not isinstance(val, bool)
        elif typ is int:
            ok = isinstance(val, int) and not isinstance(val, bool)
        else:
            ok = isinstance(val, typ)
        if not ok:
            raise ValueError(f"{kind} field {name!r} has wrong type "
                             f"{type(val).__name__}")


class UsageError(ValueError):
    pass


def _manifest(command: str, params: dict, seed=None) -> dict:
    return {
        "command": command,
        "params": params,
        "seed": seed,
        "rng_name": RNG_NAME,
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("KALPHA_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"KALPHA_SEED must be an integer, got {env!r}")
    raise UsageError("no --seed given and KALPHA_SEED is not set")


def _parse_keyed_lists(text: str, keys: tuple[str, ...]) -> dict[str, list[float]]:
    """Parse "etas=0.05,0.1,rs=10,100" into {"etas": [...], "rs": [...]}."""
    out: dict[str, list[float]] = {}
    current = None
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if "=" in token:
            key, _, val = token.partition("=")
            key = key.strip()
            if key not in keys:
                raise UsageError(f"unknown key {key!r} (expected one of {keys})")
            current = key
            out[current] = []
            token = val
        if current is None:
            raise UsageError(f"value {token!r} before any key in {text!r}")
        try:
            out[current].append(float(token))
        except ValueError:
            raise UsageError(f"bad number {token!r} in {text!r}")
    missing = [k for k in keys if k not in out or not out[k]]
    if missing:
        raise UsageError(f"missing values for {missing} in {text!r}")
    return out


_ENVELOPE_ALIASES = {
    "pow": "power", "power": "power",
    "exp": "exponential", "exponential": "exponential",
    "powexp": "power_exponential", "power_exponential": "power_exponential",
}


def parse_envelope(descriptor: str) -> EnvelopeSpec:
    """Build an envelope from text like "exp:c=1.0" or "pow:beta=2"."""
    name, _, rest = descriptor.partition(":")
    kind = _ENVELOPE_ALIASES.get(name.strip().lower())
    if kind is None:
        raise UsageError(f"unknown envelope kind {name!r} "
                         f"(known: pow, exp, powexp)")
    fields: dict[str, float] = {}
    if rest.strip():
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            key = key.strip()
            if not eq or key not in ("beta", "c"):
                raise UsageError(f"bad envelope parameter {item!r}")
            try:
                fields[key] = float(val)
            except ValueError:
                raise UsageError(f"bad number in envelope parameter {item!r}")
    try:
        return EnvelopeSpec(kind, beta=fields.get("beta"), c=fields.get("c"))
    except ValueError as exc:
        raise UsageError(str(exc))


def _write_json(doc: dict, out_path: str | None) -> None:
    validate_document(doc)
    text = json.dumps(doc, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _write_plot_data(rows, header, out_path: str) -> None:
    with open(out_path, "w", newline="") as fp:
        w = csv.writer(fp)
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    params = KAlphaParams(args.alpha)
    if args.horizon <= 0:
        raise UsageError("horizon must be positive")
    if args.paths < 1:
        raise UsageError("--paths must be at least 1")

    manifest_params = {"alpha": args.alpha, "horizon": args.horizon,
                       "paths": args.paths, "small": bool(args.small),
                       "eps": args.eps, "grid_step": args.grid_step}

    def write_one(path_obj, out_file):
        with open(out_file, "w") as fp:
            write_event_path(path_obj, fp, extra_meta={
                "manifest": _manifest("simulate", manifest_params, seed)})

    out = Path(args.out)
    if args.paths == 1:
        path_obj = simulate_large_jumps(params, args.horizon, seed)
        write_one(path_obj, out)
        written = [out]
    else:
        ensemble = simulate_many(params, args.horizon, seed, args.paths,
                                 workers=args.workers)
        written = []
        for i, path_obj in enumerate(ensemble):
            target = out.with_name(f"{out.stem}-p{i:03d}{out.suffix}")
            write_one(path_obj, target)
            written.append(target)

    if args.small:
        grid = simulate_small_jumps(params, args.horizon, seed,
                                    eps=args.eps,
                                    grid_step=args.grid_step)
        small_path = out.with_name(out.stem + ".small" + out.suffix)
        with open(small_path, "w") as fp:
            meta = {"format_version": FORMAT_VERSION, "alpha": params.alpha,
                    "horizon": grid.horizon, "seed": seed,
                    "rng_name": RNG_NAME, "component": "small",
                    "eps": grid.eps, "grid_step": grid.grid_step,
                    "manifest": _manifest("simulate", manifest_params, seed)}
            fp.write(json.dumps(meta) + "\n")
            for t, v in zip(grid.times, grid.values):
                fp.write(json.dumps({"t": float(t), "value": float(v)}) + "\n")
        written.append(small_path)

    for w in written:
        print(w)
    return EXIT_OK


def _load_paths(files) -> list:
    loaded = []
    for name in files:
        with open(name) as fp:
            loaded.append(read_event_path(fp))
    return loaded


def _cmd_diagnose(args) -> int:
    modes = [m for m, v in (("envelope", args.envelope),
                            ("moment-scan", args.moment_scan),
                            ("pruitt", args.pruitt),
                            ("growth", args.growth)) if v]
    if len(modes) != 1:
        raise UsageError("pick exactly one of --envelope, --moment-scan, "
                         "--pruitt, --growth")
    mode = modes[0]

    if mode == "envelope":
        if not args.infiles:
            raise UsageError("--envelope needs at least one --in path file")
        env = parse_envelope(args.envelope)
        paths = _load_paths(args.infiles)
        report = build_exceedance_report(paths, env, burn_in=args.burn_in)
        quantiles = report.last_exceedance_quantiles()
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "exceedance_report",
            "envelope": env.describe(),
            "burn_in": report.burn_in,
            "horizon": report.horizon,
            "per_path": [
                {"file": str(f), "alpha": p.params.alpha, "seed": p.seed,
                 "n_events": p.n_events,
                 "intervals": [[s, e] for s, e in ivs],
                 "last_exceedance_t": last}
                for f, p, ivs, last in zip(args.infiles, paths,
                                           report.intervals,
                                           report.last_exceedance_times)
            ],
            "aggregate": {
                "n_paths": report.n_paths,
                "exceedance_fraction": report.exceedance_fraction,
                "last_in_final_half_fraction": report.last_in_final_half_fraction,
                "last_exceedance_quantiles":
                    None if quantiles is None
                    else {f"{q:g}": v for q, v in quantiles.items()},
            },
            "manifest": _manifest("diagnose",
                                  {"mode": "envelope",
                                   "envelope": env.describe(),
                                   "burn_in": args.burn_in,
                                   "in": list(map(str, args.infiles))}),
        }
        _write_json(doc, args.json_out)
        return EXIT_OK

    if mode == "moment-scan":
        if args.alpha is None:
            raise UsageError("--moment-scan needs --alpha")
        parsed = _parse_keyed_lists(args.moment_scan, ("eta", "caps"))
        if len(parsed["eta"]) != 1:
            raise UsageError("exactly one eta, please")
        params = KAlphaParams(args.alpha)
        scan = moment_scan(params, parsed["eta"][0], parsed["caps"])
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "moment_scan",
            "alpha": args.alpha,
            "eta": scan.eta,
            "caps": list(scan.caps),
            "values": list(scan.values),
            "growth_ratios": list(scan.growth_ratios),
            "divergence_flagged": scan.divergence_flagged,
            "status": scan.status,
            "manifest": _manifest("diagnose", {"mode": "moment-scan",
                                               "alpha": args.alpha,
                                               "descriptor": args.moment_scan}),
        }
        _write_json(doc, args.json_out)
        if args.plot_data:
            rows = [(c, v) for c, v in zip(scan.caps, scan.values)]
            _write_plot_data(rows, ("cap", "moment"), args.plot_data)
        return EXIT_OK

    if mode == "pruitt":
        if args.alpha is None:
            raise UsageError("--pruitt needs --alpha")
        parsed = _parse_keyed_lists(args.pruitt, ("etas", "rs"))
        params = KAlphaParams(args.alpha)
        report = pruitt_slope(params, parsed["etas"], parsed["rs"])
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "pruitt_slope",
            "alpha": args.alpha,
            "etas": list(report.etas),
            "r_grid": list(report.r_grid),
            "rows": [{"eta": eta, "values": list(report.values[eta])}
                     for eta in report.etas],
            "tail_increasing": {f"{eta:g}": report.tail_increasing[eta]
                                for eta in report.etas},
            "beta_estimate": report.beta_estimate,
            "manifest": _manifest("diagnose", {"mode": "pruitt",
                                               "alpha": args.alpha,
                                               "descriptor": args.pruitt}),
        }
        _write_json(doc, args.json_out)
        if args.plot_data:
            rows = [(eta, r, v) for eta in report.etas
                    for r, v in zip(report.r_grid, report.values[eta])]
            _write_plot_data(rows, ("eta", "r", "value"), args.plot_data)
        return EXIT_OK

    # growth scan over stored paths
    if not args.infiles:
        raise UsageError("--growth needs at least one --in path file")
    parsed = _parse_keyed_lists(args.growth, ("eta",))
    if len(parsed["eta"]) != 1:
        raise UsageError("exactly one eta, please")
    eta = parsed["eta"][0]
    paths = _load_paths(args.infiles)
    rows = growth_scan(paths, eta)
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "growth_scan",
        "alpha": paths[0].params.alpha,
        "eta": eta,
        "rows": [{"t": t, "sign": lvl.sign, "log_stat": lvl.logmag}
                 for t, lvl in rows],
        "manifest": _manifest("diagnose", {"mode": "growth", "eta": eta,
                                           "in": list(map(str, args.infiles))}),
    }
    _write_json(doc, args.json_out)
    if args.plot_data:
        _write_plot_data([(t, lvl.sign, lvl.logmag) for t, lvl in rows],
                         ("t", "sign", "log_stat"), args.plot_data)
    return EXIT_OK


def _cmd_classify(args) -> int:
    params = KAlphaParams(args.alpha)
    try:
        betas = [float(b) for b in args.betas.split(",") if b.strip()]
    except ValueError:
        raise UsageError(f"bad --betas list {args.betas!r}")
    if not betas:
        raise UsageError("need at least one beta")
    verdict = classify_support(params, betas)
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "support_verdict",
        "alpha": verdict.alpha,
        "in_S_prime": verdict.in_S_prime,
        "in_K_prime": verdict.in_K_prime,
        "in_K_beta": {f"{b:g}": v for b, v in verdict.in_K_beta.items()},
        "reasons": verdict.reasons,
        "manifest": _manifest("classify", {"alpha": args.alpha,
                                           "betas": betas}),
    }
    _write_json(doc, args.json_out)
    return EXIT_OK


def _cmd_pair(args) -> int:
    try:
        phi = parse_test_function(args.phi)
    except ValueError as exc:
        raise UsageError(str(exc))
    with open(args.infile) as fp:
        path = read_event_path(fp)
    result = pair_white_noise(path, phi)
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "pairing",
        "phi": phi.describe(),
        "value_sign": result.value.sign,
        "value_logmag": result.value.logmag if not result.value.is_zero else -math.inf,
        "crosscheck_rel_err": result.rel_err,
        "truncation_warning": result.truncation_warning,
        "manifest": _manifest("pair", {"phi": args.phi,
                                       "in": str(args.infile)}),
    }
    _write_json(doc, args.json_out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kalpha",
        description="Simulate heavy-tailed log-Pareto jump paths and verify "
                    "their growth and support behaviour.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a large-jump path as JSONL")
    sim.add_argument("--alpha", type=float, required=True)
    sim.add_argument("--horizon", type=float, required=True)
    sim.add_argument("--seed", type=int, default=None,
                     help="defaults to env KALPHA_SEED")
    sim.add_argument("--out", required=True)
    sim.add_argument("--paths", type=int, default=1,
                     help="write this many paths with derived seeds")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--small", action="store_true",
                     help="also write the small-jump grid component")
    sim.add_argument("--eps", type=float, default=1e-3)
    sim.add_argument("--grid-step", type=float, default=None)
    sim.set_defaults(func=_cmd_simulate)

    diag = sub.add_parser("diagnose", help="exceedance, moment, index scans")
    diag.add_argument("--in", dest="infiles", nargs="*", default=[])
    diag.add_argument("--envelope", default=None,
                      help='e.g. "exp:c=1.0", "pow:beta=2"')
    diag.add_argument("--burn-in", type=float, default=DEFAULT_BURN_IN)
    diag.add_argument("--alpha", type=float, default=None)
    diag.add_argument("--moment-scan", default=None,
                      help='e.g. "eta=0.25,caps=10,100,1000"')
    diag.add_argument("--pruitt", default=None,
                      help='e.g. "etas=0.05,0.1,0.5,rs=10,100,1000"')
    diag.add_argument("--growth", default=None, help='e.g. "eta=0.5"')
    diag.add_argument("--json", dest="json_out", default=None)
    diag.add_argument("--plot-data", default=None,
                      help="write a CSV of (t, statistic) rows")
    diag.set_defaults(func=_cmd_diagnose)

    cls = sub.add_parser("classify", help="support verdict for an index")
    cls.add_argument("--alpha", type=float, required=True)
    cls.add_argument("--betas", required=True, help="comma list, each > 1")
    cls.add_argument("--json", dest="json_out", default=None)
    cls.set_defaults(func=_cmd_classify)

    pair = sub.add_parser("pair", help="white-noise pairing of path and phi")
    pair.add_argument("--in", dest="infile", required=True)
    pair.add_argument("--phi", required=True,
                      help='e.g. "gaussian:center=0,scale=1"')
    pair.add_argument("--json", dest="json_out", default=None)
    pair.set_defaults(func=_cmd_pair)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConsistencyError, QuadratureError) as exc:
        print(f"internal consistency error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
