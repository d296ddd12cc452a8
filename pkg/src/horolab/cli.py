"""Command line entry point: ``horolab run`` and ``horolab list``.

Exit codes: 0 when every record matches its expected outcome, 1 when some
record does not, 2 for configuration errors, 3 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .exceptions import ConfigError, HorolabError, ModelError
from .experiments import REGISTRY
from .models import make_model

SCHEMA_VERSION = 1
CSV_COLUMNS = ("experiment", "metric", "value", "tolerance", "pass", "expected", "params", "params_hash",
               "schema_version")
TOP_KEYS = {"experiment", "seed", "expect", "model", "params", "schema_version", "name"}
MODEL_KEYS = {"kind", "n", "profile"}
PROFILE_KEYS = {"k0", "k1", "decay"}

log = logging.getLogger("horolab")


def load_config(path, experiment=None, seed=None):
    """Parse and validate a TOML run configuration.

    Unknown keys at any level raise :class:`ConfigError`; parameter values
    are checked against the types of the experiment defaults.
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return validate_config(raw, experiment, seed)


def validate_config(raw, experiment=None, seed=None):
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if raw.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {raw['schema_version']}")
    name = experiment or raw.get("experiment")
    if name not in REGISTRY:
        raise ConfigError(f"unknown experiment {name!r}; choose from {sorted(REGISTRY)}")
    exp = REGISTRY[name]
    model = dict(raw.get("model", {}))
    if set(model) - MODEL_KEYS:
        raise ConfigError(f"unknown model keys: {sorted(set(model) - MODEL_KEYS)}")
    if "kind" not in model:
        raise ConfigError("model.kind is required")
    profile = model.get("profile")
    if profile is not None and set(profile) - PROFILE_KEYS:
        raise ConfigError(f"unknown profile keys: {sorted(set(profile) - PROFILE_KEYS)}")
    params = dict(exp.defaults)
    for key, val in raw.get("params", {}).items():
        if key not in exp.defaults:
            raise ConfigError(f"unknown parameter {key!r} for experiment {name!r}")
        params[key] = _coerce(key, val, exp.defaults[key])
    seed = raw.get("seed") if seed is None else seed
    if exp.sampled and seed is None:
        raise ConfigError(f"experiment {name!r} samples points; a seed is required")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        raise ConfigError("seed must be a non-negative integer")
    expect = raw.get("expect", "pass")
    if expect not in ("pass", "fail"):
        raise ConfigError("expect must be 'pass' or 'fail'")
    return {"experiment": name, "seed": seed, "expect": expect,
            "model": {"kind": model["kind"], "n": int(model.get("n", 2)), "profile": profile},
            "params": params}


def _coerce(key, val, default):
    if isinstance(default, bool) or isinstance(val, bool):
        if not isinstance(val, bool) or not isinstance(default, bool):
            raise ConfigError(f"parameter {key!r} has the wrong type")
        return val
    if isinstance(default, (int, float)):
        if not isinstance(val, (int, float)):
            raise ConfigError(f"parameter {key!r} must be a number")
        return type(default)(val) if isinstance(default, float) or float(val).is_integer() else val
    if isinstance(default, list):
        if not isinstance(val, list) or not all(isinstance(x, (int, float)) for x in val):
            raise ConfigError(f"parameter {key!r} must be a list of numbers")
        return [float(x) for x in val]
    if isinstance(default, str):
        if not isinstance(val, str):
            raise ConfigError(f"parameter {key!r} must be a string")
        return val
    raise ConfigError(f"parameter {key!r} has an unsupported type")


def params_string(params):
    return ";".join(f"{k}={_fmt(v)}" for k, v in sorted(params.items()))


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_fmt(x) for x in v) + "]"
    return str(v)


def config_hash(cfg):
    blob = json.dumps({k: cfg[k] for k in ("experiment", "seed", "model", "params")}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def run_config(cfg):
    """Build the model and run the experiment; returns (records, detail rows)."""
    m = cfg["model"]
    try:
        M = make_model(m["kind"], m["n"], m["profile"])
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc
    exp = REGISTRY[cfg["experiment"]]
    seed = 0 if cfg["seed"] is None else cfg["seed"]
    log.info("running %s on %s(n=%d), seed %s", exp.name, m["kind"], m["n"], cfg["seed"])
    return exp.func(M, cfg["params"], seed)


def emit_report(records, cfg, out_dir, details=None):
    """Write results.csv, summary.json and details.csv; returns the exit status.

    A record's expected pass flag is true unless it is a control metric in
    a run configured with ``expect = "fail"``.
    """
    if not records:
        raise HorolabError("no records to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = config_hash(cfg)
    rows = []
    for r in records:
        expected = not (r.control and cfg["expect"] == "fail")
        rows.append({"experiment": r.experiment, "metric": r.metric, "value": format(r.value, ".17g"),
                     "tolerance": format(r.tolerance, ".17g"), "pass": _fmt(r.passed),
                     "expected": _fmt(expected), "params": params_string(r.params), "params_hash": h,
                     "schema_version": SCHEMA_VERSION, "_ok": r.passed == expected, "_r": r})
    rows.sort(key=lambda x: (x["experiment"], x["metric"], x["params"]))
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
    worst = {}
    for x in rows:
        v = x["_r"].value
        key = x["metric"]
        if math.isfinite(v) and (key not in worst or v > worst[key]):
            worst[key] = v
    summary = {"schema_version": SCHEMA_VERSION, "experiment": cfg["experiment"], "seed": cfg["seed"],
               "expect": cfg["expect"], "params_hash": h,
               "pass_count": sum(x["_r"].passed for x in rows),
               "fail_count": sum(not x["_r"].passed for x in rows),
               "mismatch_count": sum(not x["_ok"] for x in rows),
               "worst_residual_per_metric": worst}
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    if details:
        keys = sorted({k for d in details for k in d})
        with open(out / "details.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            w.writerows({k: _fmt(v) for k, v in d.items()} for d in details)
    return 0 if all(x["_ok"] for x in rows) else 1


def _cmd_list(args):
    for name in sorted(REGISTRY):
        e = REGISTRY[name]
        flag = " [seed required]" if e.sampled else ""
        print(f"{name:22s} {e.summary}{flag}")
    return 0


def _cmd_run(args):
    try:
        cfg = load_config(args.config, args.experiment, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        records, details = run_config(cfg)
        status = emit_report(records, cfg, args.out, details)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (HorolabError, ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for r in sorted(records, key=lambda r: (r.metric, params_string(r.params))):
        print(f"{'PASS' if r.passed else 'FAIL'} {r.experiment} {r.metric} "
              f"{params_string(r.params) or '-'} value={r.value:.6g} tol={r.tolerance:.3g}"
              f"{' (control)' if r.control else ''}")
    print(f"results written to {args.out}; exit {status}")
    return status


def build_parser():
    p = argparse.ArgumentParser(prog="horolab", description="Numerical experiments on harmonic "
                                "functions, horospheres and Busemann functions of negatively curved spaces.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment from a TOML config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--experiment", help="override the experiment named in the config")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.set_defaults(func=_cmd_run)
    lst = sub.add_parser("list", help="list the available experiments")
    lst.set_defaults(func=_cmd_list)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
