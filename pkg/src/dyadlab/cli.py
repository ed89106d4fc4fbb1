"""Command-line entry point.

Exit codes: 0 pass, 1 assertion failure, 2 configuration or regime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .experiments import (
    BATTERY_COLUMNS,
    COMMANDS,
    ExperimentConfig,
    SharpnessRow,
    battery,
    instance_rng,
    sharpness_sweep,
    theorem_instance,
    trace_instance,
)
from .grid import RegimeError
from .io import load_family, load_weight, write_table
from .norms import prop_test_bounds
from .sparse import DensityProfile, random_sparse
from .weights import characterize, dual_weight, random_weight

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def parse_config_file(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(name: str, value):
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    if name not in fields:
        raise ValueError(f"unknown configuration key {name!r}")
    if not isinstance(value, str):
        return value
    default = fields[name].default
    if name == "eps_list":
        return parse_eps_list(value)
    if name in ("out",):
        return value or None
    if isinstance(default, bool):
        if value.lower() not in _BOOL:
            raise ValueError(f"{name} expects a boolean, got {value!r}")
        return _BOOL[value.lower()]
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def parse_eps_list(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dyadlab", description="Dyadic sparse-operator experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value file; flags override it")
        sp.add_argument("--depth", type=int)
        sp.add_argument("--p", type=float)
        sp.add_argument("--r", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--instances", type=int)
        sp.add_argument("--jobs", type=int)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json"))
        if name == "sharpness":
            sp.add_argument("--eps-list", type=parse_eps_list, help="e.g. '0.5 0.25 0.125 0.0625 0.03125'")
        if name in ("characterize", "testing"):
            sp.add_argument("--weight", help="weight fixture (depth, then values)")
            sp.add_argument("--sigma", help="second weight fixture; defaults to the dual weight")
        if name == "testing":
            sp.add_argument("--family", help="sparse family fixture ('level index' lines)")
        if name == "norms":
            sp.add_argument("--one-weight", action="store_const", const=True, default=None)
            sp.add_argument("--random-witnesses", type=int)
    return parser


def make_config(args: argparse.Namespace) -> ExperimentConfig:
    values = {"command": args.command}
    defaults_for = {"sharpness": {"depth": 14, "p": 4.0, "r": 2.0}, "weak-trace": {"p": 1.5, "r": 2.0}}
    values.update(defaults_for.get(args.command, {}))
    if args.config:
        for key, raw in parse_config_file(args.config).items():
            values[key] = _coerce(key, raw)
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None and f.name != "command":
            values[f.name] = v
    return ExperimentConfig(**values).validate()


def _emit(rows, config, columns=None, extra=None):
    text = write_table(rows, config.out, config.format, columns, extra)
    if not config.out:
        sys.stdout.write(text)


def _weights(args, config):
    if getattr(args, "weight", None):
        w = load_weight(Path(args.weight).read_text())
    else:
        w = random_weight(config.depth, instance_rng(config.seed, 0), config.log2_range)
    sigma = load_weight(Path(args.sigma).read_text()) if getattr(args, "sigma", None) else dual_weight(w, config.p)
    return w, sigma


def cmd_characterize(args, config) -> int:
    w, sigma = _weights(args, config)
    rep = characterize(w, sigma, config.p)
    row = {"depth": w.depth, "p": config.p, "seed": config.seed,
           "ap": rep.ap.value, "ap_argmax": str(rep.ap.argmax),
           "ainfty_w": rep.ainfty_w.value, "ainfty_sigma": rep.ainfty_sigma.value}
    _emit([row], config)
    return EXIT_OK


def cmd_testing(args, config) -> int:
    w, sigma = _weights(args, config)
    if args.family:
        S = load_family(Path(args.family).read_text(), depth=w.depth)
    else:
        S = random_sparse(w.depth, DensityProfile(), instance_rng(config.seed, 1))
    t, ts = prop_test_bounds(S, w, sigma, config.p, config.r)
    rows = [{"side": "T", "depth": w.depth, "p": config.p, "r": config.r, "seed": config.seed, "members": len(S),
             "value": t.measured, "bound": t.bound, "ratio": t.ratio, "argmax": t.witness}]
    if ts is not None:
        rows.append({"side": "Tstar", "depth": w.depth, "p": config.p, "r": config.r, "seed": config.seed,
                     "members": len(S), "value": ts.measured, "bound": ts.bound, "ratio": ts.ratio,
                     "argmax": ts.witness})
    _emit(rows, config)
    return EXIT_OK


def cmd_norms(args, config) -> int:
    rows = []
    for i in range(config.instances):
        strong, weak = theorem_instance(config.depth, config.p, config.r, config.seed, i, config)
        for cmp in (strong, weak):
            if cmp is None:
                continue
            rows.append({"instance": i, "seed": config.seed, "depth": config.depth, "p": config.p, "r": config.r,
                         "norm": cmp.meta["norm"], "lower_bound": cmp.measured, "theorem_bound": cmp.bound,
                         "ratio": cmp.ratio, "witness": cmp.witness})
    _emit(rows, config)
    return EXIT_OK


def cmd_sharpness(args, config) -> int:
    res = sharpness_sweep(config)
    rows = [dataclasses.asdict(r) for r in res.rows]
    fits = {}
    status = EXIT_OK
    for name, fit, band in (("ap", res.ap_fit, (0.9, 1.1)), ("phi_lower", res.phi_fit, (0.4, 0.6))):
        verdict = "inconclusive"
        if fit.conclusive:
            verdict = "pass" if band[0] <= fit.slope <= band[1] else "fail"
        if verdict == "fail":
            status = EXIT_FAIL
        fits[name] = {"slope": fit.slope, "r2": fit.r2, "band": list(band), "verdict": verdict}
        print(f"{res.label}: {name} slope={fit.slope:.4f} r2={fit.r2:.4f} {verdict}", file=sys.stderr)
    columns = [f.name for f in dataclasses.fields(SharpnessRow)]
    _emit(rows, config, columns, {"label": res.label, "fits": fits})
    return status


def cmd_weak_trace(args, config) -> int:
    rows = []
    status = EXIT_OK
    for i in range(config.instances):
        tr = trace_instance(config.depth, config.p, config.r, config.seed, i, config.log2_range, config.theta_target)
        ok = tr.flags_ok and tr.chain_ok
        if not ok:
            status = EXIT_FAIL
            print(f"trace failure: seed={config.seed} instance={i}", file=sys.stderr)
        rows.append({"instance": i, "seed": config.seed, "depth": config.depth, "p": config.p, "r": config.r,
                     "eps": tr.eps, "ap": tr.ap, "subfamilies": len(tr.subfamilies),
                     "flags_ok": tr.flags_ok, "chain_ok": tr.chain_ok, "end_to_end_ratio": tr.end_to_end_ratio})
    _emit(rows, config)
    return status


def cmd_battery(args, config) -> int:
    res = battery(config)
    monitored = [{"suite": "monitored", "instance": None, "seed": config.seed, "depth": config.depth, "p": None,
                  "r": None, "quantity": key, "value": value, "bound": None, "passed": True}
                 for key, value in sorted(res.monitored.items())]
    _emit(res.rows + monitored, config, list(BATTERY_COLUMNS))
    for line in res.failures:
        print(f"FAIL {line}", file=sys.stderr)
    return EXIT_OK if res.passed else EXIT_FAIL


HANDLERS = {
    "characterize": cmd_characterize,
    "testing": cmd_testing,
    "norms": cmd_norms,
    "sharpness": cmd_sharpness,
    "weak-trace": cmd_weak_trace,
    "battery": cmd_battery,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = make_config(args)
        return HANDLERS[args.command](args, config)
    except (RegimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
