"""
Command-line front end.

    sdds-consistency steady    --case 1 --model markov
    sdds-consistency sweep     --case 2 --model erlang-full --k 1,2,5,10,20,50
    sdds-consistency transient --case 2 --model erlang-simplified --k 10 \\
                               --start state3-entry --until 600 --step 1
    sdds-consistency simulate  --case 2 --mode state --horizon 1e6 --seed 7
    sdds-consistency validate  --case 1

Exit codes: 0 success, 1 usage or configuration error, 2 numerical
failure, 3 validation failure. Relative ``--output`` paths are resolved
against ``$SDDS_OUTPUT_DIR`` when it is set.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import fields
from typing import List, Optional

import numpy as np

from .chains import MACRO_STATES, S1, S2, S3, S4, ModelKind, aggregate, build_generator
from .params import SddsParams, preset
from .reference import reference_steady_state
from .simulation import SimConfig, SimulationError, simulate
from .solvers import (SolverError, converged_steady_state, macro_steady_state,
                      steady_state, sweep_k, transient)

OUTPUT_DIR_ENV = "SDDS_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3

PI_COLUMNS = ["pi_s1", "pi_s2", "pi_s3", "pi_s4"]
START_STATES = {"state1": S1, "state2": S2, "state3-entry": S3, "state4-entry": S4}
MONOTONE_KS = (1, 2, 5, 10, 20, 50, 100)

_PARAM_TYPES = {f.name: f.type for f in fields(SddsParams)}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    return repr(float(x))


def _bool_text(flag: bool) -> str:
    return "true" if flag else "false"


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def read_config(path: str) -> dict:
    """
    Read a flat ``key = value`` parameter file.

    Keys are `SddsParams` field names, plus an optional ``preset`` naming
    the reference configuration to start from. ``#`` starts a comment.
    """
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key != "preset" and key not in _PARAM_TYPES:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def _convert(key: str, value):
    if key == "reliable":
        return value if isinstance(value, bool) else _parse_bool(str(value))
    if key == "n_receivers":
        return int(value)
    if key == "receiver_timeout" and str(value).strip().lower() in ("none", ""):
        return None
    try:
        return float(value)
    except ValueError:
        raise UsageError(f"{key}: not a number: {value!r}") from None


def resolve_params(args) -> SddsParams:
    values = {}
    base_name = None
    if args.config:
        try:
            values = read_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        base_name = values.pop("preset", None)
    if args.case:
        base_name = args.case
    if base_name is None and not values:
        raise UsageError("give --case or --config")
    if base_name is not None:
        base = preset(base_name)
        merged = {f: getattr(base, f) for f in _PARAM_TYPES}
    else:
        merged = {}
    merged.update({k: _convert(k, v) for k, v in values.items()})
    for key in _PARAM_TYPES:
        override = getattr(args, key, None)
        if override is not None:
            merged[key] = _convert(key, override)
    missing = [k for k in _PARAM_TYPES if k not in merged and k not in ("receiver_timeout", "reliable")]
    if missing:
        raise UsageError(f"missing parameters: {', '.join(missing)}")
    return SddsParams(**merged)


def _parse_ks(text: str) -> List[int]:
    try:
        ks = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad k list {text!r}") from None
    if not ks or any(k < 1 for k in ks):
        raise UsageError("k values must be integers >= 1")
    return ks


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, args):
    if args.output:
        path = args.output
        base = os.environ.get(OUTPUT_DIR_ENV)
        if base and not os.path.isabs(path):
            path = os.path.join(base, path)
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _steady_rows(params, kind, ks):
    sweep = sweep_k(params, kind, ks)
    rows = []
    for k, macro in sweep:
        rows.append([kind.value, str(k), _bool_text(params.reliable)] + [_fmt(x) for x in macro])
    return rows


def _reference_row(params):
    ref = reference_steady_state(params)
    return ["reference", "-", _bool_text(params.reliable)] + [_fmt(x) for x in ref]


def _structured(header, rows) -> str:
    records = [dict(zip(header, row)) for row in rows]
    return json.dumps(records, indent=2) + "\n"


def _table(header, rows, fmt) -> str:
    return _csv(header, rows) if fmt == "csv" else _structured(header, rows)


def cmd_steady(args, params):
    kind = ModelKind.parse(args.model)
    k = 1 if kind is ModelKind.MARKOV else args.k
    header = ["model", "k", "reliable"] + PI_COLUMNS
    return _table(header, _steady_rows(params, kind, [k]), args.format)


def cmd_sweep(args, params):
    kind = ModelKind.parse(args.model)
    ks = _parse_ks(args.k)
    if kind is ModelKind.MARKOV:
        ks = [1]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise UsageError("k list must be strictly increasing")
    header = ["model", "k", "reliable"] + PI_COLUMNS
    rows = _steady_rows(params, kind, ks) + [_reference_row(params)]
    return _table(header, rows, args.format)


def cmd_transient(args, params):
    kind = ModelKind.parse(args.model)
    gen = build_generator(params, kind, args.k)
    if args.step <= 0 or args.until < 0:
        raise UsageError("need --step > 0 and --until >= 0")
    n_steps = int(round(args.until / args.step))
    times = [i * args.step for i in range(n_steps + 1)]
    pi0 = gen.space.point_mass(START_STATES[args.start])
    traj = transient(gen, pi0, times)
    rows = [[_fmt(t)] + [_fmt(x) for x in aggregate(pi, gen.space)] for t, pi in zip(times, traj)]
    return _table(["t"] + PI_COLUMNS, rows, args.format)


def cmd_simulate(args, params):
    cfg = SimConfig(params, horizon=args.horizon, warmup=args.warmup, seed=args.seed,
                    mode=args.mode, batches=args.batches)
    report = simulate(cfg)
    if args.format == "csv":
        rows = [[name, _fmt(o), _fmt(h), _fmt(s)]
                for name, o, h, s in zip(MACRO_STATES, report.occupancy, report.half_width, report.stderr)]
        return _csv(["state", "occupancy", "ci95_half_width", "stderr"], rows)
    doc = {
        "mode": cfg.mode,
        "seed": cfg.seed,
        "sim_time": report.sim_time,
        "batches": report.batches,
        "occupancy": {n: float(o) for n, o in zip(MACRO_STATES, report.occupancy)},
        "ci95_half_width": {n: float(h) for n, h in zip(MACRO_STATES, report.half_width)},
        "counts": report.counts,
    }
    return json.dumps(doc, indent=2) + "\n"


def run_validation(params: SddsParams, sim_horizon: float = 0.0, seed: int = 0):
    """Cross-model checks. Returns a list of ``(name, passed, detail)``."""
    results = []

    mats = [build_generator(params, kind, 1).matrix for kind in ModelKind]
    gen_gap = max(np.abs(m - mats[0]).max() for m in mats[1:])
    pis = [steady_state(build_generator(params, kind, 1)) for kind in ModelKind]
    pi_gap = max(np.abs(p - pis[0]).max() for p in pis[1:])
    results.append(("k1-equivalence", gen_gap <= 1e-12 and pi_gap <= 1e-12,
                    f"generator gap {gen_gap:.3e}, steady-state gap {pi_gap:.3e}"))

    unreliable = params.replace(reliable=False)
    markov = macro_steady_state(unreliable, ModelKind.MARKOV)[S2]
    for kind in (ModelKind.ERLANG_FULL, ModelKind.ERLANG_SIMPLIFIED):
        pi2 = sweep_k(unreliable, kind, MONOTONE_KS).consistency
        ok = bool(np.all(np.diff(pi2) <= 0) and pi2.max() <= markov)
        results.append((f"monotone-{kind.value}", ok,
                        "unreliable pi_s2 over k=" + ",".join(map(str, MONOTONE_KS))
                        + ": " + " ".join(f"{x:.6f}" for x in pi2)))

    ref = reference_steady_state(params)
    conv = converged_steady_state(params, ModelKind.ERLANG_FULL)
    rel = abs(conv.consistency - ref[S2]) / ref[S2]
    results.append(("reference-agreement", rel <= 0.02,
                    f"erlang-full k={conv.k} pi_s2={conv.consistency:.6f}, "
                    f"reference={ref[S2]:.6f}, relative gap {rel:.3e}"))

    markov_here = macro_steady_state(params, ModelKind.MARKOV)[S2]
    results.append(("markov-upper-bound", markov_here >= ref[S2],
                    f"markov={markov_here:.6f} reference={ref[S2]:.6f}"))

    if sim_horizon > 0:
        report = simulate(SimConfig(params, horizon=sim_horizon, seed=seed))
        ok = report.agrees_with(ref, n_sigma=3.0, floor=1e-12)
        z = np.abs(report.occupancy - ref) / np.where(report.stderr > 0, report.stderr, np.inf)
        results.append(("simulation-agreement", bool(ok.all()),
                        "z-scores " + " ".join(f"{x:.2f}" for x in z)))
    return results


def cmd_validate(args, params):
    results = run_validation(params, sim_horizon=args.sim_horizon, seed=args.seed)
    lines = [f"{'PASS' if ok else 'FAIL'} {name}: {detail}" for name, ok, detail in results]
    failed = not all(ok for _, ok, _ in results)
    return "\n".join(lines) + "\n", failed


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sdds-consistency",
                     description="Consistency probability of soft-state sensor data distribution.")
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("parameters")
    src.add_argument("--case", help="reference configuration: 1, 2, case1 or case2")
    src.add_argument("--config", help="flat key = value parameter file")
    src.add_argument("--lambda-u", dest="lambda_u")
    src.add_argument("--lambda-d", dest="lambda_d")
    src.add_argument("--lambda-f", dest="lambda_f")
    src.add_argument("--p-loss", dest="p_loss")
    src.add_argument("--n-receivers", dest="n_receivers")
    src.add_argument("--transfer-delay", dest="transfer_delay")
    src.add_argument("--refresh-period", dest="refresh_period")
    src.add_argument("--receiver-timeout", dest="receiver_timeout")
    mode = src.add_mutually_exclusive_group()
    mode.add_argument("--reliable", dest="reliable", action="store_const", const=True)
    mode.add_argument("--unreliable", dest="reliable", action="store_const", const=False)
    out = common.add_argument_group("output")
    out.add_argument("--output", "-o", help="output file (default: stdout)")
    out.add_argument("--format", choices=("csv", "text"), default="csv",
                     help="csv, or text for structured JSON")

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    models = [k.value for k in ModelKind]

    p = sub.add_parser("steady", parents=[common], help="steady-state macro distribution")
    p.add_argument("--model", choices=models, default="markov")
    p.add_argument("--k", type=int, default=1)

    p = sub.add_parser("sweep", parents=[common], help="steady state over a list of k")
    p.add_argument("--model", choices=models, default="erlang-full")
    p.add_argument("--k", default="1,2,5,10,20,50,100", help="comma-separated phase counts")

    p = sub.add_parser("transient", parents=[common], help="state probabilities over time")
    p.add_argument("--model", choices=models, default="erlang-simplified")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--start", choices=sorted(START_STATES), default="state3-entry")
    p.add_argument("--until", type=float, default=600.0)
    p.add_argument("--step", type=float, default=1.0)

    p = sub.add_parser("simulate", parents=[common], help="discrete-event simulation")
    p.add_argument("--mode", choices=("state", "packet"), default="state")
    p.add_argument("--horizon", type=float, default=1e6)
    p.add_argument("--warmup", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batches", type=int, default=20)

    p = sub.add_parser("validate", parents=[common], help="run cross-model checks")
    p.add_argument("--sim-horizon", type=float, default=2e5,
                   help="state-level simulation horizon; 0 skips the simulation check")
    p.add_argument("--seed", type=int, default=0)
    return parser


COMMANDS = {
    "steady": cmd_steady,
    "sweep": cmd_sweep,
    "transient": cmd_transient,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params = resolve_params(args)
        result = COMMANDS[args.command](args, params)
    except (UsageError, ValueError) as exc:
        print(f"sdds-consistency: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, SimulationError, np.linalg.LinAlgError) as exc:
        print(f"sdds-consistency: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    failed = False
    if isinstance(result, tuple):
        result, failed = result
    _emit(result, args)
    if failed:
        print("sdds-consistency: validation failed", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
