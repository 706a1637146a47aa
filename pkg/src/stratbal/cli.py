"""Command-line interface: ``gen``, ``sample``, ``simulate`` and ``bench``.

Exit status is 0 on success, 2 on invalid input and 1 on runtime failure.
Every flag can also be given in a ``--config`` file of ``key = value``
lines (keys are flag names without leading dashes); flags on the command
line take precedence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from .harness import bench, bench_configs, run_method, simulate
from .model import load_population, write_population
from .synth import GeneratorSpec, generate


class ConfigError(ValueError):
    pass


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _add_generator(p, nh=2.0):
    g = p.add_argument_group("synthetic population")
    g.add_argument("--strata", type=int, default=675, help="number of strata H")
    g.add_argument("--units-per-stratum", type=int, default=3)
    g.add_argument("--q", type=int, default=3, help="auxiliary variables")
    g.add_argument("--p", type=int, default=3, help="interest variables")
    g.add_argument("--nh", type=str, default=str(nh), help="sum of inclusion probabilities per stratum")
    g.add_argument("--rho", type=float, default=0.7, help="aux/interest correlation")


def _add_run(p, methods):
    p.add_argument("--method", choices=methods, default=methods[0])
    p.add_argument("--drop-order", type=str, default=None, help="comma-separated constraint indices; last is relaxed first")
    p.add_argument("--tol", type=float, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="stratbal", description=__doc__.splitlines()[0])
    parser.add_argument("--config", type=Path, default=None, help="key = value file with default flag values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic population CSV")
    _add_generator(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", type=Path, required=True)

    p = sub.add_parser("sample", help="draw one sample from a population CSV")
    p.add_argument("--input", type=Path, required=True)
    _add_run(p, ["proposed", "chauvet", "hasler", "cube"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", type=Path, required=True, help="sample CSV; diagnostics go to the same name with .json")

    p = sub.add_parser("simulate", help="Monte-Carlo variance comparison")
    p.add_argument("--input", type=Path, default=None, help="population CSV (default: generate one)")
    _add_generator(p)
    _add_run(p, ["all", "proposed", "chauvet", "hasler", "cube"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--output", type=Path, default=None, help="report CSV; a text table goes next to it")

    p = sub.add_parser("bench", help="mean sampling time per method and configuration")
    _add_generator(p, nh="2,1.4")
    _add_run(p, ["all", "proposed", "chauvet", "hasler", "cube"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--output", type=Path, default=None)
    return parser


def read_config(path):
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def parse_args(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path, default=None)
    known, _ = pre.parse_known_args(argv)
    parser = build_parser()
    command = next((a for a in argv if a in COMMANDS), None)
    if known.config is not None and command is not None:
        sub = parser._subparsers._group_actions[0].choices[command]
        actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
        defaults = {}
        for key, value in read_config(known.config).items():
            if key not in actions:
                raise ConfigError(f"{known.config}: unknown key {key!r} for {command}")
            action = actions[key]
            defaults[key] = action.type(value) if action.type else value
            if action.choices and defaults[key] not in action.choices:
                raise ConfigError(f"{known.config}: invalid {key} {value!r}")
            action.required = False
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _spec(args, nh=None):
    return GeneratorSpec(
        H=args.strata,
        units_per_stratum=args.units_per_stratum,
        q=args.q,
        p=args.p,
        nh=_floats(args.nh)[0] if nh is None else nh,
        rho=args.rho,
    )


def _drop_order(args, frame):
    if args.drop_order is None:
        return None
    order = _ints(args.drop_order)
    width = frame.H + frame.q
    if any(not 0 <= j < width for j in order) or len(set(order)) != len(order):
        raise ConfigError(f"drop order must list distinct indices in [0, {width})")
    return order


def _methods(args):
    return ["proposed", "hasler", "chauvet"] if args.method == "all" else [args.method]


def _constraint_names(frame):
    return [f"stratum:{lab}" for lab in frame.stratum_labels] + [f"x{j + 1}" for j in range(frame.q)]


def cmd_gen(args):
    frame = generate(_spec(args), args.seed)
    write_population(frame, args.output)
    print(f"wrote {frame.N} units in {frame.H} strata to {args.output}")


def cmd_sample(args):
    frame = load_population(args.input)
    drop = _drop_order(args, frame)
    t0 = time.perf_counter()
    res = run_method(args.method, frame, np.random.default_rng(args.seed), drop, args.tol)
    elapsed = time.perf_counter() - t0

    with args.output.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "stratum", "pi", "selected"])
        for k in range(frame.N):
            w.writerow([frame.unit_ids[k], frame.strata[k], repr(float(frame.pi[k])), int(res.a[k])])
    names = _constraint_names(frame)
    diag = {
        "method": args.method,
        "seed": args.seed,
        "N": frame.N,
        "H": frame.H,
        "q": frame.q,
        "sample_size": int(res.a.sum()),
        "strata_counts": {str(lab): int(c) for lab, c in zip(frame.stratum_labels, res.strata_counts)},
        "balance_residual": {n: float(v) for n, v in zip(names, res.balance_residual)},
        "dropped_constraints": [{"index": j, "name": names[j]} for j in res.dropped_constraints],
    }
    args.output.with_suffix(".json").write_text(json.dumps(diag, indent=2) + "\n", encoding="utf-8")
    print(f"{args.method}: selected {int(res.a.sum())} of {frame.N} units in {elapsed:.4f} s")


def _format_table(rows, columns):
    cells = [[str(c) for c in columns]]
    for row in rows:
        cells.append([f"{row[c]:.6g}" if isinstance(row[c], float) else str(row[c]) for c in columns])
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


def _write_csv(rows, columns, path):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({c: repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns})
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


SIM_COLUMNS = ["method", "variable", "Y", "v_sim", "var_hat", "var_app", "m", "incl_max_abs_z", "incl_outside_3.5sd"]


def cmd_simulate(args):
    frame = load_population(args.input) if args.input else generate(_spec(args), args.seed)
    if frame.p == 0:
        raise ConfigError("population has no interest variables")
    drop = _drop_order(args, frame)
    rows = []
    for method in _methods(args):
        result = simulate(frame, method, args.reps, args.seed, drop, args.tol)
        z = np.abs(result.inclusion_z(frame.pi))
        for row in result.report.rows():
            row.update({"m": args.reps, "incl_max_abs_z": float(z.max()), "incl_outside_3.5sd": int((z > 3.5).sum())})
            rows.append(row)
    text = _format_table(rows, SIM_COLUMNS)
    sys.stdout.write(text)
    if args.output:
        _write_csv(rows, SIM_COLUMNS, args.output)
        args.output.with_suffix(".txt").write_text(text, encoding="utf-8")


BENCH_COLUMNS = ["config", "nh", "method", "runs", "mean_s", "sd_s"]


def cmd_bench(args):
    spec = _spec(args)
    configs = bench_configs(spec, args.seed, nh_fine=tuple(_floats(args.nh)))
    rows = bench(configs, _methods(args), args.reps, args.seed, None, args.tol)
    text = _format_table(rows, BENCH_COLUMNS)
    sys.stdout.write(text)
    if args.output:
        _write_csv(rows, BENCH_COLUMNS, args.output)
        args.output.with_suffix(".txt").write_text(text, encoding="utf-8")


COMMANDS = {"gen": cmd_gen, "sample": cmd_sample, "simulate": cmd_simulate, "bench": cmd_bench}


def main(argv=None):
    try:
        args = parse_args(argv)
        if getattr(args, "reps", 1) < 1:
            raise ConfigError("--reps must be at least 1")
        COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
