"""Command-line entry point: generate, solve, oracle and bench.

Configuration precedence is defaults < ``--config`` file < flags.  The config
file holds ``key=value`` lines using :class:`RunConfig` field names; list
values are comma separated and ``#`` starts a comment.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .experiment import (
    CDF_FIELDS,
    GRID_FIELDS,
    ROW_FIELDS,
    RUN_FIELDS,
    TRACE_FIELDS,
    TTS_SUMMARY_FIELDS,
    DEFAULT_MAX_STEPS,
    ResourceLimitError,
    RunConfig,
    encode,
    load_done_rows,
    oracle_for,
    run_bench,
    run_rows,
    solve_instance,
    sr_grid,
    to_csv,
    trace_rows,
    tts_tables,
)
from .instances import InstanceFormatError, generate_random_qubo, instance_name, load_instance, save_instance

EXIT_CONFIG = 3
EXIT_INSTANCE = 4
EXIT_IO = 5
EXIT_RESOURCE = 6

_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_LIST_FIELDS = {"sizes": int, "densities": float, "modes": str}
_OPTIONAL_INT = {"tabu_tenure", "tabu_max_iterations"}


class ConfigError(ValueError):
    pass


def _coerce(key: str, value: str):
    if key not in _FIELDS:
        raise ConfigError(f"unknown configuration key {key!r}")
    if key in _LIST_FIELDS:
        conv = _LIST_FIELDS[key]
        return tuple(conv(x.strip()) for x in value.split(",") if x.strip())
    if key in _OPTIONAL_INT:
        return None if value.lower() in ("", "none") else int(value)
    default = _FIELDS[key].default
    if isinstance(default, bool):
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def read_config_file(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            try:
                out[key] = _coerce(key, value.strip())
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return out


def _modes(flag: str | None):
    if flag is None:
        return None
    return {"on": ("perturbed",), "off": ("gradient",), "both": ("perturbed", "gradient")}[flag]


def build_config(args: argparse.Namespace, **overrides) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    flag_map = {
        "rho": "rho",
        "dt": "dt",
        "anneal_time": "anneal_time",
        "column_dwell": "column_dwell",
        "gate_period": "gate_period",
        "gate_off_fraction": "gate_off_fraction",
        "quiet_tail": "quiet_tail",
        "leak_tau": "leak_tau",
        "oracle": "oracle",
        "tenure": "tabu_tenure",
        "max_iterations": "tabu_max_iterations",
        "restarts": "tabu_restarts",
        "tabu_seed": "tabu_seed",
        "sizes": "sizes",
        "densities": "densities",
        "instances": "instances_per_cell",
        "coeff_max": "coeff_max",
        "base_seed": "base_seed",
        "runs": "runs_per_instance",
        "run_seed": "run_seed",
        "power": "power",
        "format": "output_format",
    }
    for flag, key in flag_map.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    modes = _modes(getattr(args, "perturbation", None))
    if modes is not None:
        values["modes"] = modes
    values.update(overrides)
    try:
        return RunConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _csv_list(conv):
    def parse(text):
        try:
            return tuple(conv(x) for x in text.split(",") if x)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid list {text!r}") from None

    return parse


def _add_dynamics_flags(p):
    g = p.add_argument_group("dynamics and schedule")
    g.add_argument("--rho", type=float, help="slew coefficient, V/s per coupling unit")
    g.add_argument("--dt", type=float, help="integration step, s")
    g.add_argument("--anneal-time", type=float, help="anneal duration per run, s")
    g.add_argument("--column-dwell", type=float, help="refresh time per column, s")
    g.add_argument("--gate-period", type=float, help="DAC gating period, s")
    g.add_argument("--gate-off-fraction", type=float, help="trailing fraction of each period with DACs off")
    g.add_argument("--quiet-tail", type=float, help="ungated time at the end of the anneal, s")
    g.add_argument("--leak-tau", type=float, help="leakage time constant, s ('inf' disables)")
    g.add_argument("--perturbation", choices=("on", "off", "both"), help="landscape perturbation mode(s)")


def _add_tabu_flags(p):
    g = p.add_argument_group("oracle")
    g.add_argument("--tenure", type=int)
    g.add_argument("--max-iterations", type=int)
    g.add_argument("--restarts", type=int)
    g.add_argument("--tabu-seed", type=int)


def _add_run_flags(p):
    p.add_argument("--runs", type=int, help="anneals per instance and mode")
    p.add_argument("--run-seed", type=int, help="seed for the initial-spin LFSR streams")
    p.add_argument("--power", type=float, help="chip power for ETS, W")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--config", help="key=value configuration file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="landscape-ising", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write random QUBO instance files")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--density", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1, help="instances with seeds seed, seed+1, ...")
    p.add_argument("--coeff-max", type=int, default=15)
    p.add_argument("--out", default=".")

    p = sub.add_parser("solve", help="anneal one instance repeatedly and report SR/TTS/ETS")
    p.add_argument("instance")
    _add_dynamics_flags(p)
    _add_tabu_flags(p)
    _add_run_flags(p)
    p.add_argument("--oracle", choices=("auto", "brute", "tabu"))
    p.add_argument("--per-run", metavar="FILE", help="also write one row per run")
    p.add_argument("--trace", metavar="FILE", help="write (t, H, flips) traces of every run")
    p.add_argument("--out", metavar="FILE", help="summary output (default stdout)")

    p = sub.add_parser("oracle", help="best-known energy by brute force or Tabu search")
    p.add_argument("instance")
    p.add_argument("--method", choices=("auto", "brute", "tabu"), default="auto")
    _add_tabu_flags(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("bench", help="run a size x density ensemble grid")
    _add_dynamics_flags(p)
    _add_tabu_flags(p)
    _add_run_flags(p)
    p.add_argument("--sizes", type=_csv_list(int))
    p.add_argument("--densities", type=_csv_list(float))
    p.add_argument("--instances", type=int, help="instances per (size, density) cell")
    p.add_argument("--coeff-max", type=int)
    p.add_argument("--base-seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--resume", action="store_true", help="reuse completed cells from a previous run")
    p.add_argument("--max-steps", type=float, default=DEFAULT_MAX_STEPS, help="integration-step budget guard")
    p.add_argument("--force", action="store_true", help="ignore the step budget guard")
    return parser


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)


def cmd_generate(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    for k in range(args.count):
        seed = args.seed + k
        inst = generate_random_qubo(args.size, args.density, args.coeff_max, seed)
        path = os.path.join(args.out, instance_name(args.size, args.density, seed) + ".txt")
        save_instance(inst, path)
        print(f"{path} n={inst.n} edges={inst.n_edges}")
    return 0


def cmd_solve(args) -> int:
    cfg = build_config(args, trace=bool(args.trace))
    inst = load_instance(args.instance)
    instance_id = inst.label or os.path.splitext(os.path.basename(args.instance))[0]
    cfg.check_size(inst.n)
    oracle = oracle_for(inst, cfg)
    outcomes = solve_instance(inst, cfg, oracle, instance_id=instance_id)
    _write(encode([oc.row for oc in outcomes], ROW_FIELDS, cfg.output_format), args.out)
    if args.per_run:
        _write(encode(run_rows(outcomes, oracle.best_energy), RUN_FIELDS, cfg.output_format), args.per_run)
    if args.trace:
        _write(encode(trace_rows(outcomes, cfg.dt), TRACE_FIELDS, cfg.output_format), args.trace)
    return 0


def cmd_oracle(args) -> int:
    cfg = build_config(args, oracle=args.method)
    inst = load_instance(args.instance)
    res = oracle_for(inst, cfg)
    row = {"method": res.method, "best_energy": res.best_energy, "config": res.bitstring, "iterations": res.iterations_used}
    sys.stdout.write(encode([row], ("method", "best_energy", "config", "iterations"), args.format))
    return 0


def cmd_bench(args) -> int:
    cfg = build_config(args)
    os.makedirs(args.out, exist_ok=True)
    ext = cfg.output_format
    runs_path = os.path.join(args.out, "runs.csv")
    done = {}
    if args.resume:
        partial = runs_path + ".partial"
        done = load_done_rows(partial if os.path.exists(partial) else runs_path, cfg)

    # rows are checkpointed to runs.csv cell by cell so an interrupted bench can resume
    with open(runs_path + ".partial", "w", encoding="ascii", newline="\n") as fh:
        fh.write(to_csv([], ROW_FIELDS))

        def checkpoint(cell_rows):
            fh.write(to_csv(cell_rows, ROW_FIELDS).split("\n", 1)[1])
            fh.flush()

        rows = run_bench(
            cfg,
            workers=args.workers,
            done=done,
            max_steps=None if args.force else int(args.max_steps),
            on_cell=checkpoint,
        )
    os.replace(runs_path + ".partial", runs_path)

    cdf, summary = tts_tables(rows)
    if ext == "json":
        _write(encode(rows, ROW_FIELDS, "json"), os.path.join(args.out, "runs.json"))
    _write(encode(sr_grid(rows), GRID_FIELDS, ext), os.path.join(args.out, f"sr_grid.{ext}"))
    _write(encode(cdf, CDF_FIELDS, ext), os.path.join(args.out, f"tts_cdf.{ext}"))
    _write(encode(summary, TTS_SUMMARY_FIELDS, ext), os.path.join(args.out, f"tts_summary.{ext}"))
    for s in summary:
        flag = "" if s["median_le_mean"] in (1, "") else "  [median > mean]"
        print(f"n={s['n']} {s['mode']}: mean TTS {s['mean_tts_seconds']} s, median {s['median_tts_seconds']} s, "
              f"unsolved {s['unsolved']}/{s['instances']}{flag}")
    return 0


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "oracle": cmd_oracle, "bench": cmd_bench}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InstanceFormatError as exc:
        print(f"error[instance]: {exc}", file=sys.stderr)
        return EXIT_INSTANCE
    except ResourceLimitError as exc:
        print(f"error[resource]: {exc} (pass --force to override)", file=sys.stderr)
        return EXIT_RESOURCE
    except ValueError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
