"""Reproducible solve / benchmark runs with CSV and JSON output.

Every result row carries the instance seed, the LFSR seed that generated its
initial spins and a hash of the full configuration, which together pin the
row bit-exactly.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import ProblemInstance
from .dynamics import DynamicsConfig, RunResult, anneal_many, init_spins, lfsr_states
from .instances import EnsembleSpec, instance_name, instance_seed
from .metrics import DEFAULT_POWER, ets, is_success, run_stats, summarize_tts, tts
from .perturbation import PerturbationSchedule
from .solvers import BRUTE_FORCE_MAX_N, OracleResult, TabuParams, brute_force, tabu_search

MODES = ("perturbed", "gradient")

ROW_FIELDS = (
    "instance_id",
    "n",
    "density",
    "instance_seed",
    "mode",
    "runs",
    "successes",
    "p_suc",
    "best_H_found",
    "oracle_H",
    "oracle_method",
    "tts_seconds",
    "ets_joules",
    "lfsr_seed",
    "config_hash",
)

RUN_FIELDS = ("instance_id", "mode", "run_index", "lfsr_state", "initial_H", "final_H", "success", "flips", "spins")
TRACE_FIELDS = ("instance_id", "mode", "run_index", "t_seconds", "H", "flips")
GRID_FIELDS = ("n", "density", "mode", "instances", "mean_p_suc")
CDF_FIELDS = ("n", "mode", "tts_seconds", "problems_solved")
TTS_SUMMARY_FIELDS = ("n", "mode", "instances", "unsolved", "mean_tts_seconds", "median_tts_seconds", "median_le_mean")

# default cap on integration steps a bench may request without --force
DEFAULT_MAX_STEPS = 5_000_000_000


class ResourceLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # dynamics
    rho: float = 1.0e6
    dt: float = 0.5e-9
    anneal_time: float = 3.0e-6
    # perturbation schedule
    column_dwell: float = 12.5e-9
    gate_period: float = 800e-9
    gate_off_fraction: float = 0.25
    quiet_tail: float = 800e-9
    leak_tau: float = 50e-6
    # oracle
    oracle: str = "auto"
    tabu_tenure: int | None = None
    tabu_max_iterations: int | None = None
    tabu_restarts: int = 20
    tabu_seed: int = 0
    # ensemble
    sizes: tuple[int, ...] = (16, 32, 48, 64)
    densities: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)
    instances_per_cell: int = 20
    coeff_max: int = 15
    base_seed: int = 0
    # runs
    runs_per_instance: int = 1000
    modes: tuple[str, ...] = MODES
    run_seed: int = 1
    power: float = DEFAULT_POWER
    output_format: str = "csv"
    trace: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "densities", tuple(float(d) for d in self.densities))
        object.__setattr__(self, "modes", tuple(self.modes))
        for m in self.modes:
            if m not in MODES:
                raise ValueError(f"unknown mode {m!r}; expected one of {MODES}")
        if not self.modes:
            raise ValueError("at least one mode is required")
        if self.oracle not in ("auto", "brute", "tabu"):
            raise ValueError(f"unknown oracle {self.oracle!r}")
        if self.output_format not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.output_format!r}")
        if self.runs_per_instance < 1:
            raise ValueError("runs_per_instance must be positive")
        if self.power < 0:
            raise ValueError("power must be non-negative")
        self.ensemble()
        if self.tabu_tenure is not None and self.tabu_tenure < 1:
            raise ValueError("tabu_tenure must be at least 1")
        self.check_size(2)

    def check_size(self, n: int) -> None:
        """Raise ValueError if this configuration cannot run an ``n``-spin instance."""
        if "perturbed" in self.modes:
            self.dynamics().check_schedule(self.schedule(n))
        else:
            self.dynamics()
        if self.oracle != "brute" and self.tabu_max_iterations is not None:
            self.tabu_params(n)

    def dynamics(self) -> DynamicsConfig:
        return DynamicsConfig(rho=self.rho, dt=self.dt, anneal_time=self.anneal_time)

    def schedule(self, n: int) -> PerturbationSchedule:
        return PerturbationSchedule(
            n_columns=n,
            column_dwell=self.column_dwell,
            gate_period=self.gate_period,
            gate_off_fraction=self.gate_off_fraction,
            quiet_tail=self.quiet_tail,
            leak_tau=self.leak_tau,
            enabled=True,
        )

    def ensemble(self) -> EnsembleSpec:
        return EnsembleSpec(self.sizes, self.densities, self.instances_per_cell, self.coeff_max, self.base_seed)

    def tabu_params(self, n: int) -> TabuParams:
        base = TabuParams.generous(n, self.tabu_seed)
        p = TabuParams(
            tenure=self.tabu_tenure if self.tabu_tenure is not None else base.tenure,
            max_iterations=self.tabu_max_iterations if self.tabu_max_iterations is not None else base.max_iterations,
            restarts=self.tabu_restarts,
            seed=self.tabu_seed,
        )
        p.validate_for(n)
        return p

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def config_hash(self) -> str:
        """Hash of every field that can change a result row."""
        d = self.as_dict()
        for k in ("output_format", "trace", "modes"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def lfsr_seed(run_seed: int, inst_seed: int | None, n: int) -> int:
    """Nonzero 64-bit LFSR seed shared by every mode run on one instance."""
    key = f"lfsr:{int(run_seed)}:{inst_seed}:{n}".encode()
    reg = int.from_bytes(hashlib.sha256(key).digest()[:8], "big")
    return reg or 1


def initial_voltages(seed: int, n: int, runs: int) -> tuple[np.ndarray, list[int]]:
    """One LFSR shift per run; run ``r`` starts from the register after ``r`` shifts."""
    states = lfsr_states(seed, runs)
    return np.array([init_spins(s, n) for s in states]), [s.reg for s in states]


def oracle_for(inst: ProblemInstance, cfg: RunConfig) -> OracleResult:
    method = cfg.oracle
    if method == "auto":
        method = "brute" if inst.n <= BRUTE_FORCE_MAX_N else "tabu"
    if method == "brute":
        return brute_force(inst)
    return tabu_search(inst, cfg.tabu_params(inst.n))


@dataclass
class ModeOutcome:
    mode: str
    results: list[RunResult]
    registers: list[int]
    row: dict


def _fmt_float(x: float):
    return "inf" if math.isinf(x) else float(x)


def _density(inst: ProblemInstance) -> float:
    return float(inst.target_density) if inst.target_density is not None else round(inst.density, 6)


def solve_instance(
    inst: ProblemInstance,
    cfg: RunConfig,
    oracle: OracleResult | None = None,
    instance_id: str | None = None,
) -> list[ModeOutcome]:
    """All configured modes on one instance, on identical initial-spin sequences."""
    cfg.check_size(inst.n)
    oracle = oracle or oracle_for(inst, cfg)
    seed = lfsr_seed(cfg.run_seed, inst.seed, inst.n)
    inits, regs = initial_voltages(seed, inst.n, cfg.runs_per_instance)
    dyn = cfg.dynamics()
    out = []
    for mode in cfg.modes:
        sched = cfg.schedule(inst.n) if mode == "perturbed" else None
        results = anneal_many(inst, dyn, sched, inits, trace=cfg.trace)
        stats = run_stats([r.energy for r in results], oracle.best_energy)
        t = tts(cfg.anneal_time, stats.p_suc)
        row = {
            "instance_id": instance_id or inst.label or "instance",
            "n": inst.n,
            "density": _density(inst),
            "instance_seed": inst.seed if inst.seed is not None else "",
            "mode": mode,
            "runs": stats.runs,
            "successes": stats.successes,
            "p_suc": stats.p_suc,
            "best_H_found": stats.best_H_found,
            "oracle_H": stats.oracle_H,
            "oracle_method": oracle.method,
            "tts_seconds": _fmt_float(t),
            "ets_joules": _fmt_float(ets(cfg.power, t)),
            "lfsr_seed": f"{seed:016x}",
            "config_hash": cfg.config_hash(),
        }
        out.append(ModeOutcome(mode, results, regs, row))
    return out


def run_rows(outcomes: Sequence[ModeOutcome], oracle_H: int) -> list[dict]:
    rows = []
    for oc in outcomes:
        for k, (res, reg) in enumerate(zip(oc.results, oc.registers)):
            rows.append(
                {
                    "instance_id": oc.row["instance_id"],
                    "mode": oc.mode,
                    "run_index": k,
                    "lfsr_state": f"{reg:016x}",
                    "initial_H": res.initial_energy,
                    "final_H": res.energy,
                    "success": int(is_success(res.energy, oracle_H)),
                    "flips": res.flips,
                    "spins": "".join("1" if s > 0 else "0" for s in res.spins),
                }
            )
    return rows


def trace_rows(outcomes: Sequence[ModeOutcome], dt: float) -> list[dict]:
    rows = []
    for oc in outcomes:
        for k, res in enumerate(oc.results):
            for t, H, flips in res.trace_rows(dt):
                rows.append(
                    {
                        "instance_id": oc.row["instance_id"],
                        "mode": oc.mode,
                        "run_index": k,
                        "t_seconds": t,
                        "H": H,
                        "flips": flips,
                    }
                )
    return rows


# ---------------------------------------------------------------------------
# benchmark grid


def estimated_steps(cfg: RunConfig) -> int:
    cells = len(cfg.sizes) * len(cfg.densities) * cfg.instances_per_cell
    return cells * len(cfg.modes) * cfg.runs_per_instance * cfg.dynamics().n_steps


def bench_cell(args: tuple[RunConfig, int, float, int]) -> list[dict]:
    cfg, n, density, index = args
    cfg = dataclasses.replace(cfg, trace=False)
    inst = cfg.ensemble().instance(n, density, index)
    return [oc.row for oc in solve_instance(inst, cfg, instance_id=inst.label)]


def _cell_id(cfg: RunConfig, n: int, density: float, index: int) -> str:
    return instance_name(n, density, instance_seed(cfg.base_seed, n, density, index))


def run_bench(
    cfg: RunConfig,
    workers: int = 1,
    done: dict[str, list[dict]] | None = None,
    max_steps: int | None = DEFAULT_MAX_STEPS,
    on_cell=None,
) -> list[dict]:
    """Run the full grid; rows come back in canonical cell order.

    ``done`` maps instance ids to rows from an interrupted earlier run with
    the same configuration; those cells are not recomputed.  ``on_cell`` is
    called with each cell's rows as soon as they are final, in order.
    """
    for n in cfg.sizes:
        cfg.check_size(n)
    if max_steps is not None and estimated_steps(cfg) > max_steps:
        raise ResourceLimitError(
            f"benchmark needs ~{estimated_steps(cfg):.3g} integration steps, above the "
            f"cap of {max_steps:.3g}; shrink the grid or raise the cap explicitly"
        )
    done = done or {}
    cells = list(cfg.ensemble().cells())
    ids = [_cell_id(cfg, *c) for c in cells]
    todo = [(cfg, *c) for c, cid in zip(cells, ids) if cid not in done]

    if workers > 1 and len(todo) > 1:
        pool = ProcessPoolExecutor(max_workers=workers)
        computed = pool.map(bench_cell, todo)
    else:
        pool = None
        computed = map(bench_cell, todo)

    rows = []
    try:
        it = iter(computed)
        for cid in ids:
            cell_rows = done[cid] if cid in done else next(it)
            if on_cell is not None:
                on_cell(cell_rows)
            rows.extend(cell_rows)
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


def sr_grid(rows: Iterable[dict]) -> list[dict]:
    acc: dict[tuple, list[float]] = {}
    for r in rows:
        acc.setdefault((int(r["n"]), float(r["density"]), r["mode"]), []).append(float(r["p_suc"]))
    return [
        {"n": n, "density": d, "mode": m, "instances": len(v), "mean_p_suc": math.fsum(v) / len(v)}
        for (n, d, m), v in sorted(acc.items(), key=lambda kv: (kv[0][0], kv[0][1], MODES.index(kv[0][2])))
    ]


def _tts_value(x) -> float:
    return math.inf if x == "inf" else float(x)


def tts_tables(rows: Iterable[dict]) -> tuple[list[dict], list[dict]]:
    """Cumulative TTS tables and mean/median summary, one group per (n, mode)."""
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        groups.setdefault((int(r["n"]), r["mode"]), []).append(_tts_value(r["tts_seconds"]))
    cdf, summary = [], []
    for n, mode in sorted(groups, key=lambda k: (k[0], MODES.index(k[1]))):
        values = groups[(n, mode)]
        s = summarize_tts(values)
        for t, solved in s.cumulative:
            cdf.append({"n": n, "mode": mode, "tts_seconds": t, "problems_solved": solved})
        solved_any = bool(s.cumulative)
        summary.append(
            {
                "n": n,
                "mode": mode,
                "instances": len(values),
                "unsolved": s.unsolved,
                "mean_tts_seconds": s.mean if solved_any else "nan",
                "median_tts_seconds": s.median if solved_any else "nan",
                "median_le_mean": int(s.median <= s.mean) if solved_any else "",
            }
        )
    return cdf, summary


# ---------------------------------------------------------------------------
# encodings


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(rows: Sequence[dict], fields: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_cell(r[f]) for f in fields])
    return buf.getvalue()


def to_json(rows: Sequence[dict], fields: Sequence[str]) -> str:
    return json.dumps([{f: r[f] for f in fields} for r in rows], indent=1) + "\n"


def encode(rows: Sequence[dict], fields: Sequence[str], fmt: str) -> str:
    return to_csv(rows, fields) if fmt == "csv" else to_json(rows, fields)


_INT_FIELDS = {"n", "runs", "successes", "best_H_found", "oracle_H", "instance_seed"}
_FLOAT_FIELDS = {"density", "p_suc", "tts_seconds", "ets_joules"}


def parse_rows_csv(text: str) -> list[dict]:
    """Typed rows back from :func:`to_csv` output of result rows."""
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in raw.items():
            if k in _INT_FIELDS and v != "":
                row[k] = int(v)
            elif k in _FLOAT_FIELDS and v != "inf":
                row[k] = float(v)
            else:
                row[k] = v
        rows.append(row)
    return rows


def load_done_rows(path: str, cfg: RunConfig) -> dict[str, list[dict]]:
    """Completed cells from an earlier bench output with the same config hash."""
    if not os.path.exists(path):
        return {}
    with open(path, encoding="ascii") as fh:
        rows = parse_rows_csv(fh.read())
    want = cfg.config_hash()
    done: dict[str, list[dict]] = {}
    for r in rows:
        if r["config_hash"] == want:
            done.setdefault(r["instance_id"], []).append(r)
    # a cell is complete only with one row per configured mode
    return {k: v for k, v in done.items() if [r["mode"] for r in v] == list(cfg.modes)}
