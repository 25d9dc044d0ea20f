"""Continuous-time node dynamics, spin initialization and annealing runs.

Node voltages are normalized to the supply (rails at 0 and 1, threshold at
0.5).  Each node integrates ``dv_i/dt = rho * sum_j J_eff[i, j] * Q(v_j)``
with explicit first-order steps, sampling every spin once at the start of a
step and clamping the result to the rails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .core import MAX_SPINS, ProblemInstance, as_spins, hamiltonian
from .perturbation import (
    ColumnStatus,
    PerturbationSchedule,
    advance_schedule,
    effective_matrix,
    event_table,
    n_integration_steps,
)

THRESHOLD = 0.5

# maximal-length Fibonacci polynomial x^64 + x^63 + x^61 + x^60 + 1
LFSR_WIDTH = 64
LFSR_TAPS = (64, 63, 61, 60)
_LFSR_MASK = (1 << LFSR_WIDTH) - 1


@dataclass(frozen=True)
class DynamicsConfig:
    rho: float = 1.0e6  # V/s per coupling unit (1 V/us)
    dt: float = 0.5e-9
    anneal_time: float = 3.0e-6
    clamp: bool = field(default=True, init=False)

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not 0 < self.dt <= self.anneal_time:
            raise ValueError("dt must satisfy 0 < dt <= anneal_time")
        n_integration_steps(self.anneal_time, self.dt)

    @property
    def n_steps(self) -> int:
        return n_integration_steps(self.anneal_time, self.dt)

    def check_schedule(self, sched: PerturbationSchedule | None) -> None:
        if sched is None:
            return
        if self.dt > sched.column_dwell * (1 + 1e-9):
            raise ValueError("dt must not exceed the column dwell time")
        event_table(sched, self.anneal_time, self.dt)


@dataclass(frozen=True)
class MachineState:
    v: np.ndarray
    t: float = 0.0
    flips: int = 0

    def __post_init__(self):
        v = np.array(self.v, dtype=np.float64)
        if v.ndim != 1:
            raise ValueError("voltages must be one-dimensional")
        if not np.all(np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
            raise ValueError("node voltages must lie within the rails [0, 1]")
        if self.t < 0:
            raise ValueError("simulation time must be non-negative")
        v.flags.writeable = False
        object.__setattr__(self, "v", v)

    @property
    def spins(self) -> np.ndarray:
        return quantize_spins(self.v)


@dataclass(frozen=True)
class RunResult:
    spins: np.ndarray
    energy: int
    initial_energy: int
    flips: int
    voltages: np.ndarray
    energy_trace: np.ndarray | None = None  # H after each step, index 0 = initial
    flip_trace: np.ndarray | None = None  # quantizer transitions in each step

    def trace_rows(self, dt: float) -> list[tuple[float, int, int]]:
        """``(t, H, cumulative flips)`` at t=0, every step with a flip, and the end."""
        if self.energy_trace is None:
            raise ValueError("run was executed without tracing")
        cum = np.concatenate([[0], np.cumsum(self.flip_trace)])
        steps = len(self.flip_trace)
        keep = [0] + [s + 1 for s in np.flatnonzero(self.flip_trace)]
        if keep[-1] != steps:
            keep.append(steps)
        return [(s * dt, int(self.energy_trace[s]), int(cum[s])) for s in keep]


@dataclass(frozen=True)
class LfsrState:
    reg: int

    def __post_init__(self):
        if not 0 < self.reg <= _LFSR_MASK:
            raise ValueError("LFSR register must be a nonzero 64-bit value")


def quantize_spin(v: float) -> int:
    if not math.isfinite(v):
        raise ValueError(f"non-finite node voltage {v!r}")
    return 1 if v >= THRESHOLD else -1


def quantize_spins(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite node voltage")
    return np.where(v >= THRESHOLD, 1, -1).astype(np.int64)


def node_derivative(J_row: Sequence[float], spins: Sequence[int], rho: float) -> float:
    row = np.asarray(J_row, dtype=np.float64)
    sigma = np.asarray(spins, dtype=np.float64)
    if row.shape != sigma.shape:
        raise ValueError(f"row length {row.shape} does not match spin length {sigma.shape}")
    # the diagonal is zero, so the j != i restriction needs no masking
    return rho * float(row @ sigma)


def euler_step(state: MachineState, J_eff: np.ndarray, cfg: DynamicsConfig) -> MachineState:
    J_eff = np.asarray(J_eff, dtype=np.float64)
    n = state.v.shape[0]
    if J_eff.shape != (n, n):
        raise ValueError(f"effective matrix shape {J_eff.shape} does not match {n} nodes")
    before = quantize_spins(state.v)
    dv = cfg.rho * (J_eff @ before.astype(np.float64))
    v = np.clip(state.v + cfg.dt * dv, 0.0, 1.0)
    after = quantize_spins(v)
    return MachineState(v, state.t + cfg.dt, state.flips + int(np.count_nonzero(before != after)))


def lfsr_next(s: LfsrState) -> LfsrState:
    """One right shift; the feedback bit enters at bit 63 and bit 0 is shifted out."""
    reg = s.reg
    if reg == 0:
        raise ValueError("all-zero LFSR state is absorbing")
    fb = 0
    for tap in LFSR_TAPS:
        fb ^= (reg >> (LFSR_WIDTH - tap)) & 1
    return LfsrState((reg >> 1) | (fb << (LFSR_WIDTH - 1)))


def lfsr_states(seed: int, count: int) -> list[LfsrState]:
    """``count`` consecutive states starting with ``seed`` itself."""
    state = LfsrState(seed)
    out = []
    for _ in range(count):
        out.append(state)
        state = lfsr_next(state)
    return out


def init_spins(lfsr: LfsrState, n: int) -> np.ndarray:
    """Rail voltages from the low ``n`` register bits (bit i drives node i)."""
    if not 0 < n <= MAX_SPINS:
        raise ValueError(f"spin count must be in 1..{MAX_SPINS}, got {n}")
    return np.array([1.0 if (lfsr.reg >> i) & 1 else 0.0 for i in range(n)])


def _schedule_arrays(n: int, cfg: DynamicsConfig, sched: PerturbationSchedule | None):
    steps = np.arange(cfg.n_steps, dtype=np.float64)
    if sched is None:
        scale = np.full(cfg.n_steps, cfg.dt * cfg.rho)
        empty_i = np.zeros(0, dtype=np.int64)
        return scale, empty_i, empty_i, np.zeros(0), np.ones(n)
    sched = sched.for_size(n)
    cfg.check_schedule(sched)
    ev_step, ev_col, enabled = event_table(sched, cfg.anneal_time, cfg.dt)
    if math.isinf(sched.leak_tau):
        scale = np.full(cfg.n_steps, cfg.dt * cfg.rho)
        weight = np.where(enabled, 1.0, 0.0)
    else:
        # J_eff[i, j](t) = J[i, j] * exp(last_j / tau) * exp(-t / tau)
        scale = cfg.dt * cfg.rho * np.exp(-steps * cfg.dt / sched.leak_tau)
        weight = np.where(enabled, np.exp(ev_step * cfg.dt / sched.leak_tau), 0.0)
    return scale, ev_step, ev_col, weight, np.ones(n)


def anneal_many(
    inst: ProblemInstance,
    cfg: DynamicsConfig,
    sched: PerturbationSchedule | None,
    inits: np.ndarray,
    trace: bool = False,
) -> list[RunResult]:
    """Run one anneal per row of ``inits`` (initial voltages, shape ``(R, n)``)."""
    inits = np.atleast_2d(np.asarray(inits, dtype=np.float64))
    if inits.shape[1] != inst.n:
        raise ValueError(f"initial voltages have {inits.shape[1]} nodes, instance has {inst.n}")
    if np.any(inits < 0) or np.any(inits > 1) or not np.all(np.isfinite(inits)):
        raise ValueError("initial voltages must lie within the rails [0, 1]")
    scale, ev_step, ev_col, weight, w0 = _schedule_arrays(inst.n, cfg, sched)
    sig, v, H, H0, flips, tr_H, tr_f = _kernels.anneal_batch(
        np.ascontiguousarray(inst.J, dtype=np.int64),
        np.ascontiguousarray(inits),
        scale,
        ev_step,
        ev_col,
        weight,
        w0,
        trace,
    )
    if not np.all(np.isfinite(v)):
        raise FloatingPointError("node voltages became non-finite during integration")
    return [
        RunResult(
            spins=sig[r].copy(),
            energy=int(H[r]),
            initial_energy=int(H0[r]),
            flips=int(flips[r]),
            voltages=v[r].copy(),
            energy_trace=tr_H[r].copy() if trace else None,
            flip_trace=tr_f[r].copy() if trace else None,
        )
        for r in range(inits.shape[0])
    ]


def run_anneal(
    inst: ProblemInstance,
    cfg: DynamicsConfig,
    sched: PerturbationSchedule | None,
    init: Sequence[float],
    trace: bool = False,
) -> RunResult:
    """Anneal from ``init`` voltages for ``cfg.anneal_time``.

    With ``sched=None`` the programmed couplings drive the nodes unchanged
    (gradient descent only).  The reported energy always uses the programmed
    couplings, never the perturbed ones.
    """
    return anneal_many(inst, cfg, sched, np.asarray(init, dtype=np.float64)[None, :], trace)[0]


def run_anneal_reference(
    inst: ProblemInstance,
    cfg: DynamicsConfig,
    sched: PerturbationSchedule | None,
    init: Sequence[float],
) -> RunResult:
    """Step-by-step anneal built from the public single-step operations.

    Orders of magnitude slower than :func:`run_anneal`; kept as an
    independent route for cross-checking the compiled kernel.
    """
    state = MachineState(np.asarray(init, dtype=np.float64))
    if sched is not None:
        sched = sched.for_size(inst.n)
        cfg.check_schedule(sched)
        status = ColumnStatus.fresh(inst.n)
    energies = [hamiltonian(inst, state.spins)]
    flips = []
    J_prog = inst.J.astype(np.float64)
    for s in range(cfg.n_steps):
        t = s * cfg.dt
        if sched is None:
            J_eff = J_prog
        else:
            J_eff = effective_matrix(inst, status, t, sched)
        prev = state.flips
        state = euler_step(state, J_eff, cfg)
        # keep the clock on the step grid instead of accumulating dt
        state = MachineState(state.v, (s + 1) * cfg.dt, state.flips)
        if sched is not None:
            status = advance_schedule(status, t, (s + 1) * cfg.dt, sched, cfg.anneal_time)
        energies.append(hamiltonian(inst, state.spins))
        flips.append(state.flips - prev)
    spins = state.spins
    return RunResult(
        spins=spins,
        energy=hamiltonian(inst, spins),
        initial_energy=energies[0],
        flips=state.flips,
        voltages=np.array(state.v),
        energy_trace=np.array(energies, dtype=np.int64),
        flip_trace=np.array(flips, dtype=np.int32),
    )


def descent_violations(result: RunResult) -> tuple[int, int]:
    """Count (single-flip steps that raised H, whether final H exceeds initial H)."""
    if result.energy_trace is None:
        raise ValueError("run was executed without tracing")
    dH = np.diff(result.energy_trace)
    single = result.flip_trace == 1
    return int(np.count_nonzero(dH[single] > 0)), int(result.energy > result.initial_energy)
