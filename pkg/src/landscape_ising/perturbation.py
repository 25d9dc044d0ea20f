"""Continuous column-wise coupling refresh with DAC gating and leakage.

The coupling array is refreshed one column per dwell (80 MHz -> 12.5 ns).
While the DAC biases are gated off, the selected column is written to zero
instead of its programmed value; it stays zero until a later sweep selects
it with the DACs enabled.  Between refreshes every column's stored bias
decays exponentially with a shared time constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ProblemInstance

# relative slack for comparing event times that are multiples of dt / dwell
_TIME_EPS = 1e-9


@dataclass(frozen=True)
class PerturbationSchedule:
    n_columns: int = 64
    column_dwell: float = 12.5e-9
    gate_period: float = 800e-9
    gate_off_fraction: float = 0.25
    quiet_tail: float = 800e-9
    leak_tau: float = 50e-6
    enabled: bool = True

    def __post_init__(self):
        if self.n_columns < 1:
            raise ValueError("n_columns must be positive")
        if not self.column_dwell > 0:
            raise ValueError("column_dwell must be positive")
        if not 0 <= self.gate_off_fraction < 1:
            raise ValueError("gate_off_fraction must lie in [0, 1)")
        if not self.leak_tau > 0:
            raise ValueError("leak_tau must be positive (use math.inf for no leakage)")
        if self.gating_active:
            if not self.gate_period > 0:
                raise ValueError("gate_period must be positive")
            if self.quiet_tail < self.sweep_time * (1 - _TIME_EPS):
                raise ValueError(
                    f"quiet_tail ({self.quiet_tail:g} s) must cover at least one full "
                    f"sweep ({self.sweep_time:g} s) so every column is restored"
                )

    @property
    def sweep_time(self) -> float:
        return self.n_columns * self.column_dwell

    @property
    def gating_active(self) -> bool:
        return self.enabled and self.gate_off_fraction > 0

    def for_size(self, n: int) -> "PerturbationSchedule":
        """Same timing parameters, resized to an ``n``-column array."""
        return self if n == self.n_columns else replace(self, n_columns=n)


@dataclass
class ColumnStatus:
    """Per-column refresh bookkeeping private to one run."""

    last_refresh: np.ndarray
    zeroed: np.ndarray

    @classmethod
    def fresh(cls, n: int, t: float = 0.0) -> "ColumnStatus":
        """All columns just programmed at time ``t`` (end of the initial write)."""
        return cls(np.full(n, float(t)), np.zeros(n, dtype=bool))

    def copy(self) -> "ColumnStatus":
        return ColumnStatus(self.last_refresh.copy(), self.zeroed.copy())


def selected_column(t: float, sched: PerturbationSchedule) -> int:
    if t < 0:
        raise ValueError("time must be non-negative")
    k = math.floor(t / sched.column_dwell * (1 + _TIME_EPS))
    return k % sched.n_columns


def dac_enabled(t: float, sched: PerturbationSchedule, anneal_time: float) -> bool:
    if not sched.gating_active:
        return True
    if t >= anneal_time - sched.quiet_tail - _TIME_EPS * anneal_time:
        return True
    phase = math.fmod(t, sched.gate_period)
    if sched.gate_period - phase <= _TIME_EPS * sched.gate_period:
        phase = 0.0
    off_start = (1 - sched.gate_off_fraction) * sched.gate_period
    return phase < off_start * (1 - _TIME_EPS)


def column_events(
    t_from: float, t_to: float, sched: PerturbationSchedule
) -> list[tuple[float, int]]:
    """Column-selection instants in ``(t_from, t_to]`` as ``(time, column)``."""
    dwell = sched.column_dwell
    k_lo = math.floor(t_from / dwell * (1 + _TIME_EPS) + _TIME_EPS) + 1
    k_hi = math.floor(t_to / dwell * (1 + _TIME_EPS) + _TIME_EPS)
    return [(k * dwell, k % sched.n_columns) for k in range(k_lo, k_hi + 1)]


def advance_schedule(
    status: ColumnStatus,
    t_from: float,
    t_to: float,
    sched: PerturbationSchedule,
    anneal_time: float,
) -> ColumnStatus:
    """Apply every refresh or disable event in ``(t_from, t_to]``."""
    if t_to < t_from:
        raise ValueError("t_to must not precede t_from")
    if t_to - t_from > sched.column_dwell * (1 + _TIME_EPS):
        raise ValueError(
            f"step of {t_to - t_from:g} s spans more than one column dwell "
            f"({sched.column_dwell:g} s)"
        )
    out = status.copy()
    for t_event, col in column_events(t_from, t_to, sched):
        if dac_enabled(t_event, sched, anneal_time):
            out.last_refresh[col] = t_event
            out.zeroed[col] = False
        else:
            out.zeroed[col] = True
    return out


def leak_factor(dt_since_refresh: float, leak_tau: float) -> float:
    if dt_since_refresh < 0:
        raise ValueError("elapsed time since refresh must be non-negative")
    if math.isinf(leak_tau):
        return 1.0
    return math.exp(-dt_since_refresh / leak_tau)


def column_scales(status: ColumnStatus, t: float, sched: PerturbationSchedule) -> np.ndarray:
    """Multiplier applied to each column of J: 0 if zeroed, else its leak factor."""
    elapsed = t - status.last_refresh
    if np.any(elapsed < -_TIME_EPS * max(t, 1e-12)):
        raise ValueError("a column refresh time lies in the future")
    if math.isinf(sched.leak_tau):
        scale = np.ones_like(elapsed)
    else:
        scale = np.exp(-np.maximum(elapsed, 0.0) / sched.leak_tau)
    scale[status.zeroed] = 0.0
    return scale


def effective_matrix(
    inst: ProblemInstance, status: ColumnStatus, t: float, sched: PerturbationSchedule
) -> np.ndarray:
    """Coupling matrix seen by the nodes at time ``t``.

    Scaling is per column, so the result is generally asymmetric while any
    column is zeroed or staler than the others.
    """
    if status.last_refresh.shape[0] != inst.n:
        raise ValueError("column status does not match the instance size")
    return inst.J * column_scales(status, t, sched)[None, :]


def event_table(sched: PerturbationSchedule, anneal_time: float, dt: float):
    """Precompute the run's column events on the integration grid.

    Returns ``(steps, columns, enabled)`` where event ``e`` fires at the end of
    integration step ``steps[e] - 1``, i.e. at time ``steps[e] * dt``.  The
    table depends only on the schedule and timing, never on the instance.
    """
    steps_per_dwell = sched.column_dwell / dt
    per = round(steps_per_dwell)
    if per < 1 or abs(per - steps_per_dwell) > 1e-6 * steps_per_dwell:
        raise ValueError(
            f"dt ({dt:g} s) must divide the column dwell ({sched.column_dwell:g} s) evenly"
        )
    n_steps = n_integration_steps(anneal_time, dt)
    ks = np.arange(1, n_steps // per + 1)
    steps = ks * per
    columns = ks % sched.n_columns
    enabled = np.array([dac_enabled(k * sched.column_dwell, sched, anneal_time) for k in ks], dtype=bool)
    return steps.astype(np.int64), columns.astype(np.int64), enabled


def n_integration_steps(anneal_time: float, dt: float) -> int:
    steps = anneal_time / dt
    n = round(steps)
    if abs(n - steps) > 1e-6 * steps:
        raise ValueError(f"dt ({dt:g} s) must divide anneal_time ({anneal_time:g} s) evenly")
    return int(n)
