"""Success judgment, time/energy-to-solution and normalized figures of merit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

TARGET_PROBABILITY = 0.99
DEFAULT_POWER = 31.6e-3  # W


@dataclass(frozen=True)
class RunStats:
    runs: int
    successes: int
    best_H_found: int
    oracle_H: int

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("at least one run is required")
        if not 0 <= self.successes <= self.runs:
            raise ValueError("successes must lie in [0, runs]")

    @property
    def p_suc(self) -> float:
        return self.successes / self.runs


@dataclass(frozen=True)
class MeritInputs:
    power: float
    anneal_time: float
    coeff_levels: int
    n_spins: int
    interactions_per_spin: int
    directionality: int

    def __post_init__(self):
        if min(self.power, self.anneal_time, self.coeff_levels, self.n_spins, self.interactions_per_spin) <= 0:
            raise ValueError("figure-of-merit inputs must be positive")
        if self.directionality not in (1, 2):
            raise ValueError("directionality is 1 (undirected) or 2 (directed)")


@dataclass(frozen=True)
class InstanceStats:
    instance_id: str
    stats: RunStats
    tts: float
    ets: float


@dataclass(frozen=True)
class TtsSummary:
    mean: float
    median: float
    unsolved: int  # instances with zero successes (infinite TTS)
    cumulative: tuple[tuple[float, int], ...]  # (TTS, problems solved within it), ascending


@dataclass(frozen=True)
class BatchStats:
    rows: tuple[InstanceStats, ...]
    summary: TtsSummary

    @property
    def mean_tts(self) -> float:
        return self.summary.mean

    @property
    def median_tts(self) -> float:
        return self.summary.median


def is_success(H: int, H_best: int) -> bool:
    """Whether ``H`` reaches at least 99% of the best-known energy.

    For the usual negative ``H_best`` this is ``H <= 0.99 * H_best``; a zero
    best demands exactly zero, a positive best allows 1% relative slack.
    Integer arithmetic avoids rounding at the threshold.
    """
    if H_best < 0:
        return 100 * H <= 99 * H_best
    if H_best == 0:
        return H <= 0
    return 99 * H <= 100 * H_best


def tts(tau: float, p_suc: float) -> float:
    if not 0 <= p_suc <= 1:
        raise ValueError(f"success probability must lie in [0, 1], got {p_suc}")
    if p_suc == 0:
        return math.inf
    if p_suc >= TARGET_PROBABILITY:
        return tau
    return tau * math.log(1 - TARGET_PROBABILITY) / math.log1p(-p_suc)


def ets(power: float, tts_value: float) -> float:
    if not math.isfinite(power):
        raise ValueError("power must be finite")
    if math.isinf(tts_value):
        return math.inf if power > 0 else 0.0
    return power * tts_value


def n_edges_all_to_all(n_spins: int, interactions: int) -> float:
    return n_spins * interactions / 2


def normalized_ets(ets_value: float, levels: int, n_spins: int, interactions: int) -> float:
    if levels < 2:
        raise ValueError("at least two coefficient levels are required")
    denom = math.log2(levels) * n_edges_all_to_all(n_spins, interactions)
    if denom <= 0:
        raise ValueError("edge count must be positive")
    return ets_value / denom


def normalized_spin_area(
    core_area: float, n_spins: int, levels: int, directionality: int, interactions: int
) -> float:
    if n_spins <= 0 or interactions <= 0 or levels < 2:
        raise ValueError("degenerate normalization inputs")
    if directionality not in (1, 2):
        raise ValueError("directionality is 1 (undirected) or 2 (directed)")
    return (core_area / n_spins) / (math.log2(levels) * directionality * interactions)


def figures_of_merit(inputs: MeritInputs, tts_value: float) -> dict[str, float]:
    e = ets(inputs.power, tts_value)
    return {
        "tts": tts_value,
        "ets": e,
        "normalized_ets": normalized_ets(e, inputs.coeff_levels, inputs.n_spins, inputs.interactions_per_spin),
    }


def run_stats(energies: Sequence[int], oracle_H: int) -> RunStats:
    energies = [int(h) for h in energies]
    if not energies:
        raise ValueError("no run energies given")
    successes = sum(is_success(h, oracle_H) for h in energies)
    return RunStats(len(energies), successes, min(energies), int(oracle_H))


def summarize_tts(values: Sequence[float]) -> TtsSummary:
    """Mean, median and problems-solved curve over the finite TTS values.

    Instances that never succeed have infinite TTS; they are counted in
    ``unsolved`` and left out of the statistics, like problems that never
    appear on a problems-solved-versus-TTS curve.
    """
    finite = sorted(float(t) for t in values if math.isfinite(t))
    if not finite:
        return TtsSummary(math.nan, math.nan, len(values), ())
    return TtsSummary(
        math.fsum(finite) / len(finite),
        float(np.median(finite)),
        len(values) - len(finite),
        tuple((t, k + 1) for k, t in enumerate(finite)),
    )


def aggregate_batch(
    energies: Mapping[str, Sequence[int]],
    oracle_H: Mapping[str, int],
    tau: float,
    power: float = DEFAULT_POWER,
) -> BatchStats:
    """Per-instance SR/TTS/ETS plus the TTS distribution across instances."""
    if not energies:
        raise ValueError("no instances given")
    rows = []
    for key in energies:
        stats = run_stats(energies[key], oracle_H[key])
        t = tts(tau, stats.p_suc)
        rows.append(InstanceStats(key, stats, t, ets(power, t)))
    return BatchStats(tuple(rows), summarize_tts([r.tts for r in rows]))
