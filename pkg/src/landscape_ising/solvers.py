"""Software oracles for best-known energies: exhaustive search and Tabu search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import ProblemInstance, hamiltonian

BRUTE_FORCE_MAX_N = 24


@dataclass(frozen=True)
class OracleResult:
    best_energy: int
    best_config: np.ndarray
    method: str
    iterations_used: int
    history: np.ndarray | None = None  # incumbent energy per iteration, per restart

    @property
    def bitstring(self) -> str:
        """``'1'`` for spin +1, ``'0'`` for spin -1, node 0 first."""
        return "".join("1" if s > 0 else "0" for s in self.best_config)


@dataclass(frozen=True)
class TabuParams:
    tenure: int = 8
    max_iterations: int = 5000
    restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.tenure < 1:
            raise ValueError("tenure must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")

    def validate_for(self, n: int) -> None:
        if self.max_iterations < n:
            raise ValueError(f"max_iterations ({self.max_iterations}) must be at least n ({n})")

    @classmethod
    def generous(cls, n: int, seed: int = 0) -> "TabuParams":
        """Budget used for best-known energies of instances too big to enumerate."""
        return cls(tenure=max(1, n // 4), max_iterations=100 * n, restarts=20, seed=seed)


def _checked(inst: ProblemInstance, res: OracleResult) -> OracleResult:
    if hamiltonian(inst, res.best_config) != res.best_energy:
        raise AssertionError(f"{res.method} oracle returned an inconsistent configuration")
    return res


def brute_force(inst: ProblemInstance) -> OracleResult:
    n = inst.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(
            f"brute force is limited to n <= {BRUTE_FORCE_MAX_N} (got n={n}); use tabu search"
        )
    if n == 0:
        return OracleResult(0, np.zeros(0, dtype=np.int64), "brute", 1)
    best, config, visited = _kernels.brute_force_kernel(np.ascontiguousarray(inst.J))
    return _checked(inst, OracleResult(int(best), config, "brute", int(visited)))


def tabu_search(inst: ProblemInstance, params: TabuParams, keep_history: bool = False) -> OracleResult:
    n = inst.n
    params.validate_for(n)
    rng = np.random.default_rng(params.seed)
    starts = np.where(rng.random((params.restarts, n)) < 0.5, -1, 1).astype(np.int64)
    best_H, best_sig, history = _kernels.tabu_kernel(
        np.ascontiguousarray(inst.J), starts, params.tenure, params.max_iterations
    )
    # argmin picks the lowest restart index among equal energies
    r = int(np.argmin(best_H))
    return _checked(
        inst,
        OracleResult(
            int(best_H[r]),
            best_sig[r].copy(),
            "tabu",
            params.restarts * params.max_iterations,
            history if keep_history else None,
        ),
    )


def best_known(inst: ProblemInstance, seed: int = 0) -> OracleResult:
    """Exact optimum when enumerable, otherwise generous-budget Tabu."""
    if inst.n <= BRUTE_FORCE_MAX_N:
        return brute_force(inst)
    return tabu_search(inst, TabuParams.generous(inst.n, seed))
