"""Problem representation and energy evaluation for bias-free Ising instances.

Energies are in integer coupling units: ``H(s) = -sum_{i<j} J[i, j] s_i s_j``.
Couplings are restricted to the 31 levels ``-15..+15`` that the machine's
4-bit magnitude + sign DACs can program.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

COEFF_MAX = 15
COEFF_LEVELS = 2 * COEFF_MAX + 1
MAX_SPINS = 64


@dataclass(frozen=True)
class ProblemInstance:
    """Symmetric integer coupling matrix plus generation metadata.

    ``target_density`` is the inclusion probability the generator was asked
    for; :attr:`density` is the realized fraction of nonzero pairs.
    """

    J: np.ndarray
    seed: int | None = None
    target_density: float | None = None
    label: str = ""

    def __post_init__(self):
        J = np.array(self.J, copy=True)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ValueError(f"coupling matrix must be square, got shape {J.shape}")
        if J.size and not np.all(np.isfinite(J)):
            raise ValueError("coupling matrix has non-finite entries")
        if J.size and not np.array_equal(J, np.round(J)):
            raise ValueError("coupling matrix must be integer valued")
        J = J.astype(np.int64)
        if np.any(np.diag(J) != 0):
            raise ValueError("coupling matrix must have a zero diagonal")
        if not np.array_equal(J, J.T):
            raise ValueError("coupling matrix must be symmetric")
        if np.any(np.abs(J) > COEFF_MAX):
            raise ValueError(f"coupling coefficients must lie in [-{COEFF_MAX}, {COEFF_MAX}]")
        J.flags.writeable = False
        object.__setattr__(self, "J", J)

    @property
    def n(self) -> int:
        return self.J.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.J, 1)))

    @property
    def density(self) -> float:
        pairs = self.n * (self.n - 1) // 2
        return self.n_edges / pairs if pairs else 0.0

    def edges(self) -> list[tuple[int, int, int]]:
        """Nonzero upper-triangular couplings as ``(i, j, J_ij)``, row-major."""
        iu, ju = np.nonzero(np.triu(self.J, 1))
        return [(int(i), int(j), int(self.J[i, j])) for i, j in zip(iu, ju)]

    def __eq__(self, other):
        if not isinstance(other, ProblemInstance):
            return NotImplemented
        return (
            np.array_equal(self.J, other.J)
            and self.seed == other.seed
            and self.target_density == other.target_density
            and self.label == other.label
        )

    def __hash__(self):
        return hash((self.J.tobytes(), self.n, self.seed, self.target_density, self.label))


@dataclass(frozen=True)
class MaxCutGraph:
    n: int
    edges: tuple[tuple[int, int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        edges = tuple((int(i), int(j), int(w)) for i, j, w in self.edges)
        seen = set()
        for i, j, _ in edges:
            if not 0 <= i < j < self.n:
                raise ValueError(f"edge ({i}, {j}) must satisfy 0 <= i < j < {self.n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
        object.__setattr__(self, "edges", edges)

    @property
    def total_weight(self) -> int:
        return sum(w for _, _, w in self.edges)


def as_spins(s: Iterable[int], n: int | None = None) -> np.ndarray:
    """Validate a spin vector and return it as an int64 array of +-1."""
    arr = np.asarray(list(s) if not isinstance(s, np.ndarray) else s)
    if arr.ndim != 1:
        raise ValueError("spin vector must be one-dimensional")
    if not np.all((arr == 1) | (arr == -1)):
        raise ValueError("spin entries must be exactly -1 or +1")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"spin vector has length {arr.shape[0]}, expected {n}")
    return arr.astype(np.int64)


def hamiltonian(inst: ProblemInstance, s: Sequence[int]) -> int:
    sigma = as_spins(s, inst.n)
    # full quadratic form counts every pair twice
    return int(-(sigma @ inst.J @ sigma) // 2)


def local_field(inst: ProblemInstance, s: Sequence[int], i: int) -> int:
    sigma = as_spins(s, inst.n)
    if not 0 <= i < inst.n:
        raise IndexError(f"spin index {i} out of range for n={inst.n}")
    return int(inst.J[i] @ sigma)


def flip_delta(inst: ProblemInstance, s: Sequence[int], k: int) -> int:
    """Energy change caused by flipping spin ``k``: ``2 * s_k * field_k``."""
    sigma = as_spins(s, inst.n)
    return 2 * int(sigma[k]) * local_field(inst, sigma, k)


def quantize_coeff(x: float) -> int:
    """Round to the nearest programmable level, ties away from zero, then clamp."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot quantize non-finite value {x!r}")
    level = math.floor(abs(x) + 0.5)
    level = min(level, COEFF_MAX)
    return int(math.copysign(level, x)) if level else 0


def maxcut_to_ising(g: MaxCutGraph) -> ProblemInstance:
    J = np.zeros((g.n, g.n), dtype=np.int64)
    for i, j, w in g.edges:
        if abs(w) > COEFF_MAX:
            raise ValueError(
                f"edge ({i}, {j}) weight {w} exceeds the representable range; "
                "quantize weights with quantize_coeff first"
            )
        J[i, j] = J[j, i] = -w
    return ProblemInstance(J, label="maxcut")


def cut_value(g: MaxCutGraph, s: Sequence[int]) -> int:
    sigma = as_spins(s, g.n)
    return sum(w for i, j, w in g.edges if sigma[i] != sigma[j])


def coupling_bound(inst: ProblemInstance) -> int:
    """Upper bound on ``|H|``: the sum of absolute couplings."""
    return int(np.abs(np.triu(inst.J, 1)).sum())
