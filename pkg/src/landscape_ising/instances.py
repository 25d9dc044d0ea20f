"""Random QUBO ensembles and the line-oriented instance file format.

File format::

    # comment lines start with '#'; '# key=value' lines carry metadata
    n m
    i j w        (m lines, 0 <= i < j < n, w integer in [-15, 15] without 0)
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import COEFF_MAX, MAX_SPINS, ProblemInstance


class InstanceFormatError(ValueError):
    """Malformed instance text; ``kind`` names the failed check."""

    def __init__(self, kind: str, message: str, line: int | None = None):
        self.kind = kind
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{kind}: {where}{message}")


@dataclass(frozen=True)
class EnsembleSpec:
    sizes: tuple[int, ...] = (16, 32, 48, 64)
    densities: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)
    instances_per_cell: int = 20
    coeff_max: int = COEFF_MAX
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        object.__setattr__(self, "densities", tuple(float(d) for d in self.densities))
        for n in self.sizes:
            _check_size(n)
        for d in self.densities:
            _check_density(d)
        _check_coeff_max(self.coeff_max)
        if self.instances_per_cell < 1:
            raise ValueError("instances_per_cell must be positive")

    def cells(self) -> Iterator[tuple[int, float, int]]:
        """``(n, density, index)`` in canonical order: size, then density, then index."""
        for n in self.sizes:
            for d in self.densities:
                for k in range(self.instances_per_cell):
                    yield n, d, k

    def instance(self, n: int, density: float, index: int) -> ProblemInstance:
        seed = instance_seed(self.base_seed, n, density, index)
        return generate_random_qubo(n, density, self.coeff_max, seed)


def _check_size(n: int) -> None:
    if not 2 <= n <= MAX_SPINS:
        raise ValueError(f"spin count must be in [2, {MAX_SPINS}], got {n}")


def _check_density(d: float) -> None:
    if not 0 < d <= 1:
        raise ValueError(f"density must be in (0, 1], got {d}")


def _check_coeff_max(c: int) -> None:
    if not 1 <= c <= COEFF_MAX:
        raise ValueError(f"coeff_max must be in [1, {COEFF_MAX}], got {c}")


def instance_seed(base_seed: int, n: int, density: float, index: int) -> int:
    """Stable 63-bit sub-seed: SHA-256 of ``"base:n:density:index"``.

    Density is rendered with six decimals so 0.1 and 0.10000000001 collide
    on purpose.  Adding grid cells never changes existing sub-seeds.
    """
    key = f"{int(base_seed)}:{int(n)}:{density:.6f}:{int(index)}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


def generate_random_qubo(n: int, density: float, coeff_max: int = COEFF_MAX, seed: int = 0) -> ProblemInstance:
    _check_size(n)
    _check_density(density)
    _check_coeff_max(coeff_max)
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    m = iu.size
    keep = rng.random(m) < density
    mag = rng.integers(1, coeff_max + 1, size=m)
    sign = np.where(rng.random(m) < 0.5, -1, 1)
    J = np.zeros((n, n), dtype=np.int64)
    J[iu[keep], ju[keep]] = (mag * sign)[keep]
    J = J + J.T
    return ProblemInstance(J, seed=seed, target_density=density, label=instance_name(n, density, seed))


def instance_name(n: int, density: float, seed: int) -> str:
    return f"q{n}_d{density:g}_s{seed}"


def write_instance(inst: ProblemInstance) -> str:
    lines = []
    if inst.label:
        lines.append(f"# label={inst.label}")
    if inst.seed is not None:
        lines.append(f"# seed={inst.seed}")
    if inst.target_density is not None:
        lines.append(f"# target_density={inst.target_density!r}")
    edges = inst.edges()
    lines.append(f"{inst.n} {len(edges)}")
    lines.extend(f"{i} {j} {w}" for i, j, w in edges)
    return "\n".join(lines) + "\n"


def _int_fields(text: str, count: int, kind: str, lineno: int) -> list[int]:
    parts = text.split()
    if len(parts) != count:
        raise InstanceFormatError(kind, f"expected {count} fields, got {len(parts)}", lineno)
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise InstanceFormatError(kind, f"non-integer field in {text!r}", lineno) from None


def read_instance(text: str) -> ProblemInstance:
    meta: dict[str, str] = {}
    data: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        data.append((lineno, line))
    if not data:
        raise InstanceFormatError("header", "missing 'n m' header line")

    lineno, header = data[0]
    n, m = _int_fields(header, 2, "header", lineno)
    if not 1 <= n <= MAX_SPINS:
        raise InstanceFormatError("header", f"spin count {n} outside 1..{MAX_SPINS}", lineno)
    if m < 0 or m > n * (n - 1) // 2:
        raise InstanceFormatError("header", f"edge count {m} impossible for n={n}", lineno)
    if len(data) - 1 != m:
        raise InstanceFormatError("count", f"header declares {m} edges, found {len(data) - 1}")

    J = np.zeros((n, n), dtype=np.int64)
    for lineno, line in data[1:]:
        i, j, w = _int_fields(line, 3, "edge", lineno)
        if i == j:
            raise InstanceFormatError("self_loop", f"self-loop on node {i}", lineno)
        if not (0 <= i < n and 0 <= j < n):
            raise InstanceFormatError("index", f"node index out of range in ({i}, {j})", lineno)
        if not i < j:
            raise InstanceFormatError("index", f"edge ({i}, {j}) must have i < j", lineno)
        if w == 0 or abs(w) > COEFF_MAX:
            raise InstanceFormatError("range", f"weight {w} outside [-{COEFF_MAX}, {COEFF_MAX}] \\ {{0}}", lineno)
        if J[i, j]:
            raise InstanceFormatError("duplicate", f"duplicate edge ({i}, {j})", lineno)
        J[i, j] = J[j, i] = w

    seed = int(meta["seed"]) if "seed" in meta else None
    target = float(meta["target_density"]) if "target_density" in meta else None
    return ProblemInstance(J, seed=seed, target_density=target, label=meta.get("label", ""))


def load_instance(path) -> ProblemInstance:
    with open(path, encoding="ascii") as fh:
        return read_instance(fh.read())


def save_instance(inst: ProblemInstance, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(write_instance(inst))

