"""Regression targets, the collocation grid and deterministic rate coding."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

R_MIN = 0.1


class FunctionKind(str, enum.Enum):
    SQUARE = "square"
    DISCONTINUITY = "discontinuity"
    SINE = "sine"


@dataclass(frozen=True)
class TargetFunction:
    kind: FunctionKind
    k: float = 1.2  # only used by SINE

    def __post_init__(self):
        object.__setattr__(self, "kind", FunctionKind(self.kind))

    def __call__(self, x):
        return evaluate_target(self, x)

    @property
    def name(self) -> str:
        return self.kind.value


def evaluate_target(fn: TargetFunction, x):
    x = np.asarray(x, dtype=float)
    if fn.kind is FunctionKind.SQUARE:
        y = x ** 2
    elif fn.kind is FunctionKind.DISCONTINUITY:
        y = np.where(x <= 0.0, 1.0, 2.0)
    else:
        y = np.sin(fn.k * x) / fn.k ** 2
    return y if y.ndim else float(y)


@dataclass(frozen=True)
class Grid:
    n_x: int = 100
    x_min: float = -1.0
    x_max: float = 1.0
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_x < 2:
            raise ValueError("grid needs at least two points")
        if not self.x_min < 0.0 < self.x_max:
            raise ValueError("grid domain must satisfy x_min < 0 < x_max")
        pts = np.linspace(self.x_min, self.x_max, self.n_x)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 0.1
    seed: Optional[int] = 0
    enabled: bool = False

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def sample_targets(fn: TargetFunction, grid: Grid, noise: NoiseSpec = NoiseSpec(),
                   rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Target values on the grid, optionally with additive Gaussian noise.

    ``rng`` overrides the generator seeded from ``noise.seed``.
    """
    y = np.asarray(evaluate_target(fn, grid.points), dtype=float).copy()
    if noise.enabled and noise.sigma > 0:
        rng = rng if rng is not None else np.random.default_rng(noise.seed)
        y += rng.normal(0.0, noise.sigma, size=y.shape)
    return y


@dataclass(frozen=True)
class SpikeRaster:
    """Binary (n_x, n_t) spike matrix, one row per collocation point."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2 or 0 in data.shape:
            raise ValueError(f"raster must be a non-empty 2-d array, got shape {data.shape}")
        if not np.isin(data, (0, 1)).all():
            raise ValueError("raster entries must be 0 or 1")
        data = data.astype(bool)
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def n_x(self) -> int:
        return self.data.shape[0]

    @property
    def n_t(self) -> int:
        return self.data.shape[1]

    def row_counts(self) -> np.ndarray:
        return self.data.sum(axis=1)

    def total(self) -> int:
        return int(self.data.sum())


@dataclass(frozen=True)
class EncodedInput:
    raster: SpikeRaster
    grid: Grid

    @property
    def n_t(self) -> int:
        return self.raster.n_t


def _round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def encode_spike_train(x: float, grid: Grid, n_t: int = 150) -> np.ndarray:
    """Rate-code ``x`` into ``n_t`` binary slots.

    The rate grows linearly from ``R_MIN`` at ``x_min`` to 1 at ``x_max``;
    ``s = round(rate * n_t)`` spikes are spread as evenly as possible by an
    integer accumulator.
    """
    if n_t < 1:
        raise ValueError("n_t must be >= 1")
    if not grid.x_min <= x <= grid.x_max:
        raise ValueError(f"x={x} outside the grid domain [{grid.x_min}, {grid.x_max}]")
    rate = R_MIN + (1.0 - R_MIN) * (x - grid.x_min) / (grid.x_max - grid.x_min)
    s = min(_round_half_away(rate * n_t), n_t)
    t = np.arange(n_t)
    return ((t + 1) * s) // n_t > (t * s) // n_t


def encode_all(grid: Grid, n_t: int = 150) -> EncodedInput:
    rows = np.stack([encode_spike_train(x, grid, n_t) for x in grid.points])
    return EncodedInput(SpikeRaster(rows), grid)


def format_raster(encoded: EncodedInput) -> str:
    g = encoded.grid
    lines = [f"{encoded.raster.n_x} {encoded.raster.n_t} {g.x_min!r} {g.x_max!r}"]
    lines += ["".join("1" if b else "0" for b in row) for row in encoded.raster.data]
    return "\n".join(lines) + "\n"


def write_raster(encoded: EncodedInput, path) -> Path:
    path = Path(path)
    path.write_text(format_raster(encoded))
    return path


def read_raster(path) -> EncodedInput:
    lines = Path(path).read_text().split()
    n_x, n_t = int(lines[0]), int(lines[1])
    grid = Grid(n_x, float(lines[2]), float(lines[3]))
    rows = np.array([[c == "1" for c in ln] for ln in lines[4:4 + n_x]])
    if rows.shape != (n_x, n_t):
        raise ValueError(f"raster body has shape {rows.shape}, header says {(n_x, n_t)}")
    return EncodedInput(SpikeRaster(rows), grid)
