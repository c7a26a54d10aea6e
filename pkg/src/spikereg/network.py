"""Single-membrane, single-synapse spiking regression pipeline."""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .encode import EncodedInput, Grid, NoiseSpec, SpikeRaster, TargetFunction, encode_all, sample_targets
from .models import ModelSpec
from .solvers import SimulationConfig, SolverKind, simulate_population


class IllConditionedError(np.linalg.LinAlgError):
    """The unregularised normal equations of the synapse fit are singular."""


class TrainMethod(str, enum.Enum):
    RIDGE = "ridge"
    GRADIENT_DESCENT = "gd"


@dataclass(frozen=True)
class TrainConfig:
    method: TrainMethod = TrainMethod.RIDGE
    ridge_lambda: float = 1e-6
    learning_rate: float = 1e-3
    epochs: int = 2000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "method", TrainMethod(self.method))
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass(frozen=True)
class SynapseWeights:
    w: np.ndarray
    bias: float

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias)):
            raise ValueError("synapse weights must be finite")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "bias", float(self.bias))


@dataclass
class RegressionResult:
    predictions: np.ndarray
    targets: np.ndarray
    exact: np.ndarray
    l2_sum: float
    l2_relative: float
    output_spike_count: int
    sim_time: float
    train_time: float
    weights: Optional[SynapseWeights] = field(default=None, repr=False)
    output: Optional[SpikeRaster] = field(default=None, repr=False)


def _raster_data(raster) -> np.ndarray:
    return raster.data if isinstance(raster, SpikeRaster) else np.asarray(raster)


def membrane_forward(spec: ModelSpec, solver, encoded: EncodedInput,
                     config: SimulationConfig) -> tuple[SpikeRaster, int]:
    """Run every input row through its own membrane neuron.

    Returns the output raster and the total output spike count.
    """
    raster = encoded.raster if isinstance(encoded, EncodedInput) else encoded
    if raster.n_t != config.n_steps:
        raise ValueError(f"input has n_t={raster.n_t} but config.n_steps={config.n_steps}")
    out = SpikeRaster(simulate_population(spec, solver, raster.data, config))
    return out, out.total()


def _design(spikes: np.ndarray) -> np.ndarray:
    return np.hstack([spikes.astype(float), np.ones((spikes.shape[0], 1))])


def train_synapse(output, targets, cfg: TrainConfig = TrainConfig()) -> SynapseWeights:
    """Fit the linear readout ``y ~ w . s + bias`` over output spike trains.

    The ridge penalty applies to ``w`` only.  Gradient descent runs
    ``epochs`` full-batch steps on the same objective (halved) from zero.
    """
    s = _raster_data(output).astype(float)
    y = np.asarray(targets, dtype=float)
    if y.shape != (s.shape[0],):
        raise ValueError(f"targets must have length {s.shape[0]}, got {y.shape}")
    n_t = s.shape[1]

    if cfg.method is TrainMethod.RIDGE:
        # centring eliminates the unpenalised bias exactly
        s_mean, y_mean = s.mean(axis=0), y.mean()
        sc, yc = s - s_mean, y - y_mean
        gram = sc.T @ sc + cfg.ridge_lambda * np.eye(n_t)
        rhs = sc.T @ yc
        if cfg.ridge_lambda == 0:
            if np.linalg.matrix_rank(gram) < n_t:
                raise IllConditionedError("singular normal equations at ridge_lambda = 0")
        try:
            w = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError as exc:
            raise IllConditionedError(str(exc)) from exc
        return SynapseWeights(w, y_mean - s_mean @ w)

    x = _design(s)
    theta = np.zeros(n_t + 1)
    penalty = np.full(n_t + 1, cfg.ridge_lambda)
    penalty[-1] = 0.0
    # gradient of half the ridge objective, 0.5 * (||X theta - y||^2 + lambda ||w||^2)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(cfg.epochs):
            grad = x.T @ (x @ theta - y) + penalty * theta
            theta -= cfg.learning_rate * grad
            if not np.all(np.isfinite(theta)):
                raise FloatingPointError("gradient descent diverged; lower learning_rate")
    return SynapseWeights(theta[:-1], theta[-1])


def predict(weights: SynapseWeights, output) -> np.ndarray:
    s = _raster_data(output)
    if s.shape[1] != weights.w.shape[0]:
        raise ValueError(f"weights have length {weights.w.shape[0]}, raster has n_t={s.shape[1]}")
    return s.astype(float) @ weights.w + weights.bias


def l2_error(y_pred, y_exact) -> tuple[float, float]:
    """Sum of squared errors and its normalised square root.

    Raises ``ValueError`` on length mismatch, or if the exact vector is
    identically zero (the relative error is then undefined).
    """
    yp = np.asarray(y_pred, dtype=float)
    ye = np.asarray(y_exact, dtype=float)
    if yp.shape != ye.shape:
        raise ValueError(f"length mismatch: {yp.shape} vs {ye.shape}")
    l2_sum = float(np.sum((yp - ye) ** 2))
    norm = float(np.sum(ye ** 2))
    if norm == 0.0:
        raise ValueError("relative L2 error undefined for an all-zero exact vector")
    return l2_sum, float(np.sqrt(l2_sum / norm))


def run_regression(spec: ModelSpec, solver, fn: TargetFunction, grid: Grid = Grid(),
                   noise: NoiseSpec = NoiseSpec(), sim_cfg: SimulationConfig = SimulationConfig(),
                   train_cfg: TrainConfig = TrainConfig(),
                   rng: Optional[np.random.Generator] = None) -> RegressionResult:
    """Encode, simulate, fit and score one (model, solver, function) cell.

    Training uses the (possibly noisy) targets; the error is measured
    against the exact function values.
    """
    t0 = time.perf_counter()
    encoded = encode_all(grid, sim_cfg.n_steps)
    output, total = membrane_forward(spec, SolverKind(solver), encoded, sim_cfg)
    sim_time = time.perf_counter() - t0

    exact = sample_targets(fn, grid, NoiseSpec(enabled=False))
    targets = sample_targets(fn, grid, noise, rng=rng)

    t0 = time.perf_counter()
    weights = train_synapse(output, targets, train_cfg)
    train_time = time.perf_counter() - t0

    pred = predict(weights, output)
    l2_sum, l2_rel = l2_error(pred, exact)
    return RegressionResult(
        predictions=pred, targets=targets, exact=exact, l2_sum=l2_sum, l2_relative=l2_rel,
        output_spike_count=total, sim_time=sim_time, train_time=train_time,
        weights=weights, output=output,
    )


def format_predictions(x, y) -> str:
    return "".join(f"{float(a)!r}, {float(b)!r}\n" for a, b in zip(np.asarray(x), np.asarray(y)))
