"""Fixed-step integration of the membrane models and spike-driven simulation."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .models import ModelKind, ModelSpec, apply_threshold, clamp_state, derivative


class SolverKind(str, enum.Enum):
    EULER = "euler"
    RK4 = "rk4"


# current injected while an input spike is present
DEFAULT_AMPLITUDE = {
    ModelKind.LIF: 7.0,
    ModelKind.FHN: 0.5,
    ModelKind.IZH: 10.0,
    ModelKind.HH: 5.0,
}


@dataclass(frozen=True)
class SimulationConfig:
    dt: float = 0.1
    n_steps: int = 150
    input_amplitude: Optional[float] = None  # None -> per-model default

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.input_amplitude is not None and not self.input_amplitude > 0:
            raise ValueError("input_amplitude must be positive")

    def amplitude_for(self, kind) -> float:
        if self.input_amplitude is not None:
            return float(self.input_amplitude)
        return DEFAULT_AMPLITUDE[ModelKind(kind)]


@dataclass
class MembraneTrace:
    """Per-step record of a single-neuron simulation.

    ``states`` has shape ``(n_steps, dim)`` and holds the post-reset state
    after every step; ``times[k] = (k + 1) * dt`` is the time that state
    belongs to.
    """

    times: np.ndarray
    states: np.ndarray
    spikes: np.ndarray
    input_spikes: np.ndarray
    state_names: tuple

    @property
    def v(self) -> np.ndarray:
        return self.states[:, 0]

    def __len__(self):
        return len(self.times)


def euler_step(spec: ModelSpec, state, i_in, dt: float) -> np.ndarray:
    state = np.asarray(state, dtype=float)
    return clamp_state(spec, state + dt * derivative(spec, state, i_in))


def rk4_step(spec: ModelSpec, state, i_in, dt: float) -> np.ndarray:
    """Classical RK4 with the input current held fixed over the step."""
    state = np.asarray(state, dtype=float)
    k1 = dt * derivative(spec, state, i_in)
    k2 = dt * derivative(spec, state + 0.5 * k1, i_in)
    k3 = dt * derivative(spec, state + 0.5 * k2, i_in)
    k4 = dt * derivative(spec, state + k3, i_in)
    return clamp_state(spec, state + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0)


_STEPPERS = {SolverKind.EULER: euler_step, SolverKind.RK4: rk4_step}


def get_stepper(solver):
    return _STEPPERS[SolverKind(solver)]


def _as_spike_matrix(input_spikes, n_steps: int) -> np.ndarray:
    arr = np.asarray(input_spikes)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != n_steps:
        raise ValueError(
            f"input spike trains must have length n_steps={n_steps}, got shape {np.shape(input_spikes)}")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("input spikes must be binary")
    return arr.astype(bool)


def simulate_population(spec: ModelSpec, solver, input_spikes, config: SimulationConfig,
                        record: bool = False):
    """Drive one neuron per row of ``input_spikes`` from the canonical start state.

    All rows are advanced together; the neurons do not interact.  Returns
    the ``(n_rows, n_steps)`` boolean output raster and, when ``record`` is
    set, the state history of shape ``(n_steps, dim, n_rows)``.
    """
    inputs = _as_spike_matrix(input_spikes, config.n_steps)
    n_rows = inputs.shape[0]
    step = get_stepper(solver)
    amp = config.amplitude_for(spec.kind)

    state = np.repeat(spec.initial_state()[:, None], n_rows, axis=1)
    out = np.zeros((n_rows, config.n_steps), dtype=bool)
    history = np.empty((config.n_steps,) + state.shape) if record else None
    for t in range(config.n_steps):
        current = amp * inputs[:, t]
        state = step(spec, state, current, config.dt)
        state, spiked = apply_threshold(spec, state)
        out[:, t] = spiked
        if record:
            history[t] = state
    return (out, history) if record else out


def simulate_neuron(spec: ModelSpec, solver, input_spikes, config: SimulationConfig) -> MembraneTrace:
    """Simulate a single neuron and keep its full membrane trace."""
    spikes_in = np.asarray(input_spikes)
    if spikes_in.ndim != 1:
        raise ValueError("simulate_neuron expects a single 1-d spike train")
    out, history = simulate_population(spec, solver, spikes_in, config, record=True)
    return MembraneTrace(
        times=np.arange(1, config.n_steps + 1) * config.dt,
        states=history[:, :, 0],
        spikes=out[0],
        input_spikes=spikes_in.astype(bool),
        state_names=spec.state_names,
    )


def count_spikes(trace) -> int:
    """Number of output spikes in a trace (or in any boolean spike array)."""
    spikes = trace.spikes if isinstance(trace, MembraneTrace) else trace
    return int(np.count_nonzero(spikes))


def format_trace(trace: MembraneTrace) -> str:
    header = ["t", *trace.state_names, "input_spike", "output_spike"]
    lines = [", ".join(header)]
    for t, state, sin, sout in zip(trace.times, trace.states, trace.input_spikes, trace.spikes):
        cols = [f"{t:.6g}"] + [repr(float(x)) for x in state] + [str(int(sin)), str(int(sout))]
        lines.append(", ".join(cols))
    return "\n".join(lines) + "\n"


def write_trace(trace: MembraneTrace, path) -> Path:
    """Write ``t, v, [aux...], input_spike, output_spike`` rows to ``path``."""
    path = Path(path)
    try:
        path.write_text(format_trace(trace))
    except OSError as exc:
        raise OSError(f"could not write trace to {path}: {exc}") from exc
    return path


def read_trace(path) -> dict:
    """Parse a file written by :func:`write_trace` into column arrays."""
    lines = Path(path).read_text().splitlines()
    names = [c.strip() for c in lines[0].split(",")]
    data = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:] if ln.strip()])
    return {name: data[:, i] for i, name in enumerate(names)}
