"""Spiking-neuron membrane models and a minimal SNN regression benchmark."""

__version__ = "0.1.0"

from .models import (FhnSpec, HhSpec, IzhSpec, LifSpec, ModelKind, apply_threshold, derivative,
                     hh_rate_constants, make_spec)
from .solvers import SimulationConfig, SolverKind, count_spikes, euler_step, rk4_step, simulate_neuron
from .encode import FunctionKind, Grid, NoiseSpec, SpikeRaster, TargetFunction, encode_all
from .network import TrainConfig, TrainMethod, run_regression

__all__ = [
    "FhnSpec", "HhSpec", "IzhSpec", "LifSpec", "ModelKind", "apply_threshold", "derivative",
    "hh_rate_constants", "make_spec", "SimulationConfig", "SolverKind", "count_spikes",
    "euler_step", "rk4_step", "simulate_neuron", "FunctionKind", "Grid", "NoiseSpec",
    "SpikeRaster", "TargetFunction", "encode_all", "TrainConfig", "TrainMethod", "run_regression",
]
