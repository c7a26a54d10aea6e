"""Neuron membrane models as vector fields with threshold/reset rules.

States are numpy arrays whose first axis indexes the model variables
(``v`` first).  Any trailing axes are treated as a population, so the
same functions advance one neuron or a whole layer at once.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, fields, replace
from typing import NamedTuple, Union

import numpy as np


class ModelKind(str, enum.Enum):
    LIF = "lif"
    FHN = "fhn"
    IZH = "izh"
    HH = "hh"


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class LifSpec:
    """Leaky integrate-and-fire parameters (``rc`` is the product R*C)."""

    rc: float = 0.2
    v_rest: float = 0.0
    v_th: float = 1.0

    kind = ModelKind.LIF
    state_names = ("v",)

    def __post_init__(self):
        _check(self.rc > 0, "rc must be positive")
        _check(self.v_th > self.v_rest, "v_th must exceed v_rest")

    def initial_state(self) -> np.ndarray:
        return np.array([self.v_rest], dtype=float)


@dataclass(frozen=True)
class FhnSpec:
    """FitzHugh-Nagumo parameters plus the spike threshold and reset value."""

    alpha: float = 0.7
    beta: float = 0.8
    gamma: float = 12.5
    v_th: float = 1.0
    v_reset: float = 0.0

    kind = ModelKind.FHN
    state_names = ("v", "w")

    def __post_init__(self):
        _check(self.gamma > 0, "gamma must be positive")
        _check(self.v_reset < self.v_th, "v_reset must lie below v_th")

    def initial_state(self) -> np.ndarray:
        return np.array([0.0, 0.0])


@dataclass(frozen=True)
class IzhSpec:
    """Izhikevich parameters; ``v0``/``u0`` give the starting state."""

    a: float = 0.02
    b: float = 0.2
    c: float = -50.0
    d: float = 2.0
    v_th: float = 30.0
    v0: float = -70.0
    u0: float = -14.0

    kind = ModelKind.IZH
    state_names = ("v", "u")

    def __post_init__(self):
        _check(self.a > 0, "a must be positive")
        _check(self.c < self.v_th, "reset c must lie below v_th")

    def initial_state(self) -> np.ndarray:
        return np.array([self.v0, self.u0])


@dataclass(frozen=True)
class HhSpec:
    """Hodgkin-Huxley parameters for 1 cm^2 of membrane.

    ``v0`` is both the reference potential of the rate constants and the
    post-spike reset value.  With ``reset_gates`` the gating variables are
    returned to ``(n0, m0, h0)`` on a spike as well; otherwise only the
    membrane potential is reset.
    """

    c_m: float = 1.0
    g_l: float = 0.3
    g_k: float = 36.0
    g_na: float = 120.0
    e_l: float = -54.0
    e_k: float = -77.0
    e_na: float = 50.0
    v_th: float = 30.0
    v0: float = -65.0
    n0: float = 0.3177
    m0: float = 0.0529
    h0: float = 0.5960
    reset_gates: bool = True

    kind = ModelKind.HH
    state_names = ("v", "n", "m", "h")

    def __post_init__(self):
        _check(self.c_m > 0, "c_m must be positive")
        _check(min(self.g_l, self.g_k, self.g_na) >= 0, "conductances must be >= 0")
        _check(self.e_k < self.e_l < self.e_na, "reversal potentials must satisfy e_k < e_l < e_na")
        _check(self.v0 < self.v_th, "v0 must lie below v_th")
        for g in (self.n0, self.m0, self.h0):
            _check(0.0 <= g <= 1.0, "initial gating values must lie in [0, 1]")

    def initial_state(self) -> np.ndarray:
        return np.array([self.v0, self.n0, self.m0, self.h0])


ModelSpec = Union[LifSpec, FhnSpec, IzhSpec, HhSpec]

SPEC_TYPES = {
    ModelKind.LIF: LifSpec,
    ModelKind.FHN: FhnSpec,
    ModelKind.IZH: IzhSpec,
    ModelKind.HH: HhSpec,
}


def make_spec(kind, **overrides) -> ModelSpec:
    """Build a model spec from its kind (enum or name) and parameter overrides."""
    cls = SPEC_TYPES[ModelKind(kind)]
    known = {f.name for f in fields(cls)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} parameter(s): {sorted(unknown)}")
    return cls(**overrides)


def with_overrides(spec: ModelSpec, **overrides) -> ModelSpec:
    return replace(spec, **overrides)


# ---------------------------------------------------------------------------
# vector fields

def lif_derivative(state, spec: LifSpec, i_in) -> np.ndarray:
    v = state[0]
    return np.stack([-(v - spec.v_rest) / spec.rc + i_in])


def fhn_derivative(state, spec: FhnSpec, i_in) -> np.ndarray:
    v, w = state[0], state[1]
    dv = v - v ** 3 / 3.0 - w + i_in
    dw = (v + spec.alpha - spec.beta * w) / spec.gamma
    return np.stack([dv, dw])


def izh_derivative(state, spec: IzhSpec, i_in) -> np.ndarray:
    v, u = state[0], state[1]
    # 0.04 v^2 written as v^2 / 25 so the integer rest state stays exact
    dv = v * v / 25.0 + 5.0 * v + 140.0 - u + i_in
    du = spec.a * (spec.b * v - u)
    return np.stack([dv, du])


class RateConstants(NamedTuple):
    alpha_n: np.ndarray
    beta_n: np.ndarray
    alpha_m: np.ndarray
    beta_m: np.ndarray
    alpha_h: np.ndarray
    beta_h: np.ndarray


def _x_over_expm1(x):
    # x / (e^x - 1), equal to 1 in the limit x -> 0
    x = np.asarray(x, dtype=float)
    zero = x == 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        out = x / np.expm1(np.where(zero, 1.0, x))
    return np.where(zero, 1.0, out)


def hh_rate_constants(v_m, v0: float = -65.0) -> RateConstants:
    """Channel opening/closing rates (1/ms) at membrane potential ``v_m``.

    Rates are expressed in the shifted potential ``U = v_m - v0``.  The
    quotients in alpha_n and alpha_m are rewritten as ``x / expm1(x)`` so
    the removable singularities at U = 10 and U = 25 evaluate to their
    limits (0.1 and 1.0).
    """
    u = np.asarray(v_m, dtype=float) - v0
    with np.errstate(over="ignore"):
        alpha_n = 0.1 * _x_over_expm1(1.0 - 0.1 * u)
        beta_n = 0.125 * np.exp(-u / 80.0)
        alpha_m = _x_over_expm1(2.5 - 0.1 * u)
        beta_m = 4.0 * np.exp(-u / 18.0)
        alpha_h = 0.07 * np.exp(-u / 20.0)
        beta_h = 1.0 / (1.0 + np.exp(3.0 - 0.1 * u))
    return RateConstants(alpha_n, beta_n, alpha_m, beta_m, alpha_h, beta_h)


def hh_derivative(state, spec: HhSpec, i_in) -> np.ndarray:
    v, n, m, h = state[0], state[1], state[2], state[3]
    r = hh_rate_constants(v, spec.v0)
    i_ion = (spec.g_l * (v - spec.e_l)
             + spec.g_k * n ** 4 * (v - spec.e_k)
             + spec.g_na * m ** 3 * h * (v - spec.e_na))
    dv = (i_in - i_ion) / spec.c_m
    dn = r.alpha_n * (1.0 - n) - r.beta_n * n
    dm = r.alpha_m * (1.0 - m) - r.beta_m * m
    dh = r.alpha_h * (1.0 - h) - r.beta_h * h
    return np.stack([dv, dn, dm, dh])


_DERIVATIVES = {
    ModelKind.LIF: lif_derivative,
    ModelKind.FHN: fhn_derivative,
    ModelKind.IZH: izh_derivative,
    ModelKind.HH: hh_derivative,
}


def derivative(spec: ModelSpec, state, i_in=0.0) -> np.ndarray:
    """Time derivative of ``state`` under ``spec`` with input current ``i_in``."""
    return _DERIVATIVES[spec.kind](np.asarray(state, dtype=float), spec, i_in)


def clamp_state(spec: ModelSpec, state: np.ndarray) -> np.ndarray:
    """Project a state back onto its admissible set (HH gates into [0, 1])."""
    if spec.kind is ModelKind.HH:
        state = state.copy()
        np.clip(state[1:], 0.0, 1.0, out=state[1:])
    return state


def apply_threshold(spec: ModelSpec, state) -> tuple[np.ndarray, np.ndarray]:
    """Detect spikes and apply the model's reset rule.

    Returns the post-reset state and a boolean spike flag (an array with
    the population shape, 0-d for a single neuron).
    """
    state = np.array(state, dtype=float)
    spiked = state[0] >= spec.v_th
    if not np.any(spiked):
        return state, spiked
    kind = spec.kind
    if kind is ModelKind.LIF:
        state[0] = np.where(spiked, spec.v_rest, state[0])
    elif kind is ModelKind.FHN:
        state[0] = np.where(spiked, spec.v_reset, state[0])
    elif kind is ModelKind.IZH:
        state[0] = np.where(spiked, spec.c, state[0])
        state[1] = np.where(spiked, state[1] + spec.d, state[1])
    else:
        state[0] = np.where(spiked, spec.v0, state[0])
        if spec.reset_gates:
            for i, g in enumerate((spec.n0, spec.m0, spec.h0), start=1):
                state[i] = np.where(spiked, g, state[i])
    return state, spiked
