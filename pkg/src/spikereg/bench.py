"""Experiment grid, report formats and single-neuron trace demos."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .encode import FunctionKind, Grid, NoiseSpec, TargetFunction, encode_spike_train
from .models import ModelKind, SPEC_TYPES, make_spec
from .network import TrainConfig, format_predictions, run_regression
from .solvers import SimulationConfig, SolverKind, simulate_neuron, write_trace

log = logging.getLogger(__name__)

ALL_MODELS = tuple(k.value for k in ModelKind)
ALL_SOLVERS = tuple(s.value for s in SolverKind)
ALL_FUNCTIONS = tuple(f.value for f in FunctionKind)
ALL_NOISE = ("off", "on")

TABLE_FUNCTION_ORDER = ("discontinuity", "square", "sine")
RECORD_FIELDS = ("model", "solver", "function", "noise", "l2_sum", "l2_relative",
                 "output_spike_count", "sim_time", "train_time", "error")
TIMING_FIELDS = ("sim_time", "train_time")


@dataclass
class ExperimentConfig:
    models: tuple = ALL_MODELS
    solvers: tuple = ALL_SOLVERS
    functions: tuple = ALL_FUNCTIONS
    noise: tuple = ALL_NOISE
    n_x: int = 100
    n_t: int = 150
    dt: float = 0.1
    seed: int = 42
    sigma: float = 0.1
    x_min: float = -1.0
    x_max: float = 1.0
    sine_k: float = 1.2
    model_params: dict = field(default_factory=dict)  # {"hh": {"g_na": 120.0}}
    amplitudes: dict = field(default_factory=dict)  # {"lif": 7.0}
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        self.models = tuple(ModelKind(m).value for m in self.models)
        self.solvers = tuple(SolverKind(s).value for s in self.solvers)
        self.functions = tuple(FunctionKind(f).value for f in self.functions)
        self.noise = tuple(self.noise)
        for name in ("models", "solvers", "functions", "noise"):
            if not getattr(self, name):
                raise ValueError(f"{name} selection must be non-empty")
        bad = set(self.noise) - set(ALL_NOISE)
        if bad:
            raise ValueError(f"noise entries must be 'off' or 'on', got {sorted(bad)}")
        if self.n_x < 2 or self.n_t < 1 or not self.dt > 0 or self.sigma < 0:
            raise ValueError("n_x, n_t and dt must be positive (n_x >= 2) and sigma >= 0")
        for m in self.model_params:
            ModelKind(m)

    def cells(self):
        for model in self.models:
            for solver in self.solvers:
                for fn in self.functions:
                    for noise in self.noise:
                        yield model, solver, fn, noise

    def to_dict(self) -> dict:
        d = asdict(self)
        d["train"]["method"] = self.train.method.value
        for key in ("models", "solvers", "functions", "noise"):
            d[key] = list(d[key])
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def cell_seed(seed: int, cell) -> np.random.SeedSequence:
    """Noise stream for one cell, independent of grid layout and run order."""
    return np.random.SeedSequence([seed, zlib.crc32("/".join(cell).encode())])


def run_cell(cfg: ExperimentConfig, cell) -> dict:
    model, solver, fn_name, noise_flag = cell
    record = dict(model=model, solver=solver, function=fn_name, noise=noise_flag,
                  l2_sum=None, l2_relative=None, output_spike_count=None,
                  sim_time=None, train_time=None, error=None)
    try:
        spec = make_spec(model, **cfg.model_params.get(model, {}))
        sim = SimulationConfig(dt=cfg.dt, n_steps=cfg.n_t, input_amplitude=cfg.amplitudes.get(model))
        grid = Grid(cfg.n_x, cfg.x_min, cfg.x_max)
        noise = NoiseSpec(sigma=cfg.sigma, enabled=noise_flag == "on")
        rng = np.random.default_rng(cell_seed(cfg.seed, cell))
        fn = TargetFunction(fn_name, k=cfg.sine_k)
        res = run_regression(spec, solver, fn, grid, noise, sim, cfg.train, rng=rng)
    except Exception as exc:  # recorded, the grid carries on
        log.warning("cell %s failed: %s", "/".join(cell), exc)
        record["error"] = f"{type(exc).__name__}: {exc}"
        return record
    record.update(l2_sum=res.l2_sum, l2_relative=res.l2_relative,
                  output_spike_count=res.output_spike_count,
                  sim_time=res.sim_time, train_time=res.train_time)
    record["_result"] = res
    return record


@dataclass
class ExperimentReport:
    cells: list
    meta: dict

    @property
    def failed(self) -> list:
        return [c for c in self.cells if c.get("error")]

    def find(self, model, solver, function, noise="off") -> dict:
        for c in self.cells:
            if (c["model"], c["solver"], c["function"], c["noise"]) == (model, solver, function, noise):
                return c
        raise KeyError((model, solver, function, noise))

    def to_dict(self, timing: bool = True) -> dict:
        cells = []
        for c in self.cells:
            rec = {k: c.get(k) for k in RECORD_FIELDS}
            if not timing:
                for k in TIMING_FIELDS:
                    rec.pop(k)
            cells.append(rec)
        return {"meta": self.meta, "cells": cells}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(cells=[{k: c.get(k) for k in RECORD_FIELDS} for c in d["cells"]], meta=d["meta"])


def run_grid(cfg: ExperimentConfig, keep_results: bool = False) -> ExperimentReport:
    """Run every (model, solver, function, noise) cell of the configuration.

    Failed cells are kept in the report with an ``error`` message.  With
    ``keep_results`` each record also carries the full RegressionResult
    under ``"_result"`` (not serialised).
    """
    cells = []
    for cell in cfg.cells():
        rec = run_cell(cfg, cell)
        if not keep_results:
            rec.pop("_result", None)
        cells.append(rec)
    meta = {"seed": cfg.seed, "version": __version__, "config_hash": cfg.digest(),
            "config": cfg.to_dict()}
    return ExperimentReport(cells=cells, meta=meta)


# ---------------------------------------------------------------------------
# report output

def _fmt_cell(rec: Optional[dict]) -> str:
    if rec is None:
        return "-"
    if rec.get("error"):
        return "ERR"
    return f"{rec['l2_relative']:.2e} ({rec['output_spike_count']})"


def format_table(report: ExperimentReport) -> str:
    """Text grid: one row per (model, solver), error and spike count per column."""
    recs = {(c["model"], c["solver"], c["function"], c["noise"]): c for c in report.cells}
    functions = [f for f in TABLE_FUNCTION_ORDER if any(k[2] == f for k in recs)]
    noises = [n for n in ALL_NOISE if any(k[3] == n for k in recs)]
    cols = [(n, f) for n in noises for f in functions]
    rows = []
    for model in ALL_MODELS:
        for solver in ALL_SOLVERS:
            if not any(k[:2] == (model, solver) for k in recs):
                continue
            hits = [recs.get((model, solver, f, n)) for n, f in cols]
            secs = sum((r.get("sim_time") or 0) + (r.get("train_time") or 0) for r in hits if r)
            rows.append([model.upper(), solver.upper()] + [_fmt_cell(r) for r in hits] + [f"{secs:.2f}"])
    header = ["model", "solver"] + [f"{f}[{'noisy' if n == 'on' else 'clean'}]" for n, f in cols] + ["time(s)"]
    widths = [max(len(str(r[i])) for r in rows + [header]) for i in range(len(header))]
    fmt = lambda r: "  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip()
    lines = [fmt(header), "-" * len(fmt(header))] + [fmt(r) for r in rows]
    return "\n".join(lines) + "\n"


def format_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RECORD_FIELDS, lineterminator="\n")
    writer.writeheader()
    for c in report.cells:
        writer.writerow({k: ("" if c.get(k) is None else c.get(k)) for k in RECORD_FIELDS})
    return buf.getvalue()


def format_json(report: ExperimentReport, timing: bool = True) -> str:
    return json.dumps(report.to_dict(timing=timing), indent=2, sort_keys=True) + "\n"


FORMATTERS = {"table": format_table, "json": format_json, "csv": format_csv}


def emit_report(report: ExperimentReport, fmt: str = "table", path=None) -> str:
    """Render the report and write it to ``path`` (stdout if ``None``)."""
    try:
        text = FORMATTERS[fmt](report)
    except KeyError:
        raise ValueError(f"unknown report format {fmt!r}") from None
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise OSError(f"could not write report to {path}: {exc}") from exc
    return text


def load_report(path) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(Path(path).read_text()))


def dump_predictions(report: ExperimentReport, cfg: ExperimentConfig, directory) -> list:
    """Write ``x, y_pred`` and ``x, y_exact`` files for every successful cell."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    x = Grid(cfg.n_x, cfg.x_min, cfg.x_max).points
    written = []
    for c in report.cells:
        res = c.get("_result")
        if res is None:
            continue
        stem = f"{c['model']}_{c['solver']}_{c['function']}_{c['noise']}"
        for suffix, y in (("pred", res.predictions), ("exact", res.exact)):
            p = directory / f"{stem}_{suffix}.txt"
            p.write_text(format_predictions(x, y))
            written.append(p)
    return written


# ---------------------------------------------------------------------------
# config files

def _parse_value(text: str):
    text = text.strip()
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def _as_list(value) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(value)
    return tuple(v.strip() for v in str(value).split(",") if v.strip())


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = _parse_value(value)
    return out


_TOP_KEYS = {"models": "models", "solvers": "solvers", "functions": "functions", "noise": "noise",
             "nx": "n_x", "n_x": "n_x", "nt": "n_t", "n_t": "n_t", "dt": "dt", "seed": "seed"}
_SECTION_KEYS = {("noise", "sigma"): "sigma", ("encode", "x_min"): "x_min",
                 ("encode", "x_max"): "x_max", ("sine", "k"): "sine_k"}


def config_from_mapping(values: dict, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Apply dotted-key settings (``hh.g_na``, ``lif.amplitude``, ``train.epochs``...)."""
    base = base or ExperimentConfig()
    kw = {f.name: getattr(base, f.name) for f in fields(ExperimentConfig)}
    kw["model_params"] = {m: dict(p) for m, p in base.model_params.items()}
    kw["amplitudes"] = dict(base.amplitudes)
    train = asdict(base.train)
    train_names = {f.name for f in fields(TrainConfig)}
    for key, value in values.items():
        if key in _TOP_KEYS:
            name = _TOP_KEYS[key]
            kw[name] = _as_list(value) if name in ("models", "solvers", "functions", "noise") else value
            continue
        section, _, param = key.partition(".")
        if (section, param) in _SECTION_KEYS:
            kw[_SECTION_KEYS[section, param]] = float(value)
        elif section == "train" and param in train_names:
            train[param] = value
        elif section in ALL_MODELS and param == "amplitude":
            kw["amplitudes"][section] = float(value)
        elif section in ALL_MODELS:
            allowed = {f.name for f in fields(SPEC_TYPES[ModelKind(section)])}
            if param not in allowed:
                raise ValueError(f"unknown parameter {key!r}")
            kw["model_params"].setdefault(section, {})[param] = value
        else:
            raise ValueError(f"unknown config key {key!r}")
    kw["train"] = TrainConfig(**train)
    return ExperimentConfig(**kw)


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    return config_from_mapping(parse_config_text(Path(path).read_text()), base)


# ---------------------------------------------------------------------------
# trace demos

def parse_drive(drive: str, n_steps: int, grid: Grid = Grid()):
    """Turn a drive pattern into (input spike train, amplitude or None).

    Patterns: ``constant:<amp>``, ``burst:<start>:<len>``,
    ``periodic:<period>:<width>``, ``encode:<x>`` and ``none``.
    """
    kind, *args = drive.split(":")
    spikes = np.zeros(n_steps, dtype=bool)
    amp = None
    try:
        if kind == "none":
            pass
        elif kind == "constant":
            amp = float(args[0])
            if amp > 0:
                spikes[:] = True
            else:
                amp = None
        elif kind == "burst":
            start, length = int(args[0]), int(args[1])
            spikes[start:start + length] = True
        elif kind == "periodic":
            period, width = int(args[0]), int(args[1])
            spikes[(np.arange(n_steps) % period) < width] = True
        elif kind == "encode":
            spikes = encode_spike_train(float(args[0]), grid, n_steps)
        else:
            raise ValueError(f"unknown drive kind {kind!r}")
    except (IndexError, ValueError) as exc:
        raise ValueError(f"bad drive pattern {drive!r}: {exc}") from None
    return spikes, amp


def trace_demo(model, solver, drive: str, out, n_steps: int = 150, dt: float = 0.1,
               amplitude: Optional[float] = None, **params):
    """Simulate one neuron under a drive pattern and write its trace file."""
    spec = make_spec(model, **params)
    spikes, amp = parse_drive(drive, n_steps)
    cfg = SimulationConfig(dt=dt, n_steps=n_steps, input_amplitude=amplitude or amp)
    trace = simulate_neuron(spec, solver, spikes, cfg)
    write_trace(trace, out)
    return trace
