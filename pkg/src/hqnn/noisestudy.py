"""Gate-level depolarizing noise: noisy features, noise grids and R^2 deltas.

A single-qubit depolarizing channel with probability ``p1`` follows every
single-qubit gate (encoding rotations included) and a two-qubit channel with
``p2`` follows every two-qubit gate.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .ansatz import NUM_QUBITS, CompiledCircuit, SingleTemplate, compile as compile_circuit
from .dataset import TARGETS, PreparedData
from .diffgrad import _angle_vector
from .errors import ConfigurationError, UsageError
from .models import HybridModel, TrainConfig, evaluate, train
from .parallel import ordered_map

DEFAULT_GRID: Tuple[Tuple[float, float], ...] = (
    (0.0, 0.0),
    (0.005, 0.005),
    (0.010, 0.005),
    (0.050, 0.005),
)
DEFAULT_SPEC = SingleTemplate(13, 4)
MODES = ("evaluate", "retrain")


def _check_p(p1, p2):
    p1, p2 = float(p1), float(p2)
    if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0):
        raise ConfigurationError(f"depolarizing probabilities must lie in [0, 1], got ({p1}, {p2})")
    return p1, p2


@dataclass(frozen=True)
class NoiseGridPoint:
    p1: float
    p2: float
    r2: Dict[str, float]
    overall_r2: float

    def __post_init__(self):
        _check_p(self.p1, self.p2)


def noisy_forward(circuit: CompiledCircuit, inputs, params, p1: float, p2: float) -> np.ndarray:
    """The 12 Pauli features under per-gate depolarizing noise, by density-matrix evolution."""
    p1, p2 = _check_p(p1, p2)
    angles = _angle_vector(circuit, inputs, params)[None, :]
    return _kernels.backend.dm_features(circuit.ops, NUM_QUBITS, angles, p1, p2)[0]


def default_circuit() -> CompiledCircuit:
    return compile_circuit(DEFAULT_SPEC)


def _grid_point(setting, model, data, mode, config):
    p1, p2 = setting
    local = model.clone()
    local.set_noise((p1, p2))
    if mode == "retrain":
        train(local, data.arrays("train"), data.arrays("val"), config)
    report = evaluate(local, data.x["test"], data.y_raw["test"], data.standardizer)
    return NoiseGridPoint(p1, p2, dict(report.r2), report.overall_r2)


def noise_sweep(model: HybridModel, data: PreparedData, grid: Sequence[Tuple[float, float]] = DEFAULT_GRID,
                mode: str = "evaluate", config: Optional[TrainConfig] = None, jobs: int = 1) -> List[NoiseGridPoint]:
    """Score ``model`` on the test split at each (p1, p2) setting.

    ``evaluate`` keeps the trained parameters.  ``retrain`` starts every grid
    point from a copy of ``model`` (normally freshly initialized) and trains it
    with noise in the loop using ``config``, the same seed at every point.
    """
    if mode not in MODES:
        raise ConfigurationError(f"unknown noise mode {mode!r}; choose from {MODES}")
    if model.circuit is None:
        raise UsageError("noise study needs a model with a quantum circuit")
    grid = [_check_p(*g) for g in grid]
    if not grid:
        raise ConfigurationError("noise grid is empty")
    if mode == "retrain" and config is None:
        config = TrainConfig()
    fn = partial(_grid_point, model=model, data=data, mode=mode, config=config)
    return ordered_map(fn, grid, jobs)


def delta_r2(baseline: NoiseGridPoint, noisy: NoiseGridPoint) -> Dict[str, float]:
    """Per-target ``noisy - baseline`` R^2, plus ``overall``."""
    if set(baseline.r2) != set(noisy.r2):
        raise UsageError("grid points cover different targets")
    out = {t: noisy.r2[t] - baseline.r2[t] for t in baseline.r2}
    out["overall"] = noisy.overall_r2 - baseline.overall_r2
    return out


def write_grid_csv(points: Sequence[NoiseGridPoint], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p1", "p2", "overall", *TARGETS])
        for pt in points:
            w.writerow([repr(pt.p1), repr(pt.p2), repr(pt.overall_r2), *(repr(pt.r2[t]) for t in TARGETS)])


def write_delta_csv(points: Sequence[NoiseGridPoint], path, baseline: Optional[NoiseGridPoint] = None) -> None:
    """One row per (grid point, target) with the R^2 change relative to ``baseline`` (default: first point)."""
    if not points:
        raise UsageError("no grid points to report")
    base = baseline if baseline is not None else points[0]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p1", "p2", "target", "r2_baseline", "r2_noisy", "delta_r2"])
        for pt in points:
            d = delta_r2(base, pt)
            for t in TARGETS:
                w.writerow([repr(pt.p1), repr(pt.p2), t, repr(base.r2[t]), repr(pt.r2[t]), repr(d[t])])
