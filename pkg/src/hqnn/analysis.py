"""Regression metrics, rank correlation and circuit-expressibility estimation."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from . import _kernels
from .ansatz import NUM_QUBITS, CompiledCircuit
from .dataset import TARGETS
from .errors import ConfigurationError, DegenerateError, UsageError


def rmse(pred, truth) -> float:
    pred = np.asarray(pred, dtype=float).reshape(-1)
    truth = np.asarray(truth, dtype=float).reshape(-1)
    if pred.size == 0 or pred.shape != truth.shape:
        raise UsageError(f"rmse needs equal nonzero lengths, got {pred.size} and {truth.size}")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def iqr(values) -> float:
    """Q75 - Q25 with linear interpolation at index p * (n - 1) of the sorted data."""
    v = np.sort(np.asarray(values, dtype=float).reshape(-1))
    if v.size < 2:
        raise UsageError("iqr needs at least two values")

    def q(p):
        pos = p * (v.size - 1)
        lo = int(math.floor(pos))
        hi = min(lo + 1, v.size - 1)
        return v[lo] + (pos - lo) * (v[hi] - v[lo])

    return float(q(0.75) - q(0.25))


def nrmse(rmse_value: float, scale: float) -> float:
    if not scale > 0:
        raise DegenerateError(f"nRMSE scale must be positive, got {scale}")
    return float(rmse_value / scale)


def overall_nrmse(values: Sequence[float]) -> float:
    return float(np.mean(np.asarray(values, dtype=float)))


def r_squared(pred, truth) -> float:
    pred = np.asarray(pred, dtype=float).reshape(-1)
    truth = np.asarray(truth, dtype=float).reshape(-1)
    if pred.size == 0 or pred.shape != truth.shape:
        raise UsageError("r_squared needs equal nonzero lengths")
    ss_tot = float(np.sum((truth - truth.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateError("R^2 undefined for constant truth")
    return 1.0 - float(np.sum((truth - pred) ** 2)) / ss_tot


@dataclass
class MetricsReport:
    rmse: Dict[str, float]
    nrmse: Dict[str, float]
    r2: Dict[str, float]
    overall_nrmse: float
    overall_r2: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["target", "rmse", "nrmse", "r2"])
            for t in TARGETS:
                w.writerow([t, repr(self.rmse[t]), repr(self.nrmse[t]), repr(self.r2[t])])
            w.writerow(["overall", "", repr(self.overall_nrmse), repr(self.overall_r2)])


def metrics_report(pred: np.ndarray, truth: np.ndarray, scales: Sequence[float]) -> MetricsReport:
    """Per-target metrics in original units; ``scales`` are the training-split IQRs."""
    pred = np.atleast_2d(pred)
    truth = np.atleast_2d(truth)
    r, n, r2 = {}, {}, {}
    for t, name in enumerate(TARGETS):
        r[name] = rmse(pred[:, t], truth[:, t])
        n[name] = nrmse(r[name], scales[t])
        r2[name] = r_squared(pred[:, t], truth[:, t])
    return MetricsReport(r, n, r2, overall_nrmse(list(n.values())), float(np.mean(list(r2.values()))))


# -- rank correlation ------------------------------------------------------------

def spearman(x, y) -> Tuple[float, float]:
    """Spearman rho (average ranks for ties) with a two-sided t-approximation p-value."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != y.size or x.size < 3:
        raise UsageError("spearman needs two sequences of equal length >= 3")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateError("spearman undefined for constant input")
    rx = stats.rankdata(x)
    ry = stats.rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    rho = float(np.sum(rx * ry) / math.sqrt(np.sum(rx * rx) * np.sum(ry * ry)))
    rho = max(-1.0, min(1.0, rho))
    n = x.size
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, float(2.0 * stats.t.sf(abs(t), n - 2))


@dataclass
class AblationRow:
    label: str
    template: int
    levels: int
    param_count: int
    depth: int
    two_qubit_count: int
    d_kl: float
    entangler_family: str
    overall_nrmse: float


ABLATION_DESCRIPTORS = ("param_count", "depth", "two_qubit_count", "d_kl")


@dataclass
class AblationReport:
    correlations: Dict[str, Optional[Tuple[float, float]]]
    family_mean_accuracy: Dict[str, float]
    n_rows: int
    accuracy_definition: str = "accuracy = -overall_nrmse"
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "accuracy_definition": self.accuracy_definition,
            "correlations": {
                k: None if v is None else {"rho": v[0], "p_value": v[1]}
                for k, v in self.correlations.items()
            },
            "family_mean_accuracy": self.family_mean_accuracy,
            "notes": self.notes,
        }


def ablation_table(rows: Sequence[AblationRow]) -> AblationReport:
    """Correlate each circuit descriptor with accuracy across sweep rows."""
    if len(rows) < 10:
        raise UsageError(f"ablation needs at least 10 rows, got {len(rows)}")
    acc = np.array([-r.overall_nrmse for r in rows])
    corr, notes = {}, []
    for name in ABLATION_DESCRIPTORS:
        values = np.array([getattr(r, name) for r in rows], dtype=float)
        try:
            corr[name] = spearman(values, acc)
        except DegenerateError as exc:
            corr[name] = None
            notes.append(f"{name}: {exc}")
    families: Dict[str, List[float]] = {}
    for r, a in zip(rows, acc):
        families.setdefault(r.entangler_family, []).append(a)
    means = {k: float(np.mean(v)) for k, v in sorted(families.items())}
    return AblationReport(corr, means, len(rows), notes=notes)


# -- expressibility ------------------------------------------------------------------

def haar_fidelity_pdf(F, dim: int):
    """Density of ``|<a|b>|^2`` for Haar-random states in dimension ``dim``."""
    F = np.asarray(F, dtype=float)
    return (dim - 1) * (1.0 - F) ** (dim - 2)


def haar_bin_masses(n_bins: int, dim: int) -> np.ndarray:
    # exact integral of the pdf over each equal-width bin: (1-a)^(N-1) - (1-b)^(N-1)
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    cdf_tail = (1.0 - edges) ** (dim - 1)
    return cdf_tail[:-1] - cdf_tail[1:]


def sample_fidelities(circuit: CompiledCircuit, n_pairs: int, seed: int) -> np.ndarray:
    """Fidelities between output states of independent uniform angle draws."""
    rng = np.random.default_rng(seed)
    n_angles = circuit.num_angles
    # uniform on (-pi, pi]
    a = np.pi - rng.uniform(0.0, 2.0 * np.pi, (n_pairs, n_angles))
    b = np.pi - rng.uniform(0.0, 2.0 * np.pi, (n_pairs, n_angles))
    sa = _kernels.backend.sv_states(circuit.ops, NUM_QUBITS, a)
    sb = _kernels.backend.sv_states(circuit.ops, NUM_QUBITS, b)
    return np.abs(np.sum(sa.conj() * sb, axis=1)) ** 2


def kl_to_haar(fidelities: np.ndarray, n_bins: int, dim: int) -> float:
    counts, _ = np.histogram(np.clip(fidelities, 0.0, 1.0), bins=n_bins, range=(0.0, 1.0))
    p = counts / counts.sum()
    q = haar_bin_masses(n_bins, dim)
    mask = p > 0
    return float(max(0.0, np.sum(p[mask] * np.log(p[mask] / q[mask]))))


def estimate_expressibility(circuit: CompiledCircuit, n_pairs: int = 5000, n_bins: int = 75,
                            seed: int = 0) -> float:
    """KL divergence of the sampled fidelity histogram from the Haar distribution.

    Encoding and trainable angles are all drawn uniformly.  Empty bins add 0.
    """
    if n_pairs < 1000:
        raise ConfigurationError(f"need at least 1000 fidelity pairs, got {n_pairs}")
    if n_bins < 2:
        raise ConfigurationError(f"need at least 2 histogram bins, got {n_bins}")
    fids = sample_fidelities(circuit, n_pairs, seed)
    return kl_to_haar(fids, n_bins, 2 ** NUM_QUBITS)
