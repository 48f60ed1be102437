"""Device records, CSV I/O, standardization, splitting and synthetic data.

A record carries 24 inputs (5 continuous, 19 one-hot process indicators) and
6 electrical targets.  I_off is modelled in natural-log space.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .errors import DataError, UsageError

CONTINUOUS = ("x_coord", "y_coord", "ale_cycles", "remaining_algan_nm", "recess_depth_nm")
ONEHOT_GROUPS = (
    ("wet_clean", ("a", "b")),
    ("plasma", ("a", "b", "c", "d", "e", "f", "g", "h", "i")),
    ("dielectric", ("sin_peald_15", "sin_peald_25", "sin_rtcvd_15",
                    "al2o3_h2o_15", "al2o3_h2o_25", "al2o3_o3_15")),
    ("pda", ("fg_700", "o2_500")),
)
ONEHOT = tuple(f"{g}__{v}" for g, variants in ONEHOT_GROUPS for v in variants)
TARGETS = ("vth_fwd_v", "vth_rev_v", "dvth_v", "ss_mv_dec", "ion_a", "ioff_a")
TARGET_LABELS = ("V_th,fwd", "V_th,rev", "dV_th", "SS", "I_on", "I_off")
HEADER = CONTINUOUS + ONEHOT + TARGETS
NUM_FEATURES = len(CONTINUOUS) + len(ONEHOT)
LOG_TARGETS = (False, False, False, False, False, True)
STD_FLOOR = 1e-12


@dataclass(frozen=True)
class DeviceRecord:
    continuous: Tuple[float, ...]  # CONTINUOUS order
    onehot: Tuple[int, ...]  # ONEHOT order
    targets: Tuple[float, ...]  # TARGETS order

    def group_value(self, group: str) -> str:
        for name, bit in zip(ONEHOT, self.onehot):
            g, v = name.split("__")
            if g == group and bit:
                return v
        raise KeyError(group)

    def features(self) -> np.ndarray:
        return np.array(self.continuous + tuple(float(b) for b in self.onehot))


def validate_record(rec: DeviceRecord, where: str = "record") -> None:
    start = 0
    for group, variants in ONEHOT_GROUPS:
        bits = rec.onehot[start:start + len(variants)]
        start += len(variants)
        if any(b not in (0, 1) for b in bits) or sum(bits) != 1:
            raise DataError(f"{where}: one-hot group {group!r} must contain exactly one 1, got {bits}")
    fwd, rev, dvth, ss, ion, ioff = rec.targets
    if abs(dvth - (rev - fwd)) > 1e-9:
        raise DataError(f"{where}: dvth_v != vth_rev_v - vth_fwd_v ({dvth} vs {rev - fwd})")
    for name, value in (("ss_mv_dec", ss), ("ion_a", ion), ("ioff_a", ioff)):
        if not value > 0:
            raise DataError(f"{where}: {name} must be positive, got {value}")


def as_arrays(records: Sequence[DeviceRecord]) -> Tuple[np.ndarray, np.ndarray]:
    """Raw (unstandardized) feature matrix (N, 24) and target matrix (N, 6)."""
    if not records:
        return np.zeros((0, NUM_FEATURES)), np.zeros((0, len(TARGETS)))
    x = np.array([r.continuous + tuple(float(b) for b in r.onehot) for r in records])
    y = np.array([r.targets for r in records])
    return x, y


# -- CSV -----------------------------------------------------------------------

def _fmt(v) -> str:
    return format(v, ".12g")


def write_csv(records: Sequence[DeviceRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for r in records:
            w.writerow([_fmt(v) for v in r.continuous] + [str(int(b)) for b in r.onehot]
                       + [_fmt(v) for v in r.targets])


def load_csv(path) -> List[DeviceRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header required") from None
        missing = [c for c in HEADER if c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
        extra = [c for c in header if c not in HEADER]
        if extra:
            raise DataError(f"{path}: unexpected column(s) {', '.join(extra)}")
        index = {c: header.index(c) for c in HEADER}
        records = []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {row_no} has {len(row)} cells, expected {len(header)}")
            values = {}
            for col in HEADER:
                cell = row[index[col]].strip()
                try:
                    values[col] = float(cell)
                except ValueError:
                    raise DataError(f"{path}: row {row_no}, column {col!r}: non-numeric {cell!r}") from None
                if not math.isfinite(values[col]):
                    raise DataError(f"{path}: row {row_no}, column {col!r}: non-finite {cell!r}")
            onehot = []
            for col in ONEHOT:
                if values[col] not in (0.0, 1.0):
                    raise DataError(f"{path}: row {row_no}, column {col!r}: one-hot value must be 0 or 1")
                onehot.append(int(values[col]))
            rec = DeviceRecord(
                tuple(values[c] for c in CONTINUOUS),
                tuple(onehot),
                tuple(values[c] for c in TARGETS),
            )
            validate_record(rec, where=f"{path}: row {row_no}")
            records.append(rec)
    return records


# -- standardization -------------------------------------------------------------

@dataclass
class Standardizer:
    feature_mean: np.ndarray  # (5,)
    feature_std: np.ndarray  # (5,)
    target_mean: np.ndarray  # (6,) in transformed (log for I_off) space
    target_std: np.ndarray  # (6,)
    log_targets: Tuple[bool, ...] = LOG_TARGETS
    target_iqr: np.ndarray = field(default=None)  # (6,) original units, train split

    def transform_features(self, records_or_x) -> np.ndarray:
        x = _features_of(records_or_x).copy()
        nc = len(CONTINUOUS)
        x[:, :nc] = (x[:, :nc] - self.feature_mean) / self.feature_std
        return x

    def _pre(self, y):
        y = np.array(y, dtype=float, copy=True)
        for t, is_log in enumerate(self.log_targets):
            if is_log:
                y[:, t] = np.log(y[:, t])
        return y

    def transform_targets(self, records_or_y) -> np.ndarray:
        y = _targets_of(records_or_y)
        return (self._pre(y) - self.target_mean) / self.target_std

    def invert_targets(self, z) -> np.ndarray:
        y = np.atleast_2d(np.asarray(z, dtype=float)) * self.target_std + self.target_mean
        for t, is_log in enumerate(self.log_targets):
            if is_log:
                y[:, t] = np.exp(y[:, t])
        return y

    def to_dict(self) -> dict:
        return {
            "feature_mean": self.feature_mean.tolist(),
            "feature_std": self.feature_std.tolist(),
            "target_mean": self.target_mean.tolist(),
            "target_std": self.target_std.tolist(),
            "log_targets": list(self.log_targets),
            "target_iqr": None if self.target_iqr is None else self.target_iqr.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(
            np.array(d["feature_mean"]), np.array(d["feature_std"]),
            np.array(d["target_mean"]), np.array(d["target_std"]),
            tuple(d["log_targets"]),
            None if d.get("target_iqr") is None else np.array(d["target_iqr"]),
        )


def _features_of(obj) -> np.ndarray:
    if isinstance(obj, np.ndarray):
        return np.atleast_2d(obj).astype(float)
    return as_arrays(obj)[0]


def _targets_of(obj) -> np.ndarray:
    if isinstance(obj, np.ndarray):
        return np.atleast_2d(obj).astype(float)
    return as_arrays(obj)[1]


def _mean_std(cols: np.ndarray):
    mean = cols.mean(axis=0)
    std = cols.std(axis=0)
    const = np.ptp(cols, axis=0) == 0
    # constant columns: centre on the value itself so the transform is exactly 0
    mean = np.where(const, cols[0], mean)
    std = np.where(const | (std < STD_FLOOR), STD_FLOOR, std)
    return mean, std


def fit_standardizer(train_records: Sequence[DeviceRecord]) -> Standardizer:
    """Fit on the training split only; binary indicators are left untouched."""
    if not train_records:
        raise UsageError("cannot fit a standardizer on an empty split")
    from .analysis import iqr

    x, y = as_arrays(train_records)
    nc = len(CONTINUOUS)
    f_mean, f_std = _mean_std(x[:, :nc])
    ylog = y.copy()
    ylog[:, 5] = np.log(ylog[:, 5])
    t_mean, t_std = _mean_std(ylog)
    target_iqr = np.array([iqr(y[:, t]) for t in range(y.shape[1])]) if len(y) >= 2 else None
    return Standardizer(f_mean, f_std, t_mean, t_std, LOG_TARGETS, target_iqr)


# -- splitting -------------------------------------------------------------------

@dataclass(frozen=True)
class SplitAssignment:
    train: Tuple[int, ...]
    val: Tuple[int, ...]
    test: Tuple[int, ...]
    seed: int

    def select(self, records, which: str):
        return [records[i] for i in getattr(self, which)]


def split(records_or_n, ratios=(0.6, 0.2, 0.2), seed: int = 0) -> SplitAssignment:
    """Seeded random split with sizes floor(r0 N), floor(r1 N), remainder."""
    n = records_or_n if isinstance(records_or_n, (int, np.integer)) else len(records_or_n)
    if n < 3:
        raise UsageError(f"need at least 3 records to split, got {n}")
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise UsageError(f"split ratios must be three nonnegative numbers summing to 1, got {ratios}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(ratios[0] * n))
    n_val = int(math.floor(ratios[1] * n))
    return SplitAssignment(
        tuple(int(i) for i in perm[:n_train]),
        tuple(int(i) for i in perm[n_train:n_train + n_val]),
        tuple(int(i) for i in perm[n_train + n_val:]),
        seed,
    )


# -- synthetic generator -------------------------------------------------------------

GENERATOR_VERSION = "synth-v1"

# (remaining AlGaN nm, wet clean, plasma, dielectric, PDA) per process split
PROCESS_SPLITS = (
    (13.6, "a", "a", "sin_peald_15", "fg_700"),
    (13.6, "a", "b", "sin_peald_15", "fg_700"),
    (13.6, "a", "c", "sin_peald_15", "fg_700"),
    (13.6, "a", "d", "sin_peald_15", "fg_700"),
    (13.6, "a", "e", "sin_peald_15", "fg_700"),
    (3.7, "a", "a", "sin_peald_15", "fg_700"),
    (3.7, "a", "a", "sin_peald_25", "fg_700"),
    (3.7, "a", "e", "sin_peald_25", "fg_700"),
    (5.9, "b", "a", "sin_rtcvd_15", "fg_700"),
    (3.7, "b", "a", "sin_rtcvd_15", "fg_700"),
    (1.5, "b", "a", "sin_rtcvd_15", "fg_700"),
    (3.7, "a", "f", "al2o3_h2o_15", "fg_700"),
    (3.7, "a", "f", "al2o3_h2o_15", "o2_500"),
    (3.7, "a", "h", "al2o3_h2o_15", "fg_700"),
    (3.7, "a", "g", "al2o3_h2o_25", "fg_700"),
    (3.7, "a", "i", "al2o3_h2o_25", "fg_700"),
    (3.7, "a", "g", "al2o3_o3_15", "fg_700"),
)

# Coefficient table for GENERATOR_VERSION.  Changing any number here requires
# bumping the version string (a regression test pins a digest of the output).
SYNTH_COEFFS = {
    "barrier_nm": 18.0,
    "ale_nm_per_cycle": 0.45,
    "die_radius": 6,
    # dielectric: vth shift (V), hysteresis (V), log-SS shift, log-Ioff shift
    "dielectric": {
        "sin_peald_15": (0.00, 0.08, 0.00, 0.0),
        "sin_peald_25": (0.35, 0.16, 0.12, -0.6),
        "sin_rtcvd_15": (0.15, 0.05, -0.10, -0.3),
        "al2o3_h2o_15": (0.60, 0.30, 0.22, 0.8),
        "al2o3_h2o_25": (0.95, 0.42, 0.30, 0.4),
        "al2o3_o3_15": (0.75, 0.22, 0.15, 1.2),
    },
    # plasma: vth shift (V), log-Ioff shift, surface damage (0..1)
    "plasma": {
        "a": (0.00, 0.0, 0.00),
        "b": (0.10, -0.4, 0.10),
        "c": (0.05, 0.3, 0.20),
        "d": (0.22, 0.7, 0.50),
        "e": (0.12, 1.1, 0.70),
        "f": (0.25, -0.6, 0.20),
        "g": (0.32, -1.0, 0.10),
        "h": (0.15, 0.2, 0.30),
        "i": (0.18, 0.5, 0.40),
    },
    "wet": {"a": (0.00, 0.0), "b": (-0.10, 0.3)},  # vth shift, log-Ioff shift
    "pda": {"fg_700": (0.00, 0.00), "o2_500": (0.25, -0.10)},  # vth shift, hysteresis shift
    # residual per-split vth offsets (V), P01..P17
    "split_vth": (0.05, -0.04, 0.08, -0.06, 0.02, -0.10, 0.07, -0.03, 0.11,
                  -0.08, 0.04, -0.02, 0.09, -0.07, 0.03, -0.05, 0.06),
    "vth": {"base": 0.4, "recess_gain": 0.9, "recess_ref": 10.0, "recess_scale": 4.0,
            "x": 0.05, "y": -0.03, "interaction": 0.6, "noise": 0.04},
    "hyst": {"base": 0.04, "damage": 0.15, "x": 0.004, "noise": 0.01},
    "ss": {"base_mv_dec": 85.0, "recess": 0.015, "damage": 0.6, "y": 0.01, "noise": 0.03},
    "ion": {"base_a": 0.35, "recess": -0.05, "damage": -0.5, "x": 0.01, "noise": 0.03},
    "ioff": {"base_a": 1e-8, "damage_sin": 0.8, "x": 0.05, "sigma": 0.10, "sigma_damage": 0.25},
    "recess_xy": (0.04, -0.03),
    "recess_noise": 0.15,
    "remaining_noise": 0.10,
}


def _round12(v: float) -> float:
    return float(format(v, ".12g"))


def _die_sites(radius: int):
    return [(x, y) for x in range(-radius, radius + 1) for y in range(-radius, radius + 1)
            if x * x + y * y <= radius * radius]


def _onehot_bits(wet, plasma, dielectric, pda):
    chosen = {"wet_clean": wet, "plasma": plasma, "dielectric": dielectric, "pda": pda}
    return tuple(1 if name.split("__")[1] == chosen[name.split("__")[0]] else 0 for name in ONEHOT)


def synthesize(n: int, seed: int = 0) -> List[DeviceRecord]:
    """Draw ``n`` synthetic devices spread evenly over the 17 process splits.

    Targets are smooth nonlinear functions of the process choices, recess
    depth and die position, plus Gaussian noise; I_off is log-normal with a
    plasma-damage dependent spread.  All values are rounded to 12 significant
    digits so CSV round-trips are exact.
    """
    if n < 1:
        raise UsageError(f"need at least one record, got {n}")
    c = SYNTH_COEFFS
    rng = np.random.default_rng(seed)
    sites = _die_sites(c["die_radius"])
    split_of = rng.permutation(np.arange(n) % len(PROCESS_SPLITS))
    records = []
    for s in split_of:
        remaining_nom, wet, plasma, diel, pda = PROCESS_SPLITS[s]
        x, y = sites[rng.integers(len(sites))]
        etch = c["barrier_nm"] - remaining_nom
        recess = etch + c["recess_xy"][0] * x + c["recess_xy"][1] * y + rng.normal(0, c["recess_noise"])
        remaining = c["barrier_nm"] - recess + rng.normal(0, c["remaining_noise"])
        cycles = float(round(etch / c["ale_nm_per_cycle"]))

        d_vth, d_hyst, d_ss, d_ioff = c["dielectric"][diel]
        p_vth, p_ioff, damage = c["plasma"][plasma]
        w_vth, w_ioff = c["wet"][wet]
        a_vth, a_hyst = c["pda"][pda]
        is_alox = diel.startswith("al2o3")

        v = c["vth"]
        vth = (v["base"] + v["recess_gain"] * math.tanh((recess - v["recess_ref"]) / v["recess_scale"])
               + d_vth + p_vth + w_vth + a_vth + c["split_vth"][s]
               + v["x"] * x + v["y"] * y + v["interaction"] * damage * is_alox
               + rng.normal(0, v["noise"]))
        h = c["hyst"]
        hyst = h["base"] + d_hyst + a_hyst + h["damage"] * damage + h["x"] * x + rng.normal(0, h["noise"])
        fwd = _round12(vth)
        rev = _round12(vth + hyst)
        dvth = _round12(rev - fwd)

        k = c["ss"]
        ss = k["base_mv_dec"] * math.exp(k["recess"] * (recess - 10.0) + d_ss + k["damage"] * damage
                                         + k["y"] * y + rng.normal(0, k["noise"]))
        k = c["ion"]
        ion = k["base_a"] * math.exp(k["recess"] * (recess - 10.0) + k["damage"] * damage
                                     + k["x"] * x + rng.normal(0, k["noise"]))
        k = c["ioff"]
        sigma = k["sigma"] + k["sigma_damage"] * damage
        ioff = k["base_a"] * math.exp(d_ioff + p_ioff + w_ioff + k["damage_sin"] * damage * (not is_alox)
                                      + k["x"] * x + rng.normal(0, sigma))
        records.append(DeviceRecord(
            (float(x), float(y), cycles, _round12(remaining), _round12(recess)),
            _onehot_bits(wet, plasma, diel, pda),
            (fwd, rev, dvth, _round12(ss), _round12(ion), _round12(ioff)),
        ))
    return records


def process_split_index(record: DeviceRecord) -> int:
    """Index of the entry in PROCESS_SPLITS whose categorical choices match ``record``.

    Splits P09-P11 share categorical choices; they are told apart by ALE cycle count.
    """
    key = tuple(record.group_value(g) for g in ("wet_clean", "plasma", "dielectric", "pda"))
    cycles = record.continuous[2]
    best = None
    for i, (rem, wet, plasma, diel, pda) in enumerate(PROCESS_SPLITS):
        if (wet, plasma, diel, pda) != key:
            continue
        expected = round((SYNTH_COEFFS["barrier_nm"] - rem) / SYNTH_COEFFS["ale_nm_per_cycle"])
        if expected == cycles:
            return i
        best = i if best is None else best
    if best is None:
        raise DataError("record matches no known process split")
    return best


@dataclass
class PreparedData:
    """Standardized arrays for one train/val/test assignment."""

    standardizer: Standardizer
    assignment: SplitAssignment
    x: dict  # split name -> (N, 24) standardized features
    y: dict  # split name -> (N, 6) standardized targets
    y_raw: dict  # split name -> (N, 6) original units

    def arrays(self, which: str):
        return self.x[which], self.y[which]


def prepare(records: Sequence[DeviceRecord], split_seed: int = 0, ratios=(0.6, 0.2, 0.2)) -> PreparedData:
    assignment = split(records, ratios, split_seed)
    train = assignment.select(records, "train")
    std = fit_standardizer(train)
    x, y, y_raw = {}, {}, {}
    for which in ("train", "val", "test"):
        part = assignment.select(records, which)
        x[which] = std.transform_features(part) if part else np.zeros((0, NUM_FEATURES))
        y[which] = std.transform_targets(part) if part else np.zeros((0, len(TARGETS)))
        y_raw[which] = as_arrays(part)[1]
    return PreparedData(std, assignment, x, y, y_raw)
