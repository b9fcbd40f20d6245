"""Labeled feature vectors and the operations that shape them.

A Measurement is the concatenation of all per-event sample series captured
during one workload run. Datasets are immutable after construction: every
operation returns a new value.

File format: one self-describing JSON header line, then one CSV row per
measurement (`label,feature_0,...`), floats at 9 significant digits.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .events import EVENT_KINDS
from .collector import RawTraceSet

FILE_FORMAT = "perfprint-dataset"
FILE_VERSION = 1


@dataclass(frozen=True)
class Measurement:
    label: str
    features: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(
            self, "features", np.asarray(self.features, dtype=np.float64)
        )
        if self.features.ndim != 1:
            raise DataError("measurement features must be a 1-D vector")


@dataclass(frozen=True)
class NormParams:
    """Per-feature min/max fitted on a training set."""

    feature_min: np.ndarray
    feature_max: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "feature_min", np.asarray(self.feature_min, dtype=np.float64))
        object.__setattr__(self, "feature_max", np.asarray(self.feature_max, dtype=np.float64))
        if self.feature_min.shape != self.feature_max.shape:
            raise DataError("normalization min/max shapes differ")


@dataclass(frozen=True)
class Dataset:
    measurements: tuple[Measurement, ...]
    normalization: NormParams | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "measurements", tuple(self.measurements))
        lengths = {len(m.features) for m in self.measurements}
        if len(lengths) > 1:
            raise DataError(f"feature vectors differ in length: {sorted(lengths)}")

    def __len__(self) -> int:
        return len(self.measurements)

    @property
    def classes(self) -> list[str]:
        """Sorted unique labels; a label's position is its class index."""
        return sorted({m.label for m in self.measurements})

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def feature_length(self) -> int:
        return len(self.measurements[0].features) if self.measurements else 0

    def feature_matrix(self) -> np.ndarray:
        if not self.measurements:
            return np.zeros((0, 0))
        return np.stack([m.features for m in self.measurements])

    def labels(self) -> list[str]:
        return [m.label for m in self.measurements]

    def label_indices(self, classes: list[str] | None = None) -> np.ndarray:
        classes = self.classes if classes is None else classes
        index = {c: i for i, c in enumerate(classes)}
        try:
            return np.array([index[m.label] for m in self.measurements], dtype=np.int64)
        except KeyError as exc:
            raise DataError(f"label {exc.args[0]!r} not in class list") from exc

    def by_class(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {c: [] for c in self.classes}
        for i, m in enumerate(self.measurements):
            out[m.label].append(i)
        return out

    def subset(self, indices) -> "Dataset":
        return Dataset(
            measurements=tuple(self.measurements[i] for i in indices),
            normalization=self.normalization,
            meta=dict(self.meta),
        )


def concatenate(raw: RawTraceSet, label: str) -> Measurement:
    """Turn a raw trace set into one labeled measurement.

    Per-event series are truncated or zero-padded to the configured expected
    length, then joined in config event order.
    """
    expected = raw.config.expected_samples
    parts = []
    for name in raw.config.event_names:
        series = np.asarray(raw.counts[name], dtype=np.float64)
        if len(series) >= expected:
            parts.append(series[:expected])
        else:
            parts.append(np.concatenate([series, np.zeros(expected - len(series))]))
    return Measurement(
        label=label,
        features=np.concatenate(parts),
        meta={
            "events": raw.config.event_names,
            "samples_per_event": expected,
        },
    )


def normalize_fit(train: Dataset) -> Dataset:
    """Min-max scale each feature to [0,1], fitted on `train` only.

    Constant features map to 0. The fitted parameters travel with the
    returned dataset so they can be applied to other sets.
    """
    if not len(train):
        raise DataError("cannot fit normalization on an empty dataset")
    x = train.feature_matrix()
    params = NormParams(feature_min=x.min(axis=0), feature_max=x.max(axis=0))
    return normalize_apply(params, train)


def normalize_apply(params: NormParams, d: Dataset) -> Dataset:
    """Apply stored min-max parameters unchanged; values outside the fitted
    range map linearly past [0,1] (no clamping)."""
    if len(d) and params.feature_min.shape[0] != d.feature_length:
        raise DataError(
            f"normalization fitted on {params.feature_min.shape[0]} features, "
            f"dataset has {d.feature_length}"
        )
    span = params.feature_max - params.feature_min
    safe = np.where(span > 0, span, 1.0)
    scaled = [
        Measurement(
            label=m.label,
            features=np.where(span > 0, (m.features - params.feature_min) / safe, 0.0),
            meta=dict(m.meta),
        )
        for m in d.measurements
    ]
    return Dataset(measurements=tuple(scaled), normalization=params, meta=dict(d.meta))


def downsample(d: Dataset, factor: int) -> Dataset:
    """Replace each block of `factor` consecutive features by its mean.

    A trailing partial block is averaged over its actual size; the new
    length is ceil(old / factor). Factor 1 is the identity.
    """
    if factor < 1:
        raise ConfigError(f"downsample factor must be >= 1, got {factor}")
    if factor == 1 or not len(d):
        return d
    length = d.feature_length
    starts = np.arange(0, length, factor)
    sizes = np.minimum(starts + factor, length) - starts
    out = []
    for m in d.measurements:
        sums = np.add.reduceat(m.features, starts)
        out.append(Measurement(label=m.label, features=sums / sizes, meta=dict(m.meta)))
    meta = dict(d.meta)
    meta["downsample_factor"] = meta.get("downsample_factor", 1) * factor
    return Dataset(measurements=tuple(out), normalization=None, meta=meta)


def split(
    d: Dataset, n_train_per_class: int, n_test_per_class: int, seed: int
) -> tuple[Dataset, Dataset]:
    """Disjoint per-class train/test sampling, deterministic under seed."""
    if n_train_per_class < 1 or n_test_per_class < 1:
        raise ConfigError("split sizes must be >= 1")
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for label, indices in d.by_class().items():
        needed = n_train_per_class + n_test_per_class
        if len(indices) < needed:
            raise DataError(
                f"class {label!r} has {len(indices)} measurements, "
                f"needs {needed} for a {n_train_per_class}/{n_test_per_class} split"
            )
        perm = rng.permutation(len(indices))
        chosen = [indices[p] for p in perm]
        train_idx.extend(chosen[:n_train_per_class])
        test_idx.extend(chosen[n_train_per_class:needed])
    return d.subset(sorted(train_idx)), d.subset(sorted(test_idx))


def kfold(d: Dataset, k: int, seed: int) -> list[tuple[Dataset, Dataset]]:
    """Stratified k folds: each measurement validates in exactly one fold."""
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    fold_members: list[list[int]] = [[] for _ in range(k)]
    for label, indices in d.by_class().items():
        if len(indices) < k:
            raise DataError(
                f"class {label!r} has {len(indices)} measurements, fewer than k={k}"
            )
        perm = rng.permutation(len(indices))
        for j, p in enumerate(perm):
            fold_members[j % k].append(indices[p])
    folds = []
    for i in range(k):
        validation = set(fold_members[i])
        train = [j for j in range(len(d)) if j not in validation]
        folds.append((d.subset(train), d.subset(sorted(validation))))
    return folds


def _format_feature(value: float) -> str:
    return format(value, ".9g")


def _header_dict(d: Dataset) -> dict:
    row_meta = [m.meta for m in d.measurements]
    header = {
        "format": FILE_FORMAT,
        "version": FILE_VERSION,
        "feature_length": d.feature_length,
        "classes": d.classes,
        "scenario": d.meta.get("scenario"),
        "events": d.meta.get("events"),
        "samples_per_event": d.meta.get("samples_per_event"),
        "meta": {
            k: v
            for k, v in d.meta.items()
            if k not in ("scenario", "events", "samples_per_event")
        },
        "normalization": None,
        "row_meta": row_meta if any(row_meta) else None,
    }
    if d.normalization is not None:
        header["normalization"] = {
            "min": d.normalization.feature_min.tolist(),
            "max": d.normalization.feature_max.tolist(),
        }
    return header


def save(d: Dataset, path: str):
    for m in d.measurements:
        if "," in m.label or "\n" in m.label:
            raise DataError(f"label {m.label!r} contains a reserved character")
    with open(path, "w") as fh:
        fh.write(json.dumps(_header_dict(d), separators=(",", ":")) + "\n")
        for m in d.measurements:
            fh.write(m.label + "," + ",".join(map(_format_feature, m.features)) + "\n")


def load(path: str) -> Dataset:
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError(f"{path}: empty dataset file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: line 1: malformed header: {exc}") from exc
    if header.get("format") != FILE_FORMAT:
        raise DataError(f"{path}: not a {FILE_FORMAT} file")
    if header.get("version") != FILE_VERSION:
        raise DataError(f"{path}: unsupported version {header.get('version')!r}")

    events = header.get("events")
    if events is not None:
        for name in events:
            if name not in EVENT_KINDS:
                raise DataError(f"{path}: header references unknown event {name!r}")

    length = header.get("feature_length")
    row_meta = header.get("row_meta")
    measurements = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split(",")
        label = fields[0]
        if len(fields) - 1 != length:
            raise DataError(
                f"{path}: line {lineno} (label {label!r}): expected "
                f"{length} features, found {len(fields) - 1}"
            )
        try:
            features = np.array(fields[1:], dtype=np.float64)
        except ValueError as exc:
            raise DataError(f"{path}: line {lineno}: non-numeric feature: {exc}") from exc
        meta = {}
        if row_meta is not None:
            meta = row_meta[len(measurements)]
        measurements.append(Measurement(label=label, features=features, meta=meta))

    classes = sorted({m.label for m in measurements})
    if header.get("classes") and classes != sorted(header["classes"]):
        raise DataError(
            f"{path}: header classes {header['classes']} do not match rows {classes}"
        )

    normalization = None
    if header.get("normalization") is not None:
        normalization = NormParams(
            feature_min=np.array(header["normalization"]["min"], dtype=np.float64),
            feature_max=np.array(header["normalization"]["max"], dtype=np.float64),
        )
    meta = dict(header.get("meta") or {})
    for key in ("scenario", "events", "samples_per_event"):
        if header.get(key) is not None:
            meta[key] = header[key]
    return Dataset(measurements=tuple(measurements), normalization=normalization, meta=meta)


def append_measurement(path: str, m: Measurement, dataset_meta: dict | None = None):
    """Append one measurement to a trace file, creating it if needed.

    The header's class list and row metadata are rewritten; feature length
    must match what the file already holds.
    """
    if os.path.exists(path):
        d = load(path)
        if len(d) and d.feature_length != len(m.features):
            raise DataError(
                f"{path}: holds {d.feature_length}-feature rows, "
                f"cannot append {len(m.features)}"
            )
        merged_meta = dict(d.meta)
        merged_meta.update(dataset_meta or {})
        d = Dataset(
            measurements=d.measurements + (m,),
            normalization=d.normalization,
            meta=merged_meta,
        )
    else:
        d = Dataset(measurements=(m,), meta=dict(dataset_meta or {}))
    save(d, path)
