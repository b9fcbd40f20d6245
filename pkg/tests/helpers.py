"""Shared builders for the test suite."""

import numpy as np

from perfprint.dataset import Dataset, Measurement


def build_dataset(rows, labels, meta=None) -> Dataset:
    return Dataset(
        measurements=tuple(
            Measurement(label=label, features=np.asarray(row, dtype=np.float64))
            for row, label in zip(rows, labels)
        ),
        meta=dict(meta or {}),
    )


def random_dataset(rng, n_classes, per_class, n_features, spread=4.0) -> Dataset:
    """Gaussian class clusters; labels are class-00, class-01, ..."""
    rows, labels = [], []
    for c in range(n_classes):
        center = rng.normal(scale=spread, size=n_features)
        for _ in range(per_class):
            rows.append(center + rng.normal(size=n_features))
            labels.append(f"class-{c:02d}")
    return build_dataset(rows, labels)
