"""Dataset ingestion, planted-factor synthetic data and the noise model.

CSV files are row-per-sample; internally ``X`` is column-per-sample (M x N).
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DatasetError, DimensionError, NonnegativityError, ParseError
from .nmf import as_data_matrix

log = logging.getLogger(__name__)


@dataclass
class LabeledDataset:
    X: np.ndarray
    labels: np.ndarray
    name: str = "dataset"
    class_names: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.shape != (self.X.shape[1],):
            raise DimensionError(
                f"{self.labels.shape[0]} labels for {self.X.shape[1]} samples")

    @property
    def class_count(self):
        return int(np.unique(self.labels).size)

    @property
    def n_samples(self):
        return self.X.shape[1]

    def subset(self, classes):
        """Samples belonging to ``classes``, relabelled densely in the given order."""
        classes = list(classes)
        mask = np.isin(self.labels, classes)
        remap = {c: i for i, c in enumerate(classes)}
        labels = np.array([remap[c] for c in self.labels[mask]], dtype=np.int64)
        names = [self.class_names[c] for c in classes] if self.class_names else []
        return LabeledDataset(self.X[:, mask], labels, self.name, names)


@dataclass
class PlantedInstance:
    dataset: LabeledDataset
    W: np.ndarray
    H: np.ndarray
    outliers: np.ndarray


def _parse_float(text):
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _dense_labels(raw):
    uniq = sorted(set(raw))
    numeric = [_parse_float(u) for u in uniq]
    if all(v is not None for v in numeric):
        uniq = [u for _, u in sorted(zip(numeric, uniq))]
    index = {u: i for i, u in enumerate(uniq)}
    return np.array([index[r] for r in raw], dtype=np.int64), uniq


def load_csv(path, label_column=-1, delimiter=",", drop_columns=(), name=None):
    """Read a labelled, row-per-sample CSV file.

    ``label_column`` is a 0-based index (negative counts from the end) or a
    header name.  A header row is detected when any feature cell of the
    first row is not a number.  ``drop_columns`` lists further columns
    (indices or names) to ignore, e.g. a sample id.  If any feature is
    negative the whole matrix is shifted by its minimum and a warning is
    recorded.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh, delimiter=delimiter) if any(c.strip() for c in r)]
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DatasetError(f"{path} is empty")

    width = len(rows[0])
    header = None

    def resolve(col, names):
        if isinstance(col, str) and _parse_float(col) is None:
            if names is None or col not in names:
                raise DatasetError(f"column {col!r} not found in header")
            return names.index(col)
        idx = int(col)
        if not -width <= idx < width:
            raise DatasetError(f"column index {idx} out of range for {width} columns")
        return idx % width

    def is_name(col):
        return isinstance(col, str) and _parse_float(col) is None

    first = [c.strip() for c in rows[0]]
    if is_name(label_column) or any(is_name(c) for c in drop_columns):
        header = first
    else:
        skip = {resolve(label_column, None)} | {resolve(c, None) for c in drop_columns}
        if any(_parse_float(c) is None for j, c in enumerate(first) if j not in skip):
            header = first
    label_idx = resolve(label_column, header)
    drop = {resolve(c, header) for c in drop_columns}
    body = rows[1:] if header is not None else rows
    start = 2 if header is not None else 1
    if not body:
        raise DatasetError(f"{path} has no data rows")

    feat_idx = [j for j in range(width) if j != label_idx and j not in drop]
    if not feat_idx:
        raise DatasetError(f"{path} has no feature columns")
    data = np.empty((len(body), len(feat_idx)))
    raw_labels = []
    for r, row in enumerate(body):
        if len(row) != width:
            raise ParseError(f"row {r + start}: expected {width} fields, got {len(row)}",
                             row=r + start)
        for k, j in enumerate(feat_idx):
            value = _parse_float(row[j])
            if value is None:
                raise ParseError(
                    f"row {r + start}, column {j + 1}: cannot parse {row[j]!r} as a number",
                    row=r + start, column=j + 1)
            data[r, k] = value
        raw_labels.append(row[label_idx].strip())

    warnings = []
    lo = data.min()
    if lo < 0:
        msg = f"negative features found; shifted all values by {-lo:g}"
        log.warning("%s: %s", path, msg)
        warnings.append(msg)
        data = data - lo
    labels, class_names = _dense_labels(raw_labels)
    name = name or os.path.splitext(os.path.basename(str(path)))[0]
    return LabeledDataset(np.ascontiguousarray(data.T), labels, name, class_names, warnings)


def save_csv(dataset, path, delimiter=","):
    """Write ``dataset`` row-per-sample with the label in the last column.

    Floats are written with ``repr`` so ``load_csv`` reproduces them exactly.
    """
    M = dataset.X.shape[0]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow([f"f{i}" for i in range(M)] + ["label"])
        for j in range(dataset.n_samples):
            w.writerow([repr(float(v)) for v in dataset.X[:, j]] + [int(dataset.labels[j])])


def synth_planted(M, L, N, outlier_count=0, seed=0, outlier_scale=5.0):
    """Planted-factor instance ``X = W* H*`` with optional outlier columns.

    Each column of ``H*`` puts most of its mass on the block of its label.
    Outlier columns are replaced by uniform draws on ``[0, outlier_scale *
    max(X)]``; their indices are returned sorted.
    """
    M, L, N = int(M), int(L), int(N)
    if min(M, L, N) < 1 or L > min(M, N):
        raise DimensionError(f"invalid dimensions M={M}, L={L}, N={N}")
    if not 0 <= outlier_count < N:
        raise DimensionError(f"outlier_count must be in [0, N), got {outlier_count}")
    rng = np.random.default_rng(seed)
    W = rng.uniform(0.1, 1.0, size=(M, L))
    labels = rng.permutation(np.arange(N) % L)
    H = rng.uniform(0.0, 0.1, size=(L, N))
    H[labels, np.arange(N)] = rng.uniform(1.0, 2.0, size=N)
    X = W @ H
    outliers = np.sort(rng.choice(N, size=outlier_count, replace=False))
    if outlier_count:
        X[:, outliers] = rng.random((M, outlier_count)) * outlier_scale * X.max()
    ds = LabeledDataset(X, labels, f"planted-{M}x{N}-L{L}-o{outlier_count}",
                        [str(k) for k in range(L)])
    return PlantedInstance(ds, W, H, outliers)


def add_noise(X, c, seed=0):
    """Add scale-dependent Gaussian noise: ``X + c * sqrt(X) * N(0, 1)``, clamped at 0."""
    X = as_data_matrix(X)
    if not c >= 0:
        raise NonnegativityError(f"noise level must be >= 0, got {c}")
    if c == 0:
        return X.copy()
    rng = np.random.default_rng(seed)
    noisy = X + c * np.sqrt(X) * rng.standard_normal(X.shape)
    return np.maximum(noisy, 0.0)
