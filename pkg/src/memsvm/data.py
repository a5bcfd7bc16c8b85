"""Dataset loading, min-max normalisation, splitting and synthetic blobs."""
from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DataError, ParameterError, ParseError, SchemaError

log = logging.getLogger(__name__)

MISSING_TOKENS = {"", "?", "na", "nan", "null"}

SYNTHETIC_KINDS = {
    # kind: (n_samples, n_features, n_classes)
    "two_class_100x2": (100, 2, 2),
    "three_class_100x3": (100, 3, 3),
    "nine_class_1000x9": (1000, 9, 9),
}
# blob centres sit on scaled unit vectors; pairwise distance = 8 standard deviations
BLOB_SEPARATION = 8.0


@dataclass(frozen=True)
class Normalization:
    mins: np.ndarray
    maxs: np.ndarray

    def transform(self, features: np.ndarray) -> np.ndarray:
        span = self.maxs - self.mins
        safe = np.where(span > 0, span, 1.0)
        out = (np.asarray(features, dtype=float) - self.mins) / safe
        out[..., span <= 0] = 0.0
        return np.clip(out, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"mins": self.mins.tolist(), "maxs": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Normalization":
        mins = np.asarray(doc["mins"], dtype=float)
        maxs = np.asarray(doc["maxs"], dtype=float)
        if mins.shape != maxs.shape or mins.ndim != 1 or np.any(maxs < mins):
            raise SchemaError("normalization needs equal-length mins/maxs with max >= min")
        return cls(mins, maxs)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (N, d)
    labels: np.ndarray  # (N,) ints in [0, c-1]
    label_names: tuple[str, ...]
    feature_names: tuple[str, ...] | None = None
    normalization: Normalization | None = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "label_names", tuple(str(n) for n in self.label_names))
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise DataError(f"features must be N x d with N, d >= 1, got {features.shape}")
        if labels.shape != (features.shape[0],):
            raise DataError(f"{labels.shape[0] if labels.ndim else 0} labels for {features.shape[0]} rows")
        if len(self.label_names) < 2:
            raise DataError("need at least 2 classes")
        if labels.min() < 0 or labels.max() >= len(self.label_names):
            raise DataError("label index outside [0, c-1]")
        if not np.all(np.isfinite(features)):
            raise DataError("features contain non-finite values")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return replace(self, features=self.features[index], labels=self.labels[index])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


def _resolve_label_column(label_column, header: list[str] | None, width: int) -> int:
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if header is None:
            raise SchemaError(f"label column {label_column!r} given by name but the file has no header")
        names = [h.strip() for h in header]
        if label_column not in names:
            raise SchemaError(f"label column {label_column!r} not in header {names}")
        return names.index(label_column)
    idx = int(label_column)
    if not -width <= idx < width:
        raise SchemaError(f"label column index {idx} out of range for {width} columns")
    return idx % width


def load_csv(path, label_column=-1, header: bool = True, delimiter: str = ",") -> Dataset:
    """Read a delimited file into a Dataset.

    Labels are mapped to 0, 1, ... in order of first appearance. Rows with
    a missing cell (empty, ``?``, ``NA``) are dropped with a warning; any
    other non-numeric feature cell is a ParseError carrying the 1-based
    line and column.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if any(c.strip() for c in r)]
    if not rows:
        raise SchemaError(f"{path}: empty file")
    head = rows.pop(0) if header else None
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    width = len(head) if head is not None else len(rows[0])
    lab = _resolve_label_column(label_column, head, width)
    feat_cols = [j for j in range(width) if j != lab]
    if not feat_cols:
        raise SchemaError(f"{path}: no feature columns")

    label_map: dict[str, int] = {}
    feats, labels, dropped = [], [], 0
    line0 = 2 if header else 1
    for i, row in enumerate(rows):
        line = line0 + i
        if len(row) != width:
            raise ParseError(f"{path}:{line}: expected {width} columns, got {len(row)}", row=line)
        cells = [c.strip() for c in row]
        if any(cells[j].lower() in MISSING_TOKENS for j in range(width)):
            dropped += 1
            continue
        values = []
        for j in feat_cols:
            try:
                values.append(float(cells[j]))
            except ValueError:
                raise ParseError(
                    f"{path}:{line}: column {j + 1} is not numeric: {cells[j]!r}", row=line, column=j + 1
                ) from None
        feats.append(values)
        labels.append(label_map.setdefault(cells[lab], len(label_map)))
    if dropped:
        log.warning("%s: dropped %d rows with missing values", path, dropped)
    if not feats:
        raise SchemaError(f"{path}: every row has missing values")
    names = tuple(head[j].strip() for j in feat_cols) if head is not None else None
    return Dataset(np.array(feats), np.array(labels), tuple(label_map), feature_names=names)


def save_csv(data: Dataset, path, header: bool = True) -> None:
    """Write features plus a trailing ``label`` column holding the label names."""
    names = data.feature_names or tuple(f"x{j}" for j in range(data.n_features))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([*names, "label"])
        for row, lab in zip(data.features, data.labels):
            w.writerow([repr(float(v)) for v in row] + [data.label_names[lab]])


def fit_normalization(features: np.ndarray) -> Normalization:
    features = np.asarray(features, dtype=float)
    return Normalization(features.min(axis=0), features.max(axis=0))


def normalize(data: Dataset) -> Dataset:
    """Min-max scale every feature to [0, 1] and record the (min, max) pairs.

    Constant features map to 0.
    """
    norm = fit_normalization(data.features)
    return replace(data, features=norm.transform(data.features), normalization=norm)


def apply_normalization(data: Dataset, norm: Normalization) -> Dataset:
    """Transform with previously fitted (min, max); out-of-range values are clamped."""
    if norm.mins.shape[0] != data.n_features:
        raise DataError(f"normalization is for {norm.mins.shape[0]} features, data has {data.n_features}")
    return replace(data, features=norm.transform(data.features), normalization=norm)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ParameterError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _stratified_counts(counts: np.ndarray, n_train: int) -> np.ndarray:
    """Largest-remainder allocation of n_train over classes, keeping both sides populated."""
    quota = counts * (n_train / counts.sum())
    alloc = np.floor(quota).astype(int)
    order = np.argsort(-(quota - alloc), kind="stable")
    for k in order[: n_train - alloc.sum()]:
        alloc[k] += 1
    for k, n in enumerate(counts):
        if n == 1:
            alloc[k] = 1
        elif n > 1:
            alloc[k] = min(max(alloc[k], 1), n - 1)
    return alloc


def split_indices(labels: np.ndarray, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    labels = np.asarray(labels)
    n = labels.size
    if n < 2:
        raise DataError("need at least 2 samples to split")
    rng = np.random.default_rng(spec.seed)
    n_train = min(max(_round_half_up(spec.train_fraction * n), 1), n - 1)
    if not spec.stratified:
        perm = rng.permutation(n)
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])
    classes = np.unique(labels)
    counts = np.array([(labels == k).sum() for k in classes])
    for k, c in zip(classes, counts):
        if c == 1:
            log.warning("class %s has a single sample; it goes to the training split", k)
    alloc = _stratified_counts(counts, n_train)
    train, test = [], []
    for k, a in zip(classes, alloc):
        idx = rng.permutation(np.flatnonzero(labels == k))
        train.append(idx[:a])
        test.append(idx[a:])
    train_idx, test_idx = np.sort(np.concatenate(train)), np.sort(np.concatenate(test))
    if test_idx.size == 0:
        raise DataError("stratified split left the test set empty")
    return train_idx, test_idx


def split(data: Dataset, spec: SplitSpec = SplitSpec()) -> tuple[Dataset, Dataset]:
    train_idx, test_idx = split_indices(data.labels, spec)
    return data.subset(train_idx), data.subset(test_idx)


def gen_synthetic(kind: str, seed: int = 0) -> Dataset:
    """Separable Gaussian blobs, one per class, unit variance.

    Class k is centred on ``s * e_k`` with s chosen so every pair of centres
    is BLOB_SEPARATION standard deviations apart. Every kind has as many
    features as classes.
    """
    if kind not in SYNTHETIC_KINDS:
        raise ParameterError(f"unknown synthetic kind {kind!r}; choose from {sorted(SYNTHETIC_KINDS)}")
    n, d, c = SYNTHETIC_KINDS[kind]
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % c
    centres = np.eye(c, d) * (BLOB_SEPARATION / math.sqrt(2.0))
    features = centres[labels] + rng.standard_normal((n, d))
    perm = rng.permutation(n)
    return Dataset(
        features[perm],
        labels[perm],
        tuple(f"class{k}" for k in range(c)),
        feature_names=tuple(f"x{j}" for j in range(d)),
    )


def _read_arem_file(path: Path) -> np.ndarray:
    rows = []
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c for c in re.split(r"[,\s]+", line) if c]
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise ParseError(f"{path}: non-numeric row {raw!r}") from None
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    arr = np.array(rows)
    # first column is the window timestamp
    return arr[:, 1:]


def load_arem(root) -> Dataset:
    """Load the AReM per-window summary features from its directory layout.

    Each activity directory (``bending1``, ``lying``, ...) holds ``*.csv``
    files; trailing digits in the directory name are dropped, so
    ``bending1`` and ``bending2`` share one label. Labels are sorted by name.
    """
    root = Path(root)
    if not root.is_dir():
        raise SchemaError(f"AReM root {root} is not a directory")
    blocks: dict[str, list[np.ndarray]] = {}
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        files = sorted(sub.glob("*.csv"))
        if not files:
            continue
        activity = re.sub(r"\d+$", "", sub.name)
        blocks.setdefault(activity, []).extend(_read_arem_file(f) for f in files)
    if len(blocks) < 2:
        raise SchemaError(f"{root}: found {len(blocks)} activity directories, need >= 2")
    names = tuple(sorted(blocks))
    feats, labels = [], []
    for k, name in enumerate(names):
        for block in blocks[name]:
            feats.append(block)
            labels.append(np.full(block.shape[0], k))
    widths = {f.shape[1] for f in feats}
    if len(widths) != 1:
        raise SchemaError(f"{root}: inconsistent feature counts {sorted(widths)}")
    return Dataset(np.vstack(feats), np.concatenate(labels), names)


def one_vs_rest(data: Dataset, positive: str) -> Dataset:
    """Binary view of a multiclass dataset: ``positive`` becomes class 0, the rest class 1."""
    if positive not in data.label_names:
        raise DataError(f"class {positive!r} not in {data.label_names}")
    k = data.label_names.index(positive)
    labels = np.where(data.labels == k, 0, 1)
    return replace(data, labels=labels, label_names=(positive, "rest"))
