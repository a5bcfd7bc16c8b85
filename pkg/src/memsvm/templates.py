"""Policies for picking the P template vectors stored in the crossbar.

Every policy returns a d x P matrix whose entries are device ladder levels,
so programming the crossbar reproduces the templates exactly.
"""
from __future__ import annotations

import enum
import re
from pathlib import Path

import numpy as np

from .crossbar import snap_to_ladder
from .device import DeviceParams, state_ladder
from .errors import DataError, ParameterError


class TemplateSource(str, enum.Enum):
    LADDER_RANDOM = "ladder_random"
    DATA_MEDOIDS = "data_medoids"
    FILE = "file"


def k_medoids(points: np.ndarray, k: int, seed=None, max_iter: int = 100) -> np.ndarray:
    """Indices of k medoids by alternating assignment / medoid update.

    Seeding is k-means++ style on squared distances. Returned indices are
    sorted.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if not 1 <= k <= n:
        raise DataError(f"cannot pick {k} medoids from {n} points")
    if k == n:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    dist = np.sqrt(np.maximum(
        (points * points).sum(1)[:, None] + (points * points).sum(1)[None, :] - 2.0 * points @ points.T, 0.0
    ))
    medoids = [int(rng.integers(n))]
    for _ in range(1, k):
        d2 = dist[:, medoids].min(axis=1) ** 2
        d2[medoids] = 0.0
        if d2.sum() <= 0:
            rest = np.setdiff1d(np.arange(n), medoids)
            medoids.append(int(rng.choice(rest)))
        else:
            medoids.append(int(rng.choice(n, p=d2 / d2.sum())))
    medoids = np.array(medoids)
    for _ in range(max_iter):
        assign = np.argmin(dist[:, medoids], axis=1)
        new = medoids.copy()
        for c in range(k):
            members = np.flatnonzero(assign == c)
            if members.size:
                new[c] = members[np.argmin(dist[np.ix_(members, members)].sum(axis=1))]
        if np.array_equal(np.sort(new), np.sort(medoids)):
            break
        medoids = new
    return np.sort(medoids)


def load_template_file(path) -> np.ndarray:
    """Text matrix, one row per feature, values separated by commas or whitespace."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([float(v) for v in re.split(r"[,\s]+", line) if v])
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric template entry") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise DataError(f"{path}: template file must be a non-empty rectangular matrix")
    return np.array(rows)


def choose_templates(
    params: DeviceParams,
    d: int,
    P: int,
    seed=None,
    source: TemplateSource | str = TemplateSource.LADDER_RANDOM,
    features: np.ndarray | None = None,
    path=None,
) -> np.ndarray:
    """Return a d x P template matrix on the device ladder.

    ladder_random  every entry drawn uniformly from the ladder levels
    data_medoids   k-medoids of the (normalised) training ``features``,
                   rescaled from [0, 1] to [g_min, g_max] and snapped
    file           matrix read from ``path``, snapped
    """
    source = TemplateSource(source)
    if P < 1 or d < 1:
        raise ParameterError(f"need d >= 1 and P >= 1, got d={d}, P={P}")
    if source is TemplateSource.LADDER_RANDOM:
        ladder = state_ladder(params)
        return ladder[np.random.default_rng(seed).integers(0, ladder.size, size=(d, P))]
    if source is TemplateSource.DATA_MEDOIDS:
        if features is None:
            raise ParameterError("data_medoids needs the training features")
        features = np.asarray(features, dtype=float)
        if features.ndim != 2 or features.shape[1] != d:
            raise DataError(f"features have shape {features.shape}, expected (N, {d})")
        idx = k_medoids(features, P, seed)
        cols = params.g_min + np.clip(features[idx].T, 0.0, 1.0) * params.g_range
        return snap_to_ladder(cols, params)
    if path is None:
        raise ParameterError("file source needs a path")
    matrix = load_template_file(path)
    if matrix.shape != (d, P):
        raise DataError(f"{path}: template matrix is {matrix.shape}, expected {(d, P)}")
    if np.any(matrix < params.g_min) or np.any(matrix > params.g_max):
        raise DataError(f"{path}: template entries outside [{params.g_min}, {params.g_max}]")
    return snap_to_ladder(matrix, params)
