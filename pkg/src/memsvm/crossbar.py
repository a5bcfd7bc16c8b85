"""d x P memtransistor crossbar holding the template matrix.

Each column stores one template vector as memductances. A read applies the
input vector to the rows and returns the column sums (Kirchhoff current
summation), optionally as magnitudes the way a TIA readout sees them.
Wire resistance and sneak paths are not modelled.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .device import (
    DeviceParams,
    MemtransistorCell,
    PulseLog,
    params_from_mapping,
    params_to_mapping,
    state_ladder,
)
from .errors import RangeError, SchemaError, ShapeError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ReadoutConfig:
    noise_enabled: bool = False
    absolute_value: bool = True


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def nearest_levels(ladder: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Index of the nearest ladder level for each value; ties go to the lower level."""
    values = np.asarray(values, dtype=float)
    hi = np.clip(np.searchsorted(ladder, values, side="left"), 1, ladder.size - 1)
    lo = hi - 1
    take_lo = (values - ladder[lo]) <= (ladder[hi] - values)
    return np.where(take_lo, lo, hi)


def snap_to_ladder(values: np.ndarray, params: DeviceParams) -> np.ndarray:
    ladder = state_ladder(params)
    return ladder[nearest_levels(ladder, np.clip(values, params.g_min, params.g_max))]


@dataclass
class CrossbarArray:
    params: DeviceParams
    state_index: np.ndarray  # (d, P) int
    offsets: np.ndarray  # (d, P) float, frozen at programming time
    pulse_log: PulseLog = field(default_factory=PulseLog)

    def __post_init__(self):
        self.state_index = np.asarray(self.state_index, dtype=np.int64)
        self.offsets = np.asarray(self.offsets, dtype=float)
        if self.state_index.ndim != 2 or self.state_index.shape != self.offsets.shape:
            raise ShapeError("state_index and offsets must be equal-shaped 2-D arrays")
        if self.state_index.min(initial=0) < 0 or self.state_index.max(initial=0) >= self.params.num_states:
            raise RangeError("state index outside the device ladder")
        self._ladder = state_ladder(self.params)
        self._g = np.clip(
            self._ladder[self.state_index] + self.offsets, self.params.g_min, self.params.g_max
        )
        self._g.setflags(write=False)
        self.state_index.setflags(write=False)
        self.offsets.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.state_index.shape[0]

    @property
    def cols(self) -> int:
        return self.state_index.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.state_index.shape

    @property
    def ladder(self) -> np.ndarray:
        return self._ladder

    def conductances(self) -> np.ndarray:
        """Effective memductance matrix (d, P), offsets applied and clamped."""
        return self._g

    def cell(self, row: int, col: int) -> MemtransistorCell:
        return MemtransistorCell(int(self.state_index[row, col]), float(self.offsets[row, col]))

    def cell_pulses(self) -> np.ndarray:
        """Potentiation pulses each cell needed on its walk up from state 0."""
        return np.array(self.state_index)


def _check_target(target: np.ndarray, params: DeviceParams) -> np.ndarray:
    target = np.asarray(target, dtype=float)
    if target.ndim != 2 or 0 in target.shape:
        raise ShapeError(f"target must be a non-empty d x P matrix, got shape {target.shape}")
    bad = ~((target >= params.g_min) & (target <= params.g_max))
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise RangeError(
            f"target entry ({r}, {c}) = {target[r, c]!r} outside [{params.g_min}, {params.g_max}]",
        )
    return target


def program(target, params: DeviceParams, seed=None) -> CrossbarArray:
    """Program every cell to the ladder level nearest its target entry.

    Cells start from the reset state 0 and are walked up with potentiating
    pulses, so the log holds ``sum(state_index)`` potentiation pulses and no
    depression pulses. Programming offsets are drawn only when
    ``sigma_program > 0``.
    """
    target = _check_target(target, params)
    ladder = state_ladder(params)
    idx = nearest_levels(ladder, target)
    if params.sigma_program > 0:
        offsets = _rng(seed).normal(0.0, params.sigma_program * params.g_range, size=target.shape)
    else:
        offsets = np.zeros(target.shape)
    return CrossbarArray(params, idx, offsets, PulseLog(int(idx.sum()), 0))


def reprogram_column(xbar: CrossbarArray, col: int, target_col, seed=None) -> CrossbarArray:
    """Return a copy with column ``col`` reset to state 0 and re-programmed.

    The reset costs one depression pulse per level the old cells sat above 0.
    Other columns keep their states and offsets.
    """
    params = xbar.params
    target_col = _check_target(np.asarray(target_col, dtype=float).reshape(-1, 1), params)
    if target_col.shape[0] != xbar.rows:
        raise ShapeError(f"column has {target_col.shape[0]} entries, crossbar has {xbar.rows} rows")
    new_idx = nearest_levels(xbar.ladder, target_col[:, 0])
    idx = np.array(xbar.state_index)
    offsets = np.array(xbar.offsets)
    reset = int(idx[:, col].sum())
    idx[:, col] = new_idx
    if params.sigma_program > 0:
        offsets[:, col] = _rng(seed).normal(0.0, params.sigma_program * params.g_range, size=xbar.rows)
    else:
        offsets[:, col] = 0.0
    log = xbar.pulse_log + PulseLog(int(new_idx.sum()), reset)
    return CrossbarArray(params, idx, offsets, log)


def _check_inputs(x, rows: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[-1] != rows:
        raise ShapeError(f"input has shape {x.shape}, expected (..., {rows})")
    bad = ~((x >= 0.0) & (x <= 1.0))
    if bad.any():
        pos = tuple(int(i) for i in np.argwhere(bad)[0])
        raise RangeError(f"input entry {pos} = {x[pos]!r} outside [0, 1]")
    return x


def read_mvm(xbar: CrossbarArray, x, cfg: ReadoutConfig = ReadoutConfig(), seed=None) -> np.ndarray:
    """Column readout for one input vector (shape (d,)) or a batch (shape (n, d)).

    With ``cfg.noise_enabled`` and ``sigma_read > 0`` every cell conductance
    gets fresh Gaussian noise for every input row.
    """
    x = _check_inputs(x, xbar.rows)
    g = xbar.conductances()
    sigma = xbar.params.sigma_read * xbar.params.g_range
    if cfg.noise_enabled and sigma > 0:
        noise = _rng(seed).normal(0.0, sigma, size=x.shape[:-1] + g.shape)
        out = np.einsum("...d,...dp->...p", x, g + noise)
    else:
        out = x @ g
    return np.abs(out) if cfg.absolute_value else out


def ideal_mvm(target, x, absolute_value: bool = True) -> np.ndarray:
    """Quantisation-free readout ``|M^T x|`` on the raw target matrix."""
    target = np.asarray(target, dtype=float)
    x = np.asarray(x, dtype=float)
    if target.ndim != 2 or x.ndim not in (1, 2) or x.shape[-1] != target.shape[0]:
        raise ShapeError(f"cannot multiply input {x.shape} with target {target.shape}")
    out = x @ target
    return np.abs(out) if absolute_value else out


def crossbar_to_dict(xbar: CrossbarArray) -> dict:
    return {
        "format": "memsvm-crossbar",
        "version": FORMAT_VERSION,
        "rows": xbar.rows,
        "cols": xbar.cols,
        "device": params_to_mapping(xbar.params),
        "ladder": xbar.ladder.tolist(),
        "state_index": xbar.state_index.tolist(),
        "offsets": xbar.offsets.tolist(),
        "pulse_log": {
            "n_potentiation": xbar.pulse_log.n_potentiation,
            "n_depression": xbar.pulse_log.n_depression,
        },
    }


def crossbar_from_dict(doc: dict) -> CrossbarArray:
    if doc.get("format") != "memsvm-crossbar":
        raise SchemaError("not a crossbar document")
    dev = {k: v for k, v in doc["device"].items() if v is not None}
    mapping = {k: str(v) for k, v in dev.items() if k != "ladder_values"}
    if dev.get("ladder_values") is not None:
        mapping["ladder_values"] = ",".join(repr(float(v)) for v in dev["ladder_values"])
    params = params_from_mapping(mapping)
    xbar = CrossbarArray(
        params,
        np.asarray(doc["state_index"], dtype=np.int64).reshape(doc["rows"], doc["cols"]),
        np.asarray(doc["offsets"], dtype=float).reshape(doc["rows"], doc["cols"]),
        PulseLog(**doc["pulse_log"]),
    )
    if not np.allclose(xbar.ladder, np.asarray(doc["ladder"]), rtol=0, atol=1e-12):
        raise SchemaError("stored ladder does not match the device parameters")
    return xbar


def save_crossbar(xbar: CrossbarArray, path: str | Path) -> None:
    Path(path).write_text(json.dumps(crossbar_to_dict(xbar), indent=1, sort_keys=True) + "\n")


def load_crossbar(path: str | Path) -> CrossbarArray:
    return crossbar_from_dict(json.loads(Path(path).read_text()))
