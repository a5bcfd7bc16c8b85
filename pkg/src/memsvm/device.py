"""Behavioral model of a single memtransistor.

The device is a ladder of discrete memductance levels. A negative gate
pulse moves one level up (potentiation), a positive pulse one level down
(depression); both saturate at the ladder ends. Memductance is kept
dimensionless in the classifier path, ``siemens_scale`` only matters for
reporting.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .config import parse_float_list, read_flat_config
from .errors import ParameterError

E_POTENTIATION = 0.7e-9
E_DEPRESSION = 0.5e-12
DEFAULT_NUM_STATES = 86


class LadderShape(str, enum.Enum):
    LINEAR = "linear"
    EXPONENTIAL = "exponential"
    CUSTOM = "custom"


class Polarity(str, enum.Enum):
    NEGATIVE = "negative"  # potentiation
    POSITIVE = "positive"  # depression


@dataclass(frozen=True)
class DeviceParams:
    num_states: int = DEFAULT_NUM_STATES
    g_min: float = 0.0
    g_max: float = 1.0
    ladder_shape: LadderShape = LadderShape.LINEAR
    e_potentiation: float = E_POTENTIATION
    e_depression: float = E_DEPRESSION
    sigma_program: float = 0.0
    sigma_read: float = 0.0
    # curvature of the exponential ladder; ignored by the other shapes
    ladder_beta: float = 3.0
    # explicit levels, only used with LadderShape.CUSTOM
    ladder_values: tuple[float, ...] | None = None
    siemens_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "ladder_shape", LadderShape(self.ladder_shape))
        if self.ladder_values is not None:
            object.__setattr__(self, "ladder_values", tuple(float(v) for v in self.ladder_values))
        validate_params(self)

    @property
    def g_range(self) -> float:
        return self.g_max - self.g_min

    def with_noise(self, sigma_program: float | None = None, sigma_read: float | None = None) -> "DeviceParams":
        return replace(
            self,
            sigma_program=self.sigma_program if sigma_program is None else sigma_program,
            sigma_read=self.sigma_read if sigma_read is None else sigma_read,
        )


def validate_params(params: DeviceParams) -> None:
    if not isinstance(params.num_states, (int, np.integer)) or params.num_states < 2:
        raise ParameterError(f"num_states must be an integer >= 2, got {params.num_states!r}")
    if not (math.isfinite(params.g_min) and math.isfinite(params.g_max)) or params.g_min >= params.g_max:
        raise ParameterError(f"need finite g_min < g_max, got [{params.g_min}, {params.g_max}]")
    for name in ("sigma_program", "sigma_read", "e_potentiation", "e_depression"):
        value = getattr(params, name)
        if not math.isfinite(value) or value < 0:
            raise ParameterError(f"{name} must be finite and >= 0, got {value!r}")
    if params.ladder_shape is LadderShape.EXPONENTIAL and (
        not math.isfinite(params.ladder_beta) or params.ladder_beta <= 0
    ):
        raise ParameterError(f"ladder_beta must be > 0, got {params.ladder_beta!r}")
    if params.siemens_scale <= 0:
        raise ParameterError("siemens_scale must be > 0")
    if params.ladder_shape is LadderShape.CUSTOM:
        v = params.ladder_values
        if v is None:
            raise ParameterError("custom ladder shape requires ladder_values")
        if len(v) != params.num_states:
            raise ParameterError(f"ladder has {len(v)} values but num_states={params.num_states}")
        arr = np.asarray(v)
        if np.any(np.diff(arr) <= 0):
            raise ParameterError("custom ladder must be strictly increasing")
        if arr[0] != params.g_min or arr[-1] != params.g_max:
            raise ParameterError("custom ladder must start at g_min and end at g_max")


def state_ladder(params: DeviceParams) -> np.ndarray:
    """Return the ``num_states`` memductance levels in increasing order.

    linear:      g_k = g_min + k * (g_max - g_min) / (n - 1)
    exponential: g_k = g_min + (g_max - g_min) * (exp(beta * k / (n - 1)) - 1) / (exp(beta) - 1)
    custom:      the supplied values
    """
    validate_params(params)
    n = params.num_states
    if params.ladder_shape is LadderShape.CUSTOM:
        return np.asarray(params.ladder_values, dtype=float)
    t = np.arange(n, dtype=float) / (n - 1)
    if params.ladder_shape is LadderShape.LINEAR:
        levels = params.g_min + t * params.g_range
    else:
        beta = params.ladder_beta
        levels = params.g_min + params.g_range * np.expm1(beta * t) / np.expm1(beta)
    # pin endpoints exactly
    levels[0] = params.g_min
    levels[-1] = params.g_max
    return levels


def max_ladder_gap(params: DeviceParams) -> float:
    return float(np.max(np.diff(state_ladder(params))))


@dataclass(frozen=True)
class PulseLog:
    n_potentiation: int = 0
    n_depression: int = 0

    def __post_init__(self):
        if self.n_potentiation < 0 or self.n_depression < 0:
            raise ParameterError("pulse counts must be non-negative")

    def __add__(self, other: "PulseLog") -> "PulseLog":
        if not isinstance(other, PulseLog):
            return NotImplemented
        return PulseLog(
            self.n_potentiation + other.n_potentiation,
            self.n_depression + other.n_depression,
        )

    @property
    def total(self) -> int:
        return self.n_potentiation + self.n_depression


@dataclass(frozen=True)
class MemtransistorCell:
    state_index: int = 0
    programmed_offset: float = 0.0

    def memductance(self, params: DeviceParams, ladder: np.ndarray | None = None) -> float:
        if ladder is None:
            ladder = state_ladder(params)
        g = ladder[self.state_index] + self.programmed_offset
        return float(min(max(g, params.g_min), params.g_max))


def apply_pulse(
    cell: MemtransistorCell,
    polarity: Polarity | str,
    params: DeviceParams,
    log: PulseLog,
) -> tuple[MemtransistorCell, PulseLog]:
    """Apply one gate pulse and return the updated cell and log.

    Saturated pulses still count in the log, the energy is spent either way.
    """
    polarity = Polarity(polarity)
    top = params.num_states - 1
    if not 0 <= cell.state_index <= top:
        raise ParameterError(f"state_index {cell.state_index} outside [0, {top}]")
    if polarity is Polarity.NEGATIVE:
        new_index = min(cell.state_index + 1, top)
        log = log + PulseLog(1, 0)
    else:
        new_index = max(cell.state_index - 1, 0)
        log = log + PulseLog(0, 1)
    return replace(cell, state_index=new_index), log


def energy_of(log: PulseLog, params: DeviceParams) -> float:
    """Energy in joules spent by the pulses in ``log``."""
    return log.n_potentiation * params.e_potentiation + log.n_depression * params.e_depression


def load_ladder(path: str | Path) -> np.ndarray:
    """Read a single-column text file of strictly increasing levels."""
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise ParameterError(f"{path}:{lineno}: not a number: {raw!r}") from None
    arr = np.asarray(values, dtype=float)
    if arr.size < 2 or np.any(np.diff(arr) <= 0):
        raise ParameterError(f"{path}: ladder needs >= 2 strictly increasing values")
    return arr


def params_with_ladder(values, base: DeviceParams | None = None) -> DeviceParams:
    arr = np.asarray(values, dtype=float)
    base = base or DeviceParams()
    return replace(
        base,
        ladder_shape=LadderShape.CUSTOM,
        ladder_values=tuple(arr.tolist()),
        num_states=int(arr.size),
        g_min=float(arr[0]),
        g_max=float(arr[-1]),
    )


_INT_FIELDS = {"num_states"}
_STR_FIELDS = {"ladder_shape"}


def params_from_mapping(mapping: dict[str, str], base: DeviceParams | None = None) -> DeviceParams:
    """Build params from string values keyed by field name; unknown keys are ignored.

    ``ladder_file`` points at a single-column ladder and switches the shape to custom.
    """
    known = {f.name for f in fields(DeviceParams)}
    kwargs: dict = {}
    for key, value in mapping.items():
        if key not in known or key == "ladder_values":
            continue
        try:
            if key in _INT_FIELDS:
                kwargs[key] = int(value)
            elif key in _STR_FIELDS:
                shape = LadderShape(value.strip().lower())
                if shape is LadderShape.CUSTOM:
                    continue  # set below together with the levels
                kwargs[key] = shape
            else:
                kwargs[key] = float(value)
        except ValueError as exc:
            raise ParameterError(f"bad value for {key}: {value!r}") from exc
    params = replace(base or DeviceParams(), **kwargs)
    if "ladder_values" in mapping:
        params = params_with_ladder(parse_float_list(mapping["ladder_values"]), params)
    if mapping.get("ladder_file"):
        params = params_with_ladder(load_ladder(mapping["ladder_file"]), params)
    return params


def load_params(path: str | Path) -> DeviceParams:
    return params_from_mapping(read_flat_config(path))


def params_to_mapping(params: DeviceParams) -> dict:
    out = {}
    for f in fields(DeviceParams):
        value = getattr(params, f.name)
        if isinstance(value, enum.Enum):
            value = value.value
        elif isinstance(value, tuple):
            value = list(value)
        out[f.name] = value
    return out
