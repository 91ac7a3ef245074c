"""Physical parameters, drives, thermal factors and the ohmic spectral density.

Everything here is immutable. The default unit system is hbar = k_B = m = 1,
but every formula keeps the constants explicit so other unit systems work
unchanged.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Mapping, Union

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PhysicalParams:
    """System constants.

    ``omega_c`` may be negative (field orientation). ``gamma`` is the ohmic
    friction rate, ``omega_d`` the bath cutoff.
    """

    mass: float = 1.0
    omega_c: float = 1.0
    gamma: float = 0.1
    omega_d: float = 30.0
    hbar: float = 1.0
    kb: float = 1.0

    def __post_init__(self) -> None:
        for name in ("mass", "gamma", "omega_d", "hbar", "kb"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive and finite, got {value!r}")
        if not math.isfinite(self.omega_c):
            raise ConfigError("omega_c must be finite")

    @classmethod
    def from_field(cls, charge: float, field_b: float, c_light: float = 1.0, **kw: float) -> "PhysicalParams":
        """Build parameters with omega_c = e B / (m c)."""
        mass = kw.get("mass", 1.0)
        return cls(omega_c=charge * field_b / (mass * c_light), **kw)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PhysicalParams":
        known = {"mass", "omega_c", "gamma", "omega_d", "hbar", "kb"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
        try:
            return cls(**{k: float(v) for k, v in data.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes: float) -> "PhysicalParams":
        data = self.to_dict()
        data.update(changes)
        return PhysicalParams(**data)


@dataclass(frozen=True)
class ThermalState:
    """Inverse temperature, or an explicit zero-temperature flag.

    Zero temperature is never represented as a huge float; ``beta`` is None.
    """

    beta: float | None
    kb: float = 1.0

    def __post_init__(self) -> None:
        if self.beta is not None and not (self.beta > 0 and math.isfinite(self.beta)):
            raise ConfigError(f"beta must be positive and finite, got {self.beta!r}")

    @classmethod
    def from_beta(cls, beta: float, kb: float = 1.0) -> "ThermalState":
        return cls(beta=float(beta), kb=kb)

    @classmethod
    def from_temperature(cls, temperature: float, kb: float = 1.0) -> "ThermalState":
        if temperature == 0:
            return cls.zero(kb)
        if not temperature > 0:
            raise ConfigError("temperature must be >= 0")
        return cls(beta=1.0 / (kb * temperature), kb=kb)

    @classmethod
    def zero(cls, kb: float = 1.0) -> "ThermalState":
        return cls(beta=None, kb=kb)

    @property
    def zero_temperature(self) -> bool:
        return self.beta is None

    @property
    def temperature(self) -> float:
        return 0.0 if self.beta is None else 1.0 / (self.kb * self.beta)

    @property
    def kt(self) -> float:
        """Thermal energy k_B T (0 at zero temperature)."""
        return 0.0 if self.beta is None else 1.0 / self.beta

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], kb: float = 1.0) -> "ThermalState":
        keys = {"beta", "temperature", "zero_temperature"} & set(data)
        if len(keys) != 1:
            raise ConfigError("thermal block needs exactly one of beta, temperature, zero_temperature")
        (key,) = keys
        if key == "zero_temperature":
            if not data[key]:
                raise ConfigError("zero_temperature must be true when given")
            return cls.zero(kb)
        if key == "beta":
            return cls.from_beta(float(data["beta"]), kb)
        return cls.from_temperature(float(data["temperature"]), kb)

    def to_dict(self) -> dict:
        if self.beta is None:
            return {"zero_temperature": True}
        return {"beta": self.beta}


@dataclass(frozen=True)
class ExpCosine:
    """f(t) = f0 exp(-big_gamma t) cos(big_omega t)."""

    f0: float
    big_gamma: float
    big_omega: float

    def __post_init__(self) -> None:
        if self.f0 < 0 or self.big_gamma < 0 or self.big_omega < 0:
            raise ConfigError("ExpCosine needs f0, big_gamma, big_omega >= 0")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return self.f0 * np.exp(-self.big_gamma * t) * np.cos(self.big_omega * t)

    def exponents(self) -> tuple[complex, complex]:
        """Decay rates lam with f(t) = (f0/2) * sum exp(-lam t)."""
        return (complex(self.big_gamma, -self.big_omega), complex(self.big_gamma, self.big_omega))

    def to_dict(self) -> dict:
        return {"type": "expcos", "f0": self.f0, "big_gamma": self.big_gamma, "big_omega": self.big_omega}


@dataclass(frozen=True)
class Sampled:
    """Piecewise-linear drive through (times, values); zero outside the window."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    _t: np.ndarray = field(init=False, repr=False, compare=False)
    _v: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ConfigError("Sampled drive needs matching 1-D times/values with >= 2 points")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ConfigError("Sampled times must start at 0 and increase strictly")
        object.__setattr__(self, "times", tuple(t.tolist()))
        object.__setattr__(self, "values", tuple(v.tolist()))
        object.__setattr__(self, "_t", t)
        object.__setattr__(self, "_v", v)

    @property
    def t_max(self) -> float:
        return float(self._t[-1])

    def value(self, t):
        return np.interp(np.asarray(t, dtype=float), self._t, self._v, left=0.0, right=0.0)

    def to_dict(self) -> dict:
        return {"type": "sampled", "times": list(self.times), "values": list(self.values)}


DriveSpec = Union[ExpCosine, Sampled]


def drive_from_dict(data: Mapping[str, Any]) -> DriveSpec:
    kind = data.get("type")
    try:
        if kind == "expcos":
            return ExpCosine(float(data["f0"]), float(data.get("big_gamma", 0.0)), float(data.get("big_omega", 0.0)))
        if kind == "sampled":
            return Sampled(tuple(data["times"]), tuple(data["values"]))
    except KeyError as exc:
        raise ConfigError(f"drive block missing {exc}") from exc
    raise ConfigError(f"unknown drive type {kind!r}")


def drive_value(drive: DriveSpec, t):
    """Force f(t) for either drive variant (t >= 0)."""
    return drive.value(t)


# below this value of beta*hbar*omega the Laurent series replaces coth
_COTH_SERIES_CUTOFF = 1e-6


def thermal_factor(omega, thermal: ThermalState, params: PhysicalParams):
    """hbar*omega*coth(beta*hbar*omega/2), the quantum stand-in for 2 k_B T.

    Returns hbar*omega at zero temperature and the analytic limit 2/beta at
    omega = 0.
    """
    omega = np.asarray(omega, dtype=float)
    hw = params.hbar * omega
    if thermal.beta is None:
        return hw if hw.ndim else float(hw)
    beta = thermal.beta
    x = beta * hw
    small = x < _COTH_SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    out = np.where(small, 2.0 / beta + beta * hw**2 / 6.0, hw / np.tanh(0.5 * safe))
    return out if out.ndim else float(out)


def bose_einstein(omega, thermal: ThermalState, params: PhysicalParams):
    """Mean occupation 1/(exp(beta hbar omega) - 1); zero at T = 0."""
    omega = np.asarray(omega, dtype=float)
    if thermal.beta is None:
        return np.zeros_like(omega)
    return 1.0 / np.expm1(thermal.beta * params.hbar * omega)


def spectral_density(omega, params: PhysicalParams):
    """Normalised ohmic density J(w) = 3 w^2 / w_D^3 on [0, w_D], zero above."""
    omega = np.asarray(omega, dtype=float)
    wd = params.omega_d
    return np.where((omega >= 0) & (omega <= wd), 3.0 * omega**2 / wd**3, 0.0)


def lumped_coupling(params: PhysicalParams) -> float:
    """Non-negative C solving gamma = 3 pi C^2 / w_D^3."""
    return math.sqrt(params.gamma * params.omega_d**3 / (3.0 * math.pi))
