"""Work statistics: mean, variance, alpha, the Gaussian work distribution.

Normalisation used throughout (checked against both Monte Carlo oracles):

    sigma^2(t) = gamma / (2 pi m) * int_0^{w_D} hbar w coth(beta hbar w / 2)
                 * (|b(w, t)|^2 + |b_bar(w, t)|^2) dw

where b = beta_w - i delta_w is the spectral coefficient and b_bar its
omega_c -> -omega_c partner. Only the bath contributes; the particle starts
from rest at the origin.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core_model import ExpCosine, PhysicalParams, ThermalState, DriveSpec, thermal_factor
from .errors import ConfigError, DegenerateDistribution, DivergentDrive
from .kernels import long_time_horizon, mean_work, spectral_coefficient
from .numerics import DEFAULT_QUAD, QuadratureConfig, integrate_1d

RWA_GAMMA_RATIO_LIMIT = 0.1
SHORT_TIME_LIMIT = 0.01
# cutoff must dominate the cyclotron line for the Lorentzian reductions
CUTOFF_RATIO_MIN = 30.0


class InvalidRegimeWarning(UserWarning):
    """The rotating-wave variance is used outside gamma/|omega_c| << 1."""


class Method(str, enum.Enum):
    FULL_SPECTRAL = "FullSpectral"
    RWA = "RWA"
    LIMIT_FORMULA = "LimitFormula"
    SHORT_TIME = "ShortTime"

    @classmethod
    def _missing_(cls, value):
        aliases = {"full": cls.FULL_SPECTRAL, "rwa": cls.RWA, "limit": cls.LIMIT_FORMULA, "short": cls.SHORT_TIME}
        if isinstance(value, str):
            for m in cls:
                if value.lower() in (m.value.lower(), m.name.lower()):
                    return m
            return aliases.get(value.lower())
        return None


@dataclass(frozen=True)
class WorkStatistics:
    t: float
    mean_W: float
    sigma2: float
    method: Method
    flags: tuple[str, ...] = ()
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.sigma2 < 0:
            raise ConfigError("sigma2 must be >= 0")

    @property
    def alpha(self) -> float:
        """Fluctuation-theorem slope 2 <W> / sigma^2 (nan when sigma^2 = 0)."""
        return 2.0 * self.mean_W / self.sigma2 if self.sigma2 > 0 else math.nan

    def alpha_kt(self, thermal: ThermalState) -> float:
        return self.alpha * thermal.kt

    def to_dict(self) -> dict:
        alpha = self.alpha
        out = {
            "t": self.t if math.isfinite(self.t) else "inf",
            "mean_W": self.mean_W,
            "sigma2": self.sigma2,
            "alpha": None if math.isnan(alpha) else alpha,
            "method": self.method.value,
            "flags": list(self.flags),
        }
        if self.extras:
            out["extras"] = dict(self.extras)
        return out


def _peak_points(params: PhysicalParams, drive: DriveSpec) -> list[float]:
    pts = [abs(params.omega_c)]
    if isinstance(drive, ExpCosine):
        pts.append(drive.big_omega)
        width = max(drive.big_gamma, 1e-12)
        for centre in (drive.big_omega, abs(params.omega_c)):
            pts += [centre - 10 * width, centre + 10 * width]
    return [p for p in pts if 0 < p < params.omega_d]


def coefficient_weight(params: PhysicalParams, drive: DriveSpec, omega, t: float,
                       cfg: QuadratureConfig = DEFAULT_QUAD):
    """|b(w, t)|^2 + |b_bar(w, t)|^2."""
    b = spectral_coefficient(params, drive, omega, t, 1, cfg)
    bb = spectral_coefficient(params, drive, omega, t, -1, cfg)
    return np.abs(b) ** 2 + np.abs(bb) ** 2


def variance_prefactor(params: PhysicalParams) -> float:
    return params.gamma / (2.0 * math.pi * params.mass)


def variance_full(params: PhysicalParams, thermal: ThermalState, drive: DriveSpec, t: float,
                  cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Bath-induced work variance by a single frequency quadrature over [0, w_D]."""
    if t < 0:
        raise ConfigError("t must be >= 0")
    if isinstance(drive, ExpCosine) and drive.f0 == 0 or t == 0:
        return 0.0
    if math.isinf(t) and not (isinstance(drive, ExpCosine) and drive.big_gamma > 0):
        raise DivergentDrive("long-time variance needs a damped exponential-cosine drive")

    def integrand(w):
        return thermal_factor(w, thermal, params) * coefficient_weight(params, drive, w, t, cfg)

    val = integrate_1d(integrand, 0.0, params.omega_d, cfg, points=_peak_points(params, drive))
    return variance_prefactor(params) * float(val)


def variance_discrete(params: PhysicalParams, thermal: ThermalState, drive: DriveSpec, t: float,
                      omegas, d_omega: float) -> float:
    """The same variance with the frequency integral replaced by a mode sum."""
    omegas = np.asarray(omegas, dtype=float)
    w = thermal_factor(omegas, thermal, params) * coefficient_weight(params, drive, omegas, t)
    return variance_prefactor(params) * float(np.sum(w) * d_omega)


def variance_rwa(params: PhysicalParams, thermal: ThermalState, drive: DriveSpec, t: float,
                 cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Rotating-wave variance: hbar|w_c| coth(beta hbar |w_c| / 2) * <W(t)>.

    Valid for gamma/|omega_c| << 1; warns with InvalidRegimeWarning above 0.1.
    """
    if params.omega_c == 0:
        raise ConfigError("rotating-wave variance needs omega_c != 0")
    if params.gamma / abs(params.omega_c) > RWA_GAMMA_RATIO_LIMIT:
        warnings.warn(f"gamma/|omega_c| = {params.gamma / abs(params.omega_c):.3g} > {RWA_GAMMA_RATIO_LIMIT}",
                      InvalidRegimeWarning, stacklevel=2)
    return thermal_factor(abs(params.omega_c), thermal, params) * mean_work(params, drive, t, cfg)


def work_statistics(params: PhysicalParams, thermal: ThermalState, drive: DriveSpec, t: float,
                    method: str | Method = Method.FULL_SPECTRAL, cfg: QuadratureConfig = DEFAULT_QUAD) -> WorkStatistics:
    method = Method(method)
    phi = mean_work(params, drive, t, cfg)
    flags: list[str] = []
    if method is Method.FULL_SPECTRAL:
        s2 = variance_full(params, thermal, drive, t, cfg)
    elif method is Method.RWA:
        if params.gamma / abs(params.omega_c) > RWA_GAMMA_RATIO_LIMIT:
            flags.append("rwa_invalid_regime")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InvalidRegimeWarning)
            s2 = thermal_factor(abs(params.omega_c), thermal, params) * phi
    else:
        raise ConfigError(f"use limit_long_time/limit_short_time for {method.value}")
    return WorkStatistics(t=t, mean_W=phi, sigma2=s2, method=method, flags=tuple(flags))


def characteristic_function(params: PhysicalParams, thermal: ThermalState, drive: DriveSpec, t: float, h,
                            sigma2: float | None = None, cfg: QuadratureConfig = DEFAULT_QUAD):
    """<exp(i h W)> = exp(i h <W> - h^2 sigma^2 / 2).

    ``sigma2`` defaults to the rotating-wave variance.
    """
    phi = mean_work(params, drive, t, cfg)
    if sigma2 is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InvalidRegimeWarning)
            sigma2 = thermal_factor(abs(params.omega_c), thermal, params) * phi
    h = np.asarray(h, dtype=float)
    out = np.exp(1j * h * phi - 0.5 * h**2 * sigma2)
    return complex(out) if out.ndim == 0 else out


def _check_cutoff(params: PhysicalParams) -> None:
    if params.omega_d < CUTOFF_RATIO_MIN * abs(params.omega_c):
        raise ConfigError(f"Lorentzian reduction needs omega_d >= {CUTOFF_RATIO_MIN} |omega_c|")


def lorentzian_ratio(params: PhysicalParams, thermal: ThermalState, drive: ExpCosine, line: str,
                     cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """sigma^2/<W> from the long-time Lorentzian frequency integral.

    ``line='static'`` (Omega = 0) is exact at t -> inf:
        2 gamma Gamma / (pi (Gamma+gamma)) int hbar w coth / (Gamma^2 + w^2)
    ``line='cyclotron'`` (Omega = omega_c) keeps the leading resonant term:
        gamma Gamma / (pi (Gamma+gamma)) int hbar w coth / (Gamma^2 + (w-|w_c|)^2)
    Both integrals run over [0, w_D]. As Gamma -> 0 the Lorentzians become
    delta functions, giving 2 k_B T and hbar w_c coth(beta hbar w_c / 2).
    """
    G, g = drive.big_gamma, params.gamma
    if G <= 0:
        raise DivergentDrive("Lorentzian reduction needs Gamma > 0")
    _check_cutoff(params)
    if line == "static":
        centre, pref = 0.0, 2.0
    elif line == "cyclotron":
        centre, pref = abs(params.omega_c), 1.0
    else:
        raise ConfigError("line must be 'static' or 'cyclotron'")

    def integrand(w):
        return thermal_factor(w, thermal, params) / (G**2 + (w - centre) ** 2)

    pts = [p for p in (centre - 10 * G, centre, centre + 10 * G) if 0 < p < params.omega_d]
    val = integrate_1d(integrand, 0.0, params.omega_d, cfg, points=pts)
    return pref * g * G / (math.pi * (G + g)) * float(val)


def limit_long_time(params: PhysicalParams, thermal: ThermalState, drive: ExpCosine,
                    cfg: QuadratureConfig = DEFAULT_QUAD) -> WorkStatistics:
    """t -> inf statistics for a damped exponential-cosine drive.

    The mean is exact. For Omega = 0 and Omega = |omega_c| the variance is the
    delta-function limit thermal_factor(Omega) * <W>; for other Omega it is the
    full spectral variance evaluated at t = inf.
    """
    if not isinstance(drive, ExpCosine):
        raise ConfigError("long-time limit needs an ExpCosine drive")
    if drive.big_gamma <= 0:
        raise DivergentDrive("Gamma = 0: mean work grows without bound")
    phi = mean_work(params, drive, math.inf)
    flags = []
    if drive.big_omega == 0 or math.isclose(drive.big_omega, abs(params.omega_c), rel_tol=1e-12):
        s2 = thermal_factor(drive.big_omega, thermal, params) * phi
        flags.append("delta_function_limit")
        if drive.big_gamma > 0.1 * params.gamma:
            # the delta limit drops a factor gamma/(Gamma+gamma) of the bath-only variance
            flags.append("big_gamma_not_small_vs_gamma")
    else:
        s2 = variance_full(params, thermal, drive, math.inf, cfg)
    return WorkStatistics(t=math.inf, mean_W=phi, sigma2=s2, method=Method.LIMIT_FORMULA, flags=tuple(flags),
                          extras={"t_star": long_time_horizon(params, drive)})


def limit_short_time(params: PhysicalParams, thermal: ThermalState, drive: ExpCosine, t: float,
                     cfg: QuadratureConfig = DEFAULT_QUAD) -> WorkStatistics:
    """Leading small-t laws: <W> = f0^2 t^2 / 2m and sigma^2 proportional to t^4.

    With b(w, t) ~ f0 t^2 / 2 for every bath frequency,
    sigma^2 = gamma f0^2 t^4 / (4 pi m) * int_0^{w_D} hbar w coth dw, which at
    T = 0 is hbar gamma f0^2 t^4 w_D^2 / (8 pi m). ``extras`` also carries the
    form linear in w_D, hbar gamma f0^2 t^4 w_D / (16 pi m), for comparison.
    """
    if not isinstance(drive, ExpCosine):
        raise ConfigError("short-time laws need an ExpCosine drive")
    if t < 0:
        raise ConfigError("t must be >= 0")
    m, g, f0, wd, hbar = params.mass, params.gamma, drive.f0, params.omega_d, params.hbar
    phi = f0**2 * t**2 / (2 * m)
    if thermal.zero_temperature:
        bath_integral = hbar * wd**2 / 2
    else:
        bath_integral = float(integrate_1d(lambda w: thermal_factor(w, thermal, params), 0.0, wd, cfg))
    s2 = g * f0**2 * t**4 / (4 * math.pi * m) * bath_integral
    flags = []
    scale = max(g, abs(params.omega_c), drive.big_omega, drive.big_gamma)
    if t * scale >= SHORT_TIME_LIMIT:
        flags.append("short_time_invalid")
    if wd * t >= 0.1:
        flags.append("cutoff_time_not_small")
    extras = {"sigma2_linear_cutoff_form": hbar * g * f0**2 * t**4 * wd / (16 * math.pi * m),
              "sigma2_over_mean": s2 / phi if phi > 0 else math.nan}
    return WorkStatistics(t=t, mean_W=phi, sigma2=s2, method=Method.SHORT_TIME, flags=tuple(flags), extras=extras)


@dataclass(frozen=True)
class WorkDistribution:
    """Normal work density with the fluctuation-theorem log ratio."""

    mean_W: float
    sigma2: float

    def __post_init__(self) -> None:
        if not self.sigma2 > 0:
            raise DegenerateDistribution("work variance is zero")

    @property
    def alpha(self) -> float:
        return 2.0 * self.mean_W / self.sigma2

    def logpdf(self, w):
        w = np.asarray(w, dtype=float)
        return -0.5 * (w - self.mean_W) ** 2 / self.sigma2 - 0.5 * math.log(2 * math.pi * self.sigma2)

    def pdf(self, w):
        return np.exp(self.logpdf(w))

    def log_ratio(self, w):
        """ln p(W) - ln p(-W), expanded so the normalisation cancels exactly."""
        w = np.asarray(w, dtype=float)
        return ((w + self.mean_W) ** 2 - (w - self.mean_W) ** 2) / (2.0 * self.sigma2)


def work_distribution(stats: WorkStatistics) -> WorkDistribution:
    return WorkDistribution(stats.mean_W, stats.sigma2)


def work_second_moment(stats: WorkStatistics) -> float:
    """<W^2> = sigma^2 + <W>^2, i.e. with the force-quartic term kept."""
    return stats.sigma2 + stats.mean_W**2
