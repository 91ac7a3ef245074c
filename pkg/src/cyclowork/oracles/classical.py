"""Classical white-noise Langevin oracle for the driven cyclotron particle.

The complex velocity v = v_x + i v_y obeys the linear OU equation

    dv = [-(gamma + i omega_c) v + f(t)/m] dt + dW_x + i dW_y,

with per-component noise intensity 2 gamma k_B T / m. Trajectory i draws its normals from stream (seed, i). Each step uses the exact
one-step propagator of the homogeneous part, the drive at the step midpoint
and the exact Gaussian increment variance (k_B T/m)(1 - e^{-2 gamma dt}).
W = int f v_x dt is accumulated by the trapezoidal rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from ..core_model import DriveSpec, PhysicalParams, ThermalState, drive_value
from ..errors import ConfigError, StepTooLarge, TooFewSamples
from ..numerics import RngStream
from ..provenance import config_hash
from .ensemble import WorkSampleEnsemble, map_chunks

MAX_STEP_PRODUCT = 0.05


def _drive_rate(drive: DriveSpec) -> float:
    return float(getattr(drive, "big_omega", 0.0))


@dataclass(frozen=True)
class ClassicalSimConfig:
    t_end: float
    n_trajectories: int
    rng: RngStream
    dt: float | None = None          # None: largest step with dt * rate_max <= 0.049
    initial: str = "thermal"         # "thermal" (Maxwell velocities) or "rest"

    def __post_init__(self) -> None:
        if not self.t_end > 0:
            raise ConfigError("t_end must be > 0")
        if self.n_trajectories < 16:
            raise TooFewSamples("need n_trajectories >= 16")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if self.initial not in ("thermal", "rest"):
            raise ConfigError("initial must be 'thermal' or 'rest'")

    def grid(self, params: PhysicalParams, drive: DriveSpec) -> tuple[int, float]:
        rate = max(params.gamma, abs(params.omega_c), _drive_rate(drive))
        dt = self.dt if self.dt is not None else 0.98 * MAX_STEP_PRODUCT / rate
        n_steps = max(1, math.ceil(self.t_end / dt))
        h = self.t_end / n_steps
        if h * rate >= MAX_STEP_PRODUCT:
            raise StepTooLarge(f"dt*max(gamma, omega_c, Omega) = {h * rate:.3g} >= {MAX_STEP_PRODUCT}")
        return n_steps, h

    def to_dict(self) -> dict:
        return {"t_end": self.t_end, "n_trajectories": self.n_trajectories, "seed": self.rng.seed,
                "dt": self.dt, "initial": self.initial}


@numba.njit(nogil=True, cache=True)
def _ou_kernel(z, f_nodes, f_mid, prop_re, prop_im, gain_re, gain_im, noise_sd, v0_sd, h):
    """z[i] holds trajectory i's normals: two for v(0), then two per step."""
    n = z.shape[0]
    n_steps = f_mid.size
    out = np.empty(n)
    for i in range(n):
        vx = v0_sd * z[i, 0]
        vy = v0_sd * z[i, 1]
        acc = 0.5 * f_nodes[0] * vx
        for k in range(n_steps):
            fm = f_mid[k]
            nx = prop_re * vx - prop_im * vy + fm * gain_re + noise_sd * z[i, 2 * k + 2]
            ny = prop_re * vy + prop_im * vx + fm * gain_im + noise_sd * z[i, 2 * k + 3]
            vx = nx
            vy = ny
            acc += f_nodes[k + 1] * vx
        acc -= 0.5 * f_nodes[n_steps] * vx
        out[i] = acc * h
    return out


def simulate_classical(params: PhysicalParams, thermal: ThermalState, drive: DriveSpec, cfg: ClassicalSimConfig,
                       threads: int = 1) -> WorkSampleEnsemble:
    if thermal.zero_temperature:
        raise ConfigError("classical oracle needs T > 0")
    n_steps, h = cfg.grid(params, drive)
    kt_m = thermal.kt / params.mass
    a = complex(params.gamma, params.omega_c)
    prop = complex(np.exp(-a * h))
    gain = complex(-np.expm1(-a * h) / a / params.mass)
    noise_sd = math.sqrt(-kt_m * math.expm1(-2.0 * params.gamma * h))
    v0_sd = math.sqrt(kt_m) if cfg.initial == "thermal" else 0.0
    t = np.arange(n_steps + 1) * h
    f_nodes = np.asarray(drive_value(drive, t), dtype=float)
    f_mid = np.asarray(drive_value(drive, t[:-1] + 0.5 * h), dtype=float)
    n_normals = 2 * n_steps + 2
    chunk = max(1, min(256, (1 << 24) // n_normals))

    def block(start: int, stop: int) -> np.ndarray:
        z = np.empty((stop - start, n_normals))
        for k, i in enumerate(range(start, stop)):
            cfg.rng.child(i).generator().standard_normal(out=z[k])
        return _ou_kernel(z, f_nodes, f_mid, prop.real, prop.imag, gain.real, gain.imag, noise_sd, v0_sd, h)

    samples = map_chunks(block, cfg.n_trajectories, chunk, threads)
    meta = {
        "oracle": "classical",
        "seed": cfg.rng.seed,
        "t": cfg.t_end,
        "n": cfg.n_trajectories,
        "dt": h,
        "n_steps": n_steps,
        "config_hash": config_hash({"oracle": "classical", "params": params.to_dict(), "thermal": thermal.to_dict(),
                                    "drive": drive.to_dict(), "cfg": cfg.to_dict()}),
        "flags": [],
    }
    return WorkSampleEnsemble.from_samples(samples, **meta)
