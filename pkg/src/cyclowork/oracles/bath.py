"""Finite Caldeira-Leggett bath: discretisation, Wigner sampling, coefficient fast path.

Wigner sampling is exact here: the dynamics are linear and the work is a
linear form in the initial phase-space variables, so drawing those variables
from the thermal Wigner function reproduces every quantum moment of W.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core_model import PhysicalParams, ThermalState, DriveSpec, thermal_factor
from ..errors import ConfigError, TooFewSamples
from ..kernels import beta_delta, mean_work
from ..numerics import RngStream
from ..provenance import config_hash
from .ensemble import WorkSampleEnsemble, map_chunks


@dataclass(frozen=True)
class BathDiscretization:
    """N modes at uniform midpoints of (0, w_D] with m_j = m.

    Couplings c_j^2 = 2 gamma m m_j w_j^2 dw / pi make the memory kernel
    (1/m) sum_j c_j^2/(m_j w_j^2) cos(w_j t) approach 2 gamma delta(t).
    """

    omegas: np.ndarray
    couplings: np.ndarray
    masses: np.ndarray
    d_omega: float

    @classmethod
    def uniform(cls, params: PhysicalParams, n_modes: int = 400) -> "BathDiscretization":
        if n_modes < 1:
            raise ConfigError("n_modes must be >= 1")
        dw = params.omega_d / n_modes
        w = (np.arange(n_modes) + 0.5) * dw
        mj = np.full(n_modes, params.mass)
        c = np.sqrt(2.0 * params.gamma * params.mass * mj * w**2 * dw / math.pi)
        return cls(omegas=w, couplings=c, masses=mj, d_omega=dw)

    @property
    def n_modes(self) -> int:
        return self.omegas.size

    @property
    def recurrence_time(self) -> float:
        return 2.0 * math.pi / self.d_omega

    def counterterm(self) -> float:
        return float(np.sum(self.couplings**2 / (self.masses * self.omegas**2)))

    def friction_kernel(self, params: PhysicalParams, t):
        t = np.asarray(t, dtype=float)
        k = self.couplings**2 / (self.masses * self.omegas**2) / params.mass
        return np.cos(np.multiply.outer(t, self.omegas)) @ k

    def effective_friction(self, params: PhysicalParams, t_window: float) -> float:
        """int_0^{t_window} of the memory kernel; approaches gamma for 1/w_D << t_window."""
        k = self.couplings**2 / (self.masses * self.omegas**3) / params.mass
        return float(np.sum(k * np.sin(self.omegas * t_window)))

    def wigner_std(self, params: PhysicalParams, thermal: ThermalState) -> tuple[np.ndarray, np.ndarray]:
        """Per-component thermal Wigner widths (std of q_j, std of p_j)."""
        tf = thermal_factor(self.omegas, thermal, params)      # hbar w coth(beta hbar w / 2)
        var_q = tf / (2.0 * self.masses * self.omegas**2)
        var_p = tf * self.masses / 2.0
        return np.sqrt(var_q), np.sqrt(var_p)

    def to_dict(self) -> dict:
        return {"n_modes": self.n_modes, "d_omega": self.d_omega, "rule": "uniform_midpoint"}


def work_weights(params: PhysicalParams, thermal: ThermalState, drive: DriveSpec, bath: BathDiscretization,
                 t: float) -> np.ndarray:
    """Weights w such that W - <W> = w . z for z ~ N(0, 1)^{4N}.

    Column order per mode block: q_x, q_y, p_x, p_y.
    """
    beta_j, delta_j = beta_delta(params, drive, bath.omegas, t)
    sq, sp = bath.wigner_std(params, thermal)
    c = bath.couplings / params.mass
    mw = bath.masses * bath.omegas
    return np.concatenate([
        c * beta_j.real * sq,
        -c * beta_j.imag * sq,
        c * delta_j.real * sp / mw,
        -c * delta_j.imag * sp / mw,
    ])


def discrete_variance(params: PhysicalParams, thermal: ThermalState, drive: DriveSpec, bath: BathDiscretization,
                      t: float) -> float:
    w = work_weights(params, thermal, drive, bath, t)
    return float(np.sum(w**2))


def sample_bath_work(params: PhysicalParams, thermal: ThermalState, drive: DriveSpec, bath: BathDiscretization,
                     t: float, n: int, rng: RngStream, threads: int = 1, chunk: int = 1024) -> WorkSampleEnsemble:
    """Fast path: W = <W> + linear form in Wigner-sampled initial bath variables.

    The particle starts at rest at the origin. Sample i draws its 4N normals
    from stream (rng.seed, i).
    """
    if n < 16:
        raise TooFewSamples("need n >= 16 samples")
    if t < 0:
        raise ConfigError("t must be >= 0")
    phi = mean_work(params, drive, t)
    w = work_weights(params, thermal, drive, bath, t)

    def block(start: int, stop: int) -> np.ndarray:
        z = np.empty((stop - start, w.size))
        for k, i in enumerate(range(start, stop)):
            z[k] = rng.child(i).generator().standard_normal(w.size)
        return phi + (z * w).sum(axis=1)

    samples = map_chunks(block, n, chunk, threads)
    meta = {
        "oracle": "bath-fast",
        "seed": rng.seed,
        "t": t,
        "n": n,
        "config_hash": config_hash({
            "oracle": "bath-fast", "params": params.to_dict(), "thermal": thermal.to_dict(),
            "drive": drive.to_dict(), "bath": bath.to_dict(), "t": t, "n": n, "seed": rng.seed,
        }),
        "flags": [] if t < 0.5 * bath.recurrence_time else ["recurrence_violation"],
    }
    return WorkSampleEnsemble.from_samples(samples, **meta)
