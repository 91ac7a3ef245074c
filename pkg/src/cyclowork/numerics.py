"""Numerical substrate: adaptive quadrature, seedable streams, ensemble estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, NumericError, SubdivisionExhausted, TooFewSamples

# Gauss-Kronrod 7/15 abscissae (non-negative half) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])           # 15 nodes on [-1, 1]
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[[13, 11, 9]] = _WG[:3]
_WG15[7] = _WG[3]


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 2**20

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ConfigError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ConfigError("max_subdivisions must be >= 1")

    def tighter(self, factor: float = 10.0) -> "QuadratureConfig":
        return QuadratureConfig(self.rel_tol / factor, self.abs_tol / factor, self.max_subdivisions)


DEFAULT_QUAD = QuadratureConfig()


def _gk_batch(f, a: np.ndarray, b: np.ndarray):
    """Kronrod estimates and |K - G| errors for many intervals at once.

    ``f`` maps a 1-D array of abscissae to values of shape (..., n); the
    leading axes are treated as independent components.
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
    fx = np.asarray(f(x))
    if fx.shape[-1] != x.size:
        fx = np.broadcast_to(fx, fx.shape[:-1] + (x.size,))
    fx = fx.reshape(fx.shape[:-1] + (a.size, 15))
    if not np.all(np.isfinite(fx)):
        raise NumericError("integrand returned a non-finite value")
    kron = (fx @ _WK) * half
    gauss = (fx @ _WG15) * half
    return kron, np.abs(kron - gauss)


def integrate_1d(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    cfg: QuadratureConfig = DEFAULT_QUAD,
    points: Sequence[float] | None = None,
):
    """Adaptive Gauss-Kronrod (7/15) quadrature of a vectorised integrand.

    ``f`` receives a 1-D array of abscissae. Vector-valued integrands return
    shape ``(..., n)``; the result then has shape ``(...)`` and convergence is
    judged against ``max(abs_tol, rel_tol * max|I|)`` shared by all components.
    Optional ``points`` seed the initial partition (peaks, kinks).
    """
    if not a <= b:
        raise ConfigError("integrate_1d needs a <= b")
    if a == b:
        probe = np.asarray(f(np.array([a])))
        return np.zeros(probe.shape[:-1], dtype=probe.dtype) if probe.ndim > 1 else probe.dtype.type(0).item()
    edges = [a, b]
    if points is not None:
        edges += [p for p in points if a < p < b]
    edges = np.unique(np.asarray(edges, dtype=float))
    lo, hi = edges[:-1], edges[1:]
    kron, err = _gk_batch(f, lo, hi)
    subdivisions = lo.size
    span = b - a
    while True:
        total = kron.sum(axis=-1)
        etot = err.sum(axis=-1)
        tol = max(cfg.abs_tol, cfg.rel_tol * float(np.max(np.abs(total))))
        if np.all(etot <= tol):
            return total if total.ndim else total.item()
        score = err.reshape(-1, lo.size).max(axis=0)
        splittable = (hi - lo) > 64 * np.finfo(float).eps * max(abs(a), abs(b), span)
        score = np.where(splittable, score, 0.0)
        if not np.any(score > 0):
            raise SubdivisionExhausted("error estimate cannot be reduced further (roundoff limit)")
        pick = score >= min(score.max(), score.sum() / score.size)
        n_new = int(pick.sum())
        if subdivisions + n_new > cfg.max_subdivisions:
            raise SubdivisionExhausted(
                f"{subdivisions} subdivisions used; error {float(np.max(etot)):.3g} > tol {tol:.3g}"
            )
        subdivisions += n_new
        pl, ph = lo[pick], hi[pick]
        pm = 0.5 * (pl + ph)
        new_lo = np.concatenate([pl, pm])
        new_hi = np.concatenate([pm, ph])
        k_new, e_new = _gk_batch(f, new_lo, new_hi)
        keep = ~pick
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        kron = np.concatenate([kron[..., keep], k_new], axis=-1)
        err = np.concatenate([err[..., keep], e_new], axis=-1)


def integrate_2d_triangular(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    t: float,
    cfg: QuadratureConfig = DEFAULT_QUAD,
    points: Sequence[float] | None = None,
):
    """Integral of f(t1, t2) over the ordered triangle 0 <= t2 <= t1 <= t.

    The inner integral is mapped to u = t2/t1 on [0, 1] and computed for a
    whole batch of outer nodes at once.
    """
    if t < 0:
        raise ConfigError("integration horizon must be >= 0")
    if t == 0:
        return 0.0
    inner_cfg = cfg.tighter(10.0)

    def outer(t1: np.ndarray) -> np.ndarray:
        t1c = t1[:, None]

        def inner(u: np.ndarray) -> np.ndarray:
            return f(t1c, t1c * u[None, :]) * t1c

        return integrate_1d(inner, 0.0, 1.0, inner_cfg)

    return integrate_1d(outer, 0.0, t, cfg, points=points)


_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """A reproducible normal-variate stream identified by (seed, stream_id).

    Both words form the 128-bit key of a Philox counter-based generator, so
    streams are independent of how work is split across workers.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.seed <= _MASK64 and 0 <= self.stream_id <= _MASK64):
            raise ConfigError("seed and stream_id must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.seed | (self.stream_id << 64)))

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)

    def seed32(self) -> int:
        """A 32-bit seed derived from the key, for JIT kernels with their own generator."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return int(ss.generate_state(1, dtype=np.uint32)[0])


def gaussian_samples(stream: RngStream, n: int, mean: float = 0.0, stddev: float = 1.0) -> np.ndarray:
    if n < 1:
        raise ConfigError("n must be >= 1")
    if stddev < 0:
        raise ConfigError("stddev must be >= 0")
    z = stream.generator().standard_normal(n)
    return mean + stddev * z


@dataclass(frozen=True)
class EnsembleStats:
    n: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    se_mean: float
    se_variance: float
    se_skewness: float
    se_excess_kurtosis: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


N_JACKKNIFE_BATCHES = 64


def _moments_from_sums(n, s1, s2, s3, s4):
    """(mean, unbiased var, skew, excess kurtosis) from power sums of data."""
    mu = s1 / n
    m2 = s2 / n - mu**2
    m3 = s3 / n - 3 * mu * s2 / n + 2 * mu**3
    m4 = s4 / n - 4 * mu * s3 / n + 6 * mu**2 * s2 / n - 3 * mu**4
    m2 = np.maximum(m2, 0.0)
    var = m2 * n / (n - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        skew = np.where(m2 > 0, m3 / np.where(m2 > 0, m2, 1.0) ** 1.5, 0.0)
        kurt = np.where(m2 > 0, m4 / np.where(m2 > 0, m2, 1.0) ** 2 - 3.0, 0.0)
    return mu, var, skew, kurt


def summarize(samples) -> EnsembleStats:
    """Moments with jackknife-over-batches standard errors (64 equal batches)."""
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < 16:
        raise TooFewSamples(f"summarize needs n >= 16, got {n}")
    # center first so power sums stay well conditioned
    shift = float(np.mean(x))
    y = x - shift
    n_batches = min(N_JACKKNIFE_BATCHES, n)
    batches = np.array_split(y, n_batches)
    bs = np.array([[b.size, b.sum(), (b**2).sum(), (b**3).sum(), (b**4).sum()] for b in batches])
    tot = bs.sum(axis=0)
    mu, var, skew, kurt = _moments_from_sums(*tot)
    loo = tot[None, :] - bs
    jmu, jvar, jskew, jkurt = _moments_from_sums(*loo.T)

    def se(est):
        est = np.asarray(est)
        return float(math.sqrt((n_batches - 1) / n_batches * np.sum((est - est.mean()) ** 2)))

    return EnsembleStats(
        n=n,
        mean=float(mu) + shift,
        variance=float(var),
        skewness=float(skew),
        excess_kurtosis=float(kurt),
        se_mean=se(jmu),
        se_variance=se(jvar),
        se_skewness=se(jskew),
        se_excess_kurtosis=se(jkurt),
    )
