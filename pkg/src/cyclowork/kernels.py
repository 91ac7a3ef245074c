"""Ohmic response kernels and drive-response functionals.

All closed forms for the exponential-cosine drive are built from one
primitive, ``E(x, t) = int_0^t exp(-x u) du``, and its divided differences.
With ``a = gamma + i*omega_c`` the velocity response to a unit kick is
``A(t) = exp(-a t)``, and the drive is a sum of two complex exponentials
``f(t) = (f0/2) * sum_s exp(-lam_s t)`` with ``lam_s = Gamma -/+ i Omega``.
The barred branch is obtained by flipping the sign of omega_c.
"""

from __future__ import annotations

import math

import numpy as np

from .core_model import ExpCosine, PhysicalParams, Sampled, DriveSpec
from .errors import ConfigError, DivergentDrive
from .numerics import DEFAULT_QUAD, QuadratureConfig, integrate_1d, integrate_2d_triangular

# |a - q| * t below which divided differences switch to their derivative limit
_DEGENERATE = 1e-6


def _g1(z):
    """(1 - exp(-z)) / z, exact at z = 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-12
    zz = np.where(small, 1.0, z)
    return np.where(small, 1.0 - 0.5 * z, -np.expm1(-zz) / zz)


_G2_SERIES = np.array([(-1) ** k / (math.factorial(k) * (k + 2)) for k in range(24)])


def _g2(z):
    """(1 - exp(-z)(1 + z)) / z**2, exact near z = 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 0.5
    zz = np.where(small, 1.0, z)
    direct = (-np.expm1(-zz) - zz * np.exp(-zz)) / zz**2
    series = np.polynomial.polynomial.polyval(z, _G2_SERIES)
    return np.where(small, series, direct)


def exp_integral(x, t):
    """E(x, t) = int_0^t exp(-x u) du; t may be inf when Re x > 0."""
    x = np.asarray(x, dtype=complex)
    t = np.asarray(t, dtype=float)
    if np.any(np.isinf(t)):
        if t.ndim or np.any(x.real <= 0):
            raise DivergentDrive("long-time limit needs scalar t and decaying exponents")
        return 1.0 / x
    return t * _g1(x * t)


def _exp_integral2(x, t):
    """int_0^t u exp(-x u) du."""
    x = np.asarray(x, dtype=complex)
    if math.isinf(t):
        if np.any(x.real <= 0):
            raise DivergentDrive("long-time limit needs every exponent to decay")
        return 1.0 / x**2
    return t * t * _g2(x * t)


def nested_exp(p, a, q, t):
    """int_0^t dt1 e^{-p t1} int_0^{t1} du e^{-a (t1 - u)} e^{-q u}.

    Uses [E(p+q) - E(p+a)] / (a - q), switching to the derivative limit when
    a and q nearly coincide (exact resonance).
    """
    p, a, q = (np.asarray(v, dtype=complex) for v in (p, a, q))
    x1, x2 = p + q, p + a
    if math.isinf(t):
        return 1.0 / (x1 * x2)
    d = a - q
    near = np.abs(d) * max(t, 1e-300) < _DEGENERATE
    dd = np.where(near, 1.0, d)
    direct = (exp_integral(x1, t) - exp_integral(x2, t)) / dd
    limit = _exp_integral2(0.5 * (x1 + x2), t)
    return np.where(near, limit, direct)


def kernel_conv(a, q, t):
    """int_0^t e^{-a (t - u)} e^{-q u} du, evaluated without overflow."""
    a, q = np.asarray(a, dtype=complex), np.asarray(q, dtype=complex)
    t = np.asarray(t, dtype=float)
    if np.any(np.isinf(t)):
        raise DivergentDrive("kernel_conv needs finite t")
    use_q = (a - q).real >= 0
    return np.where(use_q, np.exp(-q * t) * exp_integral(a - q, t), np.exp(-a * t) * exp_integral(q - a, t))


def decay_rate(params: PhysicalParams, branch: int = 1) -> complex:
    """a = gamma + i*branch*omega_c, with A(t) = exp(-a t)."""
    if branch not in (1, -1):
        raise ConfigError("branch must be +1 or -1")
    return complex(params.gamma, branch * params.omega_c)


def response_kernel(params: PhysicalParams, t, branch: int = 1):
    """A(t) = exp(-(gamma + i omega_c) t); the barred kernel for branch=-1."""
    return np.exp(-decay_rate(params, branch) * np.asarray(t, dtype=float))


def long_time_horizon(params: PhysicalParams, drive: DriveSpec) -> float:
    """t* = ln(1e8) / min(Gamma, gamma): every transient is below 1e-8."""
    rates = [params.gamma]
    if isinstance(drive, ExpCosine):
        rates.append(drive.big_gamma)
    slowest = min(rates)
    if slowest <= 0:
        raise DivergentDrive("undamped drive has no long-time horizon")
    return math.log(1e8) / slowest


def _sampled_points(drive: Sampled, t: float) -> list[float]:
    return [s for s in drive.times if 0 < s < t]


def _sampled_response(params: PhysicalParams, drive: Sampled, t) -> np.ndarray:
    """Exact F(t) for a piecewise-linear drive, propagated segment by segment."""
    a = decay_rate(params)
    ts, fs = np.asarray(drive.times, dtype=float), np.asarray(drive.values, dtype=float)
    h = np.diff(ts)
    slope = np.diff(fs) / h

    def seg(tau, c, d):
        # int_0^tau exp(-a (tau - u)) (c + d u) du
        e1 = exp_integral(a, tau)
        return c * e1 + d * (tau * e1 - _exp_integral2_arr(a, tau))

    # F at the nodes
    node = np.zeros(ts.size, dtype=complex)
    decay = np.exp(-a * h)
    inc = seg(h, fs[:-1], slope) / params.mass
    for k in range(h.size):
        node[k + 1] = decay[k] * node[k] + inc[k]
    t = np.asarray(t, dtype=float)
    k = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, h.size - 1)
    inside = t <= ts[-1]
    tau = np.where(inside, t - ts[k], 0.0)
    within = np.exp(-a * tau) * node[k] + seg(tau, fs[k], slope[k]) / params.mass
    after = np.exp(-a * np.maximum(t - ts[-1], 0.0)) * node[-1]
    return np.where(inside, within, after)


def _exp_integral2_arr(x, t):
    t = np.asarray(t, dtype=float)
    return t * t * _g2(x * t)


def response_F(params: PhysicalParams, drive: DriveSpec, t, cfg: QuadratureConfig = DEFAULT_QUAD,
               method: str = "auto"):
    """Complex mean velocity response F(t) = (1/m) int_0^t A(t-s) f(s) ds.

    Its real part is the mean x-velocity; the imaginary part the y-velocity.
    ``method``: ``analytic`` (exponential-cosine drive), ``piecewise`` (exact
    for sampled drives) or ``quadrature``.
    """
    a = decay_rate(params)
    if method == "auto":
        method = "analytic" if isinstance(drive, ExpCosine) else "piecewise"
    if method == "piecewise":
        if not isinstance(drive, Sampled):
            raise ConfigError("piecewise response needs a Sampled drive")
        out = _sampled_response(params, drive, t)
        return complex(out) if out.ndim == 0 else out
    if method == "analytic":
        if not isinstance(drive, ExpCosine):
            raise ConfigError("analytic response needs an ExpCosine drive")
        acc = sum(kernel_conv(a, lam, t) for lam in drive.exponents())
        out = 0.5 * drive.f0 / params.mass * acc
        return complex(out) if np.ndim(out) == 0 else out
    if method != "quadrature":
        raise ConfigError(f"unknown method {method!r}")
    t = float(t)
    pts = _sampled_points(drive, t) if isinstance(drive, Sampled) else None
    val = integrate_1d(lambda s: np.exp(-a * (t - s)) * drive.value(s), 0.0, t, cfg, points=pts)
    return complex(val) / params.mass


def _mean_work_integrand(params: PhysicalParams, drive: DriveSpec):
    g, wc, m = params.gamma, params.omega_c, params.mass

    def integrand(t1, t2):
        lag = t1 - t2
        return drive.value(t1) * drive.value(t2) * np.exp(-g * lag) * np.cos(wc * lag) / m

    return integrand


def mean_work(params: PhysicalParams, drive: DriveSpec, t: float, cfg: QuadratureConfig = DEFAULT_QUAD,
              method: str = "auto") -> float:
    """Mean work phi(t) = int_0^t f(t1) Re F(t1) dt1.

    Equivalently (1/m) times the ordered double integral of
    f(t1) f(t2) exp(-gamma (t1-t2)) cos(omega_c (t1-t2)). ``t`` may be
    ``math.inf`` for the analytic path. Sampled drives default to a 1-D
    quadrature of f(t1) Re F(t1) with the exact piecewise response;
    ``method='quadrature'`` forces the 2-D quadrature route.
    """
    if t < 0:
        raise ConfigError("t must be >= 0")
    if method == "auto":
        method = "analytic" if isinstance(drive, ExpCosine) else "piecewise"
    if method == "piecewise":
        if not isinstance(drive, Sampled):
            raise ConfigError("piecewise mean work needs a Sampled drive")
        t_eff = min(t, drive.t_max)
        if t_eff == 0:
            return 0.0
        val = integrate_1d(lambda s: drive.value(s) * _sampled_response(params, drive, s).real, 0.0, t_eff, cfg,
                           points=_sampled_points(drive, t_eff))
        return float(val)
    if method == "analytic":
        if not isinstance(drive, ExpCosine):
            raise ConfigError("analytic mean work needs an ExpCosine drive")
        if drive.f0 == 0 or t == 0:
            return 0.0
        if math.isinf(t) and drive.big_gamma == 0:
            raise DivergentDrive("mean work of an undamped drive diverges")
        a = complex(params.gamma, abs(params.omega_c))   # phi depends on omega_c only via cos
        lams = drive.exponents()
        total = sum(nested_exp(l1, a, l2, t) for l1 in lams for l2 in lams)
        return float((drive.f0**2 / (4.0 * params.mass) * total).real)
    if method != "quadrature":
        raise ConfigError(f"unknown method {method!r}")
    if math.isinf(t):
        raise DivergentDrive("quadrature route needs finite t")
    if isinstance(drive, Sampled):
        t_eff = min(t, drive.t_max)
        pts = _sampled_points(drive, t_eff)
    else:
        t_eff, pts = t, None
    return integrate_2d_triangular(_mean_work_integrand(params, drive), t_eff, cfg, points=pts)


def mean_work_long_time(params: PhysicalParams, drive: ExpCosine) -> float:
    """Exact t -> infinity mean work for an exponential-cosine drive."""
    if drive.big_gamma <= 0:
        raise DivergentDrive("undamped drive: mean work grows without bound")
    return mean_work(params, drive, math.inf)


def mean_work_long_time_static(params: PhysicalParams, drive: ExpCosine) -> float:
    """Omega = 0 closed form: f0^2 (Gamma+gamma) / (2 m Gamma ((Gamma+gamma)^2 + omega_c^2))."""
    G, g = drive.big_gamma, params.gamma
    if G <= 0:
        raise DivergentDrive("undamped drive: mean work grows without bound")
    return drive.f0**2 * (G + g) / (2 * params.mass * G * ((G + g) ** 2 + params.omega_c**2))


def mean_work_long_time_resonant(params: PhysicalParams, drive: ExpCosine) -> float:
    """Leading near-resonance term f0^2 (Gamma+gamma) / (8 m Gamma ((Gamma+gamma)^2 + (Omega-|omega_c|)^2)).

    Drops contributions of relative size O((Gamma+gamma)/omega_c).
    """
    G, g = drive.big_gamma, params.gamma
    if G <= 0:
        raise DivergentDrive("undamped drive: mean work grows without bound")
    det = drive.big_omega - abs(params.omega_c)
    return drive.f0**2 * (G + g) / (8 * params.mass * G * ((G + g) ** 2 + det**2))


def spectral_coefficient(params: PhysicalParams, drive: DriveSpec, omega, t: float, branch: int = 1,
                         cfg: QuadratureConfig = DEFAULT_QUAD, method: str = "auto"):
    """b(omega, t) = beta_omega - i delta_omega.

    b = int_0^t dt1 f(t1) int_0^{t1} dtau exp(-a (t1 - tau)) exp(-i omega tau),
    with a = gamma + i*branch*omega_c. Accepts an array of frequencies.
    """
    omega = np.asarray(omega, dtype=float)
    a = decay_rate(params, branch)
    if method == "auto":
        method = "analytic" if isinstance(drive, ExpCosine) else "quadrature"
    if method == "analytic":
        if not isinstance(drive, ExpCosine):
            raise ConfigError("analytic coefficient needs an ExpCosine drive")
        if math.isinf(t) and drive.big_gamma == 0:
            raise DivergentDrive("coefficient of an undamped drive has no long-time limit")
        q = 1j * omega
        out = 0.5 * drive.f0 * sum(nested_exp(lam, a, q, t) for lam in drive.exponents())
        return complex(out) if out.ndim == 0 else out
    if method != "quadrature":
        raise ConfigError(f"unknown method {method!r}")
    if math.isinf(t):
        raise DivergentDrive("quadrature route needs finite t")
    flat = np.atleast_1d(omega).ravel()
    pts = _sampled_points(drive, t) if isinstance(drive, Sampled) else None

    def integrand(t1):
        inner = kernel_conv(a, 1j * flat[:, None], t1[None, :])
        return drive.value(t1)[None, :] * inner

    vals = integrate_1d(integrand, 0.0, float(t), cfg, points=pts)
    vals = np.asarray(vals, dtype=complex).reshape(omega.shape)
    return complex(vals) if vals.ndim == 0 else vals


def beta_delta(params: PhysicalParams, drive: DriveSpec, omega, t: float, cfg: QuadratureConfig = DEFAULT_QUAD):
    """Separate (beta_omega, delta_omega) from b and the barred b.

    Since the barred kernels are complex conjugates, conj(b_bar) = beta + i delta.
    """
    b = spectral_coefficient(params, drive, omega, t, 1, cfg)
    bbar_c = np.conj(spectral_coefficient(params, drive, omega, t, -1, cfg))
    return 0.5 * (b + bbar_c), (bbar_c - b) / 2j


def mode_kernels(params: PhysicalParams, omega, t):
    """(B_omega(t), D_omega(t)): responses of v_+ to cos and sin bath forcing."""
    omega = np.asarray(omega, dtype=float)
    a = decay_rate(params)
    kp = kernel_conv(a, -1j * omega, t)   # e^{+i w tau}
    km = kernel_conv(a, 1j * omega, t)    # e^{-i w tau}
    B = 0.5 * (kp + km)
    D = (kp - km) / 2j
    if B.ndim == 0:
        return complex(B), complex(D)
    return B, D
