"""The acceptance suite: one function per criterion, shared by ``cyclowork check`` and the tests.

Every criterion returns a ``CriterionResult`` with the measured quantities,
the targets, the tolerance applied and a pass/fail verdict that includes the
runtime budget. Monte Carlo criteria optionally write their ensembles
(CSV + summary JSON) to an output directory; those files contain no timing
information, so repeated runs with the same seed are byte-identical.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .core_model import ExpCosine, PhysicalParams, ThermalState
from .kernels import long_time_horizon, mean_work
from .numerics import RngStream
from .oracles.bath import BathDiscretization, discrete_variance, sample_bath_work
from .oracles.bath_ode import BathOdeConfig, energy_drift, simulate_bath_ode
from .oracles.classical import ClassicalSimConfig, simulate_classical
from .oracles.ensemble import WorkSampleEnsemble
from .work_stats import (
    InvalidRegimeWarning,
    lorentzian_ratio,
    variance_full,
    variance_rwa,
    work_distribution,
    work_statistics,
)

# Target long-time mean-work values for f0 = m = 1, Gamma = 0.05, gamma = 0.1, omega_c = 1.
STATIC_MEAN_TARGET = 2.93399
RESONANT_MEAN_TARGET = 33.333


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    runtime: float
    budget: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.number:2d} {self.name} ({self.runtime:.2f}s / {self.budget:g}s)"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed, "runtime": self.runtime,
                "budget": self.budget, "details": self.details}


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def _finish(number: int, name: str, budget: float, t0: float, ok: bool, details: dict) -> CriterionResult:
    runtime = time.perf_counter() - t0
    details["runtime_ok"] = runtime < budget
    return CriterionResult(number, name, bool(ok and runtime < budget), runtime, budget, details)


def _emit(ens: WorkSampleEnsemble, out_dir: Path | None, stem: str) -> None:
    if out_dir is None:
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    ens.write_csv(out_dir / f"{stem}.csv")
    ens.write_summary(out_dir / f"{stem}.json")


def _monotone(xs, increasing: bool) -> bool:
    d = np.diff(np.asarray(xs, dtype=float))
    return bool(np.all(d > 0) if increasing else np.all(d < 0))


def criterion_1(**_) -> CriterionResult:
    t0 = time.perf_counter()
    p = PhysicalParams(mass=1.0, omega_c=1.0, gamma=0.1)
    rows = {}
    ok = True
    for label, omega, target in (("static", 0.0, STATIC_MEAN_TARGET), ("resonant", 1.0, RESONANT_MEAN_TARGET)):
        d = ExpCosine(1.0, 0.05, omega)
        t_star = long_time_horizon(p, d)
        quad = mean_work(p, d, t_star, method="quadrature")
        rel = _rel(quad, target)
        ok &= rel < 1e-3
        rows[label] = {"t_star": t_star, "quadrature": quad, "analytic_t_inf": mean_work(p, d, math.inf),
                       "target": target, "rel_error": rel}
    return _finish(1, "mean-work closed forms vs 2-D quadrature", 5.0, t0, ok, {"tolerance": 1e-3, **rows})


def criterion_2(**_) -> CriterionResult:
    t0 = time.perf_counter()
    p = PhysicalParams(hbar=1e-4)
    th = ThermalState.from_beta(1.0)
    d = ExpCosine(1.0, 0.01, 0.0)
    t_star = long_time_horizon(p, d)
    ratio = variance_full(p, th, d, t_star) / mean_work(p, d, t_star)
    target = 2.0 * th.kt
    rel = _rel(ratio, target)
    return _finish(2, "classical prefactor sigma^2/<W> = 2 kT", 30.0, t0, rel < 0.02,
                   {"ratio": ratio, "target": target, "rel_error": rel, "tolerance": 0.02})


def criterion_3(**_) -> CriterionResult:
    t0 = time.perf_counter()
    p = PhysicalParams(gamma=0.01)
    d = ExpCosine(1.0, 0.002, 1.0)
    t_star = long_time_horizon(p, d)
    phi = mean_work(p, d, t_star)
    rows = []
    ok = True
    for x in (0.1, 1.0, 2.0, 10.0, math.inf):
        th = ThermalState.zero() if math.isinf(x) else ThermalState.from_beta(x / (p.hbar * p.omega_c))
        target = p.hbar * p.omega_c if math.isinf(x) else p.hbar * p.omega_c / math.tanh(x / 2)
        ratio = variance_full(p, th, d, t_star) / phi
        rel = _rel(ratio, target)
        ok &= rel < 0.03
        rows.append({"beta_hbar_omega_c": "inf" if math.isinf(x) else x, "ratio": ratio, "target": target,
                     "rel_error": rel})
    return _finish(3, "quantum prefactor at resonance hbar w_c coth", 120.0, t0, ok,
                   {"t_star": t_star, "rows": rows, "tolerance": 0.03})


def criterion_4(**_) -> CriterionResult:
    t0 = time.perf_counter()
    p = PhysicalParams(gamma=0.01)
    d = ExpCosine(1.0, 0.05, 1.0)
    worst_identity = worst_linear = worst_rwa = 0.0
    for x in (0.1, 1.0, 2.0, 10.0):
        th = ThermalState.from_beta(x / (p.hbar * p.omega_c))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InvalidRegimeWarning)
            for method in ("full", "rwa"):
                st = work_statistics(p, th, d, 30.0, method=method)
                dist = work_distribution(st)
                worst_identity = max(worst_identity, _rel(dist.alpha * st.sigma2, 2 * st.mean_W))
                w = np.linspace(-4, 4, 201) * math.sqrt(st.sigma2)
                resid = np.abs(dist.log_ratio(w) - dist.alpha * w)
                worst_linear = max(worst_linear, float(np.max(resid / np.maximum(1.0, np.abs(dist.alpha * w)))))
                if method == "rwa":
                    worst_rwa = max(worst_rwa, _rel(st.alpha_kt(th), math.tanh(x / 2) / (x / 2)))
    ok = worst_identity < 1e-12 and worst_linear < 1e-13 and worst_rwa < 1e-12
    return _finish(4, "alpha identity and fluctuation-theorem linearity", 1.0, t0, ok,
                   {"alpha_sigma2_vs_2W": worst_identity, "log_ratio_residual": worst_linear,
                    "rwa_alpha_kt_vs_tanh": worst_rwa})


def criterion_5(**_) -> CriterionResult:
    t0 = time.perf_counter()
    p = PhysicalParams()
    d = ExpCosine(1.0, 0.05, 0.0)
    t = 1e-3
    mean_ratio = mean_work(p, d, t) / (d.f0**2 * t**2 / (2 * p.mass))
    ts = np.logspace(-3, -2, 6)
    var = [variance_full(p, ThermalState.zero(), d, float(s)) for s in ts]
    slope = float(np.polyfit(np.log(ts), np.log(var), 1)[0])
    ok = 0.99 <= mean_ratio <= 1.01 and abs(slope - 4.0) <= 0.05
    return _finish(5, "short-time laws t^2 and t^4", 30.0, t0, ok, {"mean_ratio": mean_ratio, "variance_slope": slope})


def criterion_6(**_) -> CriterionResult:
    t0 = time.perf_counter()
    p = PhysicalParams()
    th = ThermalState.from_beta(1.0)
    target = 2.0 * th.kt
    rows = []
    for G in (0.1, 0.03, 0.01, 0.003):
        r = lorentzian_ratio(p, th, ExpCosine(1.0, G * p.omega_c, 0.0), "static")
        rows.append({"big_gamma": G, "ratio": r, "rel_error": _rel(r, target)})
    errs = [r["rel_error"] for r in rows]
    ok = _monotone(errs, increasing=False) and errs[-1] < 0.02
    return _finish(6, "Gamma -> 0 delta-function convergence", 60.0, t0, ok,
                   {"target": target, "rows": rows, "tolerance": 0.02})


def criterion_7(seed: int = 42, threads: int = 1, out_dir: Path | None = None, **_) -> CriterionResult:
    t0 = time.perf_counter()
    p = PhysicalParams()
    th = ThermalState.from_beta(1.0)
    d = ExpCosine(1.0, 0.01, 0.0)
    t_star = long_time_horizon(p, d)
    ens = simulate_classical(p, th, d, ClassicalSimConfig(t_star, 50_000, RngStream(seed)), threads=threads)
    _emit(ens, out_dir, "classical")
    s = ens.stats
    phi = mean_work(p, d, t_star, method="quadrature")
    z = (s.mean - phi) / s.se_mean
    ratio = s.variance / (2 * th.kt * s.mean)
    ok = abs(z) < 5 and abs(ratio - 1.0) <= 0.05
    return _finish(7, "classical Langevin oracle", 180.0, t0, ok,
                   {"mean_sample": s.mean, "mean_analytic": phi, "z_mean": z, "fdt_ratio": ratio})


def criterion_8(seed: int = 42, threads: int = 1, out_dir: Path | None = None, **_) -> CriterionResult:
    t0 = time.perf_counter()
    p = PhysicalParams()
    th = ThermalState.from_beta(1.0)
    d = ExpCosine(1.0, 0.05, 0.0)
    t = 20.0
    n = 100_000
    bath = BathDiscretization.uniform(p, 400)
    ens = sample_bath_work(p, th, d, bath, t, n, RngStream(seed), threads=threads)
    _emit(ens, out_dir, "bath_fast")
    s = ens.stats
    skew_bound, kurt_bound = 5 * math.sqrt(6 / n), 5 * math.sqrt(24 / n)
    v_disc = discrete_variance(p, th, d, bath, t)
    z_var = (s.variance - v_disc) / s.se_variance
    v_cont = variance_full(p, th, d, t)
    v_disc800 = discrete_variance(p, th, d, BathDiscretization.uniform(p, 800), t)
    cont_rel = _rel(v_disc800, v_cont)
    ok = abs(s.skewness) < skew_bound and abs(s.excess_kurtosis) < kurt_bound and abs(z_var) < 5 and cont_rel < 0.03
    return _finish(8, "quantum bath oracle, coefficient fast path", 180.0, t0, ok,
                   {"skewness": s.skewness, "skew_bound": skew_bound, "excess_kurtosis": s.excess_kurtosis,
                    "kurt_bound": kurt_bound, "variance_sample": s.variance, "variance_discrete": v_disc,
                    "z_variance": z_var, "variance_full": v_cont, "variance_discrete_800": v_disc800,
                    "continuum_rel_error": cont_rel})


def criterion_9(seed: int = 42, threads: int = 1, out_dir: Path | None = None, **_) -> CriterionResult:
    t0 = time.perf_counter()
    p = PhysicalParams()
    th = ThermalState.from_beta(1.0)
    d = ExpCosine(1.0, 0.05, 0.0)
    t_end = 40.0
    bath = BathDiscretization.uniform(p, 800)
    cfg = BathOdeConfig(t_end, 10_000, RngStream(seed))
    ens = simulate_bath_ode(p, th, d, bath, cfg, threads=threads)
    _emit(ens, out_dir, "bath_ode")
    s = ens.stats
    phi, v = mean_work(p, d, t_end), variance_full(p, th, d, t_end)
    mean_tol = 5 * s.se_mean + 0.03 * abs(phi)
    var_tol = 5 * s.se_variance + 0.03 * v
    drift = ens.metadata["energy_drift"]
    recurrence_ok = t_end < math.pi * bath.n_modes / p.omega_d
    ok = (abs(s.mean - phi) < mean_tol and abs(s.variance - v) < var_tol and drift < 1e-6
          and recurrence_ok and not ens.metadata["rejected"])
    return _finish(9, "full ODE bath validator", 900.0, t0, ok,
                   {"mean_sample": s.mean, "mean_analytic": phi, "mean_tol": mean_tol, "variance_sample": s.variance,
                    "variance_analytic": v, "variance_tol": var_tol, "energy_drift": drift,
                    "recurrence_ok": recurrence_ok})


def criterion_10(**_) -> CriterionResult:
    t0 = time.perf_counter()
    th = ThermalState.from_beta(1.0)
    d = ExpCosine(1.0, 0.002, 1.0)
    rows = []
    for g in (0.01, 0.05, 0.1, 0.3):
        p = PhysicalParams(gamma=g)
        t_star = long_time_horizon(p, d)
        full = variance_full(p, th, d, t_star)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InvalidRegimeWarning)
            rwa = variance_rwa(p, th, d, t_star)
        rows.append({"gamma": g, "variance_full": full, "variance_rwa": rwa, "rel_dev": abs(full - rwa) / full})
    devs = [r["rel_dev"] for r in rows]
    ok = _monotone(devs, increasing=True) and devs[0] < 0.03
    return _finish(10, "RWA regime map", 120.0, t0, ok, {"rows": rows})


MONTE_CARLO = (7, 8, 9)
CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def run_criteria(numbers=None, seed: int = 42, threads: int = 1, out_dir: Path | None = None,
                 log: Callable[[str], None] | None = None) -> list[CriterionResult]:
    """Run the selected criteria (default: 1-10) in order."""
    numbers = sorted(CRITERIA) if numbers is None else list(numbers)
    results = []
    for k in numbers:
        res = CRITERIA[k](seed=seed, threads=threads, out_dir=out_dir)
        results.append(res)
        if log is not None:
            log(res.line())
    return results


def determinism(seed: int, thread_counts=(1, 4), root: Path | None = None) -> CriterionResult:
    """Criterion 11: repeated Monte Carlo runs at different worker counts give byte-identical files."""
    import tempfile

    t0 = time.perf_counter()
    budget = len(thread_counts) * (180.0 + 180.0 + 900.0)
    with tempfile.TemporaryDirectory(dir=root) as tmp:
        runs = []
        for i, th in enumerate(thread_counts):
            out = Path(tmp) / f"run{i}"
            run_criteria(MONTE_CARLO, seed=seed, threads=th, out_dir=out)
            runs.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
        identical = all(r == runs[0] for r in runs[1:]) and len(runs[0]) == 2 * len(MONTE_CARLO)
    return _finish(11, "determinism across repeats and thread counts", budget, t0, identical,
                   {"seed": seed, "thread_counts": list(thread_counts), "files": sorted(runs[0])})
