import json
import math

import numpy as np
import pytest

from cyclowork.core_model import ExpCosine, PhysicalParams, ThermalState
from cyclowork.errors import ConfigError, EnergyDriftExceeded, StepTooLarge, TooFewSamples
from cyclowork.kernels import mean_work
from cyclowork.numerics import RngStream
from cyclowork.oracles.bath import BathDiscretization, discrete_variance, sample_bath_work, work_weights
from cyclowork.oracles.bath_ode import (
    BathOdeConfig,
    energy_drift,
    simulate_bath_ode,
    velocity_relaxation,
    wigner_initial_states,
)
from cyclowork.oracles.classical import ClassicalSimConfig, simulate_classical
from cyclowork.oracles.ensemble import WorkSampleEnsemble, map_chunks
from cyclowork.work_stats import variance_discrete, variance_full

P = PhysicalParams()
TH = ThermalState.from_beta(1.0)
STATIC = ExpCosine(1.0, 0.05, 0.0)
RESONANT = ExpCosine(1.0, 0.05, 1.0)


def within(stat, target, se, k=5.0):
    return abs(stat - target) <= k * se


class TestEnsemble:
    def test_map_chunks_order_and_threads(self):
        fn = lambda a, b: np.arange(a, b, dtype=float) ** 2
        one = map_chunks(fn, 1000, 64, 1)
        four = map_chunks(fn, 1000, 64, 4)
        assert np.array_equal(one, np.arange(1000.0) ** 2) and np.array_equal(one, four)

    def test_csv_and_summary(self, tmp_path):
        e = WorkSampleEnsemble.from_samples(np.linspace(0, 1, 32), oracle="x", seed=1, flags=["f"])
        e.write_csv(tmp_path / "s.csv")
        e.write_summary(tmp_path / "s.json")
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0].startswith("#") and "trajectory_id,W" in lines
        assert len([ln for ln in lines if not ln.startswith("#")]) == 33
        js = json.loads((tmp_path / "s.json").read_text())
        assert js["oracle"] == "x" and js["flags"] == ["f"] and e.flags == ["f"]


class TestBathDiscretization:
    def test_effective_friction(self):
        for n in (400, 800):
            b = BathDiscretization.uniform(P, n)
            assert b.effective_friction(P, 20.0) == pytest.approx(P.gamma, rel=0.02)

    def test_recurrence_time(self):
        b = BathDiscretization.uniform(P, 400)
        assert b.recurrence_time == pytest.approx(2 * math.pi * 400 / P.omega_d)

    def test_friction_kernel_decays_on_short_window(self):
        b = BathDiscretization.uniform(P, 400)
        k = b.friction_kernel(P, np.array([0.0, 1.0, 5.0]))
        assert abs(k[1]) < 0.05 * k[0] and abs(k[2]) < 0.05 * k[0]

    def test_recurrence_flag(self):
        b = BathDiscretization.uniform(P, 20)
        e = sample_bath_work(P, TH, STATIC, b, 0.6 * b.recurrence_time, 64, RngStream(0))
        assert "recurrence_violation" in e.flags
        e = sample_bath_work(P, TH, STATIC, BathDiscretization.uniform(P, 400), 10.0, 64, RngStream(0))
        assert e.flags == []


class TestBathFast:
    def test_weights_reproduce_discrete_variance(self):
        b = BathDiscretization.uniform(P, 200)
        w = work_weights(P, TH, RESONANT, b, 20.0)
        assert w.shape == (4 * 200,)
        independent = variance_discrete(P, TH, RESONANT, 20.0, b.omegas, b.d_omega)
        assert float(w @ w) == pytest.approx(independent, rel=1e-10)
        assert discrete_variance(P, TH, RESONANT, b, 20.0) == pytest.approx(independent, rel=1e-10)

    def test_discrete_converges_to_continuum(self):
        full = variance_full(P, TH, STATIC, 20.0)
        errs = [abs(discrete_variance(P, TH, STATIC, BathDiscretization.uniform(P, n), 20.0) - full)
                for n in (100, 200, 400, 800)]
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_gaussian_moments(self):
        b = BathDiscretization.uniform(P, 400)
        e = sample_bath_work(P, TH, RESONANT, b, 20.0, 50_000, RngStream(5))
        s = e.stats
        assert within(s.mean, mean_work(P, RESONANT, 20.0), s.se_mean)
        assert within(s.variance, discrete_variance(P, TH, RESONANT, b, 20.0), s.se_variance)
        assert abs(s.skewness) < 5 * math.sqrt(6 / s.n)
        assert abs(s.excess_kurtosis) < 5 * math.sqrt(24 / s.n)

    def test_thread_determinism(self):
        b = BathDiscretization.uniform(P, 100)
        a = sample_bath_work(P, TH, STATIC, b, 10.0, 3000, RngStream(9), threads=1, chunk=256)
        c = sample_bath_work(P, TH, STATIC, b, 10.0, 3000, RngStream(9), threads=4, chunk=256)
        assert np.array_equal(a.samples, c.samples)
        assert a.metadata["config_hash"] == c.metadata["config_hash"]

    def test_too_few_samples(self):
        with pytest.raises(TooFewSamples):
            sample_bath_work(P, TH, STATIC, BathDiscretization.uniform(P, 10), 1.0, 15, RngStream(0))

    def test_agrees_with_classical_oracle_as_hbar_vanishes(self):
        ph = PhysicalParams(hbar=1e-4)
        b = BathDiscretization.uniform(ph, 800)
        q = sample_bath_work(ph, TH, RESONANT, b, 20.0, 20_000, RngStream(3))
        c = simulate_classical(ph, TH, RESONANT, ClassicalSimConfig(20.0, 20_000, RngStream(3), initial="rest"))
        assert c.stats.mean == pytest.approx(q.stats.mean, rel=0.05)
        assert c.stats.variance == pytest.approx(q.stats.variance, rel=0.05)


def reference_ou_work(gamma, mass, kt, drive, t_end, n_steps, n, seed):
    """Independent 1-D reference: exact Ornstein-Uhlenbeck update for v_x alone."""
    rng = np.random.default_rng(seed)
    h = t_end / n_steps
    decay = math.exp(-gamma * h)
    noise = math.sqrt(kt / mass * (1 - decay**2))
    v = rng.standard_normal(n) * math.sqrt(kt / mass)
    t = 0.0
    work = np.zeros(n)
    f_prev = drive.f0
    for _ in range(n_steps):
        fm = drive.f0 * math.exp(-drive.big_gamma * (t + h / 2)) * math.cos(drive.big_omega * (t + h / 2))
        f_next = drive.f0 * math.exp(-drive.big_gamma * (t + h)) * math.cos(drive.big_omega * (t + h))
        v_new = decay * v + (1 - decay) / (gamma * mass) * fm + noise * rng.standard_normal(n)
        work += 0.5 * h * (f_prev * v + f_next * v_new)
        v, f_prev, t = v_new, f_next, t + h
    return work


class TestClassical:
    def test_zero_drive_has_zero_mean(self):
        e = simulate_classical(P, TH, ExpCosine(0.0, 0.05, 0.0), ClassicalSimConfig(10.0, 2000, RngStream(1)))
        assert np.all(e.samples == 0.0)

    def test_mean_matches_kernel(self):
        e = simulate_classical(P, TH, RESONANT, ClassicalSimConfig(20.0, 10_000, RngStream(2)))
        assert within(e.stats.mean, mean_work(P, RESONANT, 20.0), e.stats.se_mean)

    def test_thermal_fdt(self):
        e = simulate_classical(P, TH, RESONANT, ClassicalSimConfig(20.0, 10_000, RngStream(4)))
        assert within(e.stats.variance, 2 * TH.kt * mean_work(P, RESONANT, 20.0), e.stats.se_variance)

    def test_zero_cyclotron_marginal_matches_1d_reference(self):
        p = PhysicalParams(omega_c=0.0)
        d = ExpCosine(1.0, 0.05, 0.5)
        e = simulate_classical(p, TH, d, ClassicalSimConfig(20.0, 10_000, RngStream(6)))
        ref = reference_ou_work(p.gamma, p.mass, TH.kt, d, 20.0, e.metadata["n_steps"], 10_000, 123)
        se = math.hypot(e.stats.se_mean, ref.std(ddof=1) / math.sqrt(ref.size))
        assert within(e.stats.mean, ref.mean(), se)
        se_var = math.hypot(e.stats.se_variance, ref.var(ddof=1) * math.sqrt(2 / (ref.size - 1)))
        assert within(e.stats.variance, ref.var(ddof=1), se_var)

    def test_thread_determinism(self):
        cfg = ClassicalSimConfig(5.0, 600, RngStream(8))
        a = simulate_classical(P, TH, STATIC, cfg, threads=1)
        b = simulate_classical(P, TH, STATIC, cfg, threads=3)
        assert np.array_equal(a.samples, b.samples)

    def test_step_too_large(self):
        with pytest.raises(StepTooLarge):
            simulate_classical(P, TH, STATIC, ClassicalSimConfig(5.0, 100, RngStream(0), dt=0.1))

    def test_zero_temperature_rejected(self):
        with pytest.raises(ConfigError):
            simulate_classical(P, ThermalState.zero(), STATIC, ClassicalSimConfig(5.0, 100, RngStream(0)))

    def test_config_validation(self):
        with pytest.raises(TooFewSamples):
            ClassicalSimConfig(5.0, 10, RngStream(0))
        with pytest.raises(ConfigError):
            ClassicalSimConfig(5.0, 100, RngStream(0), initial="hot")


class TestBathOde:
    def test_adjoint_equals_direct(self):
        p = PhysicalParams(omega_d=10.0)
        b = BathDiscretization.uniform(p, 40)
        kw = dict(t_end=10.0, n_trajectories=32, rng=RngStream(2))
        a = simulate_bath_ode(p, TH, RESONANT, b, BathOdeConfig(**kw, method="adjoint"))
        d = simulate_bath_ode(p, TH, RESONANT, b, BathOdeConfig(**kw, method="direct"))
        np.testing.assert_allclose(a.samples, d.samples, rtol=1e-10, atol=1e-12)

    def test_shares_initial_states_with_fast_path(self):
        b = BathDiscretization.uniform(P, 10)
        y0 = wigner_initial_states(P, TH, b, RngStream(4), 3, 5)
        z = RngStream(4).child(3).generator().standard_normal(40)
        sq, sp = b.wigner_std(P, TH)
        np.testing.assert_allclose(y0[0, 4:], z * np.concatenate([sq, sq, sp, sp]))
        assert np.all(y0[:, :4] == 0.0)

    def test_single_decoupled_mode_conserves_energy(self):
        p = PhysicalParams(gamma=1e-12, omega_d=1.0)
        b = BathDiscretization.uniform(p, 1)
        t_end = 100 * 2 * math.pi / abs(p.omega_c)
        assert energy_drift(p, TH, b, t_end, 0.03, RngStream(1)) < 1e-8

    def test_velocity_relaxation_rate(self):
        b = BathDiscretization.uniform(P, 800)
        t, v = velocity_relaxation(P, b, 20.0)
        mask = t > 2.0
        slope = np.polyfit(t[mask], np.log(np.abs(v[mask])), 1)[0]
        assert -slope == pytest.approx(P.gamma, rel=0.10)

    def test_energy_drift_rejection(self):
        b = BathDiscretization.uniform(P, 200)
        cfg = BathOdeConfig(40.0, 16, RngStream(0), dt=0.06 / P.omega_d)
        with pytest.raises(EnergyDriftExceeded):
            simulate_bath_ode(P, TH, STATIC, b, cfg)

    def test_step_too_large(self):
        with pytest.raises(StepTooLarge):
            BathOdeConfig(1.0, 16, RngStream(0), dt=0.2 / P.omega_d).grid(P)

    def test_recurrence_marks_rejected(self):
        p = PhysicalParams(omega_d=5.0)
        b = BathDiscretization.uniform(p, 5)
        e = simulate_bath_ode(p, TH, STATIC, b, BathOdeConfig(4.0, 16, RngStream(0)))
        assert e.metadata["rejected"] and "recurrence_violation" in e.flags
