import csv
import io
import json
import math

import pytest

from cyclowork import __version__
from cyclowork.cli import main
from cyclowork.core_model import ExpCosine, PhysicalParams
from cyclowork.kernels import long_time_horizon, mean_work

STATIC = {"type": "expcos", "f0": 1.0, "big_gamma": 0.05, "big_omega": 0.0}
RESONANT = {"type": "expcos", "f0": 1.0, "big_gamma": 0.05, "big_omega": 1.0}


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse_csv(text):
    header = [ln for ln in text.splitlines() if ln.startswith("#")]
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return header, list(csv.DictReader(io.StringIO("\n".join(body))))


class TestMeanWork:
    def test_zero_drive_column(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"drive": {"type": "expcos", "f0": 0.0, "big_gamma": 0.05, "big_omega": 0.0},
                                      "t_grid": {"start": 0, "stop": 50, "num": 11}})
        code, out, _ = run(capsys, "mean-work", "--config", cfg)
        header, rows = parse_csv(out)
        assert code == 0 and len(rows) == 11
        assert all(float(r["mean_W"]) == 0.0 for r in rows)
        assert any(h.startswith("# config_hash=") for h in header) and "# seed=42" in header

    @pytest.mark.parametrize("drive", [STATIC, RESONANT], ids=["static", "resonant"])
    def test_long_time_value_matches_double_integral(self, tmp_path, capsys, drive):
        cfg = write_config(tmp_path, {"drive": drive, "times": ["inf"]})
        code, out, _ = run(capsys, "mean-work", "--config", cfg)
        value = float(parse_csv(out)[1][0]["mean_W"])
        p, d = PhysicalParams(), ExpCosine(**{k: v for k, v in drive.items() if k != "type"})
        quad = mean_work(p, d, long_time_horizon(p, d), method="quadrature")
        assert code == 0 and value == pytest.approx(quad, rel=1e-3)

    def test_json_format(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"times": [1.0, 2.0]})
        code, out, _ = run(capsys, "mean-work", "--config", cfg, "--format", "json")
        doc = json.loads(out)
        assert code == 0 and [r["t"] for r in doc["rows"]] == [1.0, 2.0] and "config_hash" in doc

    def test_out_directory(self, tmp_path, capsys):
        code, out, _ = run(capsys, "mean-work", "--out", str(tmp_path / "o"))
        assert code == 0 and out == "" and (tmp_path / "o" / "mean_work.csv").exists()

    def test_divergent_exit_3(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"drive": {"type": "expcos", "f0": 1.0, "big_gamma": 0.0, "big_omega": 0.0},
                                      "times": ["inf"]})
        code, _, err = run(capsys, "mean-work", "--config", cfg)
        assert code == 3 and "mean-work" in err


class TestFdt:
    def test_rwa_alpha_kt_is_tanh(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"params": {"gamma": 0.01}, "thermal": {"beta": 2.0}, "drive": RESONANT,
                                      "method": "rwa", "t": 50})
        code, out, _ = run(capsys, "fdt", "--config", cfg)
        doc = json.loads(out)
        assert code == 0 and doc["alpha_kT"] == pytest.approx(0.761594, abs=5e-7)

    def test_zero_temperature_resonance(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"thermal": {"zero_temperature": True}, "drive": RESONANT,
                                      "method": "long_time"})
        code, out, _ = run(capsys, "fdt", "--config", cfg)
        doc = json.loads(out)
        assert code == 0 and doc["alpha"] == pytest.approx(2.0, rel=1e-12) and doc["alpha_kT"] is None

    def test_classical_alpha_kt(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"params": {"hbar": 1e-4}, "drive": STATIC, "method": "long_time"})
        doc = json.loads(run(capsys, "fdt", "--config", cfg)[1])
        assert doc["alpha_kT"] == pytest.approx(1.0, abs=0.01)

    def test_log_ratio_table_is_linear(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"drive": RESONANT, "t": 30})
        doc = json.loads(run(capsys, "fdt", "--config", cfg)[1])
        table = doc["log_ratio_table"]
        assert len(table) == 33
        sd = math.sqrt(doc["sigma2"])
        assert table[0]["W"] == pytest.approx(-4 * sd) and table[-1]["W"] == pytest.approx(4 * sd)
        for row in table:
            assert row["log_ratio"] == pytest.approx(row["alpha_W"], rel=1e-14, abs=1e-14)
        assert doc["alpha"] * doc["sigma2"] == pytest.approx(2 * doc["mean_W"], rel=1e-12)

    def test_csv_format(self, tmp_path, capsys):
        code, out, _ = run(capsys, "fdt", "--format", "csv")
        header, rows = parse_csv(out)
        assert code == 0 and len(rows) == 33 and any(h.startswith("# alpha=") for h in header)


class TestSweep:
    def test_alpha_kt_decreasing_in_beta_hbar_omega(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"params": {"gamma": 0.01}, "drive": RESONANT, "method": "rwa", "t": 50})
        x = [0.01, 0.1, 0.5, 1, 2, 5, 10]
        temps = ",".join(repr(1.0 / v) for v in x)
        code, out, _ = run(capsys, "sweep", "--config", cfg, "--axis", "temperature", "--values", temps)
        vals = [float(r["alpha_kT"]) for r in parse_csv(out)[1]]
        assert code == 0 and all(b < a for a, b in zip(vals, vals[1:]))

    def test_sigma2_nondecreasing_in_temperature(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"drive": RESONANT, "t": 30})
        code, out, _ = run(capsys, "sweep", "--config", cfg, "--axis", "temperature", "--values", "0,0.1,0.5,1,2,5")
        vals = [float(r["sigma2"]) for r in parse_csv(out)[1]]
        assert code == 0 and all(b >= a for a, b in zip(vals, vals[1:]))

    def test_single_value_matches_fdt(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"drive": RESONANT, "t": 30})
        _, out, _ = run(capsys, "sweep", "--config", cfg, "--axis", "gamma", "--values", "0.1", "--format", "json")
        row = json.loads(out)["rows"][0]
        fdt = json.loads(run(capsys, "fdt", "--config", cfg)[1])
        for key in ("mean_W", "sigma2", "alpha", "alpha_kT"):
            assert row[key] == fdt[key]

    def test_threads_do_not_change_output(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"drive": RESONANT, "t": 30})
        args = ["sweep", "--config", cfg, "--axis", "big_omega", "--values", "0,0.5,1,1.5"]
        a = run(capsys, *args, "--threads", "1")[1]
        b = run(capsys, *args, "--threads", "4")[1]
        assert a == b

    def test_unknown_axis_from_config(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"sweep": {"axis": "mass", "values": [1.0]}})
        code, _, err = run(capsys, "sweep", "--config", cfg)
        assert code == 2 and "axis" in err

    def test_unknown_axis_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["sweep", "--axis", "mass", "--values", "1"])
        assert exc.value.code == 2


class TestErrors:
    def test_invalid_parameter(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"params": {"gamma": -1.0}})
        assert run(capsys, "fdt", "--config", cfg)[0] == 2

    def test_unknown_key(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"params": {"gama": 0.1}})
        assert run(capsys, "mean-work", "--config", cfg)[0] == 2

    def test_unreadable_config(self, tmp_path, capsys):
        assert run(capsys, "fdt", "--config", str(tmp_path / "missing.json"))[0] == 2

    def test_divergent_long_time_statistics(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"drive": {"type": "expcos", "f0": 1.0, "big_gamma": 0.0, "big_omega": 0.0},
                                      "method": "long_time"})
        code, _, err = run(capsys, "fdt", "--config", cfg)
        assert code == 3 and "fdt" in err


class TestOracle:
    def config(self, tmp_path, which, **extra):
        return write_config(tmp_path, {"drive": RESONANT, "t": 10.0,
                                       "oracle": {"which": which, "n": 2000, "n_modes": 200, **extra}})

    @pytest.mark.parametrize("which", ["classical", "bath-fast"])
    def test_passing_verdict(self, tmp_path, capsys, which):
        code, _, _ = run(capsys, "oracle", "--config", self.config(tmp_path, which), "--out", str(tmp_path / "o"))
        summary = json.loads((tmp_path / "o" / f"{which}_summary.json").read_text())
        header, rows = parse_csv((tmp_path / "o" / f"{which}_samples.csv").read_text())
        assert code == 0 and summary["passed"] and len(rows) == 2000
        assert any(h.startswith("# config_hash=") for h in header)

    def test_failing_verdict_exit_4(self, tmp_path, capsys):
        # a 5-mode bath recurs long before t = 10, so the run is rejected
        code, out, _ = run(capsys, "oracle", "--config", self.config(tmp_path, "bath-fast", n_modes=5))
        doc = json.loads(out)
        assert code == 4 and not doc["passed"] and not doc["verdicts"]["no_recurrence"]

    def test_which_flag_overrides_config(self, tmp_path, capsys):
        code, out, _ = run(capsys, "oracle", "--config", self.config(tmp_path, "bath-ode"), "--which", "bath-fast")
        assert json.loads(out)["which"] == "bath-fast"

    def test_seed_reproducible_and_thread_independent(self, tmp_path, capsys):
        cfg = self.config(tmp_path, "classical")
        outs = []
        for k, threads in enumerate(("1", "1", "3")):
            d = tmp_path / f"r{k}"
            run(capsys, "oracle", "--config", cfg, "--seed", "7", "--threads", threads, "--out", str(d))
            outs.append((d / "classical_samples.csv").read_bytes())
        assert outs[0] == outs[1] == outs[2]
        run(capsys, "oracle", "--config", cfg, "--seed", "8", "--out", str(tmp_path / "r9"))
        assert (tmp_path / "r9" / "classical_samples.csv").read_bytes() != outs[0]

    def test_zero_temperature_classical_is_config_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"thermal": {"zero_temperature": True}, "oracle": {"which": "classical"}})
        assert run(capsys, "oracle", "--config", cfg)[0] == 2


class TestCheck:
    def test_only_selected_criteria(self, tmp_path, capsys):
        code, _, err = run(capsys, "check", "--only", "4", "--out", str(tmp_path))
        report = json.loads((tmp_path / "acceptance.json").read_text())
        assert code == 0 and report["passed"] and [r["number"] for r in report["results"]] == [4]
        assert "[PASS]" in err

    def test_unknown_criterion(self, capsys):
        assert run(capsys, "check", "--only", "12")[0] == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0 and capsys.readouterr().out.strip().endswith(__version__)
