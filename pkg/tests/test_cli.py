from pathlib import Path

import pytest

from bmc import ChannelParams, ConfigError, capacity_point, optimal_nbar, theta_at_nbar
from bmc import cli
from bmc.cli import (
    EXIT_NO_OPTIMUM,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VALIDATION_FAILED,
    SweepSpec,
    parse_config,
    preset_spec,
    run_validation,
    sweep_rows,
)

GOLDEN = Path(__file__).parent / "golden"


def read_csv(path):
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    rows = [tuple(float(tok) for tok in line.split(",")) for line in lines[1:]]
    return header, rows


class TestParseConfig:
    def test_parameter_file(self, tmp_path):
        conf = tmp_path / "params.conf"
        conf.write_text("# reference point\ngamma = 0.1\nbeta = 0.01\nn_bar = 5\n")
        params = parse_config(conf)
        assert params == ChannelParams(gamma=0.1, beta_rate=0.01, n_bar=5.0)

    def test_sweep_file(self, tmp_path):
        conf = tmp_path / "sweep.conf"
        conf.write_text(
            "swept = n_bar\nlo = 1\nhi = 10\nsteps = 5\nt_grid = 0.5, 1\ngamma = 0.2\n"
        )
        spec = parse_config(conf)
        assert isinstance(spec, SweepSpec)
        assert spec.swept == "n_bar"
        assert spec.steps == 5
        assert spec.t_grid == (0.5, 1.0)
        assert spec.fixed.gamma == 0.2

    def test_validation_error_names_key(self, tmp_path):
        conf = tmp_path / "bad.conf"
        conf.write_text("gamma = -1\n")
        with pytest.raises(ConfigError, match="gamma"):
            parse_config(conf)

    def test_unknown_key_reports_line(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("gamma = 0.1\nwavelength = 7\n")
        with pytest.raises(ConfigError, match=r"c\.conf:2.*wavelength"):
            parse_config(conf)

    def test_unparseable_value_names_key(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("beta = fast\n")
        with pytest.raises(ConfigError, match="beta"):
            parse_config(conf)

    def test_duplicate_key_rejected(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("gamma = 0.1\ngamma = 0.2\n")
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(conf)

    def test_empty_file_gives_reference_defaults(self, tmp_path):
        conf = tmp_path / "empty.conf"
        conf.write_text("\n")
        assert parse_config(conf) == ChannelParams(gamma=0.1, beta_rate=0.01, n_bar=5.0)


class TestSweep:
    def test_rows_match_capacity_points(self):
        spec = preset_spec("fig1")
        rows = sweep_rows(spec)
        assert len(rows) == spec.steps * len(spec.t_grid)
        value, point = rows[7]
        params = ChannelParams(gamma=0.1, beta_rate=0.01, n_bar=value)
        assert point == capacity_point(params, point.t)

    def test_csv_deterministic(self, tmp_path):
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        assert cli.main(["sweep", "--preset", "fig2", "--out", str(first)]) == EXIT_OK
        assert cli.main(["sweep", "--preset", "fig2", "--out", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()
        assert b"\r" not in first.read_bytes()

    @pytest.mark.parametrize("preset", ["fig1", "fig2", "fig3"])
    def test_matches_golden(self, preset, tmp_path):
        out = tmp_path / f"{preset}.csv"
        assert cli.main(["sweep", "--preset", preset, "--out", str(out)]) == EXIT_OK
        assert out.read_bytes() == (GOLDEN / f"{preset}.csv").read_bytes()

    def test_header_and_shape(self, tmp_path):
        out = tmp_path / "fig1.csv"
        cli.main(["sweep", "--preset", "fig1", "--out", str(out)])
        header, rows = read_csv(out)
        assert header == ["swept_value", "t", "chi_bits", "avg_fidelity", "theta"]
        assert len(rows) == 40
        for _, _, chi, fbar, th in rows:
            assert chi >= 0.0
            assert 0.0 < fbar <= 1.0
            # %.12e keeps 13 significant digits, so the round trip is ~1e-12 rel
            assert th == pytest.approx(chi * fbar, rel=1e-11)

    def test_capacity_monotone_in_swept_value(self, tmp_path):
        # fig1: chi strictly increasing in n_bar at each fixed t; fig2/fig3:
        # strictly decreasing in the noise and decay rates
        for preset, increasing in (("fig1", True), ("fig2", False), ("fig3", False)):
            out = tmp_path / f"{preset}.csv"
            cli.main(["sweep", "--preset", preset, "--out", str(out)])
            _, rows = read_csv(out)
            by_t = {}
            for value, t, chi, _, _ in rows:
                by_t.setdefault(t, []).append((value, chi))
            for series in by_t.values():
                chis = [chi for _, chi in sorted(series)]
                if increasing:
                    assert all(b > a for a, b in zip(chis, chis[1:]))
                else:
                    assert all(b < a for a, b in zip(chis, chis[1:]))

    def test_plot_script_emitted_and_compiles(self, tmp_path):
        out = tmp_path / "sweep.csv"
        cli.main(["sweep", "--preset", "fig1", "--out", str(out), "--plot"])
        script = tmp_path / "sweep_plot.py"
        assert script.exists()
        compile(script.read_text(), str(script), "exec")
        assert "matplotlib" in script.read_text()
        assert "sweep.csv" in script.read_text()

    def test_swept_time_axis(self, tmp_path):
        out = tmp_path / "t.csv"
        code = cli.main(
            ["sweep", "--swept", "t", "--lo", "0.5", "--hi", "5", "--steps", "4",
             "--out", str(out)]
        )
        assert code == EXIT_OK
        _, rows = read_csv(out)
        assert [r[0] for r in rows] == [r[1] for r in rows]

    def test_flags_override_config(self, tmp_path):
        conf = tmp_path / "sweep.conf"
        conf.write_text("swept = n_bar\nlo = 1\nhi = 10\nsteps = 4\ngamma = 0.3\n")
        out = tmp_path / "o.csv"
        code = cli.main(
            ["sweep", "--config", str(conf), "--steps", "2", "--t-grid", "1",
             "--out", str(out)]
        )
        assert code == EXIT_OK
        _, rows = read_csv(out)
        assert len(rows) == 2
        params = ChannelParams(gamma=0.3, beta_rate=0.01, n_bar=1.0)
        assert rows[0][2] == pytest.approx(capacity_point(params, 1.0).chi, rel=1e-12)

    def test_missing_definition_is_usage_error(self, tmp_path):
        code = cli.main(["sweep", "--out", str(tmp_path / "x.csv")])
        assert code == EXIT_USAGE

    def test_invalid_range_is_usage_error(self, tmp_path):
        code = cli.main(
            ["sweep", "--swept", "n_bar", "--lo", "5", "--hi", "1", "--steps", "3",
             "--out", str(tmp_path / "x.csv")]
        )
        assert code == EXIT_USAGE


class TestValidate:
    def test_default_grid_passes(self, capsys):
        # the shipped default grid at dim 50 is the flagship oracle run
        assert cli.main(["validate"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "validation PASSED" in out
        assert out.count(" ok") == 20  # 4 amplitudes x 5 times

    def test_small_grid_passes(self, capsys):
        code = cli.main(
            ["validate", "--etas", "0,0.5", "--times", "0.1,0.5", "--dim", "30"]
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "validation PASSED" in out
        assert "worst trace distance" in out

    def test_report_structure(self):
        params = ChannelParams(gamma=0.1, beta_rate=0.01)
        report = run_validation(params, etas=(0.0, 0.5), times=(0.0, 0.1), dim=30)
        assert report.passed
        assert len(report.grid) == len(report.trace_distances) == 4
        # t=0 compares the input against itself
        origin = report.grid.index((0.0, 0.0))
        assert report.trace_distances[origin] < 1e-12
        assert report.worst_case.max_trace_distance == max(report.trace_distances)

    def test_truncation_error_suggests_dim(self, capsys):
        code = cli.main(["validate", "--etas", "2", "--times", "0.5", "--dim", "5"])
        assert code == EXIT_VALIDATION_FAILED
        err = capsys.readouterr().err
        assert "suggest dim" in err

    def test_squeezed_reservoir_rejected(self, capsys):
        code = cli.main(["validate", "--m-re", "0.2", "--etas", "0", "--times", "0.1"])
        assert code == EXIT_USAGE
        assert "m_squeeze" in capsys.readouterr().err

    def test_impossible_threshold_fails_with_code_2(self, capsys):
        code = cli.main(
            ["validate", "--etas", "0.5", "--times", "0.5", "--dim", "30",
             "--trace-tol", "1e-30"]
        )
        assert code == EXIT_VALIDATION_FAILED
        assert "validation FAILED" in capsys.readouterr().out

    def test_env_var_overrides_default_dim(self, monkeypatch):
        monkeypatch.setenv("BMC_DEFAULT_DIM", "24")
        assert cli.default_dim() == 24
        params = ChannelParams(gamma=0.1, beta_rate=0.01)
        report = run_validation(params, etas=(0.0,), times=(0.1,))
        assert report.passed  # dim 24 is plenty for the vacuum
        monkeypatch.setenv("BMC_DEFAULT_DIM", "chunky")
        with pytest.raises(ConfigError):
            cli.default_dim()

    def test_validation_thresholds_definition_of_passed(self):
        params = ChannelParams(gamma=0.1, beta_rate=0.01)
        report = run_validation(
            params, etas=(0.5,), times=(0.5,), dim=30, trace_tol=1e-30
        )
        assert not report.passed
        assert all(d > 1e-30 for d in report.trace_distances)


class TestOptimal:
    def test_prints_result_matching_library(self, capsys):
        code = cli.main(["optimal", "--t", "1"])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        result = optimal_nbar(ChannelParams(gamma=0.1, beta_rate=0.01, n_bar=5.0), 1.0)
        assert f"{result.n_bar_opt:.9g}" in out
        assert "criterion residual" in out
        assert "maximum confirmed" in out

    def test_no_interior_optimum_exit_code(self, capsys):
        code = cli.main(["optimal", "--t", "1e-6"])
        assert code == EXIT_NO_OPTIMUM
        assert "no interior optimum" in capsys.readouterr().out

    def test_curve_contains_interior_maximum(self, tmp_path):
        out = tmp_path / "theta.csv"
        code = cli.main(["optimal", "--t", "1", "--curve", "--out", str(out)])
        assert code == EXIT_OK
        header, rows = read_csv(out)
        assert header == ["n_bar", "theta"]
        params = ChannelParams(gamma=0.1, beta_rate=0.01, n_bar=5.0)
        n_opt = optimal_nbar(params, 1.0).n_bar_opt
        theta_opt = theta_at_nbar(params, 1.0, n_opt)
        below = max(r for r in rows if r[0] < n_opt)
        above = min(r for r in rows if r[0] > n_opt)
        assert theta_opt >= below[1]
        assert theta_opt >= above[1]

    def test_curve_without_out_is_usage_error(self):
        assert cli.main(["optimal", "--t", "1", "--curve"]) == EXIT_USAGE

    def test_missing_time_is_usage_error(self):
        assert cli.main(["optimal"]) == EXIT_USAGE

    def test_time_from_config(self, tmp_path, capsys):
        conf = tmp_path / "run.conf"
        conf.write_text("t = 1\ngamma = 0.1\nbeta = 0.01\n")
        assert cli.main(["optimal", "--config", str(conf)]) == EXIT_OK
        assert "n_bar_opt" in capsys.readouterr().out


class TestUsageErrors:
    def test_unknown_subcommand(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["bogus"])
        assert exc.value.code == EXIT_USAGE

    def test_bad_flag_value(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["optimal", "--t", "soon"])
        assert exc.value.code == EXIT_USAGE

    def test_unreadable_config(self, tmp_path):
        code = cli.main(["optimal", "--t", "1", "--config", str(tmp_path / "nope.conf")])
        assert code == EXIT_USAGE
