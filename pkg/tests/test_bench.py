import csv
import io
import json

import numpy as np
import pytest

from spikereg import cli
from spikereg.bench import (ExperimentConfig, ExperimentReport, TIMING_FIELDS, cell_seed, config_from_mapping,
                            emit_report, format_csv, format_json, format_table, load_config, load_report,
                            parse_config_text, parse_drive, run_grid, trace_demo)
from spikereg.solvers import read_trace

ONE_CELL = dict(models=("lif",), solvers=("euler",), functions=("square",), noise=("off",))


@pytest.fixture(scope="module")
def full_report():
    return run_grid(ExperimentConfig())


class TestGrid:
    def test_single_cell(self):
        report = run_grid(ExperimentConfig(**ONE_CELL))
        assert len(report.cells) == 1
        assert report.cells[0]["error"] is None

    def test_full_grid_cardinality(self, full_report):
        assert len(full_report.cells) == 48
        keys = {(c["model"], c["solver"], c["function"], c["noise"]) for c in full_report.cells}
        assert len(keys) == 48
        assert not full_report.failed

    def test_full_grid_deterministic(self, full_report):
        again = run_grid(ExperimentConfig())
        assert format_json_no_timing(again) == format_json_no_timing(full_report)

    def test_cell_independence(self, full_report):
        sub = run_grid(ExperimentConfig(models=("hh", "izh"), solvers=("rk4",), functions=("sine",)))
        for rec in sub.cells:
            ref = full_report.find(rec["model"], rec["solver"], rec["function"], rec["noise"])
            assert rec["l2_sum"] == ref["l2_sum"]
            assert rec["output_spike_count"] == ref["output_spike_count"]

    def test_order_independence(self):
        a = run_grid(ExperimentConfig(models=("fhn", "lif"), functions=("sine", "square"), noise=("on",)))
        b = run_grid(ExperimentConfig(models=("lif", "fhn"), functions=("square", "sine"), noise=("on",)))
        for rec in a.cells:
            assert rec["l2_sum"] == b.find(rec["model"], rec["solver"], rec["function"], "on")["l2_sum"]

    def test_seed_changes_noisy_cells_only(self):
        kw = dict(models=("izh",), solvers=("euler",), functions=("square",))
        a, b = run_grid(ExperimentConfig(seed=1, **kw)), run_grid(ExperimentConfig(seed=2, **kw))
        assert a.find("izh", "euler", "square", "off")["l2_sum"] == b.find("izh", "euler", "square", "off")["l2_sum"]
        assert a.find("izh", "euler", "square", "on")["l2_sum"] != b.find("izh", "euler", "square", "on")["l2_sum"]

    def test_cell_seed_depends_on_identity(self):
        a = cell_seed(42, ("lif", "euler", "square", "on")).generate_state(2)
        b = cell_seed(42, ("lif", "rk4", "square", "on")).generate_state(2)
        assert not np.array_equal(a, b)

    def test_failed_cell_is_recorded(self):
        cfg = ExperimentConfig(**ONE_CELL, train=config_from_mapping(
            {"train.method": "gd", "train.learning_rate": 1.0, "train.epochs": 500}).train)
        report = run_grid(cfg)
        assert len(report.cells) == 1 and report.failed
        assert "FloatingPointError" in report.cells[0]["error"]
        assert "ERR" in format_table(report)

    def test_meta(self, full_report):
        meta = full_report.meta
        assert meta["seed"] == 42 and meta["version"] and len(meta["config_hash"]) == 16
        assert meta["config"]["models"] == ["lif", "fhn", "izh", "hh"]

    @pytest.mark.parametrize("kwargs", [dict(models=()), dict(noise=("maybe",)), dict(n_x=1), dict(dt=0.0),
                                        dict(models=("adex",))])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            ExperimentConfig(**kwargs)


def format_json_no_timing(report):
    return json.dumps(report.to_dict(timing=False), sort_keys=True)


class TestReports:
    def test_table_single_row(self):
        text = format_table(run_grid(ExperimentConfig(**ONE_CELL)))
        lines = text.strip().splitlines()
        assert len(lines) == 3  # header, rule, one data row
        assert lines[2].startswith("LIF")

    def test_table_column_order(self, full_report):
        header = format_table(full_report).splitlines()[0]
        assert header.index("discontinuity") < header.index("square") < header.index("sine")

    def test_json_round_trip(self, tmp_path, full_report):
        path = tmp_path / "r.json"
        emit_report(full_report, "json", path)
        back = load_report(path)
        assert back.to_dict() == json.loads(format_json(full_report))
        assert back.meta == full_report.meta

    def test_csv_full_grid(self, full_report):
        rows = list(csv.reader(io.StringIO(format_csv(full_report))))
        assert len(rows) == 49
        assert rows[0][:4] == ["model", "solver", "function", "noise"]

    def test_timing_fields_dropped(self, full_report):
        for rec in full_report.to_dict(timing=False)["cells"]:
            assert not set(TIMING_FIELDS) & set(rec)

    def test_unknown_format(self, full_report):
        with pytest.raises(ValueError):
            emit_report(full_report, "xml", None)

    def test_unwritable_path(self, tmp_path, full_report):
        with pytest.raises(OSError, match="nope"):
            emit_report(full_report, "csv", tmp_path / "nope" / "r.csv")


class TestConfigFile:
    def test_parse(self):
        text = """
        # experiment manifest
        models = lif, hh
        nx = 50
        hh.g_na = 110.0   # weaker sodium
        lif.amplitude = 6.5
        train.method = gd
        noise.sigma = 0.2
        """
        cfg = config_from_mapping(parse_config_text(text))
        assert cfg.models == ("lif", "hh") and cfg.n_x == 50 and cfg.sigma == 0.2
        assert cfg.model_params == {"hh": {"g_na": 110.0}}
        assert cfg.amplitudes == {"lif": 6.5}
        assert cfg.train.method.value == "gd"

    def test_bad_lines(self):
        with pytest.raises(ValueError, match="line 1"):
            parse_config_text("just words")
        with pytest.raises(ValueError, match="unknown"):
            config_from_mapping({"hh.tau": 3})
        with pytest.raises(ValueError, match="unknown"):
            config_from_mapping({"colour": "red"})

    def test_overrides_change_results(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("models = hh\nsolvers = euler\nfunctions = square\nnoise = off\nhh.g_na = 100\n")
        cfg = load_config(path)
        base = run_grid(ExperimentConfig(models=("hh",), solvers=("euler",), functions=("square",), noise=("off",)))
        tuned = run_grid(cfg)
        assert tuned.cells[0]["output_spike_count"] != base.cells[0]["output_spike_count"]


class TestTraceDemo:
    def test_hh_periodic_burst(self, tmp_path):
        trace = trace_demo("hh", "euler", "periodic:40:20", tmp_path / "hh.txt")
        cols = read_trace(tmp_path / "hh.txt")
        spikes = cols["output_spike"].astype(bool)
        assert spikes.sum() >= 1
        np.testing.assert_array_equal(cols["v"][spikes], -65.0)
        np.testing.assert_array_equal(spikes, trace.spikes)

    @pytest.mark.parametrize("model", ["lif", "fhn", "izh", "hh"])
    def test_zero_drive(self, tmp_path, model):
        trace_demo(model, "rk4", "none", tmp_path / "z.txt")
        assert not read_trace(tmp_path / "z.txt")["output_spike"].any()

    def test_izh_constant_drive_settles_into_periodic_bursts(self, tmp_path):
        # these parameters chatter: after the first burst the ISI sequence repeats every burst
        trace = trace_demo("izh", "rk4", "constant:10", tmp_path / "izh.txt", n_steps=3000)
        isi = np.diff(np.flatnonzero(trace.spikes))
        first_pause = int(np.argmax(isi > 100))
        settled = isi[first_pause + 1:]
        period = int(np.argmax(settled > 100)) + 1
        assert period >= 2 and settled.size >= 2 * period
        np.testing.assert_allclose(settled[period:], settled[:-period], atol=1)

    def test_izh_burst_period_matches_fine_step(self, tmp_path):
        def burst_period(trace):
            t = trace.times[trace.spikes]
            starts = t[1:][np.diff(t) > 10]
            return np.diff(starts).mean()

        coarse = trace_demo("izh", "rk4", "constant:10", tmp_path / "a.txt", n_steps=3000)
        fine = trace_demo("izh", "rk4", "constant:10", tmp_path / "b.txt", n_steps=30000, dt=0.01)
        assert burst_period(coarse) == pytest.approx(burst_period(fine), rel=0.02)

    @pytest.mark.parametrize("drive, count", [("burst:5:10", 10), ("periodic:40:20", 80), ("encode:-1", 15),
                                              ("constant:3", 150), ("none", 0)])
    def test_parse_drive(self, drive, count):
        spikes, _ = parse_drive(drive, 150)
        assert spikes.sum() == count

    @pytest.mark.parametrize("drive", ["sawtooth:1", "burst:5", "encode:4", "periodic:x:1"])
    def test_parse_drive_rejects(self, drive):
        with pytest.raises(ValueError):
            parse_drive(drive, 150)


class TestCli:
    def test_run_csv(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code = cli.main(["run", "--models", "lif,hh", "--solvers", "euler", "--functions", "sine",
                         "--noise", "off", "--format", "csv", "--out", str(out)])
        assert code == 0
        assert len(out.read_text().strip().splitlines()) == 3

    def test_run_json_stdout_with_set(self, capsys):
        code = cli.main(["run", "--models", "fhn", "--solvers", "rk4", "--functions", "square", "--noise", "on",
                         "--seed", "3", "--set", "noise.sigma=0.05", "--format", "json"])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data["meta"]["seed"] == 3 and data["meta"]["config"]["sigma"] == 0.05
        assert len(data["cells"]) == 1

    def test_run_failed_cell_exit_code(self, capsys):
        code = cli.main(["run", "--models", "lif", "--solvers", "euler", "--functions", "square", "--noise", "off",
                         "--set", "train.method=gd", "--set", "train.learning_rate=1.0"])
        assert code == 1
        assert "failed" in capsys.readouterr().err

    def test_run_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("hh.tau = 3\n")
        assert cli.main(["run", "--config", str(cfg)]) == 2

    def test_run_dump_dir(self, tmp_path, capsys):
        code = cli.main(["run", "--models", "izh", "--solvers", "euler", "--functions", "discontinuity",
                         "--noise", "off", "--dump-dir", str(tmp_path / "pred")])
        assert code == 0
        pred = (tmp_path / "pred" / "izh_euler_discontinuity_off_pred.txt").read_text().splitlines()
        assert len(pred) == 100 and pred[0].startswith("-1.0, ")

    def test_bad_selection(self):
        with pytest.raises(SystemExit):
            cli.main(["run", "--models", "adex"])

    def test_trace(self, tmp_path, capsys):
        out = tmp_path / "t.txt"
        assert cli.main(["trace", "--model", "hh", "--solver", "rk4", "--drive", "burst:10:40",
                         "--out", str(out)]) == 0
        assert "output spikes" in capsys.readouterr().out
        assert out.read_text().startswith("t, v, n, m, h, input_spike, output_spike")

    def test_trace_bad_drive(self, tmp_path, capsys):
        assert cli.main(["trace", "--model", "lif", "--drive", "wobble", "--out", str(tmp_path / "t")]) == 2
