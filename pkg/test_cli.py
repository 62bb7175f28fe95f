"""End-to-end runs of the command-line subcommands on tiny grids."""

import csv
import json
import math

import numpy as np
import pytest

from cli import DUMP_DIR, build_parser, main
from spinsampling.haar import sample_haar_unitary, trial_seed
from spinsampling.models import ModeUnitary


def _run(tmp_path, *args):
    out = tmp_path / "out"
    code = main(list(args) + ["--out", str(out), "--threads", "1"])
    return code, out


class TestCli:

    def test_parser_requires_subcommand(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_norm_scan(self, tmp_path):
        code, out = _run(tmp_path, "norm-scan", "--n", "2..3", "--m", "6", "--trials", "2")
        assert code == 0
        lines = (out / "norm_scan.csv").read_text().splitlines()
        assert lines[0] == "n,m,seed,trial,metric,value"
        assert any(line.startswith("2,6,1,0,op_norm,") for line in lines)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["hard_failures"] == 0
        assert (out / "config.echo").exists()

    def test_norm_scan_skips_over_capacity(self, tmp_path):
        code, out = _run(tmp_path, "norm-scan", "--n", "3", "--m", "7", "--trials", "1", "--cap", "100")
        assert code == 0
        lines = (out / "norm_scan.csv").read_text().splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("3,7,-1,-1,skipped,")

    def test_bunching(self, tmp_path):
        code, out = _run(tmp_path, "bunching", "--n", "2", "--m", "6", "--trials", "3", "--time", "0.5pi")
        assert code == 0
        header = (out / "bunching.csv").read_text().splitlines()[0]
        assert header == "n,m,seed,trial,t,metric,value"
        cell = json.loads((out / "summary.json").read_text())["cells"][0]
        assert cell["p_hcb_exact"] == pytest.approx(5 / 7)

    def test_error_scan_writes_traces(self, tmp_path):
        code, out = _run(tmp_path, "error-scan", "--n", "2", "--m", "4,6", "--trials", "1")
        assert code == 0
        trace = (out / "delta_trace.csv").read_text().splitlines()
        assert trace[0] == "n,m,seed,trial,t,norm"
        assert len(trace) == 1 + 2 * 9
        assert "trace_" not in (out / "error_scan.csv").read_text()

    def test_distance(self, tmp_path):
        code, out = _run(tmp_path, "distance", "--n", "2", "--m", "5", "--trials", "2")
        assert code == 0
        assert json.loads((out / "summary.json").read_text())["violations"] == 0

    def test_rwa(self, tmp_path):
        code, out = _run(tmp_path, "rwa", "--m", "2", "--n", "1", "--b", "50,100", "--trials", "1")
        assert code == 0
        lines = (out / "rwa.csv").read_text().splitlines()
        assert lines[0] == "m,n,b,t,fidelity,seed,trial"
        assert len(lines) == 3

    def test_oracle_check_is_deterministic(self, tmp_path):
        first, out = _run(tmp_path, "oracle-check", "--trials", "1")
        text = (out / "oracle_check.csv").read_text()
        second, _ = _run(tmp_path, "oracle-check", "--trials", "1")
        assert first == second == 0
        assert (out / "oracle_check.csv").read_text() == text
        assert text.splitlines()[0] == "suite,case,value,tolerance,passed"
        assert ",false" not in text

    def test_invalid_configuration_exits_2(self, tmp_path):
        code, _ = _run(tmp_path, "bunching", "--trials", "0")
        assert code == 2

    def test_unknown_config_key_exits_2(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("colour=blue\n")
        code, _ = _run(tmp_path, "bunching", "--config", str(path))
        assert code == 2

    def test_config_echo_replays(self, tmp_path):
        code, out = _run(tmp_path, "distance", "--n", "2", "--m", "4", "--trials", "1")
        assert code == 0
        first = (out / "distance.csv").read_text()
        replay = tmp_path / "replay"
        assert main(["distance", "--config", str(out / "config.echo"), "--out", str(replay)]) == 0
        assert (replay / "distance.csv").read_text() == first

    def test_malformed_environment_exits_2(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SPINSAMPLING_CAP", "lots")
        code, _ = _run(tmp_path, "bunching", "--trials", "1")
        assert code == 2

    def test_unknown_log_level_exits_2(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SPINSAMPLING_LOG_LEVEL", "chatty")
        code, _ = _run(tmp_path, "bunching", "--trials", "1")
        assert code == 2


class TestDumps:

    def test_distance_dump_of_first_trial(self, tmp_path):
        code, out = _run(tmp_path, "distance", "--n", "2", "--m", "4", "--trials", "2",
                         "--seed", "5", "--time", "0.5pi", "--dump")
        assert code == 0
        folder = out / DUMP_DIR / "n2_m4_t1.5708"
        names = {p.name for p in folder.iterdir()}
        assert names == {"unitary.json", "basis.csv", "boson_state.json", "spin_state.json",
                         "boson_probabilities.csv", "spin_probabilities.csv"}

        r = ModeUnitary.from_dict(json.loads((folder / "unitary.json").read_text()))
        assert np.array_equal(r.entries, sample_haar_unitary(4, seed=trial_seed(5, 0)).entries)

        basis = (folder / "basis.csv").read_text().splitlines()
        assert basis[0] == "index,config,a1,a2,a3,a4,b1,b2,b3,b4"
        assert len(basis) == 1 + math.comb(8, 2)
        assert basis[1] == "0,11000000,1,1,0,0,0,0,0,0"

        spin = json.loads((folder / "spin_state.json").read_text())
        amplitudes = np.array([complex(re, im) for re, im in spin["amplitudes"]])
        assert len(amplitudes) == 28
        assert np.linalg.norm(amplitudes) == pytest.approx(1.0, abs=1e-9)

        tables = []
        for name in ("boson_probabilities.csv", "spin_probabilities.csv"):
            with open(folder / name, newline="") as handle:
                rows = list(csv.reader(handle))
            assert rows[0] == ["config", "probability"]
            assert [row[0] for row in rows[1:]] == [line.split(",")[1] for line in basis[1:]]
            tables.append(np.array([float(row[1]) for row in rows[1:]]))

        with open(out / "distance.csv", newline="") as handle:
            recorded = [row for row in csv.DictReader(handle)
                        if row["trial"] == "0" and row["metric"] == "var_distance"]
        assert len(recorded) == 1
        assert np.abs(tables[0] - tables[1]).sum() == pytest.approx(float(recorded[0]["value"]), rel=1e-9)

    def test_error_scan_dump(self, tmp_path):
        code, out = _run(tmp_path, "error-scan", "--n", "2", "--m", "4", "--trials", "1",
                         "--time", "0.25pi", "--dump")
        assert code == 0
        assert (out / DUMP_DIR / "n2_m4_t0.785398" / "spin_state.json").exists()

    def test_no_dump_by_default(self, tmp_path):
        code, out = _run(tmp_path, "distance", "--n", "2", "--m", "4", "--trials", "1")
        assert code == 0
        assert not (out / DUMP_DIR).exists()


class TestReproducibility:

    ARGS = ["norm-scan", "--n", "2..3", "--m", "6,7", "--trials", "3", "--seed", "11"]

    def test_rerun_is_byte_identical(self, tmp_path):
        first, second = tmp_path / "first", tmp_path / "second"
        assert main(self.ARGS + ["--out", str(first), "--threads", "2"]) == 0
        assert main(self.ARGS + ["--out", str(second), "--threads", "2"]) == 0
        for name in ("norm_scan.csv", "summary.json"):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_thread_count_does_not_change_results(self, tmp_path):
        single, pooled = tmp_path / "single", tmp_path / "pooled"
        assert main(self.ARGS + ["--out", str(single), "--threads", "1"]) == 0
        assert main(self.ARGS + ["--out", str(pooled), "--threads", "3"]) == 0
        assert (single / "norm_scan.csv").read_bytes() == (pooled / "norm_scan.csv").read_bytes()
        assert (single / "summary.json").read_bytes() == (pooled / "summary.json").read_bytes()


def test_norm_scan_exponent_reports_skipped_cells(tmp_path):
    code, out = _run(tmp_path, "norm-scan", "--n", "2..4", "--m", "7", "--trials", "1", "--cap", "600")
    assert code == 0
    fit = json.loads((out / "summary.json").read_text())["norm_vs_n_exponent"]["7"]
    assert fit["fitted_n"] == [2, 3]
    assert fit["skipped_n"] == [4]
    assert math.isfinite(fit["exponent"])
