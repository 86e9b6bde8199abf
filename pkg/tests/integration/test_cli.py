"""End-to-end tests of the tensor-impute command line."""

import json

import pytest

from cli.formats import read_long_csv
from cli.main import main

pytestmark = pytest.mark.integration


@pytest.fixture()
def simulated(tmp_path):
    """A small simulated dataset written by the simulate command."""
    config = tmp_path / "sim.json"
    config.write_text(
        json.dumps({"dims": [8, 6], "T": 30, "ranks": [1, 2], "missing": {"pattern": "M-ii"}, "seed": 3})
    )
    out = tmp_path / "sim"
    assert main(["simulate", str(config), "--out", str(out)]) == 0
    return out


def _error(capsys) -> dict:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


class TestSimulate:
    def test_writes_data_and_truth(self, simulated):
        for name in ("data.csv", "truth.csv", "common.csv", "truth.json"):
            assert (simulated / name).exists()
        data = read_long_csv(simulated / "data.csv", (8, 6), 30)
        truth = read_long_csv(simulated / "truth.csv", (8, 6), 30)
        assert not data.mask.all()
        assert truth.fully_observed
        document = json.loads((simulated / "truth.json").read_text())
        assert [len(a[0]) for a in document["loadings"]] == [1, 2]

    def test_seed_override_changes_data(self, tmp_path, simulated):
        other = tmp_path / "other"
        assert main(["simulate", str(tmp_path / "sim.json"), "--seed", "4", "--out", str(other)]) == 0
        assert (other / "data.csv").read_text() != (simulated / "data.csv").read_text()


class TestImpute:
    def test_fixed_ranks(self, tmp_path, simulated):
        out = tmp_path / "fit"
        code = main(["impute", str(simulated / "data.csv"), "--ranks", "1,2", "--no-center", "--out", str(out)])

        assert code == 0
        completed = read_long_csv(out / "completed.csv")
        data = read_long_csv(simulated / "data.csv", (8, 6), 30)
        assert completed.fully_observed
        assert (completed.values[data.mask] == data.values[data.mask]).all()
        report = json.loads((out / "report.json").read_text())
        assert report["ranks"] == [1, 2]
        assert report["iterations"] == 0
        assert report["missing_entries"] == int((~data.mask).sum())
        model = json.loads((out / "model.json").read_text())
        assert model["ranks"] == [1, 2]

    def test_manifest_controls_the_run(self, tmp_path, simulated):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({"ranks": [1, 2], "reimpute": 2, "tol": 0.0, "varimax": True}))
        out = tmp_path / "fit"

        assert main(["impute", str(simulated / "data.csv"), str(manifest), "--out", str(out)]) == 0

        report = json.loads((out / "report.json").read_text())
        assert report["iterations"] == 2
        assert len(report["changes"]) == 2
        assert "varimax" in json.loads((out / "model.json").read_text())

    def test_flags_override_manifest(self, tmp_path, simulated):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({"ranks": [1, 2]}))
        out = tmp_path / "fit"

        assert main(["impute", str(simulated / "data.csv"), str(manifest), "--ranks", "2,2", "--out", str(out)]) == 0

        assert json.loads((out / "report.json").read_text())["ranks"] == [2, 2]


class TestRank:
    def test_auto_ranks(self, tmp_path, simulated):
        out = tmp_path / "ranks"
        assert main(["rank", str(simulated / "data.csv"), "--out", str(out)]) == 0

        document = json.loads((out / "ranks.json").read_text())
        assert len(document["ranks"]) == 2
        assert [m["mode"] for m in document["modes"]] == [1, 2]
        assert "refined" not in document

    def test_refined_ranks(self, tmp_path, simulated):
        out = tmp_path / "ranks"
        assert main(["rank", str(simulated / "data.csv"), "--refine", "1", "--out", str(out)]) == 0

        document = json.loads((out / "ranks.json").read_text())
        assert document["refined"]["r_extra"] == 1
        assert document["ranks"] == document["refined"]["ranks"]


class TestRowTest:
    def test_single_row(self, tmp_path, simulated):
        out = tmp_path / "test"
        code = main(
            ["test", str(simulated / "data.csv"), "--ranks", "1,2", "--mode", "1", "--row", "2", "--out", str(out)]
        )

        assert code == 0
        document = json.loads((out / "inference.json").read_text())
        assert len(document["tests"]) == 1
        record = document["tests"][0]
        assert record["row"] == 2
        assert record["df"] == 1
        assert 0.0 <= record["p_value"] <= 1.0

    def test_every_row_of_a_mode(self, tmp_path, simulated):
        out = tmp_path / "test"
        code = main(["test", str(simulated / "data.csv"), "--ranks", "1,2", "--mode", "2", "--out", str(out)])

        assert code == 0
        document = json.loads((out / "inference.json").read_text())
        assert [t["row"] for t in document["tests"]] == [1, 2, 3, 4, 5, 6]
        assert all(t["df"] == 2 for t in document["tests"])


class TestRunControls:
    @pytest.mark.parametrize(
        "command",
        [["impute", "--ranks", "1,2"], ["rank"], ["test", "--ranks", "1,2", "--mode", "1"]],
    )
    def test_seed_and_threads_are_accepted(self, tmp_path, simulated, command):
        out = tmp_path / command[0]
        argv = [command[0], str(simulated / "data.csv"), *command[1:], "--seed", "9", "--threads", "2"]
        assert main([*argv, "--out", str(out)]) == 0

    def test_recorded_in_outputs(self, tmp_path, simulated):
        data = str(simulated / "data.csv")
        assert main(["impute", data, "--ranks", "1,2", "--seed", "9", "--threads", "2", "--out", str(tmp_path)]) == 0
        assert main(["test", data, "--ranks", "1,2", "--seed", "9", "--threads", "2", "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        inference = json.loads((tmp_path / "inference.json").read_text())
        assert (report["seed"], report["threads"]) == (9, 2)
        assert (inference["seed"], inference["threads"]) == (9, 2)

    def test_threads_do_not_change_row_tests(self, tmp_path, simulated):
        data = str(simulated / "data.csv")
        for threads, name in (("1", "serial"), ("3", "threaded")):
            argv = ["test", data, "--ranks", "1,2", "--mode", "1", "--threads", threads]
            assert main([*argv, "--out", str(tmp_path / name)]) == 0
        serial, threaded = (
            json.loads((tmp_path / name / "inference.json").read_text())["tests"] for name in ("serial", "threaded")
        )
        assert serial == threaded

class TestBench:
    def test_suite_is_graded(self, tmp_path, capsys):
        suite = tmp_path / "suite.json"
        suite.write_text(
            json.dumps({"name": "tiny", "seed": 5, "runs": [{"setting": "IIa", "replications": 2, "ranks": "auto"}]})
        )
        expected = tmp_path / "expected.json"
        expected.write_text(json.dumps({"bounds": {"IIa/M-ii": {"replications": {"min": 2, "max": 2}}}}))
        out = tmp_path / "bench"

        code = main(["bench", str(suite), "--expected", str(expected), "--out", str(out)])

        assert code == 0
        assert json.loads(capsys.readouterr().out.strip().splitlines()[-1]) == {"score": 1.0}
        assert (out / "results.json").exists()
        assert (out / "results.csv").exists()


class TestErrors:
    def test_malformed_csv_exits_2(self, tmp_path, capsys):
        data = tmp_path / "bad.csv"
        data.write_text("t,i1,value\n1,1,oops\n")

        assert main(["impute", str(data), "--ranks", "1", "--out", str(tmp_path)]) == 2
        error = _error(capsys)
        assert error["error"] == "MalformedCSVError"
        assert "line 2" in error["message"]

    def test_missing_file_exits_2(self, tmp_path, capsys):
        assert main(["impute", str(tmp_path / "absent.csv"), "--out", str(tmp_path)]) == 2
        assert _error(capsys)["exit_code"] == 2

    def test_invalid_manifest_exits_2(self, tmp_path, simulated, capsys):
        manifest = tmp_path / "manifest.json"
        manifest.write_text(json.dumps({"c_xi": -1}))
        assert main(["impute", str(simulated / "data.csv"), str(manifest), "--out", str(tmp_path)]) == 2
        assert _error(capsys)["error"] == "ValidationError"

    def test_mode_out_of_range_exits_2(self, tmp_path, simulated):
        assert main(["test", str(simulated / "data.csv"), "--mode", "3", "--out", str(tmp_path)]) == 2

    def test_beta_too_large_exits_2(self, tmp_path, simulated, capsys):
        code = main(
            ["test", str(simulated / "data.csv"), "--ranks", "1,2", "--row", "1", "--beta", "30", "--out", str(tmp_path)]
        )
        assert code == 2
        assert _error(capsys)["error"] == "ConfigError"

    def test_unobserved_row_exits_3(self, tmp_path, capsys):
        rows = ["t,i1,i2,value"]
        for t in range(1, 5):
            for i1 in (1, 3):
                for i2 in (1, 2):
                    rows.append(f"{t},{i1},{i2},{t * i1 + i2}")
        data = tmp_path / "gap.csv"
        data.write_text("\n".join(rows) + "\n")

        assert main(["impute", str(data), "--ranks", "1,1", "--out", str(tmp_path)]) == 3
        error = _error(capsys)
        assert error["error"] == "UnidentifiableRowError"
        assert "row 2" in error["message"]
