import json

import pytest

from ralp.cli import (
    EXIT_BAD_FLAG,
    EXIT_CAPACITY,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_UNKNOWN_CATALOG,
    main,
)

GIB = 1 << 30


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestProfileCommand:
    def test_vgg11_profile(self, capsys):
        code, out, _ = run_cli(capsys, "profile", "vgg11", "--threshold", "-0.5")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["eligible"] is True
        assert payload["layers"][payload["split_index"]]["name"] == "fc1"

    def test_googlenet_not_eligible_at_selective_threshold(self, capsys):
        code, out, _ = run_cli(capsys, "profile", "googlenet", "--threshold", "-1.5")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["eligible"] is False
        assert payload["split_index"] is None

    def test_missing_descriptor_file_is_parse_error(self, capsys):
        code, _, err = run_cli(capsys, "profile", "missing.model")
        assert code == EXIT_PARSE
        assert "missing.model" in err

    def test_unknown_catalog_name(self, capsys):
        code, _, err = run_cli(capsys, "profile", "nosuchnet")
        assert code == EXIT_UNKNOWN_CATALOG
        assert "vgg11" in err  # lists what is available

    def test_descriptor_syntax_error_reports_location(self, capsys, tmp_path):
        bad = tmp_path / "bad.model"
        bad.write_text("model x batch=1 input=4\noops\n")
        code, _, err = run_cli(capsys, "profile", str(bad))
        assert code == EXIT_PARSE
        assert "line 2" in err

    def test_bad_mode_flag(self, capsys):
        code, _, err = run_cli(capsys, "profile", "vgg11", "--mode", "sideways")
        assert code == EXIT_BAD_FLAG

    def test_byte_identical_reruns(self, capsys):
        _, out1, _ = run_cli(capsys, "profile", "resnet-50")
        _, out2, _ = run_cli(capsys, "profile", "resnet-50")
        assert out1 == out2


class TestSplitCommand:
    def test_split_summary(self, capsys):
        code, out, _ = run_cli(capsys, "split", "vgg11")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload["split_index"] == 13
        assert payload["eligible"] is True


class TestVolumesCommand:
    def test_ring_at_eight_workers_matches_report(self, capsys):
        code, out, _ = run_cli(capsys, "volumes", "alexnet", "--workers", "8",
                               "--strategies", "ring")
        assert code == EXIT_OK
        lines = out.strip().split("\n")
        total = int(lines[1].split(",")[3])
        assert total == pytest.approx(3.23 * GIB, rel=0.03)

    def test_single_worker_ring_is_zero(self, capsys):
        code, out, _ = run_cli(capsys, "volumes", "alexnet", "--workers", "1",
                               "--strategies", "ring")
        assert code == EXIT_OK
        assert int(out.strip().split("\n")[1].split(",")[3]) == 0

    def test_all_strategies_ralp_smallest(self, capsys):
        code, out, _ = run_cli(capsys, "volumes", "vgg11", "--workers", "8",
                               "--strategies", "all")
        assert code == EXIT_OK
        lines = out.strip().split("\n")[1:]
        assert len(lines) == 3
        totals = {line.split(",")[1]: int(line.split(",")[3]) for line in lines}
        assert totals["ralp"] == min(totals.values())

    def test_invalid_strategy_name(self, capsys):
        code, _, err = run_cli(capsys, "volumes", "vgg11", "--strategies", "gossip")
        assert code == EXIT_BAD_FLAG
        assert "gossip" in err

    def test_json_format(self, capsys):
        code, out, _ = run_cli(capsys, "volumes", "lenet", "--workers", "2,4",
                               "--strategies", "baseline", "--format", "json")
        assert code == EXIT_OK
        payload = json.loads(out)
        assert [row["W"] for row in payload] == [2, 4]

    def test_reproduce_table3(self, capsys):
        code, out, _ = run_cli(capsys, "volumes", "vgg11", "--reproduce-table3")
        assert code == EXIT_OK
        rows = dict(line.split(",", 1) for line in out.strip().split("\n")[1:])
        assert rows["vgg11"].endswith("6.93")

    def test_bad_workers_value(self, capsys):
        code, _, _ = run_cli(capsys, "volumes", "vgg11", "--workers", "eight")
        assert code == EXIT_BAD_FLAG


class TestSimulateCommand:
    def test_bundled_baseline_scenario(self, capsys, tmp_path):
        out_path = tmp_path / "report.json"
        code, out, _ = run_cli(capsys, "simulate", "vgg11_16gpu_baseline.scn",
                               "--out", str(out_path))
        assert code == EXIT_OK
        assert "images_per_sec" in out
        payload = json.loads(out_path.read_text())
        assert payload["jobs"][0]["comm_fraction"] > 0.5

    def test_zero_steps_rejected(self, capsys):
        code, _, err = run_cli(capsys, "simulate", "vgg11_16gpu_baseline.scn", "--steps", "0")
        assert code == EXIT_PARSE
        assert "steps" in err

    def test_missing_scenario_file(self, capsys):
        code, _, err = run_cli(capsys, "simulate", "nope.scn")
        assert code == EXIT_PARSE

    def test_capacity_exceeded(self, capsys, tmp_path):
        scn = tmp_path / "big.scn"
        scn.write_text(
            "cluster machines=1 gpus=2\n"
            "job a model=lenet strategy=baseline workers=4 ps=1\n"
        )
        code, _, err = run_cli(capsys, "simulate", str(scn))
        assert code == EXIT_CAPACITY

    def test_scenario_with_local_descriptor(self, capsys, tmp_path):
        (tmp_path / "toy.model").write_text(
            "model toy batch=2 input=8x8x3\nc1 conv k=3 cout=4 pad=1\nf1 fc out=10\n"
        )
        scn = tmp_path / "toy.scn"
        scn.write_text(
            "cluster machines=2 gpus=2\n"
            "job t model=toy.model strategy=baseline workers=1 ps=1\nsteps 2\n"
        )
        code, out, _ = run_cli(capsys, "simulate", str(scn))
        assert code == EXIT_OK
        assert "t:" in out

    def test_deterministic_summary(self, capsys):
        _, out1, _ = run_cli(capsys, "simulate", "vgg11_16gpu_ralp.scn")
        _, out2, _ = run_cli(capsys, "simulate", "vgg11_16gpu_ralp.scn")
        assert out1 == out2

    def test_timeline_csv(self, capsys, tmp_path):
        timeline = tmp_path / "steps.csv"
        code, _, _ = run_cli(capsys, "simulate", "vgg11_16gpu_baseline.scn",
                             "--steps", "2", "--timeline", str(timeline))
        assert code == EXIT_OK
        lines = timeline.read_text().strip().split("\n")
        assert lines[0].startswith("job,step,worker,")
        # 8 workers x 2 steps
        assert len(lines) == 1 + 16
        fields = lines[1].split(",")
        categories = [float(x) for x in fields[3:7]]
        assert sum(categories) == float(fields[7])


class TestCatalogCommand:
    def test_lists_all_models(self, capsys):
        code, out, _ = run_cli(capsys, "catalog")
        assert code == EXIT_OK
        for name in ("alexnet", "vgg19", "resnet-50"):
            assert name in out

    def test_json_listing(self, capsys):
        code, out, _ = run_cli(capsys, "catalog", "--json")
        payload = json.loads(out)
        assert {entry["name"] for entry in payload} >= {"vgg11", "lenet"}
