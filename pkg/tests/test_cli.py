import json

import pytest

from agency.cli import main


@pytest.fixture
def instance_file(tmp_path):
    payload = {
        "gammas": [0, 1, 3, 5.5],
        "rewards": [0, 100, 300],
        "F": [[1, 0, 0], [0, 1, 0], [0, 0.5, 0.5], [0, 0, 1]],
        "dist": {"kind": "uniform", "low": 0.0, "high": 80.0},
    }
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(payload))
    return str(path)


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestAnalyze:
    def test_full_report(self, instance_file, capsys):
        code, out, _ = run(["analyze", "--instance", instance_file], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["schema_version"] == 1
        assert report["metrics"]["best_linear"]["alpha"] == pytest.approx(0.5, abs=1e-6)
        assert "sha256" in report["instance"]
        assert report["tolerances"]["verdict_relative"] == 1e-6

    def test_byte_stable(self, instance_file, capsys):
        _, out1, _ = run(["analyze", "--instance", instance_file], capsys)
        _, out2, _ = run(["analyze", "--instance", instance_file], capsys)
        assert out1 == out2

    def test_malformed_row_sum(self, tmp_path, capsys):
        payload = {
            "gammas": [0, 1],
            "rewards": [0, 1],
            "F": [[1, 0], [0, 0.97]],
        }
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(payload))
        code, _, err = run(["analyze", "--instance", str(p)], capsys)
        assert code == 1
        assert "F row 1 sums to 0.97" in err

    def test_missing_key(self, tmp_path, capsys):
        p = tmp_path / "nokey.json"
        p.write_text(json.dumps({"gammas": [0, 1], "rewards": [0, 1]}))
        code, _, err = run(["analyze", "--instance", str(p)], capsys)
        assert code == 1
        assert "missing key 'F'" in err

    def test_missing_dist(self, tmp_path, capsys):
        p = tmp_path / "nodist.json"
        p.write_text(json.dumps({"gammas": [0, 1], "rewards": [0, 1], "F": [[1, 0], [0, 1]]}))
        code, _, err = run(["analyze", "--instance", str(p)], capsys)
        assert code == 1
        assert "no distribution" in err


class TestSweep:
    def test_csv(self, instance_file, capsys):
        code, out, _ = run(
            ["sweep-alpha", "--instance", instance_file, "--steps", "5", "--format", "csv"], capsys
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "alpha,revenue"
        assert len(lines) == 8  # header + 5 rows + best alpha/revenue

    def test_json(self, instance_file, capsys):
        code, out, _ = run(["sweep-alpha", "--instance", instance_file, "--steps", "3"], capsys)
        assert code == 0
        report = json.loads(out)
        assert len(report["sweep"]) == 3


class TestVerify:
    def test_pass_exit_zero(self, instance_file, capsys):
        code, out, _ = run(
            ["verify", "--instance", instance_file, "--theorem", "upper_n"], capsys
        )
        assert code == 0
        assert json.loads(out)["verdict"]["passed"] is True

    def test_hypothesis_not_met_exit_three(self, instance_file, tmp_path, capsys):
        dist = tmp_path / "narrow.json"
        dist.write_text(json.dumps({"kind": "uniform", "low": 0.0, "high": 0.5}))
        code, out, _ = run(
            ["verify", "--instance", instance_file, "--dist", str(dist),
             "--theorem", "lin_bounded_2"], capsys
        )
        assert code == 3

    def test_forced_parameters_can_fail_exit_two(self, tmp_path, capsys):
        # geometric instance under dispersed types: the half share earns
        # nothing, so a user-forced beta = eta = 1 guarantee cannot hold
        from agency.examples import scaling_uniform

        ex = scaling_uniform(n=5, delta=0.1, c_bar=5.0)
        payload = {
            "gammas": list(ex.instance.gammas),
            "rewards": list(ex.instance.rewards),
            "F": [list(r) for r in ex.instance.outcome_probs],
            "dist": {"kind": "uniform", "low": 1.0, "high": 5.0},
        }
        p = tmp_path / "scaling.json"
        p.write_text(json.dumps(payload))
        code, out, _ = run(
            ["verify", "--instance", str(p), "--theorem", "slow",
             "--alpha", "0.5", "--beta", "1.0", "--eta", "1.0", "--kappa", "2.0"],
            capsys,
        )
        assert code == 2
        verdict = json.loads(out)["verdict"]
        assert verdict["hypothesis_ok"] is True
        assert verdict["passed"] is False

    def test_smooth_variant(self, instance_file, tmp_path, capsys):
        dist = tmp_path / "smooth.json"
        dist.write_text(json.dumps({
            "kind": "mixture",
            "parts": [
                {"weight": 0.9, "dist": {"kind": "atom", "at": 1.0}},
                {"weight": 0.1, "dist": {"kind": "uniform", "low": 0.0, "high": 2.0}},
            ],
        }))
        code, _, _ = run(
            ["verify", "--instance", instance_file, "--dist", str(dist),
             "--theorem", "smooth", "--epsilon", "0.1"], capsys
        )
        assert code == 0


class TestReproduce:
    def test_menu(self, capsys):
        code, out, _ = run(["reproduce", "menu"], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["passed"] is True
        names = {c["name"] for c in report["checks"]}
        assert "grid_best_responses_reproduce_rule" in names

    def test_gap_small(self, capsys):
        code, out, _ = run(["reproduce", "gap", "--n", "5", "--delta", "0.1"], capsys)
        assert code == 0
        report = json.loads(out)
        assert report["passed"] is True
        assert any(c["name"] == "welfare_matches_machinery" for c in report["checks"])

    def test_scaling_uniform(self, capsys):
        code, out, _ = run(["reproduce", "scaling_uniform"], capsys)
        assert code == 0
        assert json.loads(out)["passed"] is True

    def test_smoothed(self, capsys):
        code, out, _ = run(["reproduce", "smoothed", "--epsilon", "0.5"], capsys)
        assert code == 0


class TestCheckIc:
    def test_linear_contract_passes(self, instance_file, tmp_path, capsys):
        contract = {
            "profiles": [[0.0, 50.0, 150.0]],
            "assignment": {"breakpoints": [80.0, 0.0], "profile_index": [0]},
            "u_bar": 0.0,
        }
        p = tmp_path / "contract.json"
        p.write_text(json.dumps(contract))
        code, out, _ = run(
            ["check-ic", "--instance", instance_file, "--contract", str(p), "--grid", "64"],
            capsys,
        )
        assert code == 0
        report = json.loads(out)
        assert report["summary"]["passed"] is True
        assert len(report["grid"]) == 64

    def test_bad_contract_file(self, instance_file, tmp_path, capsys):
        p = tmp_path / "contract.json"
        p.write_text(json.dumps({"profiles": [[0, 1, 2]]}))
        code, _, err = run(
            ["check-ic", "--instance", instance_file, "--contract", str(p)], capsys
        )
        assert code == 1
        assert "missing key 'assignment'" in err


def test_grid_env_override(instance_file, capsys, monkeypatch):
    monkeypatch.setenv("AGENCY_GRID", "512")
    code, out, _ = run(["analyze", "--instance", instance_file], capsys)
    assert code == 0
    assert json.loads(out)["tolerances"]["scan_points"] == 512
    monkeypatch.setenv("AGENCY_GRID", "unparseable")
    code, _, err = run(["analyze", "--instance", instance_file], capsys)
    assert code == 1
    assert "AGENCY_GRID" in err
