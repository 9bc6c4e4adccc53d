import json
import subprocess
import sys
from pathlib import Path

import pytest

from logos_qlab import cli

SAMPLES = Path(__file__).resolve().parents[1] / "samples"


def s(name):
    return str(SAMPLES / name)


def invoke(capsys, *argv):
    report, code = cli.run(list(argv))
    out = capsys.readouterr()
    return report, code, out.out, out.err


# Every command once, with the files it needs; reused for the determinism sweep.
COMMAND_LINES = [
    ["validate", "--state", s("singlet.json"), "--pool", s("spin_pool.json"), "--instance", s("ks18.json")],
    ["graph", "--pool", s("spin_pool.json")],
    ["graph", "--pool", s("qutrit_pool.json"), "--export", "dot"],
    ["isa-check", "--pool", s("spin_pool.json"), "--state", s("plus.json")],
    ["isa-check", "--pool", s("qutrit_pool.json"), "--values", s("qutrit_values.json")],
    ["ks", "--instance", s("ks18.json"), "--cross-check"],
    ["ks"],
    ["certify", "--random", "5", "--seed", "3"],
    ["certify", "--instance", s("ks18.json"), "--state", s("mixture.json")],
    ["arrange", "--state", s("singlet.json"), "--factors", "2,2", "--bases", s("hadamard_bases.json")],
    ["arrange", "--state", s("singlet.json"), "--factors", "2,2", "--keep", "0"],
    ["invariance", "--state", s("singlet.json"), "--trials", "5", "--seed", "7"],
    ["individual", "--pool", s("spin_pool.json"), "--state", s("plus.json")],
    ["individual", "--pool", s("xz_pool.json")],
    ["potentia", "--state", s("singlet.json"), "--power", s("updown.json")],
    ["contrast", "--state", s("singlet.json")],
]


class TestCommands:
    def test_validate(self, capsys):
        report, code, *_ = invoke(capsys, *COMMAND_LINES[0])
        assert code == 0 and report["verdict"] == "pass"
        assert report["details"]["pool"]["contexts"] == 3
        assert report["details"]["instance"]["info"]["derived_context_count"] == 9

    def test_validate_reports_bad_state(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"dim": 2, "rho": [[[0.5, 0], [0, 0]], [[0, 0], [0.4, 0]]]}))
        report, code, *_ = invoke(capsys, "validate", "--state", str(bad))
        assert code == 0 and report["verdict"] == "fail"
        assert "trace = 0.9" in report["details"]["state"]["error"]

    def test_graph(self, capsys, tmp_path):
        dot = tmp_path / "g.dot"
        report, code, *_ = invoke(capsys, "graph", "--pool", s("spin_pool.json"), "--dot", str(dot))
        assert code == 0
        assert report["details"]["vertex_count"] == 6
        assert report["details"]["edge_count"] == 3
        assert report["details"]["contexts"] == [[0, 1], [2, 3], [4, 5]]
        text = dot.read_text()
        assert text.startswith("graph powers {") and text.count("--") == 3

    def test_isa_check_values_fail(self, capsys):
        report, code, *_ = invoke(capsys, *COMMAND_LINES[4])
        assert code == 0 and report["verdict"] == "fail"
        assert {c["kind"] for c in report["details"]["checks"] if not c["passed"]} == {"context", "additivity"}

    def test_isa_check_needs_source(self, capsys):
        _, code, _, err = invoke(capsys, "isa-check", "--pool", s("spin_pool.json"))
        assert code == 1 and "--state or --values" in err

    def test_ks_not_found(self, capsys):
        report, code, *_ = invoke(capsys, *COMMAND_LINES[5])
        assert code == 0
        assert report["verdict"] == "not-found"
        assert report["details"]["flat_enumeration"] == {"candidates": 262144, "valid": 0}

    def test_ks_found(self, capsys, tmp_path):
        inst = tmp_path / "zx.json"
        h = 0.7071067811865476
        inst.write_text(json.dumps({"dim": 2, "vectors": [
            [[1, 0], [0, 0]], [[0, 0], [1, 0]], [[h, 0], [h, 0]], [[h, 0], [-h, 0]]]}))
        report, code, *_ = invoke(capsys, "ks", "--instance", str(inst))
        assert code == 0 and report["verdict"] == "found"
        assert report["details"]["assignment"] == [1, 0, 1, 0]

    def test_certify(self, capsys):
        report, code, *_ = invoke(capsys, *COMMAND_LINES[7])
        assert code == 0 and report["verdict"] == "pass"
        assert report["details"]["states"] == 5 and report["details"]["max_deviation"] <= 1e-10

    def test_certify_dim_mismatch(self, capsys):
        _, code, _, err = invoke(capsys, "certify", "--state", s("plus.json"))
        assert code == 1 and "dim" in err

    def test_arrange_hadamard(self, capsys):
        report, code, *_ = invoke(capsys, *COMMAND_LINES[9])
        assert code == 0
        eff = report["details"]["power_effects"]
        assert eff["00"] == pytest.approx(0, abs=1e-15) and eff["01"] == pytest.approx(0.5)
        assert report["details"]["knowledge"]["parameters"] == 15

    def test_arrange_keep(self, capsys):
        report, *_ = invoke(capsys, *COMMAND_LINES[10])
        arr = report["details"]["arrangement"]
        assert arr["degree"] == 2
        flat = [x for row in arr["alpha"] for z in row for x in z]
        assert flat == pytest.approx([0.5, 0, 0, 0, 0, 0, 0.5, 0], abs=1e-15)

    def test_arrange_bad_factors(self, capsys):
        _, code, _, err = invoke(capsys, "arrange", "--state", s("singlet.json"), "--factors", "2,3")
        assert code == 1 and "product 6" in err

    def test_invariance_singlet(self, capsys):
        report, code, *_ = invoke(capsys, "invariance", "--state", s("singlet.json"),
                                  "--trials", "100", "--seed", "7")
        assert code == 0 and report["verdict"] == "pass"
        assert report["details"]["max_deviation"] <= 1e-10
        assert [f["factor_dims"] for f in report["details"]["factorizations"]] == [[2, 2], [4]]

    def test_individual(self, capsys):
        report, code, *_ = invoke(capsys, *COMMAND_LINES[12])
        assert code == 0 and report["verdict"] == "found"
        assert report["details"]["size"] == 3
        assert report["details"]["reconstruction"]["frobenius_error"] <= 1e-8

    def test_individual_incomplete(self, capsys):
        report, code, *_ = invoke(capsys, *COMMAND_LINES[13])
        assert code == 0 and report["verdict"] == "not-found"
        assert report["details"]["rank"] == 3

    def test_potentia(self, capsys):
        report, code, *_ = invoke(capsys, *COMMAND_LINES[14])
        assert code == 0 and report["details"]["potentia"] == pytest.approx(0.5, abs=1e-15)

    def test_contrast(self, capsys):
        report, code, *_ = invoke(capsys, *COMMAND_LINES[15])
        assert code == 0 and report["verdict"] == "pass"
        assert report["details"]["local_rank_deficit"] == 9


class TestErrors:
    def test_unknown_command(self, capsys):
        _, code, _, err = invoke(capsys, "frobnicate")
        assert code == 2 and "usage" in err

    def test_no_command(self, capsys):
        assert invoke(capsys)[1] == 2

    def test_malformed_input(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"dim": 2, "ket": [[1, 0], [0]]}')
        _, code, out, err = invoke(capsys, "potentia", "--state", str(bad), "--power", s("updown.json"))
        assert code == 1 and out == ""
        assert "$.ket[1]" in err

    def test_missing_file(self, capsys, tmp_path):
        _, code, _, err = invoke(capsys, "potentia", "--state", str(tmp_path / "nope.json"),
                                 "--power", s("updown.json"))
        assert code == 1 and "cannot read --state" in err

    def test_bad_tol(self, capsys):
        assert invoke(capsys, "ks", "--tol", "2")[1] == 1

    def test_bad_trials(self, capsys):
        assert invoke(capsys, "invariance", "--state", s("singlet.json"), "--trials", "0")[1] == 1

    def test_env_tolerance(self, capsys, monkeypatch):
        monkeypatch.setenv(cli.TOL_ENV, "1e-7")
        report, *_ = invoke(capsys, "ks")
        assert report["config"]["tolerance"] == 1e-7
        monkeypatch.setenv(cli.TOL_ENV, "lots")
        assert invoke(capsys, "ks")[1] == 1
        # the flag wins over the environment
        monkeypatch.setenv(cli.TOL_ENV, "1e-7")
        assert invoke(capsys, "ks", "--tol", "1e-8")[0]["config"]["tolerance"] == 1e-8


class TestOutput:
    def test_json_stdout(self, capsys):
        report, _, out, _ = invoke(capsys, *COMMAND_LINES[14])
        assert json.loads(out) == report
        assert set(report) == {"command", "inputs_digest", "verdict", "config", "details"}

    def test_text_format(self, capsys):
        _, code, out, _ = invoke(capsys, *COMMAND_LINES[14], "--format", "text")
        assert code == 0
        assert out.splitlines()[:2] == ["command: potentia", "verdict: pass"]
        assert "potentia: 0.5" in out

    def test_output_file(self, capsys, tmp_path):
        dest = tmp_path / "r.json"
        _, _, out, _ = invoke(capsys, *COMMAND_LINES[14], "--output", str(dest))
        assert out == ""
        assert json.loads(dest.read_text())["details"]["label"] == "updown"

    def test_timing_opt_in(self, capsys):
        report, *_ = invoke(capsys, "ks", "--timing")
        assert report["wall_time_ms"] >= 0
        assert "search_wall_time_ms" in report["details"]

    def test_digest_tracks_input_bytes(self, capsys, tmp_path):
        a = invoke(capsys, *COMMAND_LINES[14])[0]["inputs_digest"]
        copy = tmp_path / "singlet.json"
        copy.write_text((SAMPLES / "singlet.json").read_text() + " ")
        b = invoke(capsys, "potentia", "--state", str(copy), "--power", s("updown.json"))[0]["inputs_digest"]
        assert a != b and len(a) == 64

    @pytest.mark.parametrize("argv", COMMAND_LINES, ids=lambda a: "-".join(a[:2]))
    def test_byte_identical_reruns(self, capsys, argv):
        outs = [invoke(capsys, *argv)[2] for _ in range(2)]
        assert outs[0] == outs[1] and outs[0]

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "logos_qlab", "potentia", "--state", s("singlet.json"),
             "--power", s("updown.json")],
            capture_output=True, text=True, check=False,
        )
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["details"]["potentia"] == pytest.approx(0.5)
