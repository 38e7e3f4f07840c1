"""Command-line behaviour: exit codes, outputs, formats."""

import json

import pytest

from bigrs.cli import main


def test_validate_ok(models_dir, capsys):
    assert main(["validate", str(models_dir / "wsn.big")]) == 0
    out = capsys.readouterr().out
    assert "pbrs" in out and "2 rule(s)" in out


def test_validate_model_error(tmp_path, capsys):
    bad = tmp_path / "bad.big"
    bad.write_text("ctrl A = 0;\nbegin pbrs init = nope; rules = []; end\n")
    assert main(["validate", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_missing_file_is_model_error(capsys):
    assert main(["validate", "no/such/file.big"]) == 1


def test_unknown_flag_exits_2(models_dir):
    with pytest.raises(SystemExit) as exc:
        main(["full", str(models_dir / "wsn.big"), "--frobnicate"])
    assert exc.value.code == 2


def test_check_prints_bounded_reach(models_dir, capsys):
    rc = main(
        ["check", str(models_dir / "wsn.big"), "--query", "P=? [ F<=3 all_failed ]"]
    )
    assert rc == 0
    assert capsys.readouterr().out.strip() == "0.4"


def test_check_bad_query(models_dir, capsys):
    rc = main(["check", str(models_dir / "wsn.big"), "--query", "nonsense"])
    assert rc == 1


def test_full_prism_bundle(models_dir, tmp_path, capsys):
    rc = main(
        ["full", str(models_dir / "wsn.big"), "--out", str(tmp_path)]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert (tmp_path / "wsn.tra").exists()
    assert (tmp_path / "wsn.lab").exists()
    assert "states: 4" in out


def test_full_env_default_out(models_dir, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BIGRS_OUT_DIR", str(tmp_path))
    assert main(["full", str(models_dir / "wsn.big")]) == 0
    assert (tmp_path / "wsn.tra").exists()


def test_full_dot_and_json(models_dir, tmp_path, capsys):
    assert (
        main(
            [
                "full",
                str(models_dir / "send_mdp.big"),
                "--out",
                str(tmp_path),
                "--format",
                "dot",
            ]
        )
        == 0
    )
    assert (tmp_path / "send_mdp.dot").read_text().startswith("digraph")
    assert (
        main(
            [
                "full",
                str(models_dir / "send_mdp.big"),
                "--out",
                str(tmp_path),
                "--format",
                "json",
            ]
        )
        == 0
    )
    doc = json.loads((tmp_path / "send_mdp.json").read_text())
    assert doc["kind"] == "abrs" and doc["states"] == 3


def test_full_max_states_cap(models_dir, capsys):
    rc = main(["full", str(models_dir / "wsn.big"), "--max-states", "2"])
    assert rc == 1
    assert "cap" in capsys.readouterr().err


def test_full_rewards_as_states(models_dir, tmp_path, capsys):
    rc = main(
        [
            "full",
            str(models_dir / "mobile_sink.big"),
            "--out",
            str(tmp_path),
            "--rewards-as-states",
        ]
    )
    assert rc == 0
    # action rewards were folded away: no .trew in the bundle
    assert not (tmp_path / "mobile_sink.trew").exists()
    assert (tmp_path / "mobile_sink.srew").exists()


def test_sim_json_lines(models_dir, capsys):
    rc = main(["sim", str(models_dir / "wsn.big"), "--steps", "5", "--seed", "3"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 5
    first = json.loads(lines[0])
    assert first["step"] == 1 and "state" in first and "rule" in first


def test_check_mdp_cost(models_dir, capsys):
    rc = main(
        [
            "check",
            str(models_dir / "mobile_sink.big"),
            "--query",
            "Rmin=? [ C<=10 ]",
        ]
    )
    assert rc == 0
    value = float(capsys.readouterr().out)
    assert value >= 0
