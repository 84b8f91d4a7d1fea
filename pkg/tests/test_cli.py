import json
import subprocess
import sys

import pytest

from curricullm import data_path
from curricullm.cli import main

TINY = ["--set", "train.population=8", "--set", "train.elite_count=2", "--set", "train.iterations=2",
        "--set", "train.episodes_per_fitness=1", "--set", "eval_episodes=2"]
SCRIPTED = f"scripted:{data_path('maze_curriculum.json')}"


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def partial_and_full(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert run_cli("run", "--out", root / "full", "--backend", SCRIPTED, *TINY) == 0
    assert run_cli("run", "--out", root / "part", "--backend", SCRIPTED, "--stop-after", 1, *TINY) == 0
    return root / "part", root / "full"


def test_run_prints_result(partial_and_full, capsys, tmp_path):
    assert run_cli("run", "--out", tmp_path / "r", "--backend", SCRIPTED, "--seed", 3, *TINY) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["status"] == "complete" and out["completed_subtasks"] == 3
    assert json.loads((tmp_path / "r" / "config.json").read_text())["seed"] == 3


def test_usage_errors_exit_2(capsys):
    for argv in (["bogus"], [], ["run"], ["eval"]):
        with pytest.raises(SystemExit) as info:
            run_cli(*argv)
        assert info.value.code == 2


def test_config_errors_exit_2(tmp_path):
    assert run_cli("run", "--out", tmp_path / "a", "--backend", SCRIPTED, "--set", "K=9") == 2
    assert run_cli("run", "--out", tmp_path / "b", "--backend", SCRIPTED, "--set", "nope=1") == 2
    assert run_cli("run", "--out", tmp_path / "c") == 2  # no backend
    assert run_cli("run", "--out", tmp_path / "d", "--backend", "carrier-pigeon") == 2
    assert run_cli("run", "--out", tmp_path / "e", "--config", tmp_path / "missing.json") == 2
    assert run_cli("dump-env", "no_such_env") == 2


def test_backend_errors_exit_3(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"responses": {}}))
    assert run_cli("run", "--out", tmp_path / "r", "--backend", f"scripted:{empty}", *TINY) == 3
    # nothing listens on port 9 of localhost
    assert run_cli("run", "--out", tmp_path / "s", "--backend", "live:http://127.0.0.1:9,m", *TINY) == 3


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"K": 3, "backend": SCRIPTED, "train": {"iterations": 1}}))
    assert run_cli("run", "--config", cfg, "--out", tmp_path / "r", *TINY) == 0
    stored = json.loads((tmp_path / "r" / "config.json").read_text())
    assert stored["K"] == 3 and stored["train"]["iterations"] == 2


def test_resume_completes_partial(partial_and_full, tmp_path):
    part, full = partial_and_full
    import shutil

    copy = tmp_path / "copy"
    shutil.copytree(part, copy)
    assert run_cli("resume", copy, "--backend", SCRIPTED) == 0
    assert (copy / "manifest.json").read_text() == (full / "manifest.json").read_text()
    assert run_cli("resume", tmp_path) == 4  # not a run directory


def test_resume_config_mismatch_is_pipeline_error(partial_and_full):
    part, _ = partial_and_full
    assert run_cli("resume", part, "--backend", SCRIPTED, "--set", "K=2") == 4


def test_report_is_deterministic_and_marks_partial(partial_and_full, tmp_path, capsys):
    part, full = partial_and_full
    assert run_cli("report", full, "--out", tmp_path / "a") == 0
    assert run_cli("report", full, "--out", tmp_path / "b") == 0
    for name in ("report.txt", "curves.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    table = (tmp_path / "a" / "report.txt").read_text()
    assert "status: complete (3/3 subtasks)" in table and "final" in table
    curves = (tmp_path / "a" / "curves.csv").read_text().splitlines()
    assert curves[0].startswith("subtask,candidate,selected,iteration")
    assert len(curves) == 1 + 3 * 4 * 2
    assert run_cli("report", part, "--out", tmp_path / "p") == 0
    text = (tmp_path / "p" / "report.txt").read_text()
    assert "status: partial (1/3 subtasks)" in text and "[partial]" in text


def test_eval_checkpoint_and_run_dir(partial_and_full, capsys):
    _, full = partial_and_full
    assert run_cli("eval", full, "--episodes", 3) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["episodes"] == 3 and 0 <= out["success_rate"] <= 1
    sel = json.loads((full / "subtask_03" / "selected.json").read_text())["selected_candidate"]
    ckpt = full / "subtask_03" / f"candidate_{sel}" / "checkpoint.json"
    assert run_cli("eval", ckpt, "--episodes", 3) == 0
    assert json.loads(capsys.readouterr().out) == out


def test_validate_dsl(tmp_path, capsys):
    good = tmp_path / "good.txt"
    good.write_text("```reward\nreturn  -(dist_to_goal)\n```\n```goal\ngoal_distance: [0, 2]\n```\n")
    assert run_cli("validate-dsl", good) == 0
    assert "return -dist_to_goal" in capsys.readouterr().out
    bad = tmp_path / "bad.txt"
    bad.write_text("```reward\nw = 1\nreturn w +\n```\n```goal\n```\n")
    assert run_cli("validate-dsl", bad) == 4
    assert "line 3, column" in capsys.readouterr().err
    assert run_cli("validate-dsl", tmp_path / "nothing.txt") == 2


def test_dump_env(capsys):
    assert run_cli("dump-env", "point_maze") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["id"] == "point_maze"
    assert run_cli("dump-env") == 0
    assert {d["id"] for d in json.loads(capsys.readouterr().out)} >= {"point_maze", "point_open"}


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "curricullm.cli", "dump-env", "point_open"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["id"] == "point_open"
