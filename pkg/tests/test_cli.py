import json
import subprocess
import sys

import pytest

from opineq.cli import CampaignConfig, UsageError, main, parse_checks, parse_dims, repro_rows
from opineq.iql import corpus_files


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_dims():
    assert parse_dims("2..8") == list(range(2, 9))
    assert parse_dims("3") == [3]
    for bad in ["0..3", "5..2", "a..b", "1..2..3", "1..65"]:
        with pytest.raises(UsageError):
            parse_dims(bad)


def test_parse_checks():
    assert parse_checks("all")[0] == "eq1"
    assert parse_checks("lem1.1, cor1.5") == ["lem1.1", "cor1.5"]
    with pytest.raises(UsageError):
        parse_checks("lem1.1,bogus")


def test_repro_paper(capsys):
    code, out, _ = _run(capsys, "repro-paper")
    assert code == 0
    assert "13/13 reproduced" in out
    assert all(r.ok for r in repro_rows())


def test_verify_passing_campaign_is_deterministic(tmp_path, capsys):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    args = ["verify", "--checks", "lem1.1,cor1.8", "--trials", "20", "--dims", "2..3", "--seed", "7"]
    assert _run(capsys, *args, "--json", str(p1))[0] == 0
    assert _run(capsys, *args, "--json", str(p2), "--workers", "2")[0] == 0
    assert p1.read_bytes() == p2.read_bytes()
    report = json.loads(p1.read_text())
    assert set(report) == {"meta", "results", "anomalies", "summary"}
    assert report["meta"]["seed"] == 7
    assert report["summary"]["failures"] == 0
    assert report["summary"]["instances"] == 2 * 2 * 20


def test_verify_reports_findings(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, text, _ = _run(capsys, "verify", "--checks", "cor2.3+2.5+2.9", "--trials", "30",
                         "--dims", "2..2", "--json", str(out))
    assert code == 1 and "FINDINGS" in text
    report = json.loads(out.read_text())
    assert report["summary"]["failures"] > 0
    assert any(r["pass"] is False for r in report["results"])


def test_verify_relations_do_not_fail_the_run(capsys):
    code, _, _ = _run(capsys, "verify", "--checks", "sv-nonext,rem1.10", "--trials", "5",
                      "--dims", "4..4")
    assert code == 0


def test_verify_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# campaign\nchecks = eq1\ntrials = 3\ndims = 2..2\nseed = 1\n")
    out = tmp_path / "r.json"
    assert _run(capsys, "verify", "--config", str(cfg), "--trials", "4", "--json", str(out))[0] == 0
    meta = json.loads(out.read_text())["meta"]["config"]
    assert meta["checks"] == ["eq1"] and meta["trials"] == 4 and meta["seed"] == 1


@pytest.mark.parametrize("argv", [
    ["verify", "--checks", "bogus"],
    ["verify", "--dims", "9..2"],
    ["verify", "--trials", "0"],
    ["verify", "--trials", "x"],
    ["verify", "--config", "/nonexistent/cfg"],
    ["sharpness", "--target", "bogus"],
    ["sharpness", "--target", "lem1.1", "--norm", "nope"],
    ["sharpness", "--target", "lem1.1", "--dims", "1"],
    ["fuzz", "/nonexistent.iql"],
    ["nocommand"],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = _run(capsys, *argv)
    assert code == 2
    assert err


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("colour = blue\n")
    assert _run(capsys, "verify", "--config", str(cfg))[0] == 2


def test_fuzz_parse_error_exits_2(tmp_path, capsys):
    f = tmp_path / "bad.iql"
    f.write_text("check X <= Y;")
    code, _, err = _run(capsys, "fuzz", str(f))
    assert code == 2 and "1:7" in err


def test_fuzz_sv_extension_exits_1_with_witness(tmp_path, capsys):
    f = tmp_path / "sv.iql"
    f.write_text(corpus_files()["sv_extension.iql"])
    out = tmp_path / "r.json"
    code, text, _ = _run(capsys, "fuzz", str(f), "--json", str(out))
    assert code == 1
    assert "Z = [[5, 3], [3, 5]]" in text and "A = [[1, 0], [0, 4]]" in text
    report = json.loads(out.read_text())
    assert report["summary"]["violated"] is True


def test_fuzz_theorem_exits_0(tmp_path, capsys):
    f = tmp_path / "lem.iql"
    f.write_text(corpus_files()["lem1_1.iql"])
    code, text, _ = _run(capsys, "fuzz", str(f), "--trials", "200")
    assert code == 0 and "no violation" in text


def test_sharpness(tmp_path, capsys):
    out = tmp_path / "s.json"
    code, text, _ = _run(capsys, "sharpness", "--target", "lem1.1", "--budget", "500",
                         "--json", str(out))
    assert code == 0 and "bound 1.2500000000" in text
    res = json.loads(out.read_text())["results"][0]
    assert res["best_ratio"] <= 1.25 * (1 + 1e-9)


def test_config_dict_excludes_runtime_only_fields():
    d = CampaignConfig().to_dict()
    assert "json" not in d and "workers" not in d


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "opineq", "--version"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.strip()
