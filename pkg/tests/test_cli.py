"""Command-line surface: config handling, artifacts, failure records."""

import math

import pytest

from wermerlab import cli
from wermerlab.artifacts import config_hash


def run(tmp_path, command, config_text=None, extra=()):
    argv = [command, "--out", str(tmp_path)]
    if config_text is not None:
        cfg = tmp_path / "run.cfg"
        cfg.write_text(config_text)
        argv += ["--config", str(cfg)]
    argv += list(extra)
    return cli.main(argv)


def test_schedule_artifact_content(tmp_path, capsys):
    assert run(tmp_path, "schedule") == 0
    out = capsys.readouterr().out
    assert "schedule.csv" in out and "schedule_report.csv" in out
    text = (tmp_path / "schedule.csv").read_text()
    assert text.startswith("# wermerlab schedule\n# config_sha256=")
    assert "corrupted=false" in text
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    assert rows[0] == "n,r,m,log10_delta,log10_eps"
    d1 = float(rows[2].split(",")[3])
    assert d1 == pytest.approx(-math.log10(160), abs=1e-12)
    d2 = float(rows[3].split(",")[3])
    assert d2 == pytest.approx(-math.log10(16384000), abs=1e-12)


def test_unknown_config_key_is_rejected(tmp_path, capsys):
    assert run(tmp_path, "schedule", "schedule.bogus=1\n") == 2
    err = capsys.readouterr().err
    assert "unknown key 'schedule.bogus'" in err


def test_malformed_config_line_is_rejected(tmp_path):
    assert run(tmp_path, "schedule", "not a key value pair\n") == 2
    assert run(tmp_path, "schedule", "schedule.depth=x\n") == 2


def test_comments_and_blank_lines_are_ignored(tmp_path):
    assert run(tmp_path, "schedule", "# comment\n\nschedule.depth=1\n") == 0


def test_corrupted_certify_fails_with_single_line_record(tmp_path, capsys):
    cfg = "schedule.m=1\nschedule.corrupt_level=2\nschedule.corrupt_factor=1000000\n"
    assert run(tmp_path, "certify", cfg) == 1
    out = capsys.readouterr().out.strip().splitlines()
    assert out[-1] == ("invariant=est1 module=slicer location=schedule_step_2 "
                       "measured=0.97658203124999998 bound=3.9062500000000001e-05")


def test_corrupted_schedule_command_still_exits_zero(tmp_path):
    cfg = "schedule.m=1\nschedule.corrupt_level=2\nschedule.corrupt_factor=1000000\n"
    assert run(tmp_path, "schedule", cfg) == 0
    text = (tmp_path / "schedule.csv").read_text()
    assert "corrupted=true" in text


def test_out_env_overrides_flag(tmp_path, monkeypatch):
    target = tmp_path / "env_dir"
    monkeypatch.setenv("WERMERLAB_OUT", str(target))
    assert cli.main(["schedule", "--out", str(tmp_path / "flag_dir")]) == 0
    assert (target / "schedule.csv").exists()
    assert not (tmp_path / "flag_dir").exists()


def test_measure_total_mass_comment(tmp_path):
    assert run(tmp_path, "measure", "measure.depth=2\n") == 0
    text = (tmp_path / "measure.csv").read_text()
    assert "total_mass=1/1" in text
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    assert len(rows) == 21  # header + 20 atoms
    assert rows[1].split(",")[-1] == "1/20"


def test_capacity_reports_ordinary_twin(tmp_path):
    assert run(tmp_path, "capacity", "capacity.depth=3\n") == 0
    text = (tmp_path / "capacity.csv").read_text()
    assert "ordinary_twin=true" in text  # default m = 1,4 is not ordinary
    rows = [line.split(",") for line in text.splitlines()
            if line and not line.startswith("#")][1:]
    drift = {int(n): float(v) for n, v in rows}
    assert drift[1] == pytest.approx(-1.3862943611198906, abs=1e-12)
    assert drift[3] == pytest.approx(-1.9061547465398496, abs=1e-12)


def test_render_pgm_header_and_hash(tmp_path):
    assert run(tmp_path, "render", "render.resolution=8\n") == 0
    blob = (tmp_path / "render.pgm").read_bytes()
    assert blob.startswith(b"P5\n# config_sha256=")
    header, rest = blob.split(b"\n", 1)
    comment, dims, maxval, _ = rest.split(b"\n", 3)
    assert b"tower(depth=2" in comment and b"n_max=" in comment
    assert dims == b"8 8" and maxval == b"65535"
    payload = blob.rsplit(b"65535\n", 1)[1]
    assert len(payload) == 8 * 8 * 2


def test_roots_artifact_determinism_across_workers(tmp_path):
    cfg = "roots.depth=1\n"
    a, b = tmp_path / "a", tmp_path / "b"
    for sub, workers in ((a, "1"), (b, "4")):
        sub.mkdir()
        argv = ["roots", "--out", str(sub), "--workers", workers]
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text(cfg)
        argv += ["--config", str(cfgfile)]
        assert cli.main(argv) == 0
    assert (a / "roots.csv").read_bytes() == (b / "roots.csv").read_bytes()


def test_seed_flag_changes_anchors_downstream(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for sub, seed in ((a, "0"), (b, "5"), (c, "0")):
        sub.mkdir()
        assert cli.main(["certify", "--out", str(sub), "--seed", seed]) == 0
    assert (a / "certify.csv").read_text() == (c / "certify.csv").read_text()
    assert (a / "certify.csv").read_text() != (b / "certify.csv").read_text()


def test_config_hash_reflects_overrides(tmp_path):
    assert cli.main(["schedule", "--out", str(tmp_path), "--seed", "9"]) == 0
    text = (tmp_path / "schedule.csv").read_text()
    sha = text.split("config_sha256=", 1)[1].split()[0]
    assert sha != config_hash("")
    assert len(sha) == 64


def test_invalid_workers_rejected(tmp_path):
    assert cli.main(["schedule", "--out", str(tmp_path), "--workers", "0"]) == 2
