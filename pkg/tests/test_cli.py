import json
import logging
import subprocess
import sys

import pytest

from toruslab import cli


def run(tmp_path, *argv, out=None):
    return cli.run(["--out", str(out or tmp_path / "out"), *argv])


def artifacts(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*"))
            if p.is_file() and "cache" not in p.parts}


def test_disc(tmp_path, capsys):
    assert run(tmp_path, "disc", "--poly", "x^2 + 3") == 0
    dest = capsys.readouterr().out.strip()
    r = json.loads((tmp_path / "out" / dest.split("out/")[-1] / "disc.json").read_text())
    assert r["poly_disc"] == -12 and r["maximal_order_disc"] == -3 and r["index"] == 2


def test_equidist_deterministic_across_runs_and_workers(tmp_path):
    args = ["equidist", "--family", "quadratic", "--kmin", "5", "--kmax", "200", "--count", "4", "--step", "0.2"]
    assert run(tmp_path, *args, out=tmp_path / "a") == 0
    assert run(tmp_path, "--workers", "2", "--no-cache", *args, out=tmp_path / "b") == 0
    a, b = artifacts(tmp_path / "a"), artifacts(tmp_path / "b")
    assert a == b and any(k.endswith(".csv") for k in a)


def test_cache_hit_and_corruption(tmp_path, caplog):
    args = ["building", "--prime", "7", "--poly", "x^2 - x - 1", "--conjugate", "1,0;0,7"]
    assert run(tmp_path, *args) == 0
    first = artifacts(tmp_path / "out")
    with caplog.at_level(logging.INFO, logger="toruslab"):
        assert run(tmp_path, "-v", *args) == 0
    assert any("cache hit" in r.message for r in caplog.records)
    caplog.clear()
    for f in (tmp_path / "out" / "cache").glob("*.json"):
        f.write_text(f.read_text().replace("49", "50"))
    with caplog.at_level(logging.WARNING, logger="toruslab"):
        assert run(tmp_path, *args) == 0
    assert any("corrupt" in r.message for r in caplog.records)
    assert artifacts(tmp_path / "out") == first
    text = next((tmp_path / "out" / "building").rglob("building.csv")).read_text()
    assert ",49," in text


def test_no_cache_skips_store(tmp_path):
    assert run(tmp_path, "--no-cache", "disc", "--poly", "x^3 - 2") == 0
    assert not (tmp_path / "out" / "cache").exists()


def test_input_errors(tmp_path, capsys):
    assert run(tmp_path, "disc", "--poly", "x^2 - 4") == 2
    assert run(tmp_path, "zeta") == 2
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[nonsense]\nx = 1\n")
    assert run(tmp_path, "--config", str(cfg), "disc", "--poly", "x^2 + 1") == 2
    cfg.write_text("[run]\ncolour = blue\n")
    assert run(tmp_path, "--config", str(cfg), "disc", "--poly", "x^2 + 1") == 2
    assert "error:" in capsys.readouterr().err


def test_resource_cap_exit(tmp_path):
    cfg = tmp_path / "caps.ini"
    cfg.write_text("[caps]\nideal_cap = 0\n")
    assert run(tmp_path, "--config", str(cfg), "classes", "--poly", "x^2 + 5") == 3


def test_convergence_exit(tmp_path):
    cfg = tmp_path / "hecke.ini"
    cfg.write_text("[hecke]\ntol = 0\nmax_nodes = 16\n")
    assert run(tmp_path, "--config", str(cfg), "hecke", "--poly", "x^2 - 2") == 4


def test_output_dir_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[run]\nout_dir = {tmp_path / 'from_cfg'}\n")
    monkeypatch.setenv("TORUSLAB_OUT", str(tmp_path / "from_env"))
    assert cli.run(["--config", str(cfg), "disc", "--poly", "x^2 + 1"]) == 0
    assert (tmp_path / "from_env" / "disc").is_dir()
    monkeypatch.delenv("TORUSLAB_OUT")
    assert cli.run(["--config", str(cfg), "disc", "--poly", "x^2 + 1"]) == 0
    assert (tmp_path / "from_cfg" / "disc").is_dir()
    assert cli.run(["--config", str(cfg), "--out", str(tmp_path / "flag"), "disc", "--poly", "x^2 + 1"]) == 0
    assert (tmp_path / "flag" / "disc").is_dir()


def test_config_changes_key(tmp_path):
    cfg = tmp_path / "z.ini"
    cfg.write_text("[zeta]\nB = 2000\n")
    assert run(tmp_path, "--config", str(cfg), "zeta", "--poly", "x^2 + 1") == 0
    assert run(tmp_path, "zeta", "--poly", "x^2 + 1", "--B", "3000") == 0
    mans = [json.loads(p.read_text()) for p in (tmp_path / "out" / "zeta").rglob("manifest.json")]
    assert sorted(m["params"]["B"] for m in mans) == [2000, 3000]


def test_manifest_hashes_and_report(tmp_path, capsys):
    import hashlib

    assert run(tmp_path, "packets", "--poly", "x^2 - 12") == 0
    assert run(tmp_path, "cube-roots", "--poly", "x^3 - 2", "--bound", "1.0") == 0
    for man in (tmp_path / "out").rglob("manifest.json"):
        m = json.loads(man.read_text())
        for name, digest in m["artifacts"].items():
            assert hashlib.sha256((man.parent / name).read_bytes()).hexdigest() == digest
    capsys.readouterr()
    assert run(tmp_path, "report") == 0
    lines = (tmp_path / "out" / "report.csv").read_text().splitlines()
    assert lines[0] == "command,key,params,artifacts" and len(lines) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "toruslab", "--out", str(tmp_path), "disc", "--poly", "x^2 + 7"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    bad = subprocess.run([sys.executable, "-m", "toruslab", "disc", "--poly", "x^2 - 1"],
                         capture_output=True, text=True, cwd=tmp_path)
    assert bad.returncode == 2
