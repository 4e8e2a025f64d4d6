import csv
import subprocess
import sys

import numpy as np
import pytest

from nfce import cli
from nfce.config import desk_config, paper_config, save_config

TINY = desk_config(N=16, P=4, T=12, trials=2, T_values=(8, 12), snr_values=(0.0, 20.0))


@pytest.fixture
def tiny(tmp_path):
    path = tmp_path / "tiny.toml"
    save_config(TINY, path)
    return path


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_sweep_pilot_outputs(tiny, tmp_path):
    out = tmp_path / "run"
    assert cli.main(["sweep-pilot", "--config", str(tiny), "--out", str(out), "-q"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["manifest.toml", "nmse_vs_pilot.csv", "nmse_vs_pilot.svg"]
    rows = read_rows(out / "nmse_vs_pilot.csv")
    trials = [r for r in rows if r["kind"] == "trial"]
    means = [r for r in rows if r["kind"] == "mean"]
    assert len(trials) == 2 * 4 * 2 and len(means) == 2 * 4
    assert list(rows[0]) == list(cli.SWEEP_HEADER)
    # 9 significant digits
    x = next(r["nmse_linear"] for r in trials if r["status"] == "ok")
    assert len(x.replace(".", "").replace("-", "").split("e")[0].lstrip("0")) <= 9


def test_rerun_is_byte_identical_and_thread_invariant(tiny, tmp_path):
    outs = []
    for name, threads in (("a", "1"), ("b", "1"), ("c", "3")):
        out = tmp_path / name
        assert cli.main(["sweep-pilot", "--config", str(tiny), "--out", str(out), "--threads", threads, "-q"]) == 0
        outs.append((out / "nmse_vs_pilot.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_threads_from_environment(tiny, tmp_path, monkeypatch):
    monkeypatch.setenv("NFCE_THREADS", "2")
    assert cli._threads(None) == 2
    monkeypatch.setenv("NFCE_THREADS", "zero")
    assert cli.main(["sweep-pilot", "--config", str(tiny), "--out", str(tmp_path / "x")]) == 2


def test_sweep_snr_with_noiseless_point(tmp_path):
    cfg = desk_config(N=16, P=4, T=16, trials=2, snr_values=(10.0, float("inf")), methods=("ls", "pcsbl_2d"))
    save_config(cfg, tmp_path / "c.toml")
    out = tmp_path / "snr"
    assert cli.main(["sweep-snr", "--config", str(tmp_path / "c.toml"), "--out", str(out), "-q"]) == 0
    means = [r for r in read_rows(out / "nmse_vs_snr.csv") if r["kind"] == "mean"]
    assert len(means) == 4
    ls_inf = next(r for r in means if r["method"] == "ls" and r["axis_value"] == "inf")
    assert float(ls_inf["nmse_db"]) <= -200


def test_unknown_method_is_config_error(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text('methods = ["pcsbl_2d", "nf_bpd"]\n')
    assert cli.main(["sweep-pilot", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "nf_bpd" in err and "methods" in err
    assert not (tmp_path / "o").exists()


def test_unknown_key_and_bad_mu(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("trails = 3\n")
    assert cli.main(["validate", "--config", str(path)]) == 2
    assert "trails" in capsys.readouterr().err
    path.write_text("mu_bar = -1.0\n")
    assert cli.main(["validate", "--config", str(path)]) == 2
    assert "mu_bar" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert cli.main(["sweep-snr", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path / "o")]) == 2


def test_refuses_to_overwrite_without_force(tiny, tmp_path):
    out = tmp_path / "run"
    assert cli.main(["sweep-pilot", "--config", str(tiny), "--out", str(out), "-q"]) == 0
    first = (out / "nmse_vs_pilot.csv").read_bytes()
    assert cli.main(["sweep-pilot", "--config", str(tiny), "--out", str(out), "-q"]) == 2
    assert (out / "nmse_vs_pilot.csv").read_bytes() == first
    assert cli.main(["sweep-pilot", "--config", str(tiny), "--out", str(out), "--force", "-q"]) == 0
    assert (out / "nmse_vs_pilot.csv").read_bytes() == first


def test_manifest_round_trip(tiny, tmp_path):
    out = tmp_path / "run"
    assert cli.main(["sweep-pilot", "--config", str(tiny), "--out", str(out), "-q"]) == 0
    m = cli.load_manifest(out / "manifest.toml")
    assert m.config == TINY
    assert m.base_seed == TINY.base_seed and m.command == "sweep-pilot"
    assert m.finished and m.outputs == ["nmse_vs_pilot.csv", "nmse_vs_pilot.svg"]
    m.write(tmp_path)
    again = cli.load_manifest(tmp_path / "manifest.toml")
    assert again == m
    assert len(list(out.glob("*.toml"))) == 1


def test_hard_failure_flushes_partial_csv(tiny, tmp_path, monkeypatch):
    real = cli.sweep_pilot

    def flaky(cfg, values, threads=1):
        if values[0] == 12:
            raise RuntimeError("boom")
        return real(cfg, values, threads=threads)

    monkeypatch.setattr(cli, "sweep_pilot", flaky)
    out = tmp_path / "run"
    assert cli.main(["sweep-pilot", "--config", str(tiny), "--out", str(out), "-q"]) == 1
    rows = read_rows(out / "nmse_vs_pilot.csv")
    assert len(rows) == 4 * 2 and all(r["axis_value"] == "8" for r in rows)
    assert (out / "manifest.toml").exists()


def test_sparsity_map_outputs(tmp_path):
    cfg = paper_config(P=8)
    save_config(cfg, tmp_path / "c.toml")
    out = tmp_path / "map"
    assert cli.main(["sparsity-map", "--config", str(tmp_path / "c.toml"), "--out", str(out), "-q"]) == 0
    rows = read_rows(out / "sparsity_map.csv")
    assert len(rows) == 256 * 8
    drift = read_rows(out / "sparsity_map_drift.csv")
    assert {r["path"] for r in drift} == {"0", "1", "2"}
    assert (out / "sparsity_map.svg").read_text().startswith("<?xml")


def test_sparsity_map_without_bandwidth(tmp_path):
    cfg = desk_config(L=1, B=0.0)
    save_config(cfg, tmp_path / "c.toml")
    out = tmp_path / "map"
    assert cli.main(["sparsity-map", "--config", str(tmp_path / "c.toml"), "--out", str(out), "-q"]) == 0
    mags = np.array([float(r["magnitude"]) for r in read_rows(out / "sparsity_map.csv")]).reshape(64, 32)
    assert np.allclose(mags, mags[:, :1], rtol=1e-8)


def test_validate_default_passes(capsys):
    assert cli.main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 6


def test_validate_warns_below_fresnel(tmp_path, capsys):
    path = tmp_path / "near.toml"
    with pytest.warns(UserWarning, match="Fresnel"):
        save_config(paper_config(r_min=1.0, r_max=20.0), path)
    with pytest.warns(UserWarning, match="Fresnel"):
        code = cli.main(["validate", "--config", str(path), "--out", str(tmp_path / "v")])
    assert code == 0
    out = capsys.readouterr().out
    assert "WARN  Taylor phase bound" in out
    assert (tmp_path / "v" / "validation.csv").exists()


def test_module_entry_point_exit_codes(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("mu_bar = -1.0\n")
    r = subprocess.run([sys.executable, "-m", "nfce", "validate", "--config", str(bad)], capture_output=True, text=True)
    assert r.returncode == 2 and "mu_bar" in r.stderr
    r = subprocess.run([sys.executable, "-m", "nfce", "bogus"], capture_output=True, text=True)
    assert r.returncode == 2
