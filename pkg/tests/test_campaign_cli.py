import json
import math

import numpy as np
import pytest

from lepx import __version__
from lepx.campaign import CampaignError, Observables, blocks, run_campaign
from lepx.cli import ConfigError, RunConfig, config_from_mapping, main, parse_config_text
from lepx.hexlattice import default_spec
from lepx.stats import GRID


def _write(path, text):
    path.write_text(text)
    return str(path)


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_blocks_partition():
    assert blocks(45, 20) == [(0, 20), (20, 20), (40, 5)]


def test_campaign_independent_of_workers():
    spec = default_spec("disc", 20.0)
    obs = Observables(firsthit=((0.4, 0.6),), passright=((0.4, 0.6),), n_theta=19, n_t=3)
    a = run_campaign(spec, 120, 9, 1, obs, block=25)
    b = run_campaign(spec, 120, 9, 3, obs, block=25)
    c = run_campaign(spec, 120, 9, 1, obs, block=120)
    for r in (b, c):
        assert np.array_equal(a.steps, r.steps) and np.array_equal(a.firsthit, r.firsthit)
        assert np.array_equal(a.passright, r.passright) and np.array_equal(a.revealed, r.revealed)
    with pytest.raises(CampaignError):
        run_campaign(spec, 0, 9)


def test_raw_toggle_lengths():
    spec = default_spec("square", 20.0)
    er = run_campaign(spec, 50, 2, obs=Observables(firsthit=(), passright=()))
    raw = run_campaign(spec, 50, 2, obs=Observables(firsthit=(), passright=(), erase=False))
    assert np.array_equal(raw.steps, er.raw_steps)
    assert np.all(er.steps <= er.raw_steps)


def test_firsthit_smoke(tmp_path, capsys):
    cfg = _write(tmp_path / "c.txt", "shape = square\nL = 20\nr_interval = 0.4 0.6\n")
    assert main(["firsthit", "--config", cfg, "--samples", "10", "--seed", "5", "--out", str(tmp_path / "o")]) == 0
    f = (tmp_path / "o" / "firsthit_square_0.4-0.6.csv").read_text().splitlines()
    assert f[0].startswith(f"# lepx {__version__} command=firsthit seed=5 config=")
    assert f[1] == "x,F"
    vals = np.array([float(line.split(",")[1]) for line in f[2:]])
    assert len(vals) == len(GRID)
    assert set(np.round(vals * 10, 9)) <= set(range(11)) and vals[-1] == 1.0
    assert len(np.unique(vals)) <= 11
    records = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert records[0]["n"] == 10 and records[-1]["max_sup_distance"] == 0.0


def test_output_identical_across_worker_counts(tmp_path):
    cfg = _write(
        tmp_path / "c.txt",
        "shape = disc\nshape = triangle\nL = 20\nsamples = 300\nblock = 40\nn_theta = 19\nn_t = 3\n",
    )
    for cmd in ("firsthit", "passright"):
        outs = []
        for w in ("1", "3"):
            out = tmp_path / f"{cmd}_{w}"
            assert main([cmd, "--config", cfg, "--workers", w, "--out", str(out)]) == 0
            outs.append(_files(out))
        assert outs[0] == outs[1]
        assert len(outs[0]) == (7 if cmd == "firsthit" else 7)


def test_passright_columns(tmp_path):
    cfg = _write(tmp_path / "c.txt", "shape = disc\nL = 20\nsamples = 50\nn_theta = 9\nn_t = 3\nt_interval = 0.4 0.6\n")
    assert main(["passright", "--config", cfg, "--raw", "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "passright_disc_0.4-0.6.csv").read_text().splitlines()
    assert lines[1] == "theta,estimate,stderr,n_effective,discard_rate,schramm_kappa_2.667,schramm_kappa_6"
    assert len(lines) == 2 + 9
    row = [float(x) for x in lines[2 + 4].split(",")]
    assert abs(row[0] - math.pi / 2) < 1e-15 and row[5] == 0.5 and row[6] == 0.5


def test_dimension_needs_four_lengths(tmp_path, capsys):
    cfg = _write(tmp_path / "c.txt", "L = 36\nL = 50\nL = 71\nsamples = 10\n")
    assert main(["dimension", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "at least 4 values of L" in err and "got 3" in err


def test_dimension_synthetic_recovery(tmp_path):
    text = "".join(f"L = {L}\n" for L in (36, 50, 71, 100, 141, 200, 282))
    cfg = _write(tmp_path / "c.txt", text + "synthetic = 2.0 1.334833 0.5 0.75\n")
    assert main(["dimension", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    fit = json.loads((tmp_path / "o" / "fit.json").read_text())
    assert abs(fit["inv_nu"] - 1.334833) < 1e-8 and abs(fit["ln_c"] - 2.0) < 1e-8
    obs = (tmp_path / "o" / "dimension_obs.csv").read_text().splitlines()
    assert obs[1] == "L,distance,mean,stderr" and len(obs) == 2 + 7
    assert all(r.split(",")[0] == r.split(",")[1] for r in obs[2:])  # synthetic: distance is L
    assert (tmp_path / "o" / "dimension_diagnostic.csv").exists()


def test_dimension_small_simulation(tmp_path):
    text = "".join(f"L = {L}\n" for L in (24, 34, 48, 68, 96))
    cfg = _write(tmp_path / "c.txt", text + "samples = 300\n")
    assert main(["dimension", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = (tmp_path / "o" / "dimension_obs.csv").read_text().splitlines()[2:]
    dist = [float(r.split(",")[1]) for r in rows]
    means = [float(r.split(",")[2]) for r in rows]
    assert np.all(np.diff(means) > 0)
    # the travelled distance tracks the triangle's height within a few lattice spacings
    for L, d in zip((24, 34, 48, 68, 96), dist):
        assert abs(d - L * math.sqrt(3) / 2) < 5


def test_oracle_command(tmp_path, capsys):
    cfg = _write(tmp_path / "c.txt", "k = 0\nsamples = 1000\n")
    assert main(["oracle", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    rec = json.loads(capsys.readouterr().out.splitlines()[-1])
    assert rec["pass"] and rec["tv_raw"] == 0.0 and rec["tv_erased"] == 0.0
    cfg = _write(tmp_path / "c2.txt", "k = 4\nsamples = 20000\nthreshold = 0.02\n")
    main(["oracle", "--config", cfg, "--out", str(tmp_path / "o2")])
    lines = (tmp_path / "o2" / "oracle_raw.csv").read_text().splitlines()
    assert lines[1] == "path_key,count,k"
    assert sum(int(l.split(",")[1]) for l in lines[2:]) == 16


def test_sle_curve_command(tmp_path):
    cfg = _write(tmp_path / "c.txt", "kappa = 6\nn_theta = 19\n")
    assert main(["sle-curve", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "sle_kappa_6.csv").read_text().splitlines()
    assert lines[1] == "theta,probability" and len(lines) == 21


def test_config_parsing():
    raw = parse_config_text("# comment\nshape = disc\nshape = square  # trailing\nL = 50\nr_interval = 0.4, 0.6\nraw = yes\n")
    cfg = config_from_mapping(raw)
    assert cfg.shapes == ("disc", "square") and cfg.L == (50.0,) and cfg.raw
    assert cfg.r_intervals == ((0.4, 0.6),)
    with pytest.raises(ConfigError):
        parse_config_text("shape disc")
    with pytest.raises(ConfigError):
        config_from_mapping({"colour": ["red"]})
    with pytest.raises(ConfigError):
        config_from_mapping({"raw": ["maybe"]})
    for bad in ({"samples": ["0"]}, {"shape": ["hexagon"]}, {"t_interval": ["0.0 0.5"]}, {"r_interval": ["0.6 0.4"]}):
        with pytest.raises(ConfigError):
            config_from_mapping(bad).validate()


def test_config_hash_ignores_workers_and_output():
    a = RunConfig(workers=1, out="x")
    b = RunConfig(workers=8, out="y")
    assert a.config_hash == b.config_hash
    assert a.config_hash != RunConfig(seed=2).config_hash
