import json
import math

import numpy as np
import pytest

from epistoch import analytic, bayes, figures
from epistoch.cli import EXIT_INVALID, EXIT_NUMERIC, EXIT_OK, run
from epistoch.distributions import GammaSpec
from epistoch.errors import NumericalError
from epistoch.io import (
    ParseError,
    RunConfig,
    load_run_config,
    parse_incidence_csv,
    read_csv,
    write_csv,
)
from epistoch.simulator import EpidemicParams, replicate, simulate

CONFIG = {"n": 300, "k": 2, "r0": 2.0, "latent": {"mean": 3.0, "cv": 0.5},
          "infectious": {"mean": 5.0, "cv": 0.5}, "seed": 17}


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# ---------------------------------------------------------------- incidence CSV

def test_parse_day_format(tmp_path):
    s = parse_incidence_csv(_write(tmp_path, "a.csv", "day,cases\n0,2\n1,3\n"))
    assert s.cumulative.tolist() == [2, 5]


def test_parse_date_format_gap_fill(tmp_path):
    s = parse_incidence_csv(_write(tmp_path, "a.csv", "date,cases\n2003-04-02,1\n2003-04-04,2\n"))
    assert s.cases.tolist() == [1, 0, 2]
    assert s.cumulative.tolist() == [1, 1, 3]
    assert str(s.start_date) == "2003-04-02"


@pytest.mark.parametrize("text, line", [
    ("day,cases\n0,-1\n", 2),
    ("day,cases\n0,1\n0,2\n", 3),
    ("day,cases\n0,1\n3,2\n2,1\n", 4),
    ("date,cases\n2003-04-02,1\n2003-04-01,1\n", 3),
    ("day,cases\n0,x\n", 2),
    ("when,cases\n0,1\n", 1),
])
def test_parse_errors_carry_line(tmp_path, text, line):
    with pytest.raises(ParseError) as err:
        parse_incidence_csv(_write(tmp_path, "bad.csv", text))
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_csv_round_trip(tmp_path):
    rows = [(0.1, 1, "a"), (1 / 3, 2, "b"), (math.pi * 1e-300, 3, "c"), (2.5e17, 4, "d")]
    path = write_csv(tmp_path / "x" / "t.csv", ["v", "i", "s"], rows)
    header, back = read_csv(path)
    assert header == ["v", "i", "s"]
    assert [r[0] for r in back] == [r[0] for r in rows]
    assert [r[2] for r in back] == ["a", "b", "c", "d"]


# ---------------------------------------------------------------- config

def test_config_validation(tmp_path, monkeypatch):
    monkeypatch.delenv("EPISTOCH_SEED", raising=False)
    cfg = load_run_config(_write(tmp_path, "c.json", json.dumps(CONFIG)), "simulate")
    assert cfg.seed == 17 and cfg.params.k == 2
    from epistoch.errors import ValidationError

    for bad in (dict(CONFIG, extra=1), {k: v for k, v in CONFIG.items() if k != "seed"},
                dict(CONFIG, n=1), dict(CONFIG, latent={"mean": 1, "shape": 2})):
        with pytest.raises(ValidationError):
            RunConfig.from_dict(bad, "simulate")
    with pytest.raises(ValidationError):
        RunConfig.from_dict(CONFIG, "replicate")  # reps missing


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv("EPISTOCH_SEED", "99")
    assert RunConfig.from_dict(CONFIG, "simulate").seed == 99


# ---------------------------------------------------------------- CLI

def _out(capsys):
    return capsys.readouterr().out.strip()


def test_cli_scalars(capsys, tmp_path):
    assert run(["solve", "outbreak-prob", "--r0", "3", "--tau-i", "1"]) == EXIT_OK
    assert _out(capsys) == "0.6666666667"
    out = tmp_path / "p.csv"
    assert run(["solve", "outbreak-prob", "--r0", "3", "--tau-i", "0.4", "--k", "3",
                "--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    assert rows[0][1] == analytic.outbreak_prob_k(3, 0.4, 3)


@pytest.mark.parametrize("argv, fn", [
    (["solve", "final-size", "--r0", "2.5"], lambda: analytic.final_size_fraction(2.5)),
    (["solve", "malthusian", "--r0", "2", "--mu-l", "7", "--mu-i", "7", "--tau-l", "0.4",
      "--tau-i", "0.4"],
     lambda: analytic.malthusian(analytic.GrowthParams(2, GammaSpec(7, 0.4), GammaSpec(7, 0.4)))),
    (["invert", "r0-from-growth", "--alpha", "0.053", "--mu-l", "7", "--mu-i", "7",
      "--tau-l", "0.2", "--tau-i", "0.2"],
     lambda: analytic.r0_from_growth(0.053, GammaSpec(7, 0.2), GammaSpec(7, 0.2))),
    (["invert", "r0-from-final-size", "--rho", "0.5"], lambda: analytic.r0_from_final_size(0.5)),
    (["vc", "--r0", "4", "--efficacy", "0.9"],
     lambda: analytic.critical_vaccination_coverage(4, 0.9).coverage),
])
def test_cli_matches_library_bitwise(argv, fn, tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert run(argv + ["--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    assert rows[0][1] == fn()
    assert float(_out(capsys).splitlines()[0]) == pytest.approx(fn(), rel=1e-9)


def test_cli_vc_infeasible(capsys):
    assert run(["vc", "--r0", "4", "--efficacy", "0.5"]) == EXIT_OK
    err = capsys.readouterr().err
    assert "unattainable" in err


def test_cli_exit_codes(capsys, monkeypatch):
    assert run(["solve", "final-size", "--r0", "-1"]) == EXIT_INVALID
    assert run(["invert", "r0-from-final-size", "--rho", "1.2"]) == EXIT_INVALID
    assert run(["solve", "final-size"]) == EXIT_INVALID  # argparse usage error

    def boom(*_):
        raise NumericalError("no convergence")

    monkeypatch.setattr(analytic, "final_size_fraction", boom)
    assert run(["solve", "final-size", "--r0", "2"]) == EXIT_NUMERIC


def test_cli_simulate(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("EPISTOCH_SEED", raising=False)
    cfg = _write(tmp_path, "c.json", json.dumps(CONFIG))
    log, traj = tmp_path / "log.csv", tmp_path / "traj.csv"
    assert run(["simulate", "--config", str(cfg), "--out", str(log),
                "--trajectory", str(traj)]) == EXIT_OK
    ref = simulate(EpidemicParams(300, 2, 2.0, GammaSpec(3, 0.5), GammaSpec(5, 0.5)), 17)
    _, rows = read_csv(log)
    assert [r[0] for r in rows] == ref.times.tolist()
    assert [r[1] for r in rows] == [name for _, name, _ in ref.events()]
    _, trows = read_csv(traj)
    assert all(sum(r[1:]) == 300 for r in trows)
    assert f"final_size    {ref.final_size}" in _out(capsys)


def test_cli_simulate_env_seed(tmp_path, capsys, monkeypatch):
    cfg = _write(tmp_path, "c.json", json.dumps(CONFIG))
    monkeypatch.setenv("EPISTOCH_SEED", "5")
    assert run(["simulate", "--config", str(cfg)]) == EXIT_OK
    assert "seed          5" in _out(capsys)


def test_cli_simulate_bad_config(tmp_path, capsys):
    cfg = _write(tmp_path, "c.json", json.dumps(dict(CONFIG, bogus=True)))
    assert run(["simulate", "--config", str(cfg)]) == EXIT_INVALID
    assert run(["simulate", "--config", str(tmp_path / "missing.json")]) == EXIT_INVALID


def test_cli_replicate(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("EPISTOCH_SEED", raising=False)
    cfg = _write(tmp_path, "c.json", json.dumps(dict(CONFIG, reps=40, workers=2)))
    out = tmp_path / "reps.csv"
    assert run(["replicate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    ref = replicate(EpidemicParams(300, 2, 2.0, GammaSpec(3, 0.5), GammaSpec(5, 0.5)), 40, 17)
    _, rows = read_csv(out)
    assert [r[2] for r in rows] == ref.final_sizes.tolist()
    assert sum(r[3] for r in rows) == ref.major_count


def test_cli_estimate(tmp_path, capsys):
    csv = _write(tmp_path, "inc.csv", "day,cases\n0,1\n1,1\n2,2\n3,4\n4,8\n")
    out = tmp_path / "g.csv"
    assert run(["estimate", "growth", "--csv", str(csv), "--window", "0:4", "--window", "1:3",
                "--out", str(out)]) == EXIT_OK
    _, rows = read_csv(out)
    assert rows[0] == ["0:4", math.log(16) / 4]
    assert rows[-1][0] == "mean"
    assert run(["estimate", "growth", "--csv", str(csv), "--window", "4"]) == EXIT_INVALID


def test_cli_r0_table(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert run(["r0-table", "--alpha", "0.053", "--mu-l", "3:11", "--mu-i", "3:11",
                "--tau-l", "0:0.5714285714285714", "--tau-i", "0:0.5714285714285714",
                "--out", str(out)]) == EXIT_OK
    header, rows = read_csv(out)
    assert header[-2:] == ["r0", "midpoint"] and len(rows) == 17
    assert rows[-1][-1] == 1.0 and abs(rows[-1][4] - 1.747) < 1e-3
    assert "(midpoint)" in _out(capsys)


def test_cli_posterior(tmp_path, capsys):
    out = tmp_path / "post.csv"
    assert run(["posterior", "--prior", "exp:0.5", "--rho", "0.5", "--out", str(out)]) == EXIT_OK
    grid = bayes.tau_posterior(bayes.ExponentialPrior(0.5), 0.5)
    assert f"posterior_mean  {bayes.posterior_mean(grid):.10g}" in _out(capsys)
    _, rows = read_csv(out)
    assert np.array_equal([r[3] for r in rows], grid.posterior_density)
    assert run(["posterior", "--prior", "weibull:1", "--rho", "0.5"]) == EXIT_INVALID


def test_cli_figures(tmp_path, capsys):
    assert run(["figures", "--which", "fig1,fig2", "--out", str(tmp_path),
                "--r0", "3"]) == EXIT_OK
    _, rows = read_csv(tmp_path / "fig1.csv")
    row = next(r for r in rows if r[1] == 1.0)
    assert row[2] == pytest.approx(2 / 3, abs=1e-15)
    _, rows = read_csv(tmp_path / "fig2.csv")
    assert [0.5, 1.0, 0.5] in rows
    assert run(["figures", "--which", "fig9", "--out", str(tmp_path)]) == EXIT_INVALID


def test_fig3_tau_i_sweep_monotone():
    _, rows = figures.fig3()
    alphas = [a for name, _, a in rows if name == "tau_i"]
    assert len(alphas) == 301
    assert all(b <= a for a, b in zip(alphas, alphas[1:]))
