import json

import pytest

from critmin import io
from critmin.bubble import sobolev_constant
from critmin.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize(
    "args,word",
    [
        (("--n", "4", "--k", "1", "--beta", "2"), "Supercritical; kn/q=1; (k+1)(n-2)=4; weighted bubble rate PowerLaw exponent 0.5"),
        (("--n", "3", "--k", "2", "--beta", "1"), "Critical"),
        (("--n", "3", "--k", "4", "--beta", "0"), "Subcritical"),
        (("--n", "4", "--k", "1", "--beta", "4"), "LogCritical exponent 1.5 times |log eps|"),
    ],
)
def test_regime(capsys, args, word):
    code, out, _ = run(capsys, "regime", *args)
    assert code == 0 and word in out


def test_regime_critical_is_not_supercritical(capsys):
    _, out, _ = run(capsys, "regime", "--n", "3", "--k", "2", "--beta", "1")
    assert out.startswith("Critical;")


@pytest.mark.parametrize(
    "args,word",
    [
        (("--n", "3", "--k", "7"), "k > q"),
        (("--n", "2",), "n"),
        (("--beta", "-1",), "beta"),
        (("--M", "4",), "M"),
        (("--gamma", "0.5",), "grading"),
    ],
)
def test_invalid_config_exit_2(capsys, tmp_path, args, word):
    code, _, err = run(capsys, "regime", "--out-dir", str(tmp_path), *args)
    assert code == 2 and word in err


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nn = 3\nk = 2   # inline\nbeta = 1\n")
    code, out, _ = run(capsys, "regime", "--config", str(cfg))
    assert code == 0 and out.startswith("Critical")
    code, out, _ = run(capsys, "regime", "--config", str(cfg), "--beta", "0")
    assert out.startswith("Subcritical")


def test_config_file_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("dimension = 3\n")
    code, _, err = run(capsys, "regime", "--config", str(cfg))
    assert code == 2 and "dimension" in err


def test_missing_config_file(capsys, tmp_path):
    code, _, err = run(capsys, "regime", "--config", str(tmp_path / "nope.cfg"))
    assert code == 2


def test_sweep_refuses_non_supercritical(capsys, tmp_path):
    code, _, err = run(capsys, "bubble-sweep", "--n", "4", "--k", "1", "--beta", "1", "--out-dir", str(tmp_path))
    assert code == 2 and "kn/q" in err
    assert not list(tmp_path.iterdir())


def test_sweep_powerlaw(capsys, tmp_path):
    code, out, _ = run(capsys, "bubble-sweep", "--n", "4", "--k", "1", "--beta", "2", "--out-dir", str(tmp_path), "--svg")
    assert code == 0 and "PASS" in out
    csv = tmp_path / "sweep_n4_beta2_k1.csv"
    lines = csv.read_text().splitlines()
    assert lines[0].startswith("# n=4 beta=2.0 k=1.0 R=1.0")
    assert lines[1] == "eps,grad_sq,lq_q,weighted,total_normalized"
    assert len(lines) == 15
    fit = json.loads((tmp_path / "sweep_n4_beta2_k1_fit.json").read_text())
    assert 0.45 <= fit["fit"]["slope"] <= 0.55
    assert fit["provenance"]["beta"] == "2.0"
    assert (tmp_path / "sweep_n4_beta2_k1.svg").read_text().startswith("<svg")
    assert (tmp_path / "sweep_n4_beta2_k1_weighted.txt").exists()


def test_sweep_saturated_json(capsys, tmp_path):
    code, out, _ = run(capsys, "bubble-sweep", "--n", "4", "--k", "1", "--beta", "6", "--format", "json", "--out-dir", str(tmp_path))
    assert code == 0
    rec = json.loads((tmp_path / "sweep_n4_beta6_k1.json").read_text())
    assert 1.45 <= rec["fit"]["slope"] <= 1.55 and len(rec["rows"]) == 13


def test_sweep_log_critical_ratio(capsys, tmp_path):
    code, out, _ = run(capsys, "bubble-sweep", "--n", "4", "--k", "1", "--beta", "4", "--log-correction", "--out-dir", str(tmp_path))
    fit = json.loads((tmp_path / "sweep_n4_beta4_k1_fit.json").read_text())
    lo, hi = fit["log_ratio"]["min"], fit["log_ratio"]["max"]
    assert 0 < lo <= hi < float("inf")
    assert code == 0


def test_sweep_failed_check_exit_4(capsys, tmp_path):
    code, out, _ = run(capsys, "bubble-sweep", "--n", "4", "--k", "1", "--beta", "2", "--slope-tol", "1e-6", "--out-dir", str(tmp_path))
    assert code == 4 and "FAIL" in out


def test_sweep_parallel_matches_serial(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run(capsys, "bubble-sweep", "--n", "4", "--k", "1", "--beta", "6", "--out-dir", str(a))
    run(capsys, "bubble-sweep", "--n", "4", "--k", "1", "--beta", "6", "--out-dir", str(b), "--jobs", "2")
    name = "sweep_n4_beta6_k1.csv"
    assert (a / name).read_bytes() == (b / name).read_bytes()


def test_minimize_outputs(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("CRITMIN_OUT", str(tmp_path))
    code, out, _ = run(capsys, "minimize", "--n", "3", "--k", "4", "--beta", "0", "--M", "200", "--gamma", "2")
    assert code == 0
    stem = tmp_path / "minimize_n3_beta0_k4_M200_g2"
    rec = json.loads(stem.with_suffix(".json").read_text())
    for key in ("params", "grid", "S_estimate", "mu_estimate", "converged", "iterations", "half_mass_radius", "sup_value", "pohozaev"):
        assert key in rec
    assert rec["converged"] and rec["gap"] > 0
    assert rec["S_oracle"] == pytest.approx(sobolev_constant(3).S)
    assert rec["params"] == {"n": 3, "beta": 0.0, "k": 4.0, "R": 1.0}
    hist = (tmp_path / "minimize_n3_beta0_k4_M200_g2_history.csv").read_text().splitlines()
    assert hist[0].startswith("# n=3") and hist[1] == "iter,energy"
    assert len(hist) == rec["iterations"] + 3
    u, p = io.read_field(tmp_path / "minimize_n3_beta0_k4_M200_g2_field.txt")
    assert p.k == 4.0 and u.grid.M == 200
    row = stem.with_suffix(".csv").read_text().splitlines()
    assert row[0].startswith("# n=3") and row[1].startswith("n,beta,k,R,M,gamma,S_estimate")


def test_outputs_byte_identical(capsys, tmp_path):
    args = ["minimize", "--n", "4", "--k", "1", "--beta", "2", "--M", "100", "--svg"]
    run(capsys, *args, "--out-dir", str(tmp_path / "a"))
    run(capsys, *args, "--out-dir", str(tmp_path / "b"))
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(names) == 5
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_map(capsys, tmp_path):
    code, out, _ = run(
        capsys, "map", "--n", "3", "--M", "100", "--beta-min", "0", "--beta-max", "2", "--beta-count", "3",
        "--k-min", "0", "--k-max", "2", "--k-count", "2", "--out-dir", str(tmp_path), "--jobs", "2",
    )
    assert code == 0
    cols, rows = io.read_csv(tmp_path / "map_n3_M100_g2.csv")
    assert cols == ["beta", "k", "regime", "S_estimate", "S_oracle", "gap"]
    assert [(float(r["beta"]), float(r["k"])) for r in rows] == [(b, k) for b in (0, 1, 2) for k in (0, 2)]
    regimes = {(float(r["beta"]), float(r["k"])): r["regime"] for r in rows}
    assert regimes[(1.0, 2.0)] == "Critical" and regimes[(0.0, 2.0)] == "Subcritical" and regimes[(2.0, 0.0)] == "Supercritical"
    weightless = [r for r in rows if float(r["beta"]) == 0 and float(r["k"]) == 0][0]
    assert float(weightless["S_oracle"]) == pytest.approx(2 * sobolev_constant(3).S)


def test_map_rejects_k_above_q(capsys, tmp_path):
    code, _, err = run(capsys, "map", "--n", "3", "--k-max", "9", "--out-dir", str(tmp_path))
    assert code == 2 and "k" in err


def test_pohozaev_on_stored_critical_field(capsys, tmp_path):
    run(capsys, "minimize", "--n", "3", "--k", "2", "--beta", "1", "--M", "100", "--out-dir", str(tmp_path))
    field = tmp_path / "minimize_n3_beta1_k2_M100_g2_field.txt"
    code, out, _ = run(capsys, "pohozaev", "--field", str(field), "--out-dir", str(tmp_path))
    assert code == 0 and "interior=0.0" in out
    rec = json.loads((tmp_path / "pohozaev_n3_beta1_k2.json").read_text())
    assert rec["pohozaev"]["interior"] == 0.0 and rec["pohozaev"]["total"] > 0


def test_pohozaev_bad_field_file(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n1 0\n")
    code, _, err = run(capsys, "pohozaev", "--field", str(bad), "--out-dir", str(tmp_path))
    assert code == 2


def test_numeric_failure_exit_3(capsys, tmp_path, monkeypatch):
    import critmin.cli as cli
    from critmin.solver import SolverFailure

    def boom(*a, **k):
        raise SolverFailure("energy increased", [1.0])

    monkeypatch.setattr(cli.sv, "minimize", boom)
    code, _, err = run(capsys, "minimize", "--M", "16", "--out-dir", str(tmp_path))
    assert code == 3 and "numerical failure" in err


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0 and out.count("PASS") == 9
