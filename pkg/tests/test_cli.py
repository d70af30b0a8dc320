import json
import os

import numpy as np
import pytest

from umdlab import cli
from umdlab.torus import load_field
from umdlab.estimator import ratio_objective
from umdlab.symbols import DerivativeFamily


def run(args, tmp_path, sub="out"):
    out = tmp_path / sub
    code = cli.main(list(args) + ["--out", str(out)])
    return code, out


def load_report(out, command):
    with open(out / f"{command}_report.json") as fh:
        return json.load(fh)


def test_check_family_corollary(tmp_path):
    code, out = run(["check-family", "--beta", "1,1",
                     "--alpha", "2,0", "--alpha", "0,2"], tmp_path)
    assert code == 0
    rep = load_report(out, "check-family")["results"]
    assert rep["ordersMatch"]
    assert rep["paritySet"] == [1]
    assert rep["normalized"]["beta"] == [1, 1]
    assert rep["convex"]["feasible"]
    assert rep["convex"]["weights"] == ["1/2", "1/2"]


def test_check_family_no_parity(tmp_path):
    code, out = run(["check-family", "--beta", "2,0", "--alpha", "0,2"], tmp_path)
    assert code == 0
    rep = load_report(out, "check-family")["results"]
    assert rep["paritySet"] is None
    assert rep["normalized"] is None
    assert not rep["convex"]["feasible"]
    code2, out2 = run(["check-family", "--beta", "1", "--alpha", "1"], tmp_path, "o2")
    assert code2 == 0
    rep2 = load_report(out2, "check-family")["results"]
    assert rep2["paritySet"] is None


def test_check_family_parse_error(tmp_path):
    code, _ = run(["check-family", "--beta", "1,x", "--alpha", "2,0"], tmp_path)
    assert code == 3
    code2, _ = run(["check-family", "--beta", "1,1", "--alpha", "2,0,0"], tmp_path)
    assert code2 == 3


def test_estimate_reports_and_reproducibility(tmp_path):
    args = ["estimate", "--beta", "1,1", "--alpha", "2,0", "--alpha", "0,2",
            "--p", "2", "--grid", "16", "--starts", "3", "--max-iter", "120",
            "--seed", "4"]
    code, out = run(args, tmp_path, "a")
    assert code == 0
    rep = load_report(out, "estimate")
    assert rep["results"]["kLower"] == pytest.approx(0.5, abs=1e-6)
    assert rep["results"]["scan"]["bestKExact"] == "1/2"
    assert (out / "estimate_witness.field").exists()
    assert (out / "estimate_trace.csv").exists()
    assert (out / "estimate_convergence.svg").exists()
    # stored witness re-evaluates to the reported bound
    fam = DerivativeFamily((1, 1), ((2, 0), (0, 2)), 2.0)
    wit = load_field(out / "estimate_witness.field")
    assert ratio_objective(fam, wit) == pytest.approx(rep["results"]["kLower"], rel=1e-9)
    code2, out2 = run(args, tmp_path, "b")
    rep2 = load_report(out2, "estimate")
    rep.pop("meta"), rep2.pop("meta")
    assert json.dumps(rep, sort_keys=True) == json.dumps(rep2, sort_keys=True)


def test_estimate_warm_start(tmp_path):
    base = ["estimate", "--beta", "1,1", "--alpha", "2,0", "--alpha", "0,2",
            "--p", "4", "--starts", "2", "--max-iter", "60", "--seed", "0"]
    code, out = run(base + ["--grid", "16"], tmp_path, "w1")
    assert code == 0
    k16 = load_report(out, "estimate")["results"]["kLower"]
    code2, out2 = run(base + ["--grid", "32",
                              "--warm", str(out / "estimate_witness.field")],
                      tmp_path, "w2")
    assert code2 == 0
    k32 = load_report(out2, "estimate")["results"]["kLower"]
    assert k32 >= k16 - 1e-12


def test_witness_command(tmp_path):
    code, out = run(["witness", "--beta", "1,1", "--alpha", "2,0", "--alpha", "0,2",
                     "--p", "2", "--D", "15"], tmp_path)
    assert code == 0
    rep = load_report(out, "witness")["results"]
    assert rep["bMinus"] == [-1, 1]
    assert max(rep["eigenResiduals"].values()) <= 1e-12
    assert rep["witnessRatio"] == pytest.approx(0.5, rel=1e-9)
    ap = load_field(out / "witness_aplus.field")
    assert ap.grid.n == 2
    am = load_field(out / "witness_aminus.field")
    # a-minus is lifted along b_F = (-1, 1): frequency (1, -1) carries the
    # l = -1 coefficient of the square wave, +2i/pi
    assert abs(am.coefficient((1, -1)) - (2j / np.pi)) <= 1e-12


def test_pipeline_sigma_plus_is_half(tmp_path):
    code, out = run(["pipeline", "--beta", "1,1", "--alpha", "2,0", "--alpha", "0,2",
                     "--p", "2", "--r", "2", "--D", "15", "--sigma", "+,+"], tmp_path)
    assert code == 0
    rep = load_report(out, "pipeline")["results"]
    assert rep["kLowerBound"] == pytest.approx(0.5, abs=1e-12)
    assert rep["stackNormPlus"] == pytest.approx(rep["stackNormSigned"], rel=1e-12)


def test_pipeline_requires_parity(tmp_path):
    code, _ = run(["pipeline", "--beta", "2,0", "--alpha", "2,0"], tmp_path)
    assert code == 3


def test_martingale_command(tmp_path):
    code, out = run(["martingale", "--r", "6", "--p", "4", "--budget", "1500",
                     "--seed", "9"], tmp_path)
    assert code == 0
    rep = load_report(out, "martingale")["results"]
    assert rep["ceiling"] == pytest.approx(3.0)
    assert 1.0 <= rep["bestRatio"] <= 3.0 + 1e-9
    assert len(rep["tables"]) == 6


def test_transfer_lemma22_files(tmp_path):
    code, out = run(["transfer", "--lemma", "22", "--f", "cos", "--p", "2",
                     "--epsilons", "2^-2:2^-5"], tmp_path)
    assert code == 0
    rep = load_report(out, "transfer")["results"]
    assert rep["relErrors"][-1] <= 1e-3
    assert (out / "transfer_sweep.csv").exists()
    assert (out / "transfer_convergence.svg").exists()


def test_transfer_lemma23_and_pairing(tmp_path):
    code, out = run(["transfer", "--lemma", "23", "--profile", "cauchy",
                     "--p", "2", "--epsilons", "2^-3:2^-6"], tmp_path, "l23")
    assert code == 0
    rep = load_report(out, "transfer")["results"]
    assert rep["relErrors"][-1] <= 1e-2
    code2, out2 = run(["transfer", "--lemma", "pairing", "--beta", "1,1",
                       "--k", "1,1", "--l", "1,1",
                       "--epsilons", "2^-2:2^-6"], tmp_path, "pair")
    assert code2 == 0
    rep2 = load_report(out2, "transfer")["results"]
    assert abs(rep2["values"][-1] - 0.5) <= 1e-3
    code3, _ = run(["transfer", "--lemma", "23", "--profile", "nope"], tmp_path, "bad")
    assert code3 == 3


def test_transfer_dyadic(tmp_path):
    code, out = run(["transfer", "--lemma", "dyadic", "--beta", "1,1",
                     "--k", "2,1", "--block", "0",
                     "--epsilons", "2^-4:2^-8"], tmp_path)
    assert code == 0
    rep = load_report(out, "transfer")["results"]
    assert rep["pointwise_fit"]["r2"] >= 0.99


def test_pde_check_catalog_and_ceilings(tmp_path):
    for i, (u, p) in enumerate([("gauss-xy", 2.0), ("gauss", 2.0), ("bump", 4.0)]):
        code, out = run(["pde-check", "--u", u, "--p", str(p), "--tolerance", "0.02"],
                        tmp_path, f"pde{i}")
        assert code == 0
        rep = load_report(out, "pde-check")["results"]
        assert rep["ok"]
        assert rep["ratio"] <= rep["ceiling"] + 0.02
    # a separable sum cannot decay in both variables; the boundary gate
    # rejects it as an R^2 check, and with the gate lifted its mixed
    # derivative vanishes identically
    code, _ = run(["pde-check", "--u", "separable"], tmp_path, "pdes")
    assert code == 3
    code, out = run(["pde-check", "--u", "separable", "--allow-boundary"],
                    tmp_path, "pdesa")
    assert code == 0
    rep = load_report(out, "pde-check")["results"]
    assert rep["ratio"] <= 1e-10
    code, _ = run(["pde-check", "--u", "unknown"], tmp_path, "pdeu")
    assert code == 3
    # a box too small for the Gaussian tail must be rejected
    code2, _ = run(["pde-check", "--u", "gauss", "--box", "1.5"], tmp_path, "pdeb")
    assert code2 == 3


def test_config_file_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"beta": "1,1", "alpha": ["2,0", "0,2"], "p": 2.0}))
    out = tmp_path / "cfgout"
    code = cli.main(["check-family", "--config", str(cfg), "--out", str(out)])
    assert code == 0
    rep = load_report(out, "check-family")["results"]
    assert rep["paritySet"] == [1]


def test_epsilon_parsing():
    assert cli.parse_epsilons("2^-2:2^-4") == [0.25, 0.125, 0.0625]
    assert cli.parse_epsilons("0.3,0.2,0.1") == [0.3, 0.2, 0.1]
    with pytest.raises(cli.InputError):
        cli.parse_epsilons("0.1,0.2")
    with pytest.raises(cli.InputError):
        cli.parse_epsilons("2^-5:2^-2")
