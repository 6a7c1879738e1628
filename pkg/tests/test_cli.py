"""Command-line interface: subcommands, formats, exit codes, round-trips."""

import json
import math

import numpy as np
import pytest

from rfridge.cli import (
    COLUMNS,
    format_value,
    main,
    new_record,
    read_records,
    records_equal,
    write_records,
)

RELU_MU_STAR_SQ = (math.pi - 2.0) / (4.0 * math.pi)
RELU_ZETA_SQ = math.pi / (math.pi - 2.0)


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


SIM_ARGS = [
    "--d", "40", "--n", "80", "--N", "50", "--lambda", "1e-3",
    "--activation", "relu", "--target", "linear", "--tau-sq", "0.1",
    "--trials", "3", "--seed", "1", "--n-test", "1200",
]


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------

def test_stats_relu(capsys):
    code, out, _ = run_cli(["stats", "--activation", "relu"], capsys)
    assert code == 0
    rec = read_records(out, from_text=True)[0]
    assert rec["command"] == "stats"
    assert rec["mu0"] == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-14)
    assert rec["mu1"] == 0.5
    assert rec["mu_star_sq"] == pytest.approx(RELU_MU_STAR_SQ, rel=1e-14)
    assert rec["zeta_sq"] == pytest.approx(RELU_ZETA_SQ, rel=1e-12)
    assert rec["converged"] == 1
    assert math.isnan(rec["quadrature_gap"])


def test_stats_identity_degenerate(capsys):
    code, _, err = run_cli(["stats", "--activation", "identity"], capsys)
    assert code == 2
    assert "DegenerateActivation" in err


def test_stats_shifted_relu(capsys):
    code, out, _ = run_cli(["stats", "--activation", "shifted_relu:0.7"], capsys)
    assert code == 0
    rec = read_records(out, from_text=True)[0]
    assert rec["activation"] == "shifted_relu:0.7"
    c = 0.7
    assert rec["mu1"] == pytest.approx(0.5 * math.erfc(c / math.sqrt(2.0)), rel=1e-12)


def test_stats_custom_expression(tmp_path, capsys):
    expr = tmp_path / "act.txt"
    expr.write_text("np.tanh(u)\n")
    code, out, _ = run_cli(
        ["stats", "--activation", "custom", "--expr-file", str(expr), "--order", "128"],
        capsys,
    )
    assert code == 0
    rec = read_records(out, from_text=True)[0]
    assert rec["order"] == 128
    assert 0.60 < rec["mu1"] < 0.61
    assert rec["quadrature_gap"] < 1e-12
    assert rec["converged"] == 1


def test_stats_custom_kink_needs_breakpoints(tmp_path, capsys):
    expr = tmp_path / "act.txt"
    expr.write_text("np.abs(u)\n")
    code, _, err = run_cli(
        ["stats", "--activation", "custom", "--expr-file", str(expr)], capsys
    )
    assert code == 3
    assert "doubling" in err

    # with the kink declared, quadrature succeeds and then degeneracy
    # (mu1 = 0 for an even function) is detected instead
    code2, _, err2 = run_cli(
        [
            "stats", "--activation", "custom", "--expr-file", str(expr),
            "--breakpoints", "0",
        ],
        capsys,
    )
    assert code2 == 2
    assert "DegenerateActivation" in err2


def test_stats_unknown_activation(capsys):
    code, _, _ = run_cli(["stats", "--activation", "selu"], capsys)
    assert code == 2


# ---------------------------------------------------------------------------
# theory
# ---------------------------------------------------------------------------

def test_theory_ridgeless_sweep_marks_threshold(capsys):
    code, out, _ = run_cli(
        [
            "theory", "--variant", "ridgeless", "--zeta-sq", "2.7519",
            "--psi2", "3", "--rho", "2", "--sweep", "psi1", "--grid", "1,2,3,4",
        ],
        capsys,
    )
    assert code == 0
    recs = read_records(out, from_text=True)
    assert len(recs) == 4
    infinite = [r for r in recs if math.isinf(r["theory_bias_B"])]
    assert len(infinite) == 1
    assert infinite[0]["psi1"] == 3
    for r in recs:
        if not math.isinf(r["theory_bias_B"]):
            assert r["theory_bias_B"] > 0.0
            assert r["theory_risk_R"] > 0.0


def test_theory_general_agrees_with_wide_variant(capsys):
    sweep = ["--sweep", "lambda", "--min", "0.05", "--max", "2.0",
             "--points", "5", "--spacing", "log"]
    code_g, out_g, _ = run_cli(
        ["theory", "--variant", "general", "--zeta-sq", str(RELU_ZETA_SQ),
         "--psi1", "1e6", "--psi2", "3", "--rho", "2"] + sweep,
        capsys,
    )
    code_w, out_w, _ = run_cli(
        ["theory", "--variant", "wide", "--zeta-sq", str(RELU_ZETA_SQ),
         "--psi2", "3", "--rho", "2"] + sweep,
        capsys,
    )
    assert code_g == 0 and code_w == 0
    general = read_records(out_g, from_text=True)
    wide = read_records(out_w, from_text=True)
    assert len(general) == len(wide) == 5
    for g, w in zip(general, wide):
        assert g["lambda_bar"] == pytest.approx(w["lambda_bar"], rel=1e-12)
        assert g["theory_bias_B"] == pytest.approx(w["theory_bias_B"], rel=1e-3)
        assert g["theory_var_V"] == pytest.approx(w["theory_var_V"], rel=1e-3)


def test_theory_finite_mode_penalty_conversion(capsys):
    code, out, _ = run_cli(
        ["theory", "--variant", "general", "--activation", "relu", "--d", "200",
         "--n", "600", "--N", "400", "--lambda", "1e-3", "--rho", "2"],
        capsys,
    )
    assert code == 0
    rec = read_records(out, from_text=True)[0]
    assert rec["psi1"] == 2
    assert rec["psi2"] == 3
    assert rec["lambda_bar"] == pytest.approx(1e-3 / RELU_MU_STAR_SQ, rel=1e-12)
    assert rec["zeta_sq"] == pytest.approx(RELU_ZETA_SQ, rel=1e-12)


def test_theory_with_target_powers_emits_curves(capsys):
    # 50-digit reference for this exact configuration
    code, out, _ = run_cli(
        ["theory", "--activation", "relu", "--d", "200", "--n", "600",
         "--N", "1200", "--lambda", "1e-3", "--f1-sq", "1", "--tau-sq", "0.5"],
        capsys,
    )
    assert code == 0
    rec = read_records(out, from_text=True)[0]
    assert rec["rho"] == 2
    assert rec["theory_test_error"] == pytest.approx(0.73072692301788929, rel=1e-9)
    assert rec["theory_train_error"] == pytest.approx(
        1.5 * 0.018580725627344777, rel=1e-9
    )
    assert rec["theory_norm_msq"] == pytest.approx(
        1.5 * 0.25864195978251087, rel=1e-9
    )


def test_theory_without_rho_reports_factors_only(capsys):
    code, out, _ = run_cli(
        ["theory", "--variant", "general", "--zeta-sq", "1.0", "--psi1", "2",
         "--psi2", "3", "--lambda-bar", "0.1"],
        capsys,
    )
    assert code == 0
    rec = read_records(out, from_text=True)[0]
    assert rec["theory_bias_B"] == pytest.approx(0.72189188183649126, rel=1e-10)
    assert math.isnan(rec["theory_risk_R"])


def test_theory_rejects_mixed_parametrizations(capsys):
    code, _, err = run_cli(
        ["theory", "--variant", "general", "--activation", "relu", "--d", "200",
         "--n", "600", "--N", "400", "--lambda", "1e-3", "--psi1", "2",
         "--rho", "2"],
        capsys,
    )
    assert code == 2
    assert "not both" in err


# ---------------------------------------------------------------------------
# simulate / compare
# ---------------------------------------------------------------------------

def test_simulate_realized_ratios_and_stats(capsys):
    code, out, _ = run_cli(["simulate"] + SIM_ARGS + ["--threads", "2"], capsys)
    assert code == 0
    rec = read_records(out, from_text=True)[0]
    assert rec["command"] == "simulate"
    assert rec["model"] == "random_features"
    assert rec["psi1"] == 1.25
    assert rec["psi2"] == 2
    assert rec["trials"] == 3
    assert rec["lambda_bar"] == pytest.approx(1e-3 / RELU_MU_STAR_SQ, rel=1e-12)
    assert rec["sim_test_error_mean"] > 0.0
    assert rec["sim_test_error_sem"] > 0.0
    assert rec["sim_norm_msq_mean"] == pytest.approx(
        rec["mu_star_sq"] * rec["sim_norm_sq_mean"], rel=1e-12
    )
    # theory columns stay empty in pure simulation output
    assert math.isnan(rec["theory_bias_B"])


def test_simulate_thread_count_invariance(capsys):
    _, out1, _ = run_cli(["simulate"] + SIM_ARGS + ["--threads", "1"], capsys)
    _, out8, _ = run_cli(["simulate"] + SIM_ARGS + ["--threads", "8"], capsys)
    assert out1 == out8


def test_simulate_env_thread_default(capsys, monkeypatch):
    monkeypatch.setenv("RFRIDGE_THREADS", "2")
    code, out, _ = run_cli(["simulate"] + SIM_ARGS, capsys)
    assert code == 0
    _, out1, _ = run_cli(["simulate"] + SIM_ARGS + ["--threads", "1"], capsys)
    assert out == out1


def test_simulate_sweep_rounds_feature_counts(capsys):
    code, out, _ = run_cli(
        ["simulate", "--d", "40", "--n", "80", "--lambda", "1e-3",
         "--activation", "relu", "--target", "linear", "--trials", "2",
         "--seed", "0", "--n-test", "1000", "--threads", "1",
         "--sweep", "psi1", "--grid", "0.5,1"],
        capsys,
    )
    assert code == 0
    recs = read_records(out, from_text=True)
    assert [r["N"] for r in recs] == [20, 40]
    assert [r["psi1"] for r in recs] == [0.5, 1]


def test_simulate_jsonl_format(capsys):
    code, out, _ = run_cli(
        ["simulate"] + SIM_ARGS + ["--threads", "1", "--format", "jsonl"], capsys
    )
    assert code == 0
    lines = [ln for ln in out.splitlines() if ln.strip()]
    assert len(lines) == 1
    obj = json.loads(lines[0])
    assert obj["command"] == "simulate"
    assert obj["d"] == 40
    assert isinstance(obj["sim_test_error_mean"], float)

    _, out_csv, _ = run_cli(["simulate"] + SIM_ARGS + ["--threads", "1"], capsys)
    rec = read_records(out_csv, from_text=True)[0]
    assert obj["sim_test_error_mean"] == pytest.approx(
        rec["sim_test_error_mean"], rel=1e-15
    )


def test_simulate_gaussian_covariates_model(capsys):
    code, out, _ = run_cli(
        ["simulate"] + SIM_ARGS + ["--threads", "1", "--model", "gaussian_covariates"],
        capsys,
    )
    assert code == 0
    rec = read_records(out, from_text=True)[0]
    assert rec["model"] == "gaussian_covariates"
    assert rec["fstar_sq"] == 0
    assert rec["sim_test_error_mean"] > 0.0


def test_simulate_rejects_asymptotic_flags(capsys):
    code, _, err = run_cli(
        ["simulate", "--psi1", "2", "--psi2", "3", "--lambda-bar", "0.1",
         "--activation", "relu", "--target", "linear", "--trials", "2"],
        capsys,
    )
    assert code == 2

    code2, _, err2 = run_cli(
        ["simulate"] + SIM_ARGS + ["--sweep", "rho", "--grid", "1,2"], capsys
    )
    assert code2 == 2
    assert "rho" in err2


def test_sweep_spec_validation(capsys):
    base = ["theory", "--variant", "ridgeless", "--zeta-sq", "1", "--psi2", "3",
            "--rho", "1", "--sweep", "psi1"]
    code, _, _ = run_cli(base + ["--grid", "1,2", "--min", "1"], capsys)
    assert code == 2
    code, _, _ = run_cli(base + ["--min", "2", "--max", "1", "--points", "3"], capsys)
    assert code == 2
    code, _, _ = run_cli(
        base + ["--min", "0", "--max", "1", "--points", "3", "--spacing", "log"],
        capsys,
    )
    assert code == 2
    code, _, _ = run_cli(base + ["--grid", "1,1,2"], capsys)
    assert code == 2


def test_compare_z_scores(capsys):
    code, out, _ = run_cli(["compare"] + SIM_ARGS + ["--threads", "2"], capsys)
    assert code == 0
    rec = read_records(out, from_text=True)[0]
    assert rec["command"] == "compare"
    assert rec["variant"] == "general"
    assert math.isfinite(rec["z_test_error"])
    assert math.isfinite(rec["z_train_error"])
    assert math.isfinite(rec["z_norm_msq"])
    assert rec["theory_test_error"] > 0.0
    gap = rec["sim_test_error_mean"] - rec["theory_test_error"]
    assert rec["z_test_error"] == pytest.approx(
        gap / rec["sim_test_error_sem"], rel=1e-12
    )


def test_compare_ridgeless_route(capsys):
    args = [a for a in SIM_ARGS]
    args[args.index("--lambda") + 1] = "0"
    code, out, _ = run_cli(["compare"] + args + ["--threads", "1"], capsys)
    assert code == 0
    rec = read_records(out, from_text=True)[0]
    assert rec["variant"] == "ridgeless"
    assert math.isfinite(rec["theory_bias_B"])
    assert math.isfinite(rec["z_test_error"])
    # no training theory at the ridgeless endpoint
    assert math.isnan(rec["theory_train_error"])
    assert math.isnan(rec["z_train_error"])


# ---------------------------------------------------------------------------
# phase
# ---------------------------------------------------------------------------

def test_phase_verdicts(capsys):
    code, out, _ = run_cli(
        ["phase", "--activation", "relu", "--psi2", "2", "--sweep", "rho",
         "--grid", "1.3,5.5"],
        capsys,
    )
    assert code == 0
    recs = read_records(out, from_text=True)
    assert recs[0]["verdict"] == "interior lambda_star"
    assert recs[0]["lambda_star"] > 0.0
    assert recs[1]["verdict"] == "optimal lambda_bar = 0"
    assert recs[1]["lambda_star"] < 0.0
    for r in recs:
        assert r["rho_star"] == pytest.approx(RELU_ZETA_SQ, rel=1e-10)
        assert r["zeta_star_sq"] == pytest.approx(r["rho"], rel=1e-10)


def test_phase_single_point_with_explicit_zeta(capsys):
    code, out, _ = run_cli(
        ["phase", "--zeta-sq", "1.5", "--psi2", "4", "--rho", "0.8"], capsys
    )
    assert code == 0
    rec = read_records(out, from_text=True)[0]
    assert rec["zeta_sq"] == 1.5
    assert rec["verdict"] == "interior lambda_star"


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

def test_out_file_round_trip(tmp_path, capsys):
    out_path = tmp_path / "run.csv"
    code, stdout, _ = run_cli(
        ["simulate"] + SIM_ARGS + ["--threads", "1", "--out", str(out_path)], capsys
    )
    assert code == 0
    assert stdout == ""
    from_file = read_records(str(out_path))

    _, inline, _ = run_cli(["simulate"] + SIM_ARGS + ["--threads", "1"], capsys)
    from_text = read_records(inline, from_text=True)
    assert len(from_file) == len(from_text) == 1
    assert records_equal(from_file[0], from_text[0])

    # records -> csv -> records is the identity under records_equal
    rewritten = tmp_path / "again.csv"
    write_records(from_file, COLUMNS, "csv", str(rewritten))
    again = read_records(str(rewritten))
    assert records_equal(from_file[0], again[0])


def test_records_equal_treats_nan_as_equal():
    a = new_record(COLUMNS, command="x")
    b = new_record(COLUMNS, command="x")
    assert records_equal(a, b)
    a["psi1"] = 1.0
    assert not records_equal(a, b)


def test_format_value_conventions():
    assert format_value(True) == "1"
    assert format_value(False) == "0"
    assert format_value(40) == "40"
    assert format_value("relu") == "relu"
    assert float(format_value(math.pi)) == math.pi
    assert format_value(float("inf")) == "inf"
