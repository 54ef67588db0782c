import math

import numpy as np
import pytest

from critlab import reporting
from critlab.errors import InvalidArgumentError
from critlab.limit_periodic import DriftField, b_antiderivative, translated_eval
from critlab.verification import (
    IDENTITIES,
    CellPerturbation,
    ce2_positive_pair,
    find_K_and_verify_lower_bound,
    run_ce1,
    run_ce2,
    verify_kn_lower,
    verify_kn_upper,
    verify_limit_averages,
)
from oracles import B_quad


@pytest.fixture(scope="module")
def ce1():
    return run_ce1()


@pytest.fixture(scope="module")
def ce2():
    return run_ce2()


def test_kn_examples():
    assert b_antiderivative(1.0) - b_antiderivative(0.0) == pytest.approx(0.375)
    assert b_antiderivative(3.0) - b_antiderivative(2.0) == pytest.approx(0.75)
    assert b_antiderivative(4.0) - b_antiderivative(3.0) == pytest.approx(-0.65625)
    assert b_antiderivative(6.0) - b_antiderivative(3.0) == pytest.approx(-0.84375)


@pytest.mark.parametrize("check", [verify_kn_lower, verify_kn_upper])
def test_kn_pass(check):
    rec = check(8)
    assert rec.passed and rec.worst_margin >= -1e-10
    assert rec.passed == (rec.worst_margin >= -rec.tolerance)


def test_kn_pairs_against_quadrature():
    # the closed form agrees with QUADPACK on the small windows
    for n in range(0, 4):
        for k in range(n + 1):
            lo, hi = 3.0**n - 3.0**k, 3.0**n
            assert b_antiderivative(hi) - b_antiderivative(lo) == pytest.approx(B_quad(hi) - B_quad(lo), abs=1e-10)


def test_kn_bounds():
    with pytest.raises(InvalidArgumentError):
        verify_kn_lower(10)
    with pytest.raises(InvalidArgumentError):
        verify_kn_upper(-1)


def test_negative_controls_detected():
    assert not verify_kn_lower(8, CellPerturbation(-0.5, 0)).passed
    assert not verify_kn_upper(8, CellPerturbation(1.0, 3)).passed
    rec = verify_kn_lower(8, CellPerturbation(-0.5, 0))
    assert rec.worst_location == {"n": 0, "k": 0}
    assert rec.worst_margin == pytest.approx(-0.125)


def test_perturbation_closed_form():
    f = CellPerturbation(0.5, 2)
    x = np.array([-1.0, 1.0, 2.5, 4.0])
    base = DriftField().antiderivative(x)
    assert np.allclose(f.antiderivative(x) - base, [0.0, 0.0, 0.25, 0.5])


def test_global_lower_bound():
    K, rec = find_K_and_verify_lower_bound(3**8, 0.01)
    assert K > 0 and rec.passed and rec.details["violations"] == 0
    assert rec.details["K_source"] == "implementation-derived"
    assert rec.details["margin_at_1"] == pytest.approx(0.375)
    # K is sharp: a slightly larger constant breaks the inequality somewhere
    x = np.asarray(rec.worst_location, dtype=float)
    g = abs(x) / (math.log(abs(x), 3) + 1) ** 2
    assert b_antiderivative(float(x)) < 1.001 * K * (g - 1)


def test_global_lower_bound_checks():
    with pytest.raises(InvalidArgumentError):
        find_K_and_verify_lower_bound(2.0, 0.01)
    with pytest.raises(InvalidArgumentError):
        find_K_and_verify_lower_bound(100.0, 0.0)


def test_limit_averages():
    rec = verify_limit_averages(4, 1e-6)
    assert rec.passed
    rows = rec.details["integrals"]
    for row in rows:
        assert row["int_negative"] >= -1e-5 and row["int_positive"] <= 1e-5
        assert row["int_negative"] == pytest.approx(row["closed_negative"], abs=1e-6)


def test_limit_average_k0_against_translation_oracle():
    rec = verify_limit_averages(0, 1e-8)
    val = rec.details["integrals"][0]["int_positive"]
    # integral of b(. + 3**n) over [0, 1] is 3/8 sigma(3**n + 1/2): approaches the limit at the tail rate
    oracle = [0.375 * translated_eval(0.5, n) for n in (20, 30, 40)]
    gaps = [abs(val - o) for o in oracle]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 0.375 * 0.026


def test_limit_average_negative_control():
    rec = verify_limit_averages(4, 1e-6, DriftField())
    assert not rec.passed and rec.worst_margin < -0.1
    assert verify_limit_averages(1, 1e-6, DriftField()).details["integrals"][1]["int_positive"] == pytest.approx(1.125)


def test_limit_average_checks():
    with pytest.raises(InvalidArgumentError):
        verify_limit_averages(7, 1e-6)
    with pytest.raises(InvalidArgumentError):
        verify_limit_averages(2, 0.0)


def test_ce1_pipeline(ce1):
    assert ce1.passed, ce1.summary_table()
    phi = ce1.stage("ce1-decay").details["phi_at_3n"]
    vals = [phi[f"3^{n}"] for n in range(2, 9)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert ce1.stage("ce1-classify").details["classification"] == "critical"
    assert math.exp(-b_antiderivative(3.0)) == pytest.approx(0.3247, abs=1e-4)


def test_ce2_pipeline(ce2):
    assert ce2.passed, ce2.summary_table()
    pair = ce2.stage("ce2-pair").details
    assert pair["W_raw_at_0"] == pytest.approx(1.0, abs=1e-12)
    assert pair["min_abs_W_gauge"] >= 0.9 and pair["min_u2"] > 0
    assert ce2.stage("ce2-classify").details["classification"] == "subcritical"
    assert ce2.stage("ce2-contrast").passed


def test_positive_pair_against_closed_form():
    x, u2, du, w_raw, _ = ce2_positive_pair(9.0)
    assert np.allclose(du, np.exp(-2 * DriftField().antiderivative(x)), rtol=1e-9)
    assert np.allclose(w_raw, du)


def test_pipelines_cover_every_identity(ce1, ce2):
    assert set(ce1.identities) | set(ce2.identities) == set(IDENTITIES)


def test_pipeline_json(ce1, ce2):
    for rep in (ce1, ce2):
        reporting.validate(rep.to_dict(), "pipeline_report")
        assert "runtime_ms" not in rep.to_json()
        assert "runtime_ms" in rep.to_dict(runtime=True)["stages"][0]
    reporting.validate(reporting.suite_dict([ce1, ce2]), "suite_report")


def test_records_are_consistent(ce1, ce2):
    for rep in (ce1, ce2):
        for s in rep.stages:
            assert s.passed == (s.worst_margin >= -s.tolerance) or not s.passed


def test_summary_table(ce1):
    table = ce1.summary_table()
    assert table.startswith("ce1: PASS") and "ce1-sweep" in table
