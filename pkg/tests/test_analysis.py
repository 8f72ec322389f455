"""Error-probability formulas, detector-peak studies, sweeps."""

import math

import pytest

from qubusim.analysis import (
    AnalysisError,
    SweepSpec,
    alpha_for_beta2,
    beta_squared,
    error_probability_direct,
    error_probability_formula,
    fig2_data,
    peak_overlap,
    pmf_to_csv,
    run_sweep,
)
from qubusim.numerics import poisson_pmf


def test_formula_plug_in_value():
    # alpha^2 = 4000, theta = theta_p = 0.05, gamma = 100, eta = 0.9
    p = error_probability_formula(math.sqrt(4000), 0.05, 100.0, 0.9, 0.05)
    assert p == pytest.approx(2.1e-9, rel=0.2)


def test_formula_limits():
    assert error_probability_formula(math.sqrt(4000), 0.0, 100.0, 0.9, 0.05) == pytest.approx(1.0)
    assert error_probability_formula(math.sqrt(4000), 0.05, 100.0, 0.0, 0.05) == pytest.approx(1.0)


def test_direct_fig2_parameters_small():
    p = error_probability_direct(math.sqrt(4000), 0.05, 100.0, 0.95, 0.05)
    assert p <= 1e-8


def test_direct_gamma_zero_is_one():
    assert error_probability_direct(math.sqrt(4000), 0.05, 0.0, 0.9, 0.05) == pytest.approx(1.0)


def test_direct_theta_zero_is_one():
    assert error_probability_direct(math.sqrt(4000), 0.0, 100.0, 0.9, 0.05) == pytest.approx(1.0)


def test_direct_monotone_in_alpha_gamma_eta():
    base = dict(alpha=math.sqrt(2000), theta=0.05, gamma=60.0, eta=0.6, theta_probe=0.05)

    def at(**kw):
        p = dict(base)
        p.update(kw)
        return error_probability_direct(**p)

    for key, values in (
        ("alpha", [math.sqrt(1000), math.sqrt(2000), math.sqrt(4000)]),
        ("gamma", [40.0, 60.0, 90.0]),
        ("eta", [0.3, 0.6, 0.9]),
    ):
        seq = [at(**{key: v}) for v in values]
        assert seq == sorted(seq, reverse=True)


def test_direct_in_unit_interval():
    for theta in (0.0, 0.02, 0.1):
        p = error_probability_direct(30.0, theta, 50.0, 0.5, 0.05)
        assert 0.0 <= p <= 1.0


def test_direct_cutoff_error():
    with pytest.raises(AnalysisError, match="tail"):
        error_probability_direct(math.sqrt(4000), 0.05, 100.0, 0.9, 0.05, cutoff=5)


def test_formula_direct_log_ratio_in_asymptotic_regime():
    for theta in (0.02, 0.05, 0.1):
        alpha = alpha_for_beta2(20.0, theta)
        f = error_probability_formula(alpha, theta, 100.0, 0.9, theta)
        d = error_probability_direct(alpha, theta, 100.0, 0.9, theta)
        ratio = math.log(d) / math.log(f)
        assert 0.5 <= ratio <= 2.0


def test_peak_overlap_separated():
    assert peak_overlap(100.0, 0.05, 1, 2) < 1e-3
    for k1, k2 in ((1, 2), (2, 3), (3, 4), (1, 4)):
        assert peak_overlap(100.0, 0.05, k1, k2) < 1e-3


def test_peak_overlap_same_peak_rejected():
    with pytest.raises(AnalysisError):
        peak_overlap(100.0, 0.05, 2, 2)


def test_fig2_data_mass_and_pmfs():
    data = fig2_data(100.0, 0.05, 20.0)
    assert data.signal_pmf.sum() == pytest.approx(1.0, abs=1e-10)
    for _, pmf in data.peak_pmfs:
        assert pmf.sum() == pytest.approx(1.0, abs=1e-10)
    mass = sum(poisson_pmf(20.0, n) for n in range(8, 36))
    assert mass >= 0.99
    assert data.peak_means == pytest.approx([12.50, 49.96, 112.3, 199.3], rel=5e-4)
    assert data.dominant_count > 0  # reported, never asserted against 27 vs 28


def test_pmf_csv_two_columns():
    text = pmf_to_csv([0, 1, 2], [0.5, 0.3, 0.2])
    lines = text.strip().splitlines()
    assert lines[0] == "n,probability"
    assert len(lines) == 4


def test_sweep_single_point_equals_direct_call():
    rows = run_sweep(
        SweepSpec("P_E_formula", {"theta": [0.05]}, fixed={"eta": 0.9})
    )
    assert len(rows) == 1
    assert rows[0]["value"] == pytest.approx(
        error_probability_formula(math.sqrt(4000), 0.05, 100.0, 0.9, 0.05)
    )


def test_sweep_formula_vs_direct_within_tenfold():
    grid = {"theta": [0.02, 0.05, 0.1]}
    formula = run_sweep(SweepSpec("P_E_formula", grid, fixed={"beta2": 20.0, "eta": 0.9}))
    direct = run_sweep(SweepSpec("P_E_direct", grid, fixed={"beta2": 20.0, "eta": 0.9}))
    for f, d in zip(formula, direct):
        assert d["value"] <= 10 * f["value"] and f["value"] <= 10 * d["value"]


def test_sweep_grid_order_is_row_order():
    rows = run_sweep(
        SweepSpec("P_E_formula", {"eta": [0.9, 0.5], "theta": [0.05, 0.1]})
    )
    assert [(r["eta"], r["theta"]) for r in rows] == [
        (0.9, 0.05), (0.9, 0.1), (0.5, 0.05), (0.5, 0.1)
    ]


def test_sweep_rejects_bad_spec():
    with pytest.raises(AnalysisError):
        SweepSpec("nope", {"theta": [0.05]})
    with pytest.raises(AnalysisError):
        SweepSpec("P_E_formula", {})
    with pytest.raises(AnalysisError):
        SweepSpec("P_E_formula", {"bogus": [1.0]})


def test_sweep_error_carries_grid_coordinates():
    spec = SweepSpec("peak_overlap", {"k2": [2, 1]}, fixed={"k1": 1})
    with pytest.raises(AnalysisError, match=r"\{'k2': 1\}"):
        run_sweep(spec)


def test_sweep_pmf_rows():
    rows = run_sweep(SweepSpec("pmf", {"beta2": [4.0]}))
    total = sum(r["probability"] for r in rows)
    assert total == pytest.approx(1.0, abs=1e-10)
    assert all(r["beta2"] == 4.0 for r in rows)


def test_beta_squared_round_trip():
    assert beta_squared(alpha_for_beta2(20.0, 0.05), 0.05) == pytest.approx(20.0)
