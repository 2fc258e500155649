"""Estimate harness: rate fits, fitted constants, check plumbing."""

import math

import numpy as np
import pytest

from torusflow import (
    FlowConfig,
    KahlerMetric,
    Scenario,
    ScenarioSpec,
    TorusGeometry,
    build_reports,
    check_scalar_floor,
    constant_field,
    default_test_forms,
    family_summary,
    fit_rate,
    make_sequence,
    run_flow,
)

CHECK_NAMES = {
    "flat_representative",
    "potential_bound",
    "rate_lower",
    "rate_upper",
    "trace_bound",
    "uniform_equivalence",
    "scalar_floor",
    "weak_convergence",
    "volume_density",
}


# ---------------------------------------------------------------------------
# rate fitting


def test_fit_rate_exact_power_law():
    idx = [1, 4, 16, 64]
    f = fit_rate(idx, [3.0 * i ** -0.5 for i in idx])
    assert f.slope == pytest.approx(-0.5, abs=1e-12)
    assert f.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert f.max_residual < 1e-12


def test_fit_rate_constant_series():
    f = fit_rate([1, 4, 16], [2.0, 2.0, 2.0])
    assert f.slope == pytest.approx(0.0, abs=1e-12)


def test_fit_rate_with_noise():
    rng = np.random.default_rng(5)
    idx = [1, 2, 4, 8, 16, 32, 64]
    vals = [i ** -0.5 * math.exp(rng.uniform(-0.02, 0.02)) for i in idx]
    f = fit_rate(idx, vals)
    assert abs(f.slope + 0.5) < 0.05


def test_fit_rate_rejections():
    with pytest.raises(ValueError):
        fit_rate([1, 4], [1.0, 0.5])
    with pytest.raises(ValueError):
        fit_rate([1, 4, 16], [1.0, 0.0, 0.5])


# ---------------------------------------------------------------------------
# test-form battery


def test_default_forms_one_dim(geo1):
    forms = default_test_forms(geo1)
    labels = [lab for lab, _ in forms]
    assert labels == ["const", "rand0", "rand1", "rand2", "rand3", "rand4"]
    for lab, form in forms[1:]:
        assert abs(form.f.values.mean()) < 1e-13  # mean-zero factors


def test_default_forms_two_dim(geo2):
    labels = [lab for lab, _ in default_test_forms(geo2)]
    assert labels[:2] == ["const", "rand0"]
    assert {"const_diag0", "const_diag1", "const_mix_re", "const_mix_im"} <= set(labels)


# ---------------------------------------------------------------------------
# full harness over a calibrated family


@pytest.fixture(scope="module")
def reported_family():
    geo = TorusGeometry(1, 32)
    spec = ScenarioSpec(geometry=geo, seed=90, indices=(1, 4, 16, 64), p=math.inf)
    scenarios = make_sequence(spec)
    cfg = FlowConfig(t_end=1.0)
    traces = [run_flow(sc.metric, cfg) for sc in scenarios]
    results, fam, ms = build_reports(scenarios, traces)
    return scenarios, traces, results, fam, ms


def test_reports_have_every_check(reported_family):
    _, _, results, _, _ = reported_family
    for res in results:
        assert set(res.report.checks) == CHECK_NAMES


def test_reports_all_pass(reported_family):
    _, _, results, _, _ = reported_family
    for res in results:
        for name, check in res.report.checks.items():
            assert check.passed, f"i={res.index} {name}: slack={check.slack}"
            assert check.slack >= -check.tolerance


def test_fitted_constants_cover_family(reported_family):
    """Family constants are the smallest ones, so some slack is ~0."""
    _, _, results, fam, _ = reported_family
    for key in ("potential_bound", "rate_lower_constant", "trace_bound_constant"):
        assert fam[key] >= 0.0
    tightest = min(r.report.checks["rate_lower"].slack for r in results)
    assert abs(tightest) < 1e-9


def test_rate_sections(reported_family):
    _, _, _, fam, ms = reported_family
    summary = family_summary(ms, fam)
    r = summary["rates"]["inf_dot_phi"]
    assert r["applicable"] and r["pass"], r
    r = summary["rates"]["volume_log_floor"]
    assert r["applicable"] and r["pass"], r
    pg = summary["rates"]["pairing_gaps"]
    assert pg["applicable"]
    assert pg["passing"] >= pg["required"], pg["per_form"]


def test_l1_monotone_section(reported_family):
    _, _, _, fam, ms = reported_family
    summary = family_summary(ms, fam)
    sec = summary["monotonic"]["v_minus_one_l1"]
    assert sec["applicable"]
    assert sec["strictly_decreasing"], sec["values"]


def test_scalar_floor_single_check(reported_family):
    scenarios, traces, _, _, _ = reported_family
    for sc, tr in zip(scenarios, traces):
        res = check_scalar_floor(tr, sc.index)
        assert res.name == "scalar_floor"
        assert res.passed


def test_check_result_serialization(reported_family):
    _, _, results, _, _ = reported_family
    d = results[0].report.as_dict()
    assert d["index"] == 1
    for name, entry in d["checks"].items():
        assert name in CHECK_NAMES
        assert set(entry) == {"constants", "slack", "tolerance", "pass"}
        assert isinstance(entry["pass"], bool)


# ---------------------------------------------------------------------------
# degenerate (flat) family: nothing to regress, everything passes


def flat_scenarios(geo, indices):
    flat = KahlerMetric(np.eye(geo.n), constant_field(geo, 0.0))
    n = geo.n
    return [
        Scenario(
            index=i,
            amplitude=0.0,
            metric=flat,
            curvature_floor=0.0,
            volume=float(2.0**n * math.factorial(n)),
            trace_norm=float(n),
            positive_part_budget=0.0,
        )
        for i in indices
    ]


def test_flat_family_all_pass_no_rates():
    geo = TorusGeometry(1, 16)
    scenarios = flat_scenarios(geo, (1, 4, 16))
    cfg = FlowConfig(t_end=0.25, snapshot_times=(0.05, 0.25))
    traces = [run_flow(sc.metric, cfg) for sc in scenarios]
    results, fam, ms = build_reports(scenarios, traces)
    for res in results:
        assert res.report.all_passed
    summary = family_summary(ms, fam)
    assert not summary["rates"]["inf_dot_phi"]["applicable"]
    assert not summary["rates"]["volume_log_floor"]["applicable"]
    assert not summary["monotonic"]["v_minus_one_l1"]["applicable"]


def test_build_reports_length_mismatch():
    geo = TorusGeometry(1, 16)
    scenarios = flat_scenarios(geo, (1, 4))
    with pytest.raises(ValueError):
        build_reports(scenarios, [])
