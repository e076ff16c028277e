"""Acceptance suite.

One test per criterion; each prints a single PASS/FAIL line with the headline
numbers, then asserts. Run with ``pytest tests/test_acceptance.py -s`` to see
the lines as they complete.
"""
import time

import numpy as np
import pytest

from didsel import (
    att_at_rho,
    att_gt_table,
    baseline_bias,
    did_2x2,
    estimate_rho,
    influence_se_oracle_check,
    reg_adjusted_did,
    run_bank,
    sensitivity_curve,
    simulate_panel,
    simulate_staggered_panel,
)
from didsel.estimators import identified_set
from didsel.simulate import (
    AR1,
    AlphaQuantileCohorts,
    AshenfelterThreshold,
    ConstantEffect,
    IIDNormal,
    Random,
    SimConfig,
    StaggeredConfig,
    TwoWay,
)


def _report(number, name, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {number}] {name}: {status} ({detail})")
    assert ok, f"criterion {number} ({name}) failed: {detail}"


def _within(value, target, rel=None, abs_=None):
    if rel is not None:
        return abs(value - target) <= rel * abs(target)
    return abs(value - target) <= abs_


def test_criterion_1_job_training_goldens(nsw, nsw_spec):
    start = time.perf_counter()
    checks = []

    did = did_2x2(nsw, 1975, 1978)
    checks.append(("did", _within(did.point, 3621, rel=0.005)))
    checks.append(("did se", _within(did.se, 610, rel=0.05)))

    # pre-trend reported with 1975 as the base period
    placebo = did_2x2(nsw, 1974, 1975)
    checks.append(("placebo", _within(-placebo.point, 197, abs_=2)))
    checks.append(("placebo se", _within(placebo.se, 280, rel=0.05)))

    reg = reg_adjusted_did(nsw, 1975, 1978, nsw_spec)
    checks.append(("reg did", _within(reg.point, 2436, rel=0.01)))
    checks.append(("reg did se", _within(reg.se, 654, rel=0.05)))

    reg_placebo = reg_adjusted_did(nsw, 1974, 1975, nsw_spec)
    checks.append(("reg placebo", _within(-reg_placebo.point, 335, abs_=3)))

    bias = baseline_bias(nsw, 1975)
    checks.append(("baseline bias", _within(bias.point, -12119, rel=0.005)))
    bias_reg = baseline_bias(nsw, 1975, nsw_spec)
    checks.append(("reg baseline bias", _within(bias_reg.point, -6113, rel=0.01)))

    rho = estimate_rho(nsw, 1974, 1975, 3)
    checks.append(("rho per_step", _within(rho.per_step, 0.845, abs_=0.002)))
    checks.append(("rho adjusted", _within(rho.adjusted, 0.603, abs_=0.005)))
    rho_reg = estimate_rho(nsw, 1974, 1975, 3, nsw_spec)
    checks.append(("rho per_step (design)",
                   _within(rho_reg.per_step, 0.827, abs_=0.002)))
    checks.append(("rho adjusted (design)",
                   _within(rho_reg.adjusted, 0.566, abs_=0.005)))

    elapsed = time.perf_counter() - start
    checks.append(("runtime < 5 s", elapsed < 5.0))
    failed = [name for name, ok in checks if not ok]
    _report(1, "job-training golden numbers", not failed,
            f"did={did.point:.1f} se={did.se:.1f} reg={reg.point:.1f} "
            f"rho={rho.adjusted:.3f}/{rho_reg.adjusted:.3f} "
            f"{elapsed:.2f}s" + (f"; failed: {failed}" if failed else ""))


def test_criterion_2_structural_identities(small_panel, nsw, nsw_spec):
    start = time.perf_counter()
    checks = []
    for ds, spec in ((small_panel, None), (nsw, None), (nsw, nsw_spec)):
        pre, post = ds.periods[-2], ds.periods[-1]
        if spec is None:
            did = did_2x2(ds, pre, post)
        else:
            did = reg_adjusted_did(ds, pre, post, spec)
        scale = max(1.0, abs(did.point))
        att1 = att_at_rho(ds, pre, post, 1.0, spec)
        checks.append(abs(att1.point - did.point) < 1e-10 * scale)
        # affine in rho: interpolation residual
        a = att_at_rho(ds, pre, post, 0.5, spec).point
        b = att_at_rho(ds, pre, post, 0.8, spec).point
        c = att_at_rho(ds, pre, post, 1.1, spec).point
        interp = a + (b - a) / 0.3 * 0.6
        checks.append(abs(interp - c) < 1e-10 * scale)
        ids = identified_set(ds, pre, post, 0.6, 1.0, spec)
        ends = {att_at_rho(ds, pre, post, r, spec).point for r in (0.6, 1.0)}
        checks.append(max(abs(ids.lo - min(ends)), abs(ids.hi - max(ends)))
                      < 1e-10 * scale)
    # intercept-only adjustment equals the unadjusted estimator
    from didsel import DesignSpec
    plain = did_2x2(nsw, 1975, 1978).point
    inter = reg_adjusted_did(nsw, 1975, 1978, DesignSpec.intercept_only()).point
    checks.append(abs(plain - inter) < 1e-10 * abs(plain))
    elapsed = time.perf_counter() - start
    checks.append(elapsed < 1.0)
    _report(2, "structural identities", all(checks),
            f"{sum(checks)}/{len(checks)} identities, {elapsed:.2f}s")


def test_criterion_3_bias_formula_agreement():
    start = time.perf_counter()
    n, reps, tau = 20000, 200, 2.0
    rho_ar, sigma_a = 0.5, 1.0
    var_eps = 1.0 / (1.0 - rho_ar**2)
    rho2_true = (sigma_a**2 + rho_ar * var_eps) / (sigma_a**2 + var_eps)
    config = SimConfig(
        n=n, model=TwoWay(lam=(0.0, 0.5)), errors=AR1(rho=rho_ar),
        selection=AshenfelterThreshold(beta=0.0, info=("alpha", "eps_pre")),
        effect=ConstantEffect(tau),
    )
    diffs = np.empty(reps)
    att_err = np.empty(reps)
    for r in range(reps):
        latent = simulate_panel(config, seed=[202, r])
        ds = latent.dataset
        bias = did_2x2(ds, 1, 2).point - tau
        g = latent.group
        p = g.mean()
        y1d = latent.y0[:, 0] - latent.y0[:, 0].mean()
        y2d = latent.y0[:, 1] - latent.y0[:, 1].mean()
        zeta = y2d - rho2_true * y1d
        formula = ((rho2_true - 1.0) * np.mean(g * y1d)
                   + np.mean(g * (zeta - zeta.mean()))) / (p * (1 - p))
        diffs[r] = bias - formula
        att_err[r] = att_at_rho(ds, 1, 2, rho2_true).point - tau
    mcse_d = max(diffs.std(ddof=1) / np.sqrt(reps), 1e-12)
    mcse_a = att_err.std(ddof=1) / np.sqrt(reps)
    ok_formula = abs(diffs.mean()) < 3 * mcse_d
    ok_att = abs(att_err.mean()) < 3 * mcse_a
    elapsed = time.perf_counter() - start
    _report(3, "bias-formula agreement", ok_formula and ok_att and elapsed < 60,
            f"formula diff {diffs.mean():.2e} (mcse {mcse_d:.1e}); "
            f"att error {att_err.mean():+.4f} (mcse {mcse_a:.4f}); "
            f"rho2={rho2_true:.4f}; {elapsed:.1f}s")


def test_criterion_4_scenario_bank():
    start = time.perf_counter()
    verdicts = run_bank()
    for v in verdicts:
        print("  " + v.summary())
    failed = [v.scenario for v in verdicts if not v.passed]
    elapsed = time.perf_counter() - start
    _report(4, "scenario bank", not failed and elapsed < 300,
            f"{len(verdicts) - len(failed)}/{len(verdicts)} scenarios, "
            f"{elapsed:.1f}s" + (f"; failed: {failed}" if failed else ""))


def test_criterion_5_inference_oracle(nsw):
    start = time.perf_counter()
    config = SimConfig(n=2000, model=TwoWay(lam=(0.0, 0.5)),
                       errors=IIDNormal(), selection=Random(0.5),
                       effect=ConstantEffect(2.0))
    sim = simulate_panel(config, seed=55).dataset
    gaps = []
    cmp_sim = influence_se_oracle_check(sim, 1, 2, 0.8, None,
                                        bootstrap_reps=500, seed=77)
    gaps.append(("sim rho=0.8", cmp_sim.relative_gap))
    for rho in (0.6, 1.0):
        cmp_nsw = influence_se_oracle_check(nsw, 1975, 1978, rho, None,
                                            bootstrap_reps=500, seed=78)
        gaps.append((f"nsw rho={rho}", cmp_nsw.relative_gap))
    elapsed = time.perf_counter() - start
    ok = all(gap < 0.10 for _, gap in gaps) and elapsed < 120
    detail = ", ".join(f"{name} gap {gap:.1%}" for name, gap in gaps)
    _report(5, "influence-function se vs bootstrap", ok,
            f"{detail}; {elapsed:.1f}s")


def test_criterion_6_staggered_recovery():
    start = time.perf_counter()
    tau, reps = 5.0, 30
    config = StaggeredConfig(
        n=10000, n_periods=4, lam=(0.0, 0.3, 0.6, 0.9), errors=IIDNormal(),
        assignment=AlphaQuantileCohorts(cohorts=(2, 3, 4), never_share=0.4),
        tau=tau,
    )
    cells = {}
    for r in range(reps):
        table = att_gt_table(simulate_staggered_panel(config, seed=[606, r]).dataset)
        for c in table.cells:
            cells.setdefault((c.group, c.period), []).append(c.estimate.point)
    bad = []
    for (g, t), points in sorted(cells.items()):
        points = np.asarray(points)
        target = tau if t >= g else 0.0
        mcse = points.std(ddof=1) / np.sqrt(reps)
        # base-period cells (t = g-1) are identically zero with zero mcse
        if abs(points.mean() - target) > 3 * mcse + 1e-12:
            bad.append((int(g), t))
    elapsed = time.perf_counter() - start
    _report(6, "staggered recovery", not bad and elapsed < 30,
            f"{len(cells)} cells, tau={tau}, {elapsed:.1f}s"
            + (f"; off-target cells: {bad}" if bad else ""))


def test_figure_plot_data(nsw):
    """Sensitivity-curve plot data is consistent with criteria 1-2."""
    grid = np.linspace(0.5, 1.0, 26)
    curve = sensitivity_curve(nsw, 1975, 1978, grid)
    did = did_2x2(nsw, 1975, 1978)
    assert curve.att[-1] == pytest.approx(did.point, abs=1e-10)
    assert np.all(np.diff(curve.att) > 0)  # affine with negative bias slope
    assert np.all(curve.ci_lo < curve.att) and np.all(curve.att < curve.ci_hi)
