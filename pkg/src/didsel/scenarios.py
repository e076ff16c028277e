"""Scenario bank: designs where parallel trends provably holds or fails.

Each scenario pins down a data-generating process, a statistic (the
unconditional, conditional, or multi-period pre-trend gap measured from the
untreated potential outcomes), and the verdict theory predicts: "zero" when
the sufficient conditions hold, a signed violation when a necessary condition
is broken. ``run_scenario`` replicates the design and checks the Monte Carlo
average against its error.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ScenarioCatalogError
from .simulate import (
    AR1,
    AlphaLinearEffect,
    AlphaQuantileCohorts,
    AshenfelterThreshold,
    ConstantEffect,
    CovariateSeparable,
    DiscreteCovariate,
    DriftingGivenAlpha,
    ExchangeableNormal,
    FixedEffectThreshold,
    IIDNormal,
    LinearIndexThreshold,
    MajorityVote,
    Martingale,
    NecessitySign,
    NonseparableMuLambda,
    Random,
    RandomCoefficient,
    RoyThreshold,
    ShockThresholdCohort,
    SimConfig,
    StaggeredConfig,
    SymmetricIndexThreshold,
    TimeHomogeneousGivenAlpha,
    TwoWay,
    conditional_pt_gap,
    measure_pt_gap,
    simulate_panel,
    simulate_staggered_panel,
)
from .staggered import pt_mp_check

#: Registered bank seed; the shipped (n, reps, seed) settings all pass.
BANK_SEED = 7

X01 = DiscreteCovariate(name="x", values=(0.0, 1.0), probs=(0.5, 0.5))
XMU_TV = DiscreteCovariate(name="xmu", values=(0.0, 1.0), probs=(0.5, 0.5),
                           time_varying=True)
XLAM = DiscreteCovariate(name="xlam", values=(0.0, 1.0), probs=(0.5, 0.5))


def _gap(latent):
    return measure_pt_gap(latent)["gap"]


def _gap_by_x(latent):
    return conditional_pt_gap(latent, stratify=("x",))["gap"]


def _gap_nsp(latent):
    return conditional_pt_gap(latent, stratify=("xmu", "xlam"),
                              require_constant=("xmu",))["gap"]


def _gap_mp_mean(latent):
    rows = pt_mp_check(latent.dataset)
    return float(np.mean([r["gap"] for r in rows]))


@dataclass(frozen=True)
class Scenario:
    id: str
    description: str
    expected: str                 # "zero", "negative", or "positive"
    build: object                 # n -> SimConfig | StaggeredConfig
    stat: object = _gap           # LatentPanel -> float
    n: int = 2000
    reps: int = 80
    staggered: bool = False
    has_components: bool = False  # unconditional gap with closed-form split


def _nsp_model():
    return NonseparableMuLambda(mu_tag="interaction", lam_scale=(0.0, 0.5))


SCENARIOS = {
    s.id: s
    for s in [
        Scenario(
            id="RANDOM",
            description="random assignment; any error process keeps trends parallel",
            expected="zero",
            build=lambda n: SimConfig(
                n=n, model=TwoWay(lam=(0.0, 0.5)), errors=IIDNormal(),
                selection=Random(0.5)),
            has_components=True,
        ),
        Scenario(
            id="SC1-SYM",
            description="exchangeable shocks given alpha + selection symmetric "
                        "in the pre/post shocks",
            expected="zero",
            build=lambda n: SimConfig(
                n=n, model=TwoWay(lam=(0.0, 0.5)),
                errors=ExchangeableNormal(r=0.5),
                selection=SymmetricIndexThreshold()),
            has_components=True,
        ),
        Scenario(
            id="SC2-MARTINGALE",
            description="martingale shocks + myopic pre-period selection "
                        "(information set alpha and past shocks)",
            expected="zero",
            build=lambda n: SimConfig(
                n=n, model=TwoWay(lam=(0.0, 0.5)), errors=Martingale(),
                selection=AshenfelterThreshold(beta=0.0,
                                               info=("alpha", "eps_pre"))),
            has_components=True,
        ),
        Scenario(
            id="SC3-FE",
            description="time-homogeneous shocks + selection on the fixed "
                        "effect only",
            expected="zero",
            build=lambda n: SimConfig(
                n=n, model=TwoWay(lam=(0.0, 0.5)), errors=IIDNormal(),
                selection=FixedEffectThreshold(0.0)),
            has_components=True,
        ),
        Scenario(
            id="ROY-FE",
            description="forward-looking selection on the expected gain, which "
                        "depends on the fixed effect only",
            expected="zero",
            build=lambda n: SimConfig(
                n=n, model=TwoWay(lam=(0.0, 0.5)), errors=IIDNormal(),
                effect=AlphaLinearEffect(base=1.0, slope=1.0),
                selection=RoyThreshold(effect=AlphaLinearEffect(base=1.0, slope=1.0),
                                       info=("alpha",))),
            has_components=True,
        ),
        Scenario(
            id="VOTE-FE",
            description="majority voting over members who vote on their own "
                        "fixed effects; shocks i.i.d.",
            expected="zero",
            build=lambda n: SimConfig(
                n=n, model=TwoWay(lam=(0.0, 0.5)), errors=IIDNormal(),
                selection=MajorityVote(member=FixedEffectThreshold(0.0), m=25)),
            n=800,
        ),
        Scenario(
            id="PROP1-VIOLATION",
            description="selection responds to the realized post-period shock: "
                        "no distribution of shocks can rescue parallel trends",
            expected="negative",
            build=lambda n: SimConfig(
                n=n, model=TwoWay(lam=(0.0, 0.5)), errors=IIDNormal(),
                selection=NecessitySign(info=("alpha", "eps_pre", "eps_post"))),
            has_components=True,
        ),
        Scenario(
            id="PROP2-VIOLATION",
            description="selection on past shocks when the shock process mean-"
                        "reverts (martingale property fails)",
            expected="negative",
            build=lambda n: SimConfig(
                n=n, model=TwoWay(lam=(0.0, 0.5)), errors=AR1(rho=0.5),
                selection=NecessitySign(info=("alpha", "eps_pre"))),
            has_components=True,
        ),
        Scenario(
            id="PROP3-VIOLATION",
            description="selection on the fixed effect when the conditional "
                        "mean of the shocks drifts over time",
            expected="negative",
            build=lambda n: SimConfig(
                n=n, model=TwoWay(lam=(0.0, 0.5)),
                errors=DriftingGivenAlpha(deltas=(0.0, 0.5)),
                selection=FixedEffectThreshold(0.0)),
            has_components=True,
        ),
        Scenario(
            id="PROP4-AR1",
            description="pre-period selection under AR(1) mean reversion: the "
                        "gap is positive and loads on the conditional-mean "
                        "deviation term",
            expected="positive",
            build=lambda n: SimConfig(
                n=n, model=TwoWay(lam=(0.0, 0.5)), errors=AR1(rho=0.5),
                selection=AshenfelterThreshold(beta=0.0,
                                               info=("alpha", "eps_pre"))),
            has_components=True,
        ),
        Scenario(
            id="SC1-X",
            description="covariate-separable trends + symmetric selection that "
                        "also depends on the covariate; gap measured within "
                        "covariate cells",
            expected="zero",
            build=lambda n: SimConfig(
                n=n,
                model=CovariateSeparable(lam=(0.0, 0.5),
                                         gamma=("identity", "affine")),
                errors=ExchangeableNormal(r=0.5),
                selection=SymmetricIndexThreshold(use_covariate="x", x_scale=1.0),
                covariates=(X01,)),
            stat=_gap_by_x,
        ),
        Scenario(
            id="SC2-X",
            description="covariate-separable trends + martingale shocks + "
                        "myopic selection; gap measured within covariate cells",
            expected="zero",
            build=lambda n: SimConfig(
                n=n,
                model=CovariateSeparable(lam=(0.0, 0.5),
                                         gamma=("identity", "affine")),
                errors=Martingale(),
                selection=AshenfelterThreshold(beta=0.0,
                                               info=("alpha", "eps_pre")),
                covariates=(X01,)),
            stat=_gap_by_x,
        ),
        Scenario(
            id="SC3-X",
            description="covariate-separable trends + shocks i.i.d. given "
                        "alpha + selection on the fixed effect; gap within "
                        "covariate cells",
            expected="zero",
            build=lambda n: SimConfig(
                n=n,
                model=CovariateSeparable(lam=(0.0, 0.5),
                                         gamma=("identity", "affine")),
                errors=TimeHomogeneousGivenAlpha(mean_tag="identity",
                                                 mean_scale=0.5),
                selection=FixedEffectThreshold(0.0),
                covariates=(X01,)),
            stat=_gap_by_x,
        ),
        Scenario(
            id="RC-TIMEVARYING",
            description="random coefficient on the covariate with time-varying "
                        "loadings: conditioning on the covariate does not "
                        "restore parallel trends under fixed-effect selection",
            expected="negative",
            build=lambda n: SimConfig(
                n=n,
                model=RandomCoefficient(lam=(0.0, 0.0),
                                        gamma=("constant", "interaction")),
                errors=IIDNormal(),
                selection=FixedEffectThreshold(0.0),
                covariates=(X01,)),
            stat=_gap_by_x,
        ),
        Scenario(
            id="SC1-NSP",
            description="nonseparable unit effect + symmetric exchangeable "
                        "selection; gap on the no-covariate-change "
                        "subpopulation",
            expected="zero",
            build=lambda n: SimConfig(
                n=n, model=_nsp_model(), errors=ExchangeableNormal(r=0.5),
                selection=SymmetricIndexThreshold(use_covariate="xmu",
                                                  x_scale=1.0),
                covariates=(XMU_TV, XLAM)),
            stat=_gap_nsp,
            n=4000,
            reps=100,
        ),
        Scenario(
            id="SC2-NSP",
            description="nonseparable unit effect + martingale shocks + "
                        "selection on past information; gap on the "
                        "no-covariate-change subpopulation",
            expected="zero",
            build=lambda n: SimConfig(
                n=n, model=_nsp_model(), errors=Martingale(),
                selection=LinearIndexThreshold(alpha_w=1.0, pre_w=1.0,
                                               x_name="xmu", x_w=1.0),
                covariates=(XMU_TV, XLAM)),
            stat=_gap_nsp,
            n=4000,
            reps=100,
        ),
        Scenario(
            id="SC3-NSP",
            description="nonseparable unit effect + shocks i.i.d. given alpha "
                        "+ selection on the fixed effect and covariate; gap on "
                        "the no-covariate-change subpopulation",
            expected="zero",
            build=lambda n: SimConfig(
                n=n, model=_nsp_model(),
                errors=TimeHomogeneousGivenAlpha(mean_tag="identity",
                                                 mean_scale=0.5),
                selection=LinearIndexThreshold(alpha_w=1.0, x_name="xmu",
                                               x_w=1.0),
                covariates=(XMU_TV, XLAM)),
            stat=_gap_nsp,
            n=4000,
            reps=100,
        ),
        Scenario(
            id="MP-FE",
            description="staggered adoption timed by the fixed effect with "
                        "i.i.d. shocks: all pre-treatment gaps vanish",
            expected="zero",
            build=lambda n: StaggeredConfig(
                n=n, n_periods=4, lam=(0.0, 0.2, 0.4, 0.6), errors=IIDNormal(),
                assignment=AlphaQuantileCohorts(cohorts=(2, 3, 4),
                                                never_share=0.4)),
            stat=_gap_mp_mean,
            staggered=True,
        ),
        Scenario(
            id="MP-AR1",
            description="late adopters selected on a low pre-adoption shock "
                        "under AR(1): the adjacent pre-treatment gap is "
                        "negative",
            expected="negative",
            build=lambda n: StaggeredConfig(
                n=n, n_periods=3, lam=(0.0, 0.0, 0.0), errors=AR1(rho=0.5),
                assignment=ShockThresholdCohort(g=3, c=0.0)),
            stat=_gap_mp_mean,
            staggered=True,
        ),
    ]
}


@dataclass(frozen=True)
class SimVerdict:
    """Monte Carlo verdict for one scenario."""

    scenario: str
    expected: str
    mean_gap: float
    mcse: float
    reps: int
    n: int
    passed: bool
    components: dict = None

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (f"{self.scenario:<18} expected={self.expected:<8} "
                f"gap={self.mean_gap:+.4f} (mcse {self.mcse:.4f}) [{status}]")


def get_scenario(scenario_id: str) -> Scenario:
    try:
        return SCENARIOS[scenario_id]
    except KeyError:
        raise ScenarioCatalogError(
            f"unknown scenario {scenario_id!r}; available: {sorted(SCENARIOS)}"
        )


def run_scenario(scenario_id: str, n: int = None, reps: int = None,
                 seed: int = BANK_SEED) -> SimVerdict:
    """Replicate one scenario and compare the mean gap to its Monte Carlo se.

    Expected-zero scenarios pass when |mean| < 3 mcse; expected violations
    pass when the mean exceeds 3 mcse with the predicted sign. Replication r
    uses the deterministic substream (seed, r).
    """
    sc = get_scenario(scenario_id)
    n = sc.n if n is None else n
    reps = sc.reps if reps is None else reps
    if reps < 2:
        raise ScenarioCatalogError("need at least 2 replications")
    config = sc.build(n)
    gaps = np.empty(reps)
    comp1 = np.empty(reps) if sc.has_components else None
    for r in range(reps):
        if sc.staggered:
            latent = simulate_staggered_panel(config, seed=[seed, r])
        else:
            latent = simulate_panel(config, seed=[seed, r])
        gaps[r] = sc.stat(latent)
        if sc.has_components:
            parts = measure_pt_gap(latent, use_latents=True)
            comp1[r] = parts["selection_on_post_shock"]
    mean = float(gaps.mean())
    mcse = float(gaps.std(ddof=1) / np.sqrt(reps))
    if sc.expected == "zero":
        passed = abs(mean) < 3 * mcse
    elif sc.expected == "negative":
        passed = mean < -3 * mcse
    else:
        passed = mean > 3 * mcse
    components = None
    if sc.has_components:
        components = {
            "selection_on_post_shock": float(comp1.mean()),
            "martingale_deviation": float(gaps.mean() - comp1.mean()),
        }
    return SimVerdict(scenario=sc.id, expected=sc.expected, mean_gap=mean,
                      mcse=mcse, reps=reps, n=n, passed=passed,
                      components=components)


def run_bank(seed: int = BANK_SEED, n: int = None, reps: int = None) -> list:
    """Run every scenario; returns verdicts in catalog order."""
    return [run_scenario(sid, n=n, reps=reps, seed=seed) for sid in SCENARIOS]
