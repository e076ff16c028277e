import numpy as np
import pytest
import scipy.stats

from didsel import (
    SimConfig,
    SimulationError,
    did_2x2,
    majority_vote_select,
    measure_pt_gap,
    simulate_panel,
)
from didsel.simulate import (
    AR1,
    AlphaLinearEffect,
    AshenfelterThreshold,
    ConstantEffect,
    DiscreteCovariate,
    ExchangeableNormal,
    FixedEffectThreshold,
    IIDNormal,
    MajorityVote,
    Martingale,
    Random,
    TwoWay,
    config_from_mapping,
)


def _config(selection=Random(0.5), errors=IIDNormal(), n=2000, tau=0.0):
    return SimConfig(n=n, model=TwoWay(lam=(0.0, 0.5)), errors=errors,
                     selection=selection, effect=ConstantEffect(tau))


class TestSimulatePanel:
    def test_reproducible(self):
        a = simulate_panel(_config(), seed=5)
        b = simulate_panel(_config(), seed=5)
        np.testing.assert_array_equal(a.dataset.outcomes, b.dataset.outcomes)
        np.testing.assert_array_equal(a.group, b.group)

    def test_different_seeds_differ(self):
        a = simulate_panel(_config(), seed=5)
        b = simulate_panel(_config(), seed=6)
        assert not np.array_equal(a.dataset.outcomes, b.dataset.outcomes)

    def test_observed_branch_consistency(self):
        latent = simulate_panel(_config(tau=2.0), seed=0)
        obs = latent.dataset.outcomes
        treated = latent.group == 1.0
        np.testing.assert_allclose(obs[:, 0], latent.y0[:, 0])
        np.testing.assert_allclose(obs[treated, 1], latent.y1[treated, 1])
        np.testing.assert_allclose(obs[~treated, 1], latent.y0[~treated, 1])

    def test_degenerate_selection_reports_share(self):
        with pytest.raises(SimulationError, match="share 0.000"):
            simulate_panel(_config(selection=FixedEffectThreshold(-50.0)),
                           seed=0)

    def test_random_assignment_recovers_tau(self):
        latent = simulate_panel(_config(n=10000, tau=2.0), seed=1)
        est = did_2x2(latent.dataset, 1, 2)
        assert abs(est.point - 2.0) < 3 * est.se

    def test_alpha_dependent_effect(self):
        config = SimConfig(n=5000, model=TwoWay(lam=(0.0, 0.5)),
                           errors=IIDNormal(),
                           selection=FixedEffectThreshold(0.0),
                           effect=AlphaLinearEffect(base=1.0, slope=1.0))
        latent = simulate_panel(config, seed=2)
        treated = latent.group == 1.0
        assert latent.true_att == pytest.approx(latent.tau[treated].mean())
        assert latent.true_att < 1.0  # selected alphas are negative

    def test_invalid_parameters(self):
        with pytest.raises(SimulationError, match="sigma"):
            simulate_panel(_config(errors=IIDNormal(sigma=-1.0)), seed=0)
        with pytest.raises(SimulationError, match="rho"):
            simulate_panel(_config(errors=AR1(rho=1.5)), seed=0)
        with pytest.raises(SimulationError, match="probability"):
            simulate_panel(_config(selection=Random(1.5)), seed=0)
        with pytest.raises(SimulationError):
            SimConfig(n=10, model=TwoWay(lam=(0.0,)), errors=IIDNormal(),
                      selection=Random(0.5), n_periods=1)


class TestMeasurePtGap:
    def test_random_selection_gap_near_zero(self):
        latent = simulate_panel(_config(n=20000), seed=3)
        assert abs(measure_pt_gap(latent)["gap"]) < 0.05

    def test_decomposition_sums_exactly(self):
        latent = simulate_panel(
            _config(errors=AR1(rho=0.5),
                    selection=AshenfelterThreshold(beta=0.0,
                                                   info=("alpha", "eps_pre"))),
            seed=4)
        parts = measure_pt_gap(latent, use_latents=True)
        total = parts["selection_on_post_shock"] + parts["martingale_deviation"]
        assert total == pytest.approx(parts["gap"], abs=1e-10)

    def test_martingale_components_both_zero(self):
        acc = np.zeros(2)
        reps = 40
        for r in range(reps):
            latent = simulate_panel(
                _config(n=4000, errors=Martingale(),
                        selection=AshenfelterThreshold(
                            beta=0.0, info=("alpha", "eps_pre"))),
                seed=[10, r])
            parts = measure_pt_gap(latent, use_latents=True)
            acc += [parts["selection_on_post_shock"],
                    parts["martingale_deviation"]]
        assert abs(acc[0] / reps) < 0.01
        assert abs(acc[1] / reps) < 0.01

    def test_ar1_loads_on_martingale_deviation(self):
        acc = np.zeros(2)
        reps = 40
        for r in range(reps):
            latent = simulate_panel(
                _config(n=4000, errors=AR1(rho=0.5),
                        selection=AshenfelterThreshold(
                            beta=0.0, info=("alpha", "eps_pre"))),
                seed=[11, r])
            parts = measure_pt_gap(latent, use_latents=True)
            acc += [parts["selection_on_post_shock"],
                    parts["martingale_deviation"]]
        assert abs(acc[0] / reps) < 0.02
        assert acc[1] / reps > 0.3

    def test_rate_in_n(self):
        """Under random selection the RMS gap shrinks like 1/sqrt(n)."""
        sizes = [500, 2000, 8000]
        rms = []
        for n in sizes:
            gaps = [
                measure_pt_gap(simulate_panel(_config(n=n), seed=[n, r]))["gap"]
                for r in range(60)
            ]
            rms.append(float(np.sqrt(np.mean(np.square(gaps)))))
        slope = np.polyfit(np.log(sizes), np.log(rms), 1)[0]
        assert slope == pytest.approx(-0.5, abs=0.15)


class TestMajorityVote:
    def test_unanimous(self):
        assert majority_vote_select(np.ones((3, 5))).tolist() == [1, 1, 1]

    def test_tie_counts_as_yes(self):
        assert majority_vote_select(np.array([[1.0, 0.0]])).tolist() == [1.0]

    def test_bad_shape(self):
        with pytest.raises(SimulationError, match="n_groups"):
            majority_vote_select(np.ones(5))

    def test_binomial_tail(self):
        m, p, n = 101, 0.4, 10000
        rng = np.random.default_rng(12)
        votes = (rng.uniform(size=(n, m)) < p).astype(float)
        share = majority_vote_select(votes).mean()
        expected = scipy.stats.binom.sf(50, m, p)  # P(Bin >= 51)
        mc_se = np.sqrt(expected * (1 - expected) / n)
        assert abs(share - expected) < 3 * max(mc_se, 1e-4)

    def test_aggregated_panel_shape(self):
        config = SimConfig(n=300, model=TwoWay(lam=(0.0, 0.5)),
                           errors=IIDNormal(),
                           selection=MajorityVote(
                               member=FixedEffectThreshold(0.0), m=9))
        latent = simulate_panel(config, seed=0)
        assert latent.dataset.n_units == 300


class TestConfigFromMapping:
    BASE = {
        "n": 100,
        "model": {"kind": "two_way", "lam": [0.0, 0.5]},
        "errors": {"kind": "iid"},
        "selection": {"kind": "random", "p": 0.5},
    }

    def test_roundtrip(self):
        config = config_from_mapping(self.BASE)
        latent = simulate_panel(config, seed=0)
        assert latent.dataset.n_units == 100

    def test_missing_key(self):
        bad = {k: v for k, v in self.BASE.items() if k != "errors"}
        with pytest.raises(SimulationError, match="missing 'errors'"):
            config_from_mapping(bad)

    def test_unknown_kind(self):
        bad = dict(self.BASE, errors={"kind": "levy"})
        with pytest.raises(SimulationError, match="unknown errors kind"):
            config_from_mapping(bad)

    def test_missing_kind(self):
        bad = dict(self.BASE, errors={"sigma": 1.0})
        with pytest.raises(SimulationError, match="'kind'"):
            config_from_mapping(bad)

    def test_bad_parameters(self):
        bad = dict(self.BASE, errors={"kind": "iid", "zeta": 3})
        with pytest.raises(SimulationError, match="bad errors parameters"):
            config_from_mapping(bad)

    def test_majority_vote(self):
        cfg = dict(self.BASE, n=50, selection={
            "kind": "majority_vote", "m": 5,
            "member": {"kind": "fixed_effect", "c": 0.0},
        })
        latent = simulate_panel(config_from_mapping(cfg), seed=0)
        assert latent.dataset.n_units == 50

    def test_covariates(self):
        cfg = dict(self.BASE)
        cfg["model"] = {"kind": "covariate_separable", "lam": [0.0, 0.5],
                        "gamma": ["identity", "affine"]}
        cfg["covariates"] = [{"name": "x", "values": [0.0, 1.0],
                              "probs": [0.5, 0.5]}]
        latent = simulate_panel(config_from_mapping(cfg), seed=0)
        assert latent.dataset.covariate_names == ("x",)


class TestExchangeable:
    def test_correlation_structure(self):
        errors = ExchangeableNormal(r=0.5)
        rng = np.random.default_rng(9)
        eps = errors.draw(rng, np.zeros(200000), 2)
        corr = np.corrcoef(eps[:, 0], eps[:, 1])[0, 1]
        assert corr == pytest.approx(0.5, abs=0.01)

    def test_bad_r(self):
        with pytest.raises(SimulationError, match=r"\[0, 1\)"):
            ExchangeableNormal(r=1.5).draw(np.random.default_rng(0),
                                           np.zeros(10), 2)
