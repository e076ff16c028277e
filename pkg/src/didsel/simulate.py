"""Monte Carlo laboratory for selection into treatment.

Generates panels from explicit outcome models, error processes, and selection
mechanisms, keeping the latent draws and both potential-outcome paths next to
the observables so that parallel-trends violations can be measured directly.

Binary-group configurations treat the final period as the single post
period; earlier periods are pre-treatment (a third period provides the extra
pre-period some diagnostics need).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SimulationError
from .panel import NEVER, PanelDataset, from_arrays

# ---------------------------------------------------------------------------
# registered function tags

FUNC_LIBRARY = {
    "constant": lambda x: np.ones_like(x),
    "identity": lambda x: x,
    "affine": lambda x: 1.0 + 0.5 * x,
    "quadratic": lambda x: 0.5 * x**2,
    "interaction": lambda x: 1.0 + x,
}


def _func(tag: str):
    try:
        return FUNC_LIBRARY[tag]
    except KeyError:
        raise SimulationError(f"unknown function tag {tag!r}; "
                              f"registered: {sorted(FUNC_LIBRARY)}")


# ---------------------------------------------------------------------------
# error processes


@dataclass(frozen=True)
class IIDNormal:
    sigma: float = 1.0

    def draw(self, rng, alpha, T):
        self._check()
        return self.sigma * rng.standard_normal((alpha.shape[0], T))

    def _check(self):
        if self.sigma <= 0:
            raise SimulationError("sigma must be positive")

    def cond_mean_final(self, eps, alpha):
        return np.zeros_like(alpha)

    def mean_given_alpha(self, alpha, t):
        return np.zeros_like(alpha)


@dataclass(frozen=True)
class Martingale:
    """Unit-root shocks: each period adds an independent innovation."""

    sigma0: float = 1.0
    sigma_innov: float = 1.0

    def draw(self, rng, alpha, T):
        if self.sigma0 <= 0 or self.sigma_innov <= 0:
            raise SimulationError("sigma0 and sigma_innov must be positive")
        n = alpha.shape[0]
        eps = np.empty((n, T))
        eps[:, 0] = self.sigma0 * rng.standard_normal(n)
        for t in range(1, T):
            eps[:, t] = eps[:, t - 1] + self.sigma_innov * rng.standard_normal(n)
        return eps

    def cond_mean_final(self, eps, alpha):
        return eps[:, -2].copy()

    def mean_given_alpha(self, alpha, t):
        return np.zeros_like(alpha)


@dataclass(frozen=True)
class AR1:
    """Stationary AR(1) shocks with autoregression coefficient rho."""

    rho: float
    sigma: float = 1.0

    def draw(self, rng, alpha, T):
        if not -1.0 < self.rho < 1.0:
            raise SimulationError("AR1 needs |rho| < 1; use Martingale for a unit root")
        if self.sigma <= 0:
            raise SimulationError("sigma must be positive")
        n = alpha.shape[0]
        eps = np.empty((n, T))
        stat_sd = self.sigma / np.sqrt(1.0 - self.rho**2)
        eps[:, 0] = stat_sd * rng.standard_normal(n)
        for t in range(1, T):
            eps[:, t] = self.rho * eps[:, t - 1] + self.sigma * rng.standard_normal(n)
        return eps

    def cond_mean_final(self, eps, alpha):
        return self.rho * eps[:, -2]

    def mean_given_alpha(self, alpha, t):
        return np.zeros_like(alpha)


@dataclass(frozen=True)
class ExchangeableNormal:
    """Equicorrelated normal shocks conditional on the fixed effect."""

    r: float
    sigma: float = 1.0

    def draw(self, rng, alpha, T):
        if not 0.0 <= self.r < 1.0:
            raise SimulationError("exchangeable correlation must lie in [0, 1)")
        if self.sigma <= 0:
            raise SimulationError("sigma must be positive")
        n = alpha.shape[0]
        common = rng.standard_normal(n)[:, None]
        own = rng.standard_normal((n, T))
        return self.sigma * (np.sqrt(self.r) * common + np.sqrt(1 - self.r) * own)

    def cond_mean_final(self, eps, alpha):
        k = eps.shape[1] - 1
        return self.r / (1.0 + (k - 1) * self.r) * eps[:, :-1].sum(axis=1)

    def mean_given_alpha(self, alpha, t):
        return np.zeros_like(alpha)


@dataclass(frozen=True)
class TimeHomogeneousGivenAlpha:
    """Shocks i.i.d. over time given alpha, with conditional mean tag."""

    mean_tag: str = "identity"
    mean_scale: float = 0.5
    sigma: float = 1.0

    def _mean(self, alpha):
        return self.mean_scale * _func(self.mean_tag)(alpha)

    def draw(self, rng, alpha, T):
        if self.sigma <= 0:
            raise SimulationError("sigma must be positive")
        n = alpha.shape[0]
        return self._mean(alpha)[:, None] + self.sigma * rng.standard_normal((n, T))

    def cond_mean_final(self, eps, alpha):
        return self._mean(alpha)

    def mean_given_alpha(self, alpha, t):
        return self._mean(alpha)


@dataclass(frozen=True)
class DriftingGivenAlpha:
    """Time-inhomogeneous conditional means: E[eps_t | alpha] = delta_t * alpha."""

    deltas: tuple
    sigma: float = 1.0

    def draw(self, rng, alpha, T):
        if len(self.deltas) != T:
            raise SimulationError("need one drift coefficient per period")
        if self.sigma <= 0:
            raise SimulationError("sigma must be positive")
        n = alpha.shape[0]
        drift = np.outer(alpha, np.asarray(self.deltas))
        return drift + self.sigma * rng.standard_normal((n, T))

    def cond_mean_final(self, eps, alpha):
        return self.deltas[-1] * alpha

    def mean_given_alpha(self, alpha, t):
        return self.deltas[t] * alpha


# ---------------------------------------------------------------------------
# covariates


@dataclass(frozen=True)
class DiscreteCovariate:
    """Small-support covariate; time-varying draws are independent across t."""

    name: str
    values: tuple = (0.0, 1.0)
    probs: tuple = (0.5, 0.5)
    time_varying: bool = False

    def draw(self, rng, n, T):
        vals = np.asarray(self.values, dtype=float)
        if self.time_varying:
            idx = rng.choice(len(vals), size=(n, T), p=self.probs)
        else:
            idx = np.repeat(rng.choice(len(vals), size=(n, 1), p=self.probs), T, axis=1)
        return vals[idx]


# ---------------------------------------------------------------------------
# outcome models


@dataclass(frozen=True)
class TwoWay:
    """Y_t(0) = alpha + lambda_t + eps_t."""

    lam: tuple

    covariate_names = ()

    def baseline(self, draws, t):
        return draws.alpha + self.lam[t]


@dataclass(frozen=True)
class CovariateSeparable:
    """Y_t(0) = alpha + lambda_t + gamma_t(x) + eps_t."""

    lam: tuple
    gamma: tuple  # function tag per period
    covariate: str = "x"

    @property
    def covariate_names(self):
        return (self.covariate,)

    def baseline(self, draws, t):
        x = draws.X[self.covariate][:, t]
        return draws.alpha + self.lam[t] + _func(self.gamma[t])(x)


@dataclass(frozen=True)
class RandomCoefficient:
    """Y_t(0) = alpha * gamma_t(x) + lambda_t + eps_t."""

    lam: tuple
    gamma: tuple
    covariate: str = "x"

    @property
    def covariate_names(self):
        return (self.covariate,)

    def baseline(self, draws, t):
        x = draws.X[self.covariate][:, t]
        return draws.alpha * _func(self.gamma[t])(x) + self.lam[t]


@dataclass(frozen=True)
class NonseparableMuLambda:
    """Y_t(0) = mu(x_mu, alpha_mu, eps_mu) + lambda_t(x_lam, alpha_lam, eps_lam).

    mu is time-invariant; lambda_t scales its covariate part by lam_scale[t].
    The mu-block shocks are the primary eps draws; the lambda block gets its
    own independent fixed effect and shocks.
    """

    mu_tag: str = "interaction"  # mu = alpha_mu * (1 + x_mu) + eps_mu
    lam_scale: tuple = (0.0, 1.0)
    x_mu: str = "xmu"
    x_lam: str = "xlam"

    @property
    def covariate_names(self):
        return (self.x_mu, self.x_lam)

    def baseline(self, draws, t):
        x_mu = draws.X[self.x_mu][:, t]
        x_lam = draws.X[self.x_lam][:, t]
        if self.mu_tag == "interaction":
            mu = draws.alpha * (1.0 + x_mu)
        elif self.mu_tag == "additive":
            mu = draws.alpha + x_mu
        else:
            raise SimulationError(f"unknown mu tag {self.mu_tag!r}")
        lam = self.lam_scale[t] * (1.0 + x_lam) + draws.alpha_lam + draws.eps_lam[:, t]
        return mu + lam


SINGLE_SHOCK_MODELS = (TwoWay, CovariateSeparable, RandomCoefficient)


# ---------------------------------------------------------------------------
# treatment effects


@dataclass(frozen=True)
class ConstantEffect:
    tau: float
    noise_sd: float = 0.0

    def realized(self, draws):
        return self.tau + self.noise_sd * draws.tau_noise


@dataclass(frozen=True)
class AlphaLinearEffect:
    base: float
    slope: float
    noise_sd: float = 0.0

    def realized(self, draws):
        return self.base + self.slope * draws.alpha + self.noise_sd * draws.tau_noise


# ---------------------------------------------------------------------------
# latent draws and conditional-mean helpers


@dataclass
class SimDraws:
    """All latent variables for one simulated panel, pre-selection."""

    alpha: np.ndarray
    eps: np.ndarray            # (n, T) shocks entering the outcome model
    nu: np.ndarray             # standard normal selection shock
    u: np.ndarray              # uniform selection shock
    eta_cost: np.ndarray       # standard normal cost shock (post period)
    eta_gain: np.ndarray       # standard normal gain shock (post period)
    tau_noise: np.ndarray
    X: dict
    alpha_lam: np.ndarray = None
    eps_lam: np.ndarray = None
    model: object = None
    errors: object = None
    y0: np.ndarray = None      # (n, T) untreated path


def _y0_matrix(model, errors, draws, T):
    y0 = np.empty_like(draws.eps)
    for t in range(T):
        base = model.baseline(draws, t)
        if isinstance(model, SINGLE_SHOCK_MODELS):
            y0[:, t] = base + draws.eps[:, t]
        else:
            # NSP model: mu-block shock enters through eps
            y0[:, t] = base + draws.eps[:, t]
    return y0


def expected_y0(draws, t_index, info) -> np.ndarray:
    """E[Y_t(0) | info] for the registered single-shock models.

    ``info`` is a subset of {"alpha", "eps_pre", "eps_post"}: the fixed
    effect, all pre-treatment shocks, and the post-period shock.
    """
    model, errors = draws.model, draws.errors
    if not isinstance(model, SINGLE_SHOCK_MODELS):
        raise SimulationError("expected_y0 needs a single-shock outcome model")
    if "alpha" not in info:
        raise SimulationError("information sets without the fixed effect are not supported")
    T = draws.eps.shape[1]
    base = model.baseline(draws, t_index)
    if t_index < T - 1:
        eps_mean = draws.eps[:, t_index] if "eps_pre" in info \
            else errors.mean_given_alpha(draws.alpha, t_index)
    else:
        if "eps_post" in info:
            eps_mean = draws.eps[:, t_index]
        elif "eps_pre" in info:
            eps_mean = errors.cond_mean_final(draws.eps, draws.alpha)
        else:
            eps_mean = errors.mean_given_alpha(draws.alpha, t_index)
    return base + eps_mean


# ---------------------------------------------------------------------------
# selection mechanisms


@dataclass(frozen=True)
class Random:
    p: float

    def select(self, draws):
        if not 0.0 < self.p < 1.0:
            raise SimulationError("selection probability must lie in (0, 1)")
        return (draws.u < self.p).astype(float)


@dataclass(frozen=True)
class FixedEffectThreshold:
    c: float = 0.0

    def select(self, draws):
        return (draws.alpha <= self.c).astype(float)


@dataclass(frozen=True)
class AshenfelterThreshold:
    """Select when expected discounted untreated earnings fall below cost."""

    beta: float = 0.0
    info: tuple = ("alpha", "eps_pre")
    cost_mean: float = 0.0
    cost_sd: float = 1.0

    def select(self, draws):
        if not 0.0 <= self.beta <= 1.0:
            raise SimulationError("discount factor must lie in [0, 1]")
        T = draws.eps.shape[1]
        info = frozenset(self.info)
        expected = expected_y0(draws, T - 2, info)
        if self.beta != 0.0:
            expected = expected + self.beta * expected_y0(draws, T - 1, info)
        cost = self.cost_mean + self.cost_sd * draws.eta_cost
        expected_cost = cost if "eta_post" in info \
            else np.full_like(cost, self.cost_mean)
        return (expected <= expected_cost).astype(float)


@dataclass(frozen=True)
class RoyThreshold:
    """Select when the expected gain from treatment exceeds expected cost."""

    effect: object
    info: tuple = ("alpha",)
    cost_mean: float = 0.0
    cost_sd: float = 1.0

    def select(self, draws):
        info = frozenset(self.info)
        gain = self.effect.realized(draws)
        if "eta_post" not in info:
            # gain noise and cost shock live in the post period
            gain = gain - getattr(self.effect, "noise_sd", 0.0) * draws.tau_noise
            expected_cost = np.full_like(gain, self.cost_mean)
        else:
            expected_cost = self.cost_mean + self.cost_sd * draws.eta_cost
        return (gain >= expected_cost).astype(float)


@dataclass(frozen=True)
class SymmetricIndexThreshold:
    """G = 1{ h(alpha) + s(eps_1) + s(eps_2) + nu > c } (two-period models)."""

    c: float = 0.0
    h_tag: str = "identity"
    s_tag: str = "identity"
    use_covariate: str = None
    x_scale: float = 0.0

    def select(self, draws):
        h = _func(self.h_tag)
        s = _func(self.s_tag)
        index = h(draws.alpha) + s(draws.eps[:, -2]) + s(draws.eps[:, -1]) + draws.nu
        if self.use_covariate is not None:
            index = index + self.x_scale * draws.X[self.use_covariate][:, 0]
        return (index > self.c).astype(float)


@dataclass(frozen=True)
class LinearIndexThreshold:
    """G = 1{ index > c } for a linear index in the latent draws.

    The index combines the fixed effect, the anchor pre-period and post-period
    shocks, one baseline covariate, and the idiosyncratic selection shock nu.
    """

    alpha_w: float = 0.0
    pre_w: float = 0.0
    post_w: float = 0.0
    x_name: str = None
    x_w: float = 0.0
    nu_w: float = 1.0
    c: float = 0.0

    def select(self, draws):
        index = (self.alpha_w * draws.alpha
                 + self.pre_w * draws.eps[:, -2]
                 + self.post_w * draws.eps[:, -1]
                 + self.nu_w * draws.nu)
        if self.x_name is not None:
            index = index + self.x_w * draws.X[self.x_name][:, 0]
        return (index > self.c).astype(float)


@dataclass(frozen=True)
class NecessitySign:
    """Select units whose expected untreated trend is non-positive.

    Mirrors the adversarial construction behind the necessary conditions:
    G = 1{nu > c} * 1{E[trend | info] <= 0}, with the trend in demeaned
    outcomes.
    """

    info: tuple = ("alpha", "eps_pre", "eps_post")
    c: float = 0.0

    def select(self, draws):
        T = draws.eps.shape[1]
        info = frozenset(self.info)
        e_post = expected_y0(draws, T - 1, info)
        e_pre = expected_y0(draws, T - 2, info)
        trend = (e_post - e_post.mean()) - (e_pre - e_pre.mean())
        return ((draws.nu > self.c) & (trend <= 0.0)).astype(float)


@dataclass(frozen=True)
class MajorityVote:
    """Aggregate selection: a unit is m members voting via a member mechanism."""

    member: object
    m: int = 1

    def select(self, draws):  # applied at the member level by simulate_panel
        return self.member.select(draws)


def majority_vote_select(votes: np.ndarray) -> np.ndarray:
    """Group decisions from member votes: 1 when the vote share reaches 0.5.

    ``votes`` has shape (n_groups, m).
    """
    votes = np.asarray(votes, dtype=float)
    if votes.ndim != 2 or votes.shape[1] < 1:
        raise SimulationError("votes must be a (n_groups, m) array with m >= 1")
    return (votes.mean(axis=1) >= 0.5).astype(float)


# ---------------------------------------------------------------------------
# simulation driver


@dataclass(frozen=True)
class SimConfig:
    n: int
    model: object
    errors: object
    selection: object
    effect: object = ConstantEffect(0.0)
    n_periods: int = 2
    covariates: tuple = ()
    alpha_sd: float = 1.0

    def __post_init__(self):
        if self.n_periods < 2:
            raise SimulationError("need at least two periods")
        have = {c.name for c in self.covariates}
        need = set(self.model.covariate_names)
        if not need <= have:
            raise SimulationError(f"model needs covariates {sorted(need - have)}")


@dataclass
class LatentPanel:
    """Observable panel plus the latent draws and potential outcomes."""

    dataset: PanelDataset
    draws: SimDraws
    y0: np.ndarray
    y1: np.ndarray
    tau: np.ndarray
    group: np.ndarray
    config: SimConfig

    @property
    def true_att(self) -> float:
        treated = (self.group != 0.0) & (self.group != NEVER)
        return float(self.tau[treated].mean())


def _draw_latents(config: SimConfig, rng) -> SimDraws:
    n, T = config.n, config.n_periods
    if isinstance(config.selection, MajorityVote):
        n = n * config.selection.m
    alpha = config.alpha_sd * rng.standard_normal(n)
    X = {c.name: c.draw(rng, n, T) for c in config.covariates}
    draws = SimDraws(
        alpha=alpha,
        eps=config.errors.draw(rng, alpha, T),
        nu=rng.standard_normal(n),
        u=rng.uniform(size=n),
        eta_cost=rng.standard_normal(n),
        eta_gain=rng.standard_normal(n),
        tau_noise=rng.standard_normal(n),
        X=X,
        model=config.model,
        errors=config.errors,
    )
    if isinstance(config.model, NonseparableMuLambda):
        draws.alpha_lam = rng.standard_normal(n)
        draws.eps_lam = rng.standard_normal((n, T))
    return draws


def _aggregate_members(arr, m):
    if arr is None:
        return None
    if arr.ndim == 1:
        return arr.reshape(-1, m).mean(axis=1)
    n_members, T = arr.shape
    return arr.reshape(-1, m, T).mean(axis=1)


def simulate_panel(config: SimConfig, seed) -> LatentPanel:
    """Draw one panel. Identical (config, seed) pairs give identical output."""
    rng = np.random.default_rng(seed)
    T = config.n_periods
    draws = _draw_latents(config, rng)
    draws.y0 = _y0_matrix(config.model, config.errors, draws, T)
    tau = config.effect.realized(draws)
    group = config.selection.select(draws)

    if isinstance(config.selection, MajorityVote):
        m = config.selection.m
        votes = group.reshape(-1, m)
        group = majority_vote_select(votes)
        draws.y0 = _aggregate_members(draws.y0, m)
        draws.alpha = _aggregate_members(draws.alpha, m)
        draws.eps = _aggregate_members(draws.eps, m)
        draws.X = {k: _aggregate_members(v, m) for k, v in draws.X.items()}
        tau = _aggregate_members(tau, m)

    share = group.mean()
    if share <= 0.0 or share >= 1.0:
        raise SimulationError(
            f"degenerate selection: realized treated share {share:.3f}"
        )

    y0 = draws.y0
    y1 = y0.copy()
    y1[:, -1] = y0[:, -1] + tau
    observed = y0.copy()
    treated = group == 1.0
    observed[treated, -1] = y1[treated, -1]

    cov_names = tuple(config.model.covariate_names)
    covariates = (
        np.column_stack([draws.X[name][:, 0] for name in cov_names])
        if cov_names else None
    )
    dataset = from_arrays(
        groups=group,
        outcomes=observed,
        periods=tuple(range(1, T + 1)),
        covariates=covariates,
        covariate_names=cov_names,
    )
    return LatentPanel(dataset=dataset, draws=draws, y0=y0, y1=y1, tau=tau,
                       group=group, config=config)


# ---------------------------------------------------------------------------
# parallel-trends gap measurement


def measure_pt_gap(latent: LatentPanel, use_latents: bool = False,
                   mask: np.ndarray = None) -> dict:
    """Parallel-trends violation from the untreated potential-outcome paths.

    With ``use_latents``, also splits the gap into the part due to selection
    on the post-period shock and the part due to the deviation of the
    conditional mean from the pre-period outcome; the two parts sum to the
    gap exactly. ``mask`` restricts to a subpopulation (covariate stratum).
    """
    g = latent.group
    y0 = latent.y0
    if mask is None:
        mask = np.ones(g.shape[0], dtype=bool)
    g = g[mask]
    if g.min() == g.max():
        raise SimulationError("subpopulation contains a single group")
    dy = (y0[mask, -1] - y0[mask, -1].mean()) - (y0[mask, -2] - y0[mask, -2].mean())
    p = g.mean()
    gap = float(np.mean(g * dy) / (p * (1 - p)))
    out = {"gap": gap}
    if use_latents:
        cond = expected_y0(latent.draws, y0.shape[1] - 1, frozenset({"alpha", "eps_pre"}))
        cond = cond[mask]
        post = y0[mask, -1] - y0[mask, -1].mean()
        pre = y0[mask, -2] - y0[mask, -2].mean()
        cond_c = cond - cond.mean()
        out["selection_on_post_shock"] = float(np.mean(g * (post - cond_c)) / (p * (1 - p)))
        out["martingale_deviation"] = float(np.mean(g * (cond_c - pre)) / (p * (1 - p)))
    return out


# ---------------------------------------------------------------------------
# key-value config trees (TOML) -> SimConfig


def _build_kinded(section: dict, kinds: dict, what: str):
    section = dict(section)
    try:
        kind = section.pop("kind")
    except KeyError:
        raise SimulationError(f"{what} section needs a 'kind' key")
    try:
        cls = kinds[kind]
    except KeyError:
        raise SimulationError(f"unknown {what} kind {kind!r}; "
                              f"available: {sorted(kinds)}")
    for key in ("lam", "gamma", "deltas", "info", "lam_scale", "values",
                "probs", "cohorts"):
        if key in section and isinstance(section[key], list):
            section[key] = tuple(section[key])
    try:
        return cls(**section)
    except TypeError as e:
        raise SimulationError(f"bad {what} parameters for kind {kind!r}: {e}")


_MODEL_KINDS = {
    "two_way": TwoWay,
    "covariate_separable": CovariateSeparable,
    "random_coefficient": RandomCoefficient,
    "nonseparable": NonseparableMuLambda,
}
_ERROR_KINDS = {
    "iid": IIDNormal,
    "martingale": Martingale,
    "ar1": AR1,
    "exchangeable": ExchangeableNormal,
    "time_homogeneous": TimeHomogeneousGivenAlpha,
    "drifting": DriftingGivenAlpha,
}
_EFFECT_KINDS = {
    "constant": ConstantEffect,
    "alpha_linear": AlphaLinearEffect,
}


def _selection_kinds():
    return {
        "random": Random,
        "fixed_effect": FixedEffectThreshold,
        "ashenfelter": AshenfelterThreshold,
        "symmetric_index": SymmetricIndexThreshold,
        "linear_index": LinearIndexThreshold,
        "necessity_sign": NecessitySign,
    }


def config_from_mapping(mapping: dict) -> SimConfig:
    """Build a SimConfig from a key-value tree (parsed TOML).

    Expected keys: n, optional n_periods/alpha_sd, tables 'model', 'errors',
    'selection', optional 'effect', and an optional 'covariates' array of
    tables. Each table carries a 'kind' plus that kind's parameters.
    """
    mapping = dict(mapping)
    for key in ("n", "model", "errors", "selection"):
        if key not in mapping:
            raise SimulationError(f"simulation config missing {key!r}")
    selection = mapping["selection"]
    if isinstance(selection, dict) and selection.get("kind") == "majority_vote":
        inner = dict(selection)
        inner.pop("kind")
        m = inner.pop("m", 1)
        selection = MajorityVote(
            member=_build_kinded(inner.pop("member", {}), _selection_kinds(),
                                 "member selection"),
            m=int(m),
        )
    else:
        selection = _build_kinded(selection, _selection_kinds(), "selection")
    return SimConfig(
        n=int(mapping["n"]),
        n_periods=int(mapping.get("n_periods", 2)),
        alpha_sd=float(mapping.get("alpha_sd", 1.0)),
        model=_build_kinded(mapping["model"], _MODEL_KINDS, "model"),
        errors=_build_kinded(mapping["errors"], _ERROR_KINDS, "errors"),
        selection=selection,
        effect=_build_kinded(mapping.get("effect", {"kind": "constant", "tau": 0.0}),
                             _EFFECT_KINDS, "effect"),
        covariates=tuple(
            _build_kinded(c, {"discrete": DiscreteCovariate}, "covariate")
            if "kind" in c else DiscreteCovariate(**{
                k: tuple(v) if isinstance(v, list) else v for k, v in c.items()
            })
            for c in mapping.get("covariates", [])
        ),
    )


# ---------------------------------------------------------------------------
# staggered adoption


@dataclass(frozen=True)
class AlphaQuantileCohorts:
    """Adoption timing driven by the fixed effect.

    The highest-alpha ``never_share`` of units never adopt; the rest are split
    equally across ``cohorts`` (earliest cohort gets the lowest alphas).
    """

    cohorts: tuple
    never_share: float = 0.4

    def assign(self, draws, T):
        if not 0.0 < self.never_share < 1.0:
            raise SimulationError("never_share must lie in (0, 1)")
        for g in self.cohorts:
            if not 1 < g <= T:
                raise SimulationError(f"cohort {g} outside the period range")
        n = draws.alpha.shape[0]
        order = np.argsort(draws.alpha, kind="stable")
        group = np.full(n, NEVER)
        n_treated = int(round(n * (1.0 - self.never_share)))
        per = n_treated // len(self.cohorts)
        start = 0
        for g in sorted(self.cohorts):
            group[order[start:start + per]] = float(g)
            start += per
        return group


@dataclass(frozen=True)
class ShockThresholdCohort:
    """One adoption cohort, selected on the shock of the period before it."""

    g: int
    c: float = 0.0

    def assign(self, draws, T):
        if not 1 < self.g <= T:
            raise SimulationError(f"cohort {self.g} outside the period range")
        group = np.full(draws.alpha.shape[0], NEVER)
        group[draws.eps[:, self.g - 2] <= self.c] = float(self.g)
        return group


@dataclass(frozen=True)
class StaggeredConfig:
    """Two-way outcome model with staggered adoption."""

    n: int
    n_periods: int
    lam: tuple
    errors: object
    assignment: object
    tau: float = 0.0
    alpha_sd: float = 1.0

    def __post_init__(self):
        if len(self.lam) != self.n_periods:
            raise SimulationError("need one time effect per period")


def simulate_staggered_panel(config: StaggeredConfig, seed) -> LatentPanel:
    """Draw one staggered panel; cohort labels are first treatment periods."""
    rng = np.random.default_rng(seed)
    n, T = config.n, config.n_periods
    alpha = config.alpha_sd * rng.standard_normal(n)
    eps = config.errors.draw(rng, alpha, T)
    draws = SimDraws(
        alpha=alpha, eps=eps, nu=rng.standard_normal(n), u=rng.uniform(size=n),
        eta_cost=rng.standard_normal(n), eta_gain=rng.standard_normal(n),
        tau_noise=rng.standard_normal(n), X={}, errors=config.errors,
    )
    y0 = alpha[:, None] + np.asarray(config.lam)[None, :] + eps
    draws.y0 = y0
    group = config.assignment.assign(draws, T)
    labels = np.unique(group)
    if NEVER not in labels or len(labels) < 2:
        raise SimulationError(
            "degenerate staggered assignment: need treated and never-treated units"
        )
    periods = np.arange(1, T + 1)
    treated_now = periods[None, :] >= group[:, None]
    tau = np.full(n, config.tau)
    y1 = y0 + config.tau
    observed = np.where(treated_now, y1, y0)
    dataset = from_arrays(groups=group, outcomes=observed, periods=tuple(periods))
    return LatentPanel(dataset=dataset, draws=draws, y0=y0, y1=y1, tau=tau,
                       group=group, config=config)


def conditional_pt_gap(latent: LatentPanel, stratify: tuple = (),
                       require_constant: tuple = ()) -> dict:
    """Treated-share-weighted average of within-stratum gaps.

    ``stratify`` names covariates whose full trajectories define strata;
    ``require_constant`` names covariates that must not change over time
    (units that change are dropped, as in the no-change subpopulation).
    """
    X = latent.draws.X
    n = latent.group.shape[0]
    keep = np.ones(n, dtype=bool)
    for name in require_constant:
        keep &= np.all(X[name] == X[name][:, [0]], axis=1)
    if not keep.any():
        raise SimulationError("no units left after the no-change restriction")
    key_cols = [X[name][:, t] for name in stratify for t in range(X[name].shape[1])]
    if not key_cols:
        return {"gap": measure_pt_gap(latent, mask=keep)["gap"], "n_strata": 1}
    keys = np.column_stack(key_cols)
    uniq, inverse = np.unique(keys[keep], axis=0, return_inverse=True)
    idx_keep = np.flatnonzero(keep)
    total_weight = 0.0
    acc = 0.0
    n_used = 0
    for s in range(len(uniq)):
        members = idx_keep[inverse == s]
        mask = np.zeros(n, dtype=bool)
        mask[members] = True
        g = latent.group[mask]
        if g.min() == g.max():
            continue  # stratum without both groups carries no information
        w = float(g.sum())
        acc += w * measure_pt_gap(latent, mask=mask)["gap"]
        total_weight += w
        n_used += 1
    if n_used == 0:
        raise SimulationError("no stratum contains both groups")
    return {"gap": acc / total_weight, "n_strata": n_used}
