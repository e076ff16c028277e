"""Design matrices, OLS via normal equations, and residualization."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DesignSpecError, SingularityError
from .panel import PanelDataset

#: Declare singularity when min/max Cholesky pivot ratio falls below this.
PIVOT_TOLERANCE = 1e-10


@dataclass(frozen=True)
class Term:
    """One basis term: intercept, a covariate, or an integer power of one."""

    name: str | None = None
    power: int = 1

    @property
    def is_intercept(self) -> bool:
        return self.name is None

    def label(self) -> str:
        if self.is_intercept:
            return "1"
        if self.power == 1:
            return self.name
        return f"{self.name}^{self.power}"


@dataclass(frozen=True)
class DesignSpec:
    """Ordered list of basis terms defining the regression design."""

    terms: tuple

    def __post_init__(self):
        labels = [t.label() for t in self.terms]
        if len(set(labels)) != len(labels):
            raise DesignSpecError(f"duplicate design terms in {labels}")

    @classmethod
    def parse(cls, text: str) -> "DesignSpec":
        """Parse a comma list like ``1,age,educ,age^2,age^3``."""
        terms = []
        for raw in text.split(","):
            raw = raw.strip()
            if not raw:
                continue
            if raw == "1":
                terms.append(Term())
            elif "^" in raw:
                name, _, exp = raw.partition("^")
                try:
                    k = int(exp)
                except ValueError:
                    raise DesignSpecError(f"bad exponent in term {raw!r}")
                if k < 2:
                    raise DesignSpecError(f"power terms need exponent >= 2: {raw!r}")
                terms.append(Term(name=name.strip(), power=k))
            else:
                terms.append(Term(name=raw))
        if not terms:
            raise DesignSpecError("empty design specification")
        return cls(terms=tuple(terms))

    @classmethod
    def intercept_only(cls) -> "DesignSpec":
        return cls(terms=(Term(),))

    def labels(self) -> list:
        return [t.label() for t in self.terms]


#: Basis used for the job-training application: intercept, all baseline
#: covariates, plus age squared, age cubed, and schooling squared.
NSW_DEFAULT_DESIGN = "1,age,educ,nodegree,married,black,hisp,age^2,age^3,educ^2"


@dataclass(frozen=True)
class FitResult:
    """OLS output: coefficients per term, residuals per row, conditioning."""

    coefficients: np.ndarray
    residuals: np.ndarray
    condition: float
    term_labels: tuple


def build_design(dataset: PanelDataset, spec: DesignSpec, subset=None) -> np.ndarray:
    """Design matrix for the units selected by the boolean mask ``subset``.

    Row order follows unit order within the subset; column order follows
    term order in the spec.
    """
    if subset is None:
        subset = np.ones(dataset.n_units, dtype=bool)
    cols = []
    n = int(subset.sum())
    for term in spec.terms:
        if term.is_intercept:
            cols.append(np.ones(n))
        else:
            if term.name not in dataset.covariate_names:
                raise DesignSpecError(
                    f"design term refers to unknown covariate {term.name!r}; "
                    f"available: {list(dataset.covariate_names)}"
                )
            x = dataset.covariate(term.name)[subset]
            cols.append(x if term.power == 1 else x**term.power)
    return np.column_stack(cols)


def ols(design: np.ndarray, response: np.ndarray, term_labels=None) -> FitResult:
    """Least squares via the normal equations with a Cholesky factorization."""
    design = np.asarray(design, dtype=float)
    response = np.asarray(response, dtype=float)
    n, k = design.shape
    if term_labels is None:
        term_labels = tuple(f"x{j}" for j in range(k))
    if n < k:
        raise SingularityError(f"fewer rows ({n}) than columns ({k})", term_labels)
    xtx = design.T @ design
    xty = design.T @ response
    try:
        chol = scipy.linalg.cholesky(xtx, lower=True)
    except scipy.linalg.LinAlgError:
        raise SingularityError(
            "normal matrix is not positive definite: "
            f"columns {_offending_columns(design, term_labels)}",
            _offending_columns(design, term_labels),
        )
    pivots = np.diag(chol)
    ratio = float(pivots.min() / pivots.max())
    if ratio < PIVOT_TOLERANCE:
        bad = _offending_columns(design, term_labels)
        raise SingularityError(
            f"design is numerically rank deficient (pivot ratio {ratio:.2e}); "
            f"suspect columns {bad}",
            bad,
        )
    coef = scipy.linalg.cho_solve((chol, True), xty)
    residuals = response - design @ coef
    return FitResult(
        coefficients=coef,
        residuals=residuals,
        condition=1.0 / ratio,
        term_labels=tuple(term_labels),
    )


def _offending_columns(design, term_labels):
    """Columns beyond the numerical rank, identified via pivoted QR."""
    _, r, piv = scipy.linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    scale = diag.max() if diag.size else 0.0
    if scale == 0.0:
        return tuple(term_labels)
    rank = int((diag > PIVOT_TOLERANCE * scale).sum())
    return tuple(term_labels[j] for j in piv[rank:])


def fit_outcome(dataset: PanelDataset, response: np.ndarray, spec: DesignSpec,
                fit_subset=None) -> FitResult:
    """OLS of a per-unit response on the design, restricted to ``fit_subset``."""
    if fit_subset is None:
        fit_subset = np.ones(dataset.n_units, dtype=bool)
    design = build_design(dataset, spec, fit_subset)
    return ols(design, np.asarray(response, dtype=float)[fit_subset], spec.labels())


def predict(dataset: PanelDataset, spec: DesignSpec, fit: FitResult,
            apply_subset=None) -> np.ndarray:
    """Fitted values for the units in ``apply_subset``."""
    design = build_design(dataset, spec, apply_subset)
    return design @ fit.coefficients


def residualize(dataset: PanelDataset, period, spec: DesignSpec,
                fit_subset=None, apply_subset=None) -> np.ndarray:
    """Outcome minus its fitted linear projection.

    The projection is fit on ``fit_subset`` and evaluated on ``apply_subset``
    (full sample by default for both).
    """
    if apply_subset is None:
        apply_subset = np.ones(dataset.n_units, dtype=bool)
    y = dataset.outcome(period)
    fit = fit_outcome(dataset, y, spec, fit_subset)
    return y[apply_subset] - predict(dataset, spec, fit, apply_subset)
