import numpy as np
import pytest

from didsel import DesignSpec, DesignSpecError, SingularityError, ols
from didsel.regression import Term, build_design, fit_outcome, residualize


class TestDesignSpec:
    def test_parse(self):
        spec = DesignSpec.parse("1,age,educ,age^2")
        assert spec.labels() == ["1", "age", "educ", "age^2"]
        assert spec.terms[0].is_intercept
        assert spec.terms[3] == Term(name="age", power=2)

    def test_duplicate_terms(self):
        with pytest.raises(DesignSpecError, match="duplicate"):
            DesignSpec.parse("1,age,age")

    def test_bad_exponent(self):
        with pytest.raises(DesignSpecError, match="exponent"):
            DesignSpec.parse("1,age^x")
        with pytest.raises(DesignSpecError, match="exponent >= 2"):
            DesignSpec.parse("1,age^1")

    def test_empty(self):
        with pytest.raises(DesignSpecError, match="empty"):
            DesignSpec.parse(" , ")

    def test_unknown_covariate(self, small_panel):
        with pytest.raises(DesignSpecError, match="unknown covariate"):
            build_design(small_panel, DesignSpec.parse("1,zzz"))


class TestOls:
    def test_matches_lstsq(self):
        rng = np.random.default_rng(0)
        X = np.column_stack([np.ones(200), rng.normal(size=(200, 3))])
        y = rng.normal(size=200)
        fit = ols(X, y)
        expected, *_ = np.linalg.lstsq(X, y, rcond=None)
        np.testing.assert_allclose(fit.coefficients, expected, atol=1e-10)
        np.testing.assert_allclose(fit.residuals, y - X @ expected, atol=1e-10)

    def test_singular_names_offender(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=100)
        X = np.column_stack([np.ones(100), x, 2 * x])
        with pytest.raises(SingularityError) as exc:
            ols(X, rng.normal(size=100), ("1", "x", "x2"))
        assert "x2" in exc.value.columns or "x" in exc.value.columns

    def test_more_columns_than_rows(self):
        with pytest.raises(SingularityError, match="fewer rows"):
            ols(np.ones((2, 3)), np.ones(2))

    def test_scaling_invariance_of_fit(self):
        rng = np.random.default_rng(2)
        X = np.column_stack([np.ones(300), rng.normal(size=300)])
        y = 1.0 + 2.0 * X[:, 1] + rng.normal(size=300)
        base = ols(X, y)
        scaled = X.copy()
        scaled[:, 1] *= 10.0
        refit = ols(scaled, y)
        np.testing.assert_allclose(scaled @ refit.coefficients,
                                   X @ base.coefficients, atol=1e-9)

    def test_residualize_idempotent(self, small_panel):
        spec = DesignSpec.parse("1,x")
        resid = residualize(small_panel, 2, spec)
        design = build_design(small_panel, spec)
        refit = ols(design, resid, spec.labels())
        np.testing.assert_allclose(refit.coefficients, 0.0, atol=1e-10)

    def test_fit_outcome_on_subset(self, small_panel):
        spec = DesignSpec.parse("1,x")
        control = small_panel.group_mask(0.0)
        fit = fit_outcome(small_panel, small_panel.outcome(2), spec, control)
        assert fit.coefficients.shape == (2,)
        assert fit.residuals.shape == (int(control.sum()),)
