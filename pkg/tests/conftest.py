import pathlib

import numpy as np
import pytest

from didsel import DesignSpec, NSW_DEFAULT_DESIGN, from_arrays, load_panel_csv

DATA = pathlib.Path(__file__).resolve().parents[1] / "data" / "nsw_long.csv"


@pytest.fixture(scope="session")
def nsw_path():
    return DATA


@pytest.fixture(scope="session")
def nsw():
    return load_panel_csv(DATA)


@pytest.fixture(scope="session")
def nsw_spec():
    return DesignSpec.parse(NSW_DEFAULT_DESIGN)


@pytest.fixture()
def small_panel():
    """Deterministic 2-period binary panel with one covariate."""
    rng = np.random.default_rng(42)
    n = 400
    x = rng.normal(size=n)
    g = (rng.uniform(size=n) < 0.4).astype(float)
    y1 = x + rng.normal(size=n)
    y2 = 0.5 + x + g * 2.0 + rng.normal(size=n)
    return from_arrays(groups=g, outcomes=np.column_stack([y1, y2]),
                       covariates=x[:, None], covariate_names=("x",))
