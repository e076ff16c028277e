"""Panel data model: ingestion, validation, and group/period aggregation.

Datasets are long-form on disk (one row per unit-period) and wide in memory
(outcome matrix of shape n_units x n_periods). Panels must be balanced;
covariates are baseline characteristics, one value per unit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import EstimationError, SchemaError, ValidationError

#: Group label for never-treated units in staggered mode.
NEVER = math.inf


@dataclass(frozen=True)
class ColumnSchema:
    """Column-name mapping for long-form CSV files."""

    id: str = "id"
    period: str = "year"
    outcome: str = "re"
    group: str = "treat"


@dataclass(frozen=True)
class PanelDataset:
    """Balanced panel with binary or staggered group labels.

    Attributes:
        ids: per-unit identifiers (opaque, order defines row order).
        periods: sorted period labels (ints).
        groups: per-unit group label; 0/1 in binary mode, first treatment
            period or ``NEVER`` (inf) in staggered mode.
        outcomes: (n_units, n_periods) outcome matrix.
        covariates: (n_units, n_covariates) baseline covariate matrix.
        covariate_names: column names for ``covariates``.
    """

    ids: tuple
    periods: tuple
    groups: np.ndarray
    outcomes: np.ndarray
    covariates: np.ndarray
    covariate_names: tuple = ()
    balanced: bool = True

    def __post_init__(self):
        self.groups.setflags(write=False)
        self.outcomes.setflags(write=False)
        self.covariates.setflags(write=False)
        labels = set(np.unique(self.groups))
        if not self.is_binary:
            lo, hi = self.periods[0], self.periods[-1]
            bad = [g for g in labels if g != NEVER and not (lo < g <= hi)]
            if bad:
                raise ValidationError(
                    f"staggered group labels outside period range: {sorted(bad)}"
                )
            if NEVER not in labels:
                raise ValidationError("staggered panel has no never-treated units")
            if labels == {NEVER}:
                raise ValidationError("staggered panel has no treated units")
        else:
            if labels != {0.0, 1.0}:
                raise ValidationError(
                    "binary panel needs at least one treated and one comparison unit"
                )

    @property
    def n_units(self) -> int:
        return len(self.ids)

    @property
    def is_binary(self) -> bool:
        return set(np.unique(self.groups)) <= {0.0, 1.0}

    def period_index(self, period) -> int:
        try:
            return self.periods.index(period)
        except ValueError:
            raise ValidationError(f"period {period!r} not in panel periods {self.periods}")

    def group_mask(self, group) -> np.ndarray:
        return self.groups == group

    def outcome(self, period) -> np.ndarray:
        return self.outcomes[:, self.period_index(period)]

    def covariate(self, name) -> np.ndarray:
        try:
            j = self.covariate_names.index(name)
        except ValueError:
            raise ValidationError(f"unknown covariate {name!r}")
        return self.covariates[:, j]

    def to_frame(self, schema: ColumnSchema = ColumnSchema()) -> pd.DataFrame:
        """Long-form DataFrame, inverse of load_panel_csv."""
        n, T = self.outcomes.shape
        group_repr = [
            "inf" if g == NEVER else str(int(g)) for g in self.groups
        ]
        frames = []
        for j, p in enumerate(self.periods):
            d = {
                schema.id: list(self.ids),
                schema.period: [p] * n,
                schema.outcome: self.outcomes[:, j],
                schema.group: group_repr,
            }
            for k, name in enumerate(self.covariate_names):
                d[name] = self.covariates[:, k]
            frames.append(pd.DataFrame(d))
        out = pd.concat(frames, ignore_index=True)
        return out.sort_values([schema.id, schema.period], kind="stable").reset_index(drop=True)

    def to_csv(self, path, schema: ColumnSchema = ColumnSchema()) -> None:
        self.to_frame(schema).to_csv(path, index=False)


def _parse_group(raw) -> float:
    if isinstance(raw, str) and raw.strip().lower() in ("inf", "infinity", "never"):
        return NEVER
    val = float(raw)
    if not val.is_integer() and not math.isinf(val):
        raise ValidationError(f"group label must be an integer or 'inf', got {raw!r}")
    return val


def load_panel_csv(path, schema: ColumnSchema = ColumnSchema()) -> PanelDataset:
    """Load and validate a balanced long-form panel.

    All columns beyond id/period/outcome/group are treated as baseline
    covariates (first-period value per unit).
    """
    try:
        df = pd.read_csv(path, dtype={schema.group: str})
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path}: empty file")
    required = [schema.id, schema.period, schema.outcome, schema.group]
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise SchemaError(f"{path}: missing required columns {missing}")
    if len(df) == 0:
        raise SchemaError(f"{path}: no data rows")

    outcome = pd.to_numeric(df[schema.outcome], errors="coerce")
    bad = outcome.isna() & df[schema.outcome].notna()
    if bad.any() or outcome.isna().any():
        row = int(np.flatnonzero(outcome.isna())[0]) + 2  # header is row 1
        raise SchemaError(
            f"{path}: non-numeric outcome in column {schema.outcome!r} at row {row}"
        )
    df[schema.outcome] = outcome

    periods = tuple(sorted(int(p) for p in df[schema.period].unique()))
    dup = df.duplicated([schema.id, schema.period])
    if dup.any():
        ids = sorted(df.loc[dup, schema.id].unique().tolist())
        raise ValidationError(f"duplicate (id, period) rows for units {ids[:10]}")

    counts = df.groupby(schema.id)[schema.period].nunique()
    unbalanced = counts[counts != len(periods)]
    if len(unbalanced):
        raise ValidationError(
            f"unbalanced panel: units {sorted(unbalanced.index.tolist())[:10]} "
            f"missing periods (expected {len(periods)} periods)"
        )

    group_per_unit = df.groupby(schema.id)[schema.group].nunique()
    varying = group_per_unit[group_per_unit > 1]
    if len(varying):
        raise ValidationError(
            f"group label varies within units {sorted(varying.index.tolist())[:10]}"
        )

    wide = df.pivot(index=schema.id, columns=schema.period, values=schema.outcome)
    wide = wide[list(periods)]
    ids = tuple(wide.index.tolist())
    first = df.sort_values(schema.period, kind="stable").groupby(schema.id).first()
    first = first.loc[list(ids)]
    groups = np.array([_parse_group(v) for v in first[schema.group]], dtype=float)

    cov_names = tuple(c for c in df.columns if c not in required)
    if cov_names:
        cov = first[list(cov_names)].apply(pd.to_numeric, errors="raise")
        covariates = cov.to_numpy(dtype=float)
    else:
        covariates = np.empty((len(ids), 0))

    return PanelDataset(
        ids=ids,
        periods=periods,
        groups=groups,
        outcomes=wide.to_numpy(dtype=float),
        covariates=covariates,
        covariate_names=cov_names,
    )


def from_arrays(groups, outcomes, periods=None, covariates=None, covariate_names=()):
    """Build a PanelDataset from in-memory arrays (simulation, tests)."""
    outcomes = np.asarray(outcomes, dtype=float)
    groups = np.asarray(groups, dtype=float)
    n, T = outcomes.shape
    if periods is None:
        periods = tuple(range(1, T + 1))
    if covariates is None:
        covariates = np.empty((n, 0))
    return PanelDataset(
        ids=tuple(range(1, n + 1)),
        periods=tuple(int(p) for p in periods),
        groups=groups.copy(),
        outcomes=outcomes.copy(),
        covariates=np.asarray(covariates, dtype=float).copy(),
        covariate_names=tuple(covariate_names),
    )


def group_mean(dataset: PanelDataset, period, group, diff_from=None) -> float:
    """Mean outcome (or first difference from ``diff_from``) over one group."""
    mask = dataset.group_mask(group)
    if not mask.any():
        raise EstimationError(f"no units in group {group!r}")
    y = dataset.outcome(period)
    if diff_from is not None:
        y = y - dataset.outcome(diff_from)
    return float(y[mask].mean())
