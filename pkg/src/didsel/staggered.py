"""Staggered adoption: group-time effects against the never-treated group."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError
from .estimators import DidEstimate, _estimate_from_influence
from .panel import NEVER, PanelDataset


@dataclass(frozen=True)
class GroupTimeCell:
    group: float
    period: int
    estimate: DidEstimate
    is_pretreatment: bool


@dataclass(frozen=True)
class GroupTimeAttTable:
    """Estimates indexed by (first-treatment group, period).

    Cells with period < group are pre-treatment placebos; base period for
    every cell of group g is g - 1.
    """

    cells: tuple

    def cell(self, group, period) -> GroupTimeCell:
        for c in self.cells:
            if c.group == group and c.period == period:
                return c
        raise KeyError((group, period))

    def to_rows(self):
        return [
            {
                "g": int(c.group),
                "t": c.period,
                "estimate": c.estimate.point,
                "se": c.estimate.se,
                "is_pretreatment": c.is_pretreatment,
            }
            for c in self.cells
        ]


def _check_staggered(dataset: PanelDataset):
    if dataset.is_binary:
        raise EstimationError("staggered estimators need staggered group labels")
    if not dataset.group_mask(NEVER).any():
        raise EstimationError("no never-treated units to compare against")


def att_gt(dataset: PanelDataset, g, t) -> DidEstimate:
    """Group-time effect: long difference from the base period g-1.

    point = mean(Y_t - Y_{g-1} | group g) - mean(Y_t - Y_{g-1} | never
    treated). For t >= g this telescopes the per-period parallel-trends
    equalities into a valid effect estimate; for t < g it is a placebo.
    """
    _check_staggered(dataset)
    g = float(g)
    if g <= dataset.periods[0]:
        raise EstimationError(f"group {g} has no pre-treatment base period")
    cohort = dataset.group_mask(g)
    never = dataset.group_mask(NEVER)
    if not cohort.any():
        raise EstimationError(f"no units in adoption group {g}")
    base = int(g) - 1
    dy = dataset.outcome(t) - dataset.outcome(base)
    mask = cohort | never
    d = cohort[mask].astype(float)
    y = dy[mask]
    p = d.mean()
    m1, m0 = y[d == 1].mean(), y[d == 0].mean()
    influence = d / p * (y - m1) - (1 - d) / (1 - p) * (y - m0)
    return _estimate_from_influence(m1 - m0, influence)


def att_gt_table(dataset: PanelDataset) -> GroupTimeAttTable:
    """All (g, t) cells for t from the period after the first to the last."""
    _check_staggered(dataset)
    groups = sorted(g for g in np.unique(dataset.groups) if g != NEVER)
    cells = []
    for g in groups:
        for t in dataset.periods[1:]:
            cells.append(
                GroupTimeCell(
                    group=g,
                    period=t,
                    estimate=att_gt(dataset, g, t),
                    is_pretreatment=t < g,
                )
            )
    return GroupTimeAttTable(cells=tuple(cells))


def pt_mp_check(dataset: PanelDataset) -> list:
    """Pre-treatment one-period trend gaps per adoption group.

    For every group g and every period t < g (t past the first period),
    reports mean(Y_t - Y_{t-1} | group g) - mean(Y_t - Y_{t-1} | never
    treated) with a two-sample influence-function se.
    """
    _check_staggered(dataset)
    never = dataset.group_mask(NEVER)
    groups = sorted(g for g in np.unique(dataset.groups) if g != NEVER)
    rows = []
    for g in groups:
        cohort = dataset.group_mask(g)
        for j, t in enumerate(dataset.periods[1:], start=1):
            if t >= g:
                continue
            prev = dataset.periods[j - 1]
            dy = dataset.outcome(t) - dataset.outcome(prev)
            mask = cohort | never
            d = cohort[mask].astype(float)
            y = dy[mask]
            p = d.mean()
            m1, m0 = y[d == 1].mean(), y[d == 0].mean()
            influence = d / p * (y - m1) - (1 - d) / (1 - p) * (y - m0)
            est = _estimate_from_influence(m1 - m0, influence)
            rows.append({"g": int(g), "t": t, "gap": est.point, "se": est.se})
    return rows
