"""Difference-in-differences under selection into treatment.

Panel ingestion, 2x2 and regression-adjusted DiD with influence-function
inference, persistence-indexed sensitivity analysis and identified sets,
staggered group-time effects, and a Monte Carlo laboratory that checks when
parallel trends holds or fails by construction.
"""

from .errors import (
    DesignSpecError,
    DidselError,
    EstimationError,
    ScenarioCatalogError,
    SchemaError,
    SimulationError,
    SingularityError,
    ValidationError,
)
from .estimators import (
    BootstrapComparison,
    DidEstimate,
    IdentifiedSet,
    RhoEstimate,
    SensitivityCurve,
    att_at_rho,
    baseline_bias,
    did_2x2,
    estimate_rho,
    identified_set,
    influence_se_oracle_check,
    reg_adjusted_did,
    rho_bounds_from_pct_change,
    sensitivity_curve,
)
from .panel import (
    NEVER,
    ColumnSchema,
    PanelDataset,
    from_arrays,
    group_mean,
    load_panel_csv,
)
from .regression import NSW_DEFAULT_DESIGN, DesignSpec, FitResult, Term, ols
from .scenarios import SCENARIOS, SimVerdict, run_bank, run_scenario
from .simulate import (
    LatentPanel,
    SimConfig,
    StaggeredConfig,
    conditional_pt_gap,
    majority_vote_select,
    measure_pt_gap,
    simulate_panel,
    simulate_staggered_panel,
)
from .staggered import GroupTimeAttTable, att_gt, att_gt_table, pt_mp_check

__version__ = "0.1.0"

__all__ = [
    "AR1",
    "BootstrapComparison",
    "ColumnSchema",
    "DesignSpec",
    "DesignSpecError",
    "DidEstimate",
    "DidselError",
    "EstimationError",
    "FitResult",
    "GroupTimeAttTable",
    "IdentifiedSet",
    "LatentPanel",
    "NEVER",
    "NSW_DEFAULT_DESIGN",
    "PanelDataset",
    "RhoEstimate",
    "SCENARIOS",
    "ScenarioCatalogError",
    "SchemaError",
    "SensitivityCurve",
    "SimConfig",
    "SimVerdict",
    "SimulationError",
    "SingularityError",
    "StaggeredConfig",
    "Term",
    "ValidationError",
    "att_at_rho",
    "att_gt",
    "att_gt_table",
    "baseline_bias",
    "conditional_pt_gap",
    "did_2x2",
    "estimate_rho",
    "from_arrays",
    "group_mean",
    "identified_set",
    "influence_se_oracle_check",
    "load_panel_csv",
    "majority_vote_select",
    "measure_pt_gap",
    "ols",
    "pt_mp_check",
    "reg_adjusted_did",
    "rho_bounds_from_pct_change",
    "run_bank",
    "run_scenario",
    "sensitivity_curve",
    "simulate_panel",
    "simulate_staggered_panel",
]
