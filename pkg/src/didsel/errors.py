"""Exception hierarchy shared across the toolkit."""


class DidselError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(DidselError):
    """CSV schema problems: missing columns, unparseable values."""


class ValidationError(DidselError):
    """Panel-level validation failures (unbalanced units, bad groups)."""


class EstimationError(DidselError):
    """Estimation cannot proceed (empty subgroup, degenerate variance)."""


class SingularityError(EstimationError):
    """Rank-deficient design matrix; carries the offending column names."""

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class DesignSpecError(DidselError):
    """Invalid design specification (unknown covariate, duplicate term)."""


class SimulationError(DidselError):
    """Simulation configuration or degeneracy problems."""


class ScenarioCatalogError(DidselError):
    """Unknown scenario identifier."""
