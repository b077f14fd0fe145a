"""Exception hierarchy shared across the package."""


class DiracCellError(Exception):
    """Base class for all package errors."""


class ParameterError(DiracCellError, ValueError):
    """A precondition on user-supplied parameters was violated."""


class ConfigError(ParameterError):
    """Invalid or inconsistent run configuration (CLI exit code 2)."""


class MeshError(DiracCellError):
    """Mesh construction or validation failure."""


class AssemblyError(DiracCellError):
    """Finite-element assembly failure (e.g. degenerate cell)."""


class SolverError(DiracCellError):
    """Linear solver did not converge (CLI exit code 3).

    Carries the final residual so callers can report how far off the
    solve ended up.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class OutsideDomainError(DiracCellError, LookupError):
    """A point could not be located inside the mesh."""


class TruncationError(DiracCellError):
    """A series truncation could not meet the requested tolerance."""


class AnalyticCheckError(DiracCellError):
    """One or more analytic self-checks failed (CLI exit code 4)."""
