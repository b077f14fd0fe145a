"""FEM comparison of a compound-exchanging cell against its point-source reduction."""

from .compare import (CompareConfig, ComparisonRecord, ComparisonResult,
                      relative_l2_difference, restrict_to_tilde, run_comparison)
from .errors import (AnalyticCheckError, AssemblyError, ConfigError, DiracCellError,
                     MeshError, OutsideDomainError, ParameterError, SolverError,
                     TruncationError)
from .exclusion import ExclusionConfig, ExclusionRecord, ExclusionResult, run_exclusion
from .geometry import (BoundaryTag, CellSpec, Mesh, Point2, QualityReport,
                       build_punctured_square_mesh, build_square_mesh, locate_point,
                       mesh_quality)
from .point_source import (PointConfig, PointRecord, PointResult, VirtualBoundary,
                           build_virtual_boundary, psi, run_point, trace_integral)

__version__ = "0.1.0"
