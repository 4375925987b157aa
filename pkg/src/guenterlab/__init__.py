"""Numerical laboratory for tangential calculus on grids, level-set
surfaces, and cylinders: best constants in Poincare, Friedrichs, and Korn
inequalities, kernel identification, and randomized verification of every
estimated bound."""

from .errors import (
    AmbiguousKernel,
    ConfigError,
    DisconnectedMesh,
    InvalidP,
    MissingRegion,
    NoAdmissibleSamples,
    NoConvergence,
    ProjectionCollapse,
    UnsupportedDimension,
    UnsupportedKind,
    ZeroMeasure,
)
from .fields import ScalarField, VectorField, save_field_csv
from .geometry import (
    CylinderMesh,
    DomainGrid,
    MarkedRegion,
    SurfaceMesh,
    box_grid,
    build_mesh,
    circle_mesh,
    extrude_cylinder,
    extrude_region,
    icosphere_mesh,
    interval_grid,
    mark_region,
    refine_params,
    registered_shapes,
    torus_mesh,
    tube_mesh,
)
from .kernels import (
    ContinuationReport,
    KernelBasis,
    nullspace,
    principal_angle,
    rigid_motion_basis,
    tangential_rotation_basis,
    unique_continuation_check,
)
from .registry import (
    build_evaluator,
    build_problem,
    default_configuration,
    describe,
    registered_ids,
)
from .spectra import (
    ConstantEstimate,
    assemble_quadratic_form,
    estimate_constant,
    quotient_lower_bound,
    smallest_eigenpairs,
)
from .verify import (
    FieldGenerator,
    InequalityReport,
    generate_fields,
    homogeneity_defect,
    quotient_report,
    verify_constant,
    verify_inequality,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousKernel", "ConfigError", "ConstantEstimate",
    "ContinuationReport", "CylinderMesh", "DisconnectedMesh", "DomainGrid",
    "FieldGenerator", "InequalityReport", "InvalidP", "KernelBasis",
    "MarkedRegion", "MissingRegion", "NoAdmissibleSamples", "NoConvergence",
    "ProjectionCollapse", "ScalarField", "SurfaceMesh",
    "UnsupportedDimension", "UnsupportedKind", "VectorField", "ZeroMeasure",
    "assemble_quadratic_form",
    "box_grid", "build_evaluator", "build_mesh", "build_problem",
    "circle_mesh", "default_configuration", "describe", "estimate_constant",
    "extrude_cylinder", "extrude_region", "generate_fields",
    "homogeneity_defect", "icosphere_mesh", "interval_grid", "mark_region",
    "nullspace", "principal_angle", "quotient_lower_bound",
    "quotient_report", "refine_params", "registered_ids",
    "registered_shapes", "rigid_motion_basis", "save_field_csv",
    "smallest_eigenpairs",
    "tangential_rotation_basis", "torus_mesh", "tube_mesh",
    "unique_continuation_check", "verify_constant", "verify_inequality",
]
