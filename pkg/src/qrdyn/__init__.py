"""qrdyn: escaping sets and escape-radius certificates for quasiregular maps."""

__version__ = "0.1.0"

from .geometry import (
    INFINITY,
    Box,
    CylindricalPoint,
    cart_to_cyl,
    chordal_distance,
    cyl_to_cart,
    invert_sphere,
)
from .maps import (
    MapInstance,
    MapMetadata,
    build_named_map,
    evaluate,
    make_complex_poly,
    make_conjugated_quadratic,
    make_iterate,
    make_winding,
    make_zorich,
    make_zsquared,
    preimages_exact,
)
from .calculus import (
    DegreeEstimate,
    DilatationEstimate,
    dilatation_at,
    estimate_degree,
    estimate_dilatation,
    estimate_local_index,
    numeric_jacobian,
    singular_values,
    uqr_probe,
)
from .escape import (
    EscapeCertificate,
    EscapeGrid,
    OrbitRecord,
    PointClass,
    SENTINEL,
    classify_grid,
    classify_point,
    classify_points,
    estimate_certificate,
    orbit_trace,
)
from .analysis import (
    BoundarySet,
    CheckReport,
    FixedPointResult,
    boundary_distance_check,
    connectivity_check,
    equicontinuity_probe,
    extract_boundary,
    fixed_point_search,
    invariance_check,
    isolated_boundary_cells,
    iterate_consistency_check,
    openness_probe,
    unbounded_boundary_probe,
)
from .render import (
    ReportDocument,
    SliceSpec,
    export_voxels,
    load_grid,
    save_grid,
    write_class_ppm,
    write_escape_pgm,
    write_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
