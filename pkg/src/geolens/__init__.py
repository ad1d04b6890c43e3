"""Focus+context magnification lenses via 3D mesh lifting and flattening."""

from .baselines import RadialLens, warp_vertices
from .distortion import DistortionReport, measure_baseline_distortion, measure_distortion
from .errors import (
    AssemblyError,
    ConvergenceWarning,
    DegenerateTriangleError,
    EmptyRoiError,
    GeolensError,
    ImageIOError,
    InvalidArgumentError,
    OverlapWarning,
    StageError,
)
from .flatten import (
    MetricMatrix,
    PrefactoredSystem,
    SolveReport,
    assemble_and_factor,
    blended_metric,
    blended_metrics,
    edge_weights,
    energy_trace_csv,
    flatten,
    residual_energies,
    solve_positions,
    standardize_triangle,
    standardize_triangles,
    triangle_jacobian,
    triangle_jacobians,
)
from .lens import (
    Circle,
    LensSpec,
    MetricParams,
    Polygon,
    load_polygon,
    mark_roi,
    roi_distance_field,
)
from .lift import HeightProfile, adaptive_refine, evaluate_height, lift_mesh
from .mesh import (
    INTERIOR,
    NO_LENS,
    OUTER_BOUNDARY,
    ROI_BOUNDARY,
    TriMesh,
    build_grid_mesh,
    dump_mesh,
    load_mesh,
    one_ring,
    subdivide_triangles,
)
from .pipeline import JobResult, PipelineConfig, load_config, run_lens_job, run_pipeline
from .raster import ImageBuffer, load_image, rasterize, rasterize_flat, save_image
from .texture import HarmonicSolveParams, mean_value_weights, solve_uv, solve_uv_direct

__version__ = "0.1.0"
