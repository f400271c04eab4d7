"""Left-ventricle linear measurements along virtual M-mode scanlines.

The toolkit covers the full measurement path: cavity-contour estimation
(weakly labeled by a scanline sweep), ridge-regression long-axis fitting,
contour-aware scanline placement, virtual anatomical M-mode
reconstruction, constrained landmark detection, physical measurement
conversion, an evaluation metric suite, a synthetic phantom with analytic
ground truth, and a batch CLI plus review HTTP service.
"""

from .amm import AMMImage, EchoStudy, amm_row_to_bmode, bilinear_sample, extract_amm, sample_positions
from .detectors import (
    AMMDetection,
    HeatmapFileAMMDetector,
    OracleAMMDetector,
    ProfileAMMDetector,
    SweepConfig,
    WeakContourLabel,
    WeakLabelContourSource,
    detect_from_heatmaps,
    detect_oracle,
    detect_profile,
    generate_weak_labels,
    sweep_scanlines,
)
from .errors import (
    BundleError,
    DegenerateGeometryError,
    DetectionError,
    LvammError,
    MeasurementError,
    PipelineStageError,
    PlacementError,
)
from .geometry import (
    ContourEstimate,
    Line2D,
    LongAxisFitConfig,
    Point2D,
    ScanLine,
    fit_long_axis,
    lvid_midpoints,
    place_scanline,
    scanline_distance_angle,
)
from .heatmaps import (
    LossConfig,
    combined_loss,
    coord_loss,
    expected_coordinate,
    ere,
    ere_weights,
    gaussian_target,
    heatmap_loss,
    softmax_normalize,
)
from .metrics import EvalRecord, EvalReport, build_report, ce, mae, mape, pearson, sdr
from .phantom import PhantomConfig, PhantomTruth, generate_phantom, random_config, truth_contour
from .pipeline import (
    MeasurementSet,
    PipelineConfig,
    PipelineResult,
    StaticContourSource,
    measurements_from_detection,
    run_auto,
    run_with_scanline,
)

__version__ = "0.1.0"
