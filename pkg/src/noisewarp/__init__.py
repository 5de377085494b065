"""Distribution-preserving Gaussian noise warping along optical flow.

Discrete noise pixels are treated as integrals of a finer white-noise
field: conditional upsampling refines a grid without changing what it
already pinned down, and warped pixels are rebuilt by rasterizing their
backward-traced contours over the fine grid and renormalizing by the
covered area.  Warped noise keeps unit variance, pixel independence, and
the cross-frame correlations induced by the motion.
"""

from .baselines import PriorSpec, generate_prior, warp_interp
from .errors import DataError, FormatError, InvalidArgumentError, NoiseWarpError
from .flow import AccumulatedMap, FlowField, compose, make_synthetic_flow, sample_flow
from .grids import NoiseGrid, downsample, sample_noise, upsample_conditional
from .io import (
    read_flo,
    read_grid,
    write_flo,
    write_grid,
    write_npy,
    write_png_preview,
)
from .rng import RngKey
from .stats import (
    StatsReport,
    brownian_bridge_1d,
    cross_covariance,
    ensemble_moments,
    ks_normality,
    overlap_oracle,
    warp_error,
)
from .warp import (
    FILL_ANCHOR,
    FILL_PREVIOUS,
    FILL_RANDOM,
    CoverageBuffer,
    PixelPolygon,
    WarpConfig,
    WarpResult,
    aggregate,
    rasterize_all,
    triangulate_pixel,
    warp_noise,
    warp_polygon,
    warp_sequence,
)

__version__ = "0.1.0"

__all__ = [
    "AccumulatedMap",
    "CoverageBuffer",
    "DataError",
    "FILL_ANCHOR",
    "FILL_PREVIOUS",
    "FILL_RANDOM",
    "FlowField",
    "FormatError",
    "InvalidArgumentError",
    "NoiseGrid",
    "NoiseWarpError",
    "PixelPolygon",
    "PriorSpec",
    "RngKey",
    "StatsReport",
    "WarpConfig",
    "WarpResult",
    "aggregate",
    "brownian_bridge_1d",
    "compose",
    "cross_covariance",
    "downsample",
    "ensemble_moments",
    "generate_prior",
    "ks_normality",
    "make_synthetic_flow",
    "overlap_oracle",
    "rasterize_all",
    "read_flo",
    "read_grid",
    "sample_flow",
    "sample_noise",
    "triangulate_pixel",
    "upsample_conditional",
    "warp_error",
    "warp_interp",
    "warp_noise",
    "warp_polygon",
    "warp_sequence",
    "write_flo",
    "write_grid",
    "write_npy",
    "write_png_preview",
]
