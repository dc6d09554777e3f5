"""Lighthouse coastlines: generalized Cauchy densities, the inverse heuristic,
and temporal self-correlation of anonymized network sources."""

from .distributions import (
    Arcsine,
    Gaussian,
    ModCauchy,
    ModCauchyParams,
    PdfGrid,
    StandardCauchy,
    eval_pdf,
    fwhm,
    heavy_tail_ratio,
    modcauchy_density,
    normalize_on_support,
    tabulate,
)
from .geometry import (
    AzimuthalBounds,
    Flat,
    Line45,
    Line135,
    LowerSemicircle,
    Tabulated,
    azimuth_of,
    check_coastline_condition,
    gencauchy_density,
    ks_distance,
    natural_bounds,
    ray_intersect,
    sample_hits,
)
from .inverse import (
    HeuristicConfig,
    Segment,
    SegmentPlan,
    ode_residual,
    phi_of,
    plan_segments,
    regenerate_pdf,
    round_trip,
    select_kappa,
    sine_squared_coastline,
)
from .correlation import (
    CorrelationSeries,
    SourceWindow,
    SynthSpec,
    filter_category,
    filter_degree,
    ingest_windows,
    self_correlation,
    synth_windows,
)
from .fitting import FitResult, fit_modcauchy, t_half_report

__version__ = "0.1.0"
