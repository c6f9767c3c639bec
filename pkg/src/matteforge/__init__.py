"""matteforge: synthesize alpha-matting training data from image pools.

Plans which foregrounds land on which backgrounds under one of four
composition styles, realizes the plans into composited samples with
either a naive or a layered foreground-combination operator, and ships
analysis (foreground-component statistics) and evaluation (SAD/MSE)
tooling alongside.
"""

from .analysis import (
    ComponentReport,
    count_occurrences,
    positive_correlation_fraction,
    report_from_manifest,
    report_from_plan,
    residue,
    twin_coexistence_fraction,
)
from .core import (
    DEFAULT_EPSILON,
    TRIMAP_BACKGROUND,
    TRIMAP_FOREGROUND,
    TRIMAP_UNKNOWN,
    AlphaMatte,
    EpsilonConfig,
    FgEntry,
    ImageBuffer,
    TrimapParams,
    comp,
    generate_trimap,
    ncf,
    premultiplied_rcf,
    rcf,
)
from .errors import (
    ConfigError,
    IntegrityError,
    MatteforgeError,
    MissingIdError,
    PipelineIOError,
    PoolError,
    ShapeError,
)
from .io import (
    BgEntry,
    LoadReport,
    PoolLayout,
    SampleRecord,
    harmonize,
    load_alpha,
    load_image,
    load_pools,
    read_manifest,
    resize_bilinear,
    write_outputs,
)
from .metrics import EvalResult, evaluate
from .schedulers import (
    Combiner,
    CompositionPlan,
    GcaParams,
    ItemKind,
    Ordering,
    PlanItem,
    Style,
    execute_plan,
    plan_dim,
    plan_gca,
    plan_quadruplet,
    plan_triplet,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaMatte",
    "BgEntry",
    "Combiner",
    "ComponentReport",
    "CompositionPlan",
    "ConfigError",
    "DEFAULT_EPSILON",
    "EpsilonConfig",
    "EvalResult",
    "FgEntry",
    "GcaParams",
    "ImageBuffer",
    "IntegrityError",
    "ItemKind",
    "LoadReport",
    "MatteforgeError",
    "MissingIdError",
    "Ordering",
    "PipelineIOError",
    "PlanItem",
    "PoolError",
    "PoolLayout",
    "SampleRecord",
    "ShapeError",
    "Style",
    "TRIMAP_BACKGROUND",
    "TRIMAP_FOREGROUND",
    "TRIMAP_UNKNOWN",
    "TrimapParams",
    "comp",
    "count_occurrences",
    "evaluate",
    "execute_plan",
    "generate_trimap",
    "harmonize",
    "load_alpha",
    "load_image",
    "load_pools",
    "ncf",
    "plan_dim",
    "plan_gca",
    "plan_quadruplet",
    "plan_triplet",
    "positive_correlation_fraction",
    "premultiplied_rcf",
    "rcf",
    "read_manifest",
    "report_from_manifest",
    "report_from_plan",
    "residue",
    "resize_bilinear",
    "twin_coexistence_fraction",
    "write_outputs",
]
