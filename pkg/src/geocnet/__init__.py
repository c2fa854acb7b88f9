"""Causal network inference from correlation-dimension based information flow."""
from .corrdim import (
    CorrDimConfig,
    CorrSumCurve,
    DimEstimate,
    DEFAULT_GRID,
    RadiusGrid,
    correlation_curve,
    correlation_dimension,
    correlation_sum,
    count_pairs_within,
    estimate_d2,
)
from .dynamics import (
    NetworkSpec,
    TimeSeriesPanel,
    generate_er_graph,
    load_bundled_graph,
    logistic_step,
    parse_edge_list,
    simulate,
    step_network,
)
from .errors import (
    EstimationError,
    GeocError,
    InputOutputError,
    PartialFailure,
    ValidationError,
)
from .geoc import GeoCValue, build_embedding, geo_conditional, geoc
from .ogeoc import (
    InferenceResult,
    ShuffleConfig,
    backward_geoc,
    forward_geoc,
    infer_network,
    shuffle_threshold,
)

__version__ = "0.1.0"
