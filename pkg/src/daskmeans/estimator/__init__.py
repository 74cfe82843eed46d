"""Memory and runtime cost estimation for accelerated k-means runs."""
from .gp import GpAdjuster, adjust_predictions, h, kernel
from .memory import (
    MemoryEstimate,
    estimate_index_memory,
    estimate_total_memory,
    minimum_budget,
    simplified_index_memory,
    simplified_total_memory,
    tune_leaf_capacity,
)
from .metrics import all_metrics, mae, mse, smape, wmape
from .runtime import (
    MetaFeatures,
    RuntimeModel,
    expand_features,
    extract_meta_features,
    fit_runtime_model,
    predict_iteration_count,
    predict_runtime,
)
