"""Ball-tree accelerated k-means with a memory and runtime cost estimator."""
from .accelerator import (
    ClusterState,
    KmeansConfig,
    KmeansResult,
    KnnResult,
    PruneStats,
    assign,
    compute_inter_bounds,
    init_centroids,
    knn_search,
    refine_centroids,
    run,
    sse,
)
from .balltree import BallTree, build, structural_float_count
from .errors import *  # noqa: F401,F403
from .estimator import (
    GpAdjuster,
    MemoryEstimate,
    MetaFeatures,
    RuntimeModel,
    adjust_predictions,
    estimate_total_memory,
    extract_meta_features,
    fit_runtime_model,
    minimum_budget,
    predict_runtime,
    tune_leaf_capacity,
)
from .spatial import (
    Dataset,
    dump_dataset,
    euclidean_distance,
    generate_synthetic,
    load_dataset,
    load_path,
)

__version__ = "0.1.0"
