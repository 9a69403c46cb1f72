"""Explicit-feature-map kernel K-means with weighted Minkowski distances."""

from .clustering import (
    ClusterModel,
    Dataset,
    RunConfig,
    cluster_points,
    exact_kernel_kmeans,
    explicit_kmwk_means,
    lloyd_kmeans,
    update_weights,
    warm_start,
)
from .diagnostics import concentration_sweep, relative_contrast, relative_variance
from .evaluation import nmi, purity, select_p
from .featmap import KernelSpec, MapConfig, kernel_eval, map_dataset, signature, spectrum
from .minkcore import minkowski_center, minkowski_pow_dist, weighted_pow_dist

__version__ = "0.1.0"

__all__ = [
    "ClusterModel", "Dataset", "RunConfig", "cluster_points", "exact_kernel_kmeans",
    "explicit_kmwk_means", "lloyd_kmeans", "update_weights", "warm_start",
    "concentration_sweep", "relative_contrast", "relative_variance",
    "nmi", "purity", "select_p",
    "KernelSpec", "MapConfig", "kernel_eval", "map_dataset", "signature", "spectrum",
    "minkowski_center", "minkowski_pow_dist", "weighted_pow_dist",
]
