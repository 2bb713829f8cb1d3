"""Audio-frame quantization via k-means and its disentanglement metrics."""

from akvsr.quantizer.kmeans import (
    ClusterModel,
    fit_kmeans,
    kmeans_plus_plus,
    quantize,
    squared_distances,
)
from akvsr.quantizer.metrics import (
    contingency,
    normalized_mutual_information,
    purity,
    purity_and_leakage,
)

__all__ = [
    "ClusterModel",
    "contingency",
    "fit_kmeans",
    "kmeans_plus_plus",
    "normalized_mutual_information",
    "purity",
    "purity_and_leakage",
    "quantize",
    "squared_distances",
]
