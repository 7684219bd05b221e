"""
학습 / 평가 패키지
"""

from .dataset import DEFAULT_FRACTIONS, Normalizer, PreparedData, SampleSet, Split, make_windows, prepare_data
from .experiments import DEFAULT_HORIZONS, FitResult, fit, horizon_sweep
from .metrics import (
    DSReport,
    PerturbationResult,
    collect_layer_embeddings,
    direction_sensitivity,
    evaluate_mse,
    perturbation_response,
    relative_ds,
    smoothing_profile,
    temporal_gradient,
)
from .trainer import MAX_EPOCHS, PATIENCE, TrainHistory, train

__all__ = [
    "Normalizer", "Split", "SampleSet", "PreparedData", "DEFAULT_FRACTIONS",
    "make_windows", "prepare_data",
    "TrainHistory", "train", "PATIENCE", "MAX_EPOCHS",
    "evaluate_mse", "direction_sensitivity", "relative_ds", "DSReport",
    "perturbation_response", "PerturbationResult",
    "temporal_gradient", "collect_layer_embeddings", "smoothing_profile",
    "fit", "FitResult", "horizon_sweep", "DEFAULT_HORIZONS",
]
