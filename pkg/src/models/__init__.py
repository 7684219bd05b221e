"""
모델 패키지
"""

from .base_model import DELTA_T_INIT, VARIANTS, BaseModel, ModelConfig, influence_mask, stack_window
from .baseline_model import (
    DMModel,
    GCNModel,
    ResGCNModel,
    dm_layer,
    gcn_layer,
    normalized_adjacency,
    resgcn_layer,
)
from .edge_map import EdgeMapParams, EdgeMLP, build_operators
from .river_model import RiverLayerParams, RiverModel, river_layer
from .traffic_model import TrafficLayerParams, TrafficModel, traffic_layer

MODEL_CLASSES = {
    "river": RiverModel,
    "traffic": TrafficModel,
    "gcn": GCNModel,
    "resgcn": ResGCNModel,
    "dm": DMModel,
}


def build_model(config: ModelConfig, num_features: int, edge_dim: int) -> BaseModel:
    """variant 이름으로 모델을 생성합니다."""
    return MODEL_CLASSES[config.variant](config, num_features, edge_dim)


__all__ = [
    "BaseModel", "ModelConfig", "VARIANTS", "DELTA_T_INIT", "MODEL_CLASSES", "build_model",
    "influence_mask", "stack_window",
    "RiverModel", "RiverLayerParams", "river_layer",
    "TrafficModel", "TrafficLayerParams", "traffic_layer",
    "GCNModel", "ResGCNModel", "DMModel", "gcn_layer", "resgcn_layer", "dm_layer",
    "normalized_adjacency",
    "EdgeMLP", "EdgeMapParams", "build_operators",
]
