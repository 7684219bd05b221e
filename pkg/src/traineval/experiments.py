"""
실험 조합 (Experiments)
=======================
정방향 / 역방향 토폴로지 학습과 예측 시점(horizon) 스윕을 묶습니다.
역방향 학습은 그래프만 뒤집고 (D̂/D1/D2 재구성) 특성과 타겟은 그대로 둡니다.
"""

import logging
from dataclasses import dataclass, replace

from ..graph import DirectedGraph, NodeSeries, Targets, reverse_topology
from ..models import BaseModel, ModelConfig, build_model
from .dataset import DEFAULT_FRACTIONS, PreparedData, prepare_data
from .metrics import evaluate_mse
from .trainer import TrainHistory, train

logger = logging.getLogger(__name__)

DEFAULT_HORIZONS = (3, 6, 9)


@dataclass
class FitResult:
    model: BaseModel
    history: TrainHistory
    topology: str
    test_mse: float


def fit(config: ModelConfig, graph: DirectedGraph, data: PreparedData, reverse: bool = False,
        epochs: int = 60, lr: float = 1e-2, batch_size: int = 32, seed: int = 0) -> FitResult:
    """
    모델 생성 → 학습 → 테스트 MSE

    Args:
        reverse: True 이면 reverse_topology(graph) 위에서 학습 / 평가
    """
    topology = reverse_topology(graph) if reverse else graph
    num_features = data.samples["train"].x.shape[-1]
    model = build_model(config, num_features, graph.feature_dim)
    history = train(model, topology, data.samples, epochs=epochs, lr=lr, seed=seed, batch_size=batch_size)
    test_mse = evaluate_mse(model, topology, data.samples["test"])
    label = "reverse" if reverse else "forward"
    logger.info("📈 %s [%s] test MSE = %.5f", config.variant, label, test_mse)
    return FitResult(model=model, history=history, topology=label, test_mse=test_mse)


def horizon_sweep(graph: DirectedGraph, series: NodeSeries, targets: Targets, base: ModelConfig,
                  variants: tuple, horizons: tuple = DEFAULT_HORIZONS,
                  fractions: tuple = DEFAULT_FRACTIONS, stride: int = 1, **train_kwargs) -> list[dict]:
    """
    예측 시점별 / variant 별 정방향 테스트 MSE

    Returns:
        [{"variant", "horizon", "test_mse"}] (horizon, variant 순)
    """
    rows = []
    for horizon in horizons:
        data = prepare_data(series, targets, base.window, horizon, fractions, stride)
        for variant in variants:
            config = replace(base, variant=variant, horizon=horizon)
            result = fit(config, graph, data, **train_kwargs)
            rows.append({"variant": variant, "horizon": int(horizon), "test_mse": result.test_mse})
    return rows
