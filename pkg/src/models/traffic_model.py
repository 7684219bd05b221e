"""
교통 유량 모델 (Traffic Model)
==============================
Aw-Rascle 질량 보존 방정식을 레이어로 옮긴 메시지 패싱:

  h' = h − Δt·( h ⊙ (D1 v W1) + v ⊙ (D1 h W2) )

속도 임베딩 v 는 입력에서 한 번 추출한 v⁰ 를 모든 레이어에서 고정 사용합니다.
"""

import logging
from dataclasses import dataclass

from ..exceptions import ShapeError
from ..graph import DirectedGraph
from ..tensorad import Tensor, activation, add, matmul, mul, scale, sparse_apply, sub
from .base_model import DELTA_T_INIT, BaseModel, ModelConfig, glorot, stack_window
from .edge_map import EdgeMapParams, build_operators
from .river_model import _check_square, make_edge_mlp

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrafficLayerParams:
    W1: Tensor
    W2: Tensor
    delta_t: Tensor


def traffic_layer(h: Tensor, v: Tensor, D1, params: TrafficLayerParams) -> Tensor:
    """h − Δt·( h ⊙ ((D1 v) W1) + v ⊙ ((D1 h) W2) )"""
    _check_square(h, params.W1, params.W2)
    if v.shape != h.shape:
        raise ShapeError(f"v 형태 {v.shape} ≠ h 형태 {h.shape}")
    density = mul(h, matmul(sparse_apply(D1, v), params.W1))
    velocity = mul(v, matmul(sparse_apply(D1, h), params.W2))
    return sub(h, scale(params.delta_t, add(density, velocity)))


class TrafficModel(BaseModel):
    """물리 기반 교통 유량 모델"""

    def __init__(self, config: ModelConfig, num_features: int, edge_dim: int):
        super().__init__(config, num_features, edge_dim)
        d = config.hidden
        self.edge_map = EdgeMapParams(phi1=make_edge_mlp(self, "phi1"))
        delta_t = self.add_param("delta_t", DELTA_T_INIT)
        self.layer_params = [
            TrafficLayerParams(
                W1=self.add_param(f"W1_{l}", glorot(self.rng, d, d)),
                W2=self.add_param(f"W2_{l}", glorot(self.rng, d, d)),
                delta_t=delta_t,
            )
            for l in range(config.layers)
        ]

    def _build_embedding(self):
        # 편향 없는 2층 tanh MLP 두 개: 밀도 h⁰, 속도 v⁰
        width = self.config.window * self.num_features
        d = self.config.hidden
        for prefix in ("embed_h", "embed_v"):
            self.add_param(f"{prefix}1", glorot(self.rng, width, d))
            self.add_param(f"{prefix}2", glorot(self.rng, d, d))

    def _mlp(self, x: Tensor, prefix: str) -> Tensor:
        hidden = activation("tanh", matmul(x, self.params[f"{prefix}1"]))
        return matmul(hidden, self.params[f"{prefix}2"])

    def embed_input(self, x_window, num_nodes: int):
        flat, batch = stack_window(x_window, self.config.window, num_nodes, self.num_features)
        x = Tensor(flat)
        return self._mlp(x, "embed_h"), self._mlp(x, "embed_v"), batch

    def prepare(self, graph: DirectedGraph):
        d1, _ = build_operators(graph, graph.edge_features, self.edge_map)
        return d1

    def layer(self, index, h, extra, context):
        return traffic_layer(h, extra, context, self.layer_params[index])
