"""
하천 유량 모델 (River Model)
============================
단순화 Saint-Venant 속도 방정식을 레이어로 옮긴 메시지 패싱:

  h' = h − Δt·( h ⊙ (D1 h W1) + ĝ·(D2 h W2) )

  - D1, D2 : φ1/φ2 로 학습되는 업윈드 차분 행렬 (edge_map.build_operators)
  - Δt, ĝ  : 모든 레이어가 공유하는 학습 스칼라 (Δt 초기값 0.7)
"""

import logging
from dataclasses import dataclass

from ..exceptions import ShapeError
from ..graph import DirectedGraph
from ..tensorad import Tensor, add, matmul, mul, scale, sparse_apply, sub
from .base_model import DELTA_T_INIT, BaseModel, ModelConfig, glorot
from .edge_map import EdgeMapParams, EdgeMLP, build_operators

logger = logging.getLogger(__name__)

G_HAT_INIT = 1.0


@dataclass(frozen=True, eq=False)
class RiverLayerParams:
    W1: Tensor
    W2: Tensor
    delta_t: Tensor
    g_hat: Tensor


def _check_square(h: Tensor, *weights: Tensor):
    d = h.shape[1]
    for w in weights:
        if w.shape != (d, d):
            raise ShapeError(f"가중치 형태 {w.shape} ≠ (d, d) = ({d}, {d})")


def river_layer(h: Tensor, D1, D2, params: RiverLayerParams) -> Tensor:
    """h − Δt·( h ⊙ ((D1 h) W1) + ĝ·((D2 h) W2) )"""
    _check_square(h, params.W1, params.W2)
    advection = mul(h, matmul(sparse_apply(D1, h), params.W1))
    elevation = scale(params.g_hat, matmul(sparse_apply(D2, h), params.W2))
    return sub(h, scale(params.delta_t, add(advection, elevation)))


def make_edge_mlp(model: BaseModel, prefix: str) -> EdgeMLP:
    hidden = model.config.edge_hidden
    return EdgeMLP(
        w1=model.add_param(f"{prefix}_w1", glorot(model.rng, model.edge_dim, hidden)),
        b1=model.add_param(f"{prefix}_b1", [0.0] * hidden),
        w2=model.add_param(f"{prefix}_w2", glorot(model.rng, hidden, 1)),
        b2=model.add_param(f"{prefix}_b2", [0.0]),
    )


class RiverModel(BaseModel):
    """물리 기반 하천 유량 모델"""

    def __init__(self, config: ModelConfig, num_features: int, edge_dim: int):
        super().__init__(config, num_features, edge_dim)
        d = config.hidden
        self.edge_map = EdgeMapParams(phi1=make_edge_mlp(self, "phi1"),
                                      phi2=make_edge_mlp(self, "phi2"))
        delta_t = self.add_param("delta_t", DELTA_T_INIT)
        g_hat = self.add_param("g_hat", G_HAT_INIT)
        self.layer_params = [
            RiverLayerParams(
                W1=self.add_param(f"W1_{l}", glorot(self.rng, d, d)),
                W2=self.add_param(f"W2_{l}", glorot(self.rng, d, d)),
                delta_t=delta_t,
                g_hat=g_hat,
            )
            for l in range(config.layers)
        ]

    def prepare(self, graph: DirectedGraph):
        return build_operators(graph, graph.edge_features, self.edge_map)

    def layer(self, index, h, extra, context):
        D1, D2 = context
        return river_layer(h, D1, D2, self.layer_params[index])
