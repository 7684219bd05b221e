"""
비교 모델 (Baselines)
=====================
같은 텐서 스택 위의 비교 모델입니다.

  - gcn    : h' = relu(Â h W),        Â = 자기 루프 포함 유입 엣지 인접 행렬의 행 정규화
  - resgcn : h' = h + relu(Â h W)
  - dm     : h' = h − Δt·(D̂ h W)     (차분 행렬만 사용, PDE 항 없음)
"""

from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ..diffops import DifferenceOperator, build_base_difference
from ..graph import DirectedGraph
from ..tensorad import Tensor, activation, add, matmul, scale, sparse_apply, sub
from .base_model import DELTA_T_INIT, BaseModel, ModelConfig, glorot


@lru_cache(maxsize=32)
def normalized_adjacency(graph: DirectedGraph) -> sp.csr_matrix:
    """Â[i, j] = 1/(k_i + 1)  (j = i 또는 (j, i) ∈ E, k_i = 유입 차수)"""
    n = graph.num_nodes
    rows = np.concatenate([graph.edges[:, 1], np.arange(n)])
    cols = np.concatenate([graph.edges[:, 0], np.arange(n)])
    in_degree = np.bincount(graph.edges[:, 1], minlength=n) + 1.0
    values = 1.0 / in_degree[rows]
    return sp.csr_matrix((values, (rows, cols)), shape=(n, n))


def gcn_layer(h: Tensor, A_norm, W: Tensor) -> Tensor:
    return activation("relu", matmul(sparse_apply(A_norm, h), W))


def resgcn_layer(h: Tensor, A_norm, W: Tensor) -> Tensor:
    return add(h, gcn_layer(h, A_norm, W))


def dm_layer(h: Tensor, D: DifferenceOperator, W: Tensor, delta_t: Tensor) -> Tensor:
    return sub(h, scale(delta_t, matmul(sparse_apply(D, h), W)))


class GCNModel(BaseModel):
    """GCN 비교 모델"""

    residual = False

    def __init__(self, config: ModelConfig, num_features: int, edge_dim: int = 0):
        super().__init__(config, num_features, edge_dim)
        d = config.hidden
        self.weights = [self.add_param(f"W_{l}", glorot(self.rng, d, d)) for l in range(config.layers)]

    def prepare(self, graph: DirectedGraph):
        return normalized_adjacency(graph)

    def layer(self, index, h, extra, context):
        if self.residual:
            return resgcn_layer(h, context, self.weights[index])
        return gcn_layer(h, context, self.weights[index])

    def influence_pattern(self, graph: DirectedGraph) -> sp.csr_matrix:
        return normalized_adjacency(graph)


class ResGCNModel(GCNModel):
    """잔차 연결 GCN"""

    residual = True


class DMModel(BaseModel):
    """차분 행렬 전용 ablation (PDE 항 제거)"""

    def __init__(self, config: ModelConfig, num_features: int, edge_dim: int = 0):
        super().__init__(config, num_features, edge_dim)
        d = config.hidden
        self.delta_t_param = self.add_param("delta_t", DELTA_T_INIT)
        self.weights = [self.add_param(f"W_{l}", glorot(self.rng, d, d)) for l in range(config.layers)]

    def prepare(self, graph: DirectedGraph):
        return build_base_difference(graph)

    def layer(self, index, h, extra, context):
        return dm_layer(h, context, self.weights[index], self.delta_t_param)
