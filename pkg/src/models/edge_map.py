"""
엣지 특성 사상 φ1, φ2 와 학습형 차분 연산자
============================================
Δx = softplus(φ1(e)) + 1e-3,  Δz = φ2(e)
D1 가중치 = 1/Δx,  D2 가중치 = Δz/Δx  (모두 테이프 위 텐서이므로 φ 가중치가 학습됨)
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from ..diffops import OperatorKind, Stencil, build_stencil
from ..exceptions import ShapeError
from ..graph import DirectedGraph
from ..tensorad import (
    EdgeWeightedOperator,
    Tensor,
    activation,
    add_bias,
    matmul,
    mul,
    reciprocal,
    reshape,
    shift,
)

DX_FLOOR = 1e-3


@dataclass(frozen=True, eq=False)
class EdgeMLP:
    """q → hidden → 1 MLP (tanh)"""
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    def __call__(self, features: Tensor) -> Tensor:
        if features.shape[1] != self.w1.shape[0]:
            raise ShapeError(f"엣지 특성 폭 {features.shape[1]} ≠ φ 입력 폭 {self.w1.shape[0]}")
        hidden = activation("tanh", add_bias(matmul(features, self.w1), self.b1))
        out = add_bias(matmul(hidden, self.w2), self.b2)
        return reshape(out, (features.shape[0],))


@dataclass(frozen=True, eq=False)
class EdgeMapParams:
    """φ1 (Δx), φ2 (Δz; 교통 모델은 None)"""
    phi1: EdgeMLP
    phi2: Optional[EdgeMLP] = None


@lru_cache(maxsize=32)
def base_stencil(graph: DirectedGraph) -> Stencil:
    return build_stencil(graph)


def build_operators(g: DirectedGraph, edge_feats, params: EdgeMapParams) -> tuple:
    """
    학습형 D1, D2 를 조립합니다.

    Args:
        g: 방향 그래프
        edge_feats: (|E|, q) 엣지 특성
        params: φ1, φ2

    Returns:
        (D1, D2) EdgeWeightedOperator (φ2 가 없으면 D2 = None)
    """
    features = edge_feats if isinstance(edge_feats, Tensor) else Tensor(np.asarray(edge_feats))
    if features.shape[0] != g.num_edges:
        raise ShapeError(f"엣지 특성 행 수 {features.shape[0]} ≠ |E| {g.num_edges}")
    stencil = base_stencil(g)

    dx = shift(activation("softplus", params.phi1(features)), DX_FLOOR)
    inv_dx = reciprocal(dx)
    d1 = EdgeWeightedOperator(stencil, inv_dx, OperatorKind.D1)
    if params.phi2 is None:
        return d1, None
    dz = params.phi2(features)
    d2 = EdgeWeightedOperator(stencil, mul(dz, inv_dx), OperatorKind.D2)
    return d1, d2
