"""
희소 연산자 적용 (sparse_apply)
===============================
D·h 와 그 수반 Dᵀ·g 를 테이프에 기록합니다.

연산자 종류:
  - DifferenceOperator / scipy 희소 행렬 : 계수는 상수
  - EdgeWeightedOperator                : 엣지 가중치 w 가 텐서 (학습된 Δx, Δz 경로)

h 의 행 수가 |V| 의 배수(B·|V|)이면 B 개 샘플 블록에 블록 대각으로 적용합니다.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
import scipy.sparse as sp

from ..diffops import DifferenceOperator, OperatorKind, Stencil, assemble
from ..exceptions import ShapeError
from .tensor import Tensor, _make

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EdgeWeightedOperator:
    """
    (D h)_r = Σ_t share_t · w[edge_t] · (h_r − h_col_t)

    w 는 테이프 위 텐서이므로 ∂L/∂w 가 기록됩니다.
    D1 은 w = 1/Δx, D2 는 w = Δz/Δx.
    """
    stencil: Stencil
    weights: Tensor
    kind: OperatorKind = OperatorKind.D1

    def __post_init__(self):
        if self.weights.shape != (self.stencil.num_edges,):
            raise ShapeError(
                f"엣지 가중치 형태 {self.weights.shape} ≠ (|E|,) = ({self.stencil.num_edges},)"
            )

    @property
    def num_nodes(self) -> int:
        return self.stencil.num_nodes

    @cached_property
    def operator(self) -> DifferenceOperator:
        """현재 가중치 값으로 조립한 상수 연산자"""
        return assemble(self.stencil, self.weights.data, self.kind)

    @property
    def matrix(self) -> sp.csr_matrix:
        return self.operator.matrix


OperatorLike = Union[DifferenceOperator, EdgeWeightedOperator, sp.spmatrix]


def _to_columns(x: np.ndarray, n: int) -> np.ndarray:
    """(B·n, d) → (n, B·d)"""
    rows, d = x.shape
    return x.reshape(rows // n, n, d).transpose(1, 0, 2).reshape(n, -1)


def _from_columns(x: np.ndarray, n: int, d: int) -> np.ndarray:
    """(n, B·d) → (B·n, d)"""
    batch = x.shape[1] // d
    return x.reshape(n, batch, d).transpose(1, 0, 2).reshape(batch * n, d)


def sparse_apply(op: OperatorLike, h: Tensor) -> Tensor:
    """
    희소-dense 곱 D·h

    Args:
        op: 차분 연산자 (상수) 또는 EdgeWeightedOperator
        h: (|V|, d) 또는 (B·|V|, d) 텐서

    Returns:
        D·h 텐서 (h 와 같은 형태). 수반: ∂h = Dᵀ·g
    """
    matrix = op.matrix if hasattr(op, "matrix") else sp.csr_matrix(op)
    n = matrix.shape[1]
    if matrix.shape[0] != n:
        raise ShapeError(f"정방 연산자가 필요합니다: {matrix.shape}")
    if h.data.ndim != 2 or h.shape[0] % n != 0 or h.shape[0] == 0:
        raise ShapeError(f"h 행 수 {h.shape} 가 |V|={n} 의 배수가 아닙니다.")

    d = h.shape[1]
    H = _to_columns(h.data, n)
    out = _from_columns(matrix @ H, n, d)
    transpose = matrix.T.tocsr()

    if not isinstance(op, EdgeWeightedOperator):
        return _make("sparse_apply", out, (h,),
                     lambda g: (_from_columns(transpose @ _to_columns(g, n), n, d),))

    stencil = op.stencil

    def backward_fn(g):
        G = _to_columns(g, n)
        grad_h = _from_columns(transpose @ G, n, d)
        # ∂(Dh)_r/∂w_e = share · (h_r − h_col)
        contrib = np.einsum("tk,tk->t", G[stencil.rows], H[stencil.rows] - H[stencil.cols])
        grad_w = np.bincount(stencil.edges, weights=stencil.shares * contrib,
                             minlength=stencil.num_edges)
        return grad_h, grad_w

    return _make("sparse_apply_weighted", out, (h, op.weights), backward_fn)
