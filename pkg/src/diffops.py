"""
업윈드 차분 행렬 (Difference Operators)
=======================================
그래프 토폴로지로부터 업윈드 차분 행렬 D̂, D1, D2 와 합성 연산자 I + αD̂ 를 구성하고,
방향 링 위에서 주파수 응답(DTFT 크기)을 닫힌 형태와 대조합니다.

행 구성 규칙:
  - 상류 이웃 k ≥ 1   : 대각 +Σw/k, 상류 열마다 -w/k           (행 합 0)
  - 헤드워터 (k = 0)  : 하류 이웃 m개에 대해 동일하게 -w/m      (경로 그래프의 첫 행 규칙 일반화)
  - 고립 노드         : 0 행

엣지 가중치 w:
  - base : 1
  - d1   : 1/Δx
  - d2   : Δz/Δx
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .exceptions import PreconditionError, RangeError, ShapeError
from .graph import DirectedGraph, directed_ring, downstream_neighbors, upstream_neighbors

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-12


class OperatorKind(Enum):
    """차분 연산자 종류"""
    BASE = "base"
    D1 = "d1"
    D2 = "d2"
    UPSTREAM = "upstream"
    DOWNSTREAM = "downstream"


@dataclass(frozen=True, eq=False)
class Stencil:
    """
    차분 행렬의 엣지 단위 항(term) 구조

    (D h)_r = Σ_t share_t · w[edge_t] · (h_r - h_col_t),  r = rows_t
    엣지 가중치 w 에 대해 선형이므로 학습된 Δx, Δz 의 수반(adjoint) 계산에 그대로 사용됩니다.
    """
    num_nodes: int
    num_edges: int
    rows: np.ndarray
    cols: np.ndarray
    edges: np.ndarray
    shares: np.ndarray

    @property
    def num_terms(self) -> int:
        return int(self.rows.shape[0])


@dataclass(frozen=True, eq=False)
class DifferenceOperator:
    """
    |V|×|V| 희소 차분 행렬

    Attributes:
        num_nodes: |V|
        rows, cols, values: (row, col) 오름차순 정렬된 좌표 삼중항
        kind: 연산자 종류
        per_edge_dx: 엣지별 Δx (d1/d2)
        per_edge_dz: 엣지별 Δz (d2)
        stencil: 엣지 단위 항 구조
    """
    num_nodes: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    kind: OperatorKind
    stencil: Stencil
    per_edge_dx: Optional[np.ndarray] = None
    per_edge_dz: Optional[np.ndarray] = None

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, (self.rows, self.cols)),
                             shape=(self.num_nodes, self.num_nodes))

    @property
    def shape(self) -> tuple:
        return (self.num_nodes, self.num_nodes)

    @property
    def entries(self) -> list[tuple[int, int, float]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist()))

    def to_dense(self) -> np.ndarray:
        """테스트 오라클용 dense 행렬"""
        dense = np.zeros(self.shape)
        np.add.at(dense, (self.rows, self.cols), self.values)
        return dense

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[0] != self.num_nodes:
            raise ShapeError(f"벡터 길이 {x.shape[0]} ≠ |V| {self.num_nodes}")
        return self.matrix @ x

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.rows, weights=self.values, minlength=self.num_nodes)


# ============================================
# 스텐실 / 조립
# ============================================

def build_stencil(g: DirectedGraph, mode: OperatorKind = OperatorKind.BASE) -> Stencil:
    """
    엣지 단위 항 구조를 만듭니다.

    Args:
        g: 방향 그래프
        mode: BASE (업윈드 + 헤드워터 경계 규칙) / UPSTREAM (상류 항만) / DOWNSTREAM (하류 항만)
    """
    rows, cols, edges, shares = [], [], [], []
    for i in range(g.num_nodes):
        ups = upstream_neighbors(g, i)
        downs = downstream_neighbors(g, i)
        if mode is OperatorKind.UPSTREAM:
            terms = ups
        elif mode is OperatorKind.DOWNSTREAM:
            terms = downs
        else:
            terms = ups if ups else downs
        for j, e in terms:
            rows.append(i)
            cols.append(j)
            edges.append(e)
            shares.append(1.0 / len(terms))
    return Stencil(
        num_nodes=g.num_nodes,
        num_edges=g.num_edges,
        rows=np.array(rows, dtype=np.int64),
        cols=np.array(cols, dtype=np.int64),
        edges=np.array(edges, dtype=np.int64),
        shares=np.array(shares, dtype=np.float64),
    )


def assemble(stencil: Stencil, weights: np.ndarray, kind: OperatorKind,
             dx: Optional[np.ndarray] = None, dz: Optional[np.ndarray] = None) -> DifferenceOperator:
    """엣지 가중치 w 로 스텐실을 희소 행렬로 조립합니다."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (stencil.num_edges,):
        raise ShapeError(f"엣지 가중치 길이 {weights.shape} ≠ (|E|,) = ({stencil.num_edges},)")

    coef = stencil.shares * weights[stencil.edges]
    diag = np.bincount(stencil.rows, weights=coef, minlength=stencil.num_nodes)
    has_row = np.bincount(stencil.rows, minlength=stencil.num_nodes) > 0
    diag_rows = np.flatnonzero(has_row)

    rows = np.concatenate([stencil.rows, diag_rows])
    cols = np.concatenate([stencil.cols, diag_rows])
    values = np.concatenate([-coef, diag[diag_rows]])

    order = np.lexsort((cols, rows))
    return DifferenceOperator(
        num_nodes=stencil.num_nodes,
        rows=rows[order],
        cols=cols[order],
        values=values[order],
        kind=kind,
        stencil=stencil,
        per_edge_dx=None if dx is None else np.asarray(dx, dtype=np.float64),
        per_edge_dz=None if dz is None else np.asarray(dz, dtype=np.float64),
    )


def _check_dx(g: DirectedGraph, dx) -> np.ndarray:
    dx = np.asarray(dx, dtype=np.float64)
    if dx.ndim == 0:
        dx = np.full(g.num_edges, float(dx))
    if dx.shape != (g.num_edges,):
        raise ShapeError(f"Δx 길이 {dx.shape} ≠ (|E|,) = ({g.num_edges},)")
    if not np.all(np.isfinite(dx)) or np.any(dx <= 0):
        raise RangeError("Δx는 모든 엣지에서 양수여야 합니다.")
    return dx


# ============================================
# D̂ / D1 / D2
# ============================================

def build_base_difference(g: DirectedGraph) -> DifferenceOperator:
    """기본 업윈드 차분 행렬 D̂"""
    stencil = build_stencil(g)
    return assemble(stencil, np.ones(g.num_edges), OperatorKind.BASE)


def build_d1(g: DirectedGraph, dx) -> DifferenceOperator:
    """D1: 엣지별 1/Δx 가중 (균일 Δx 이면 D̂/Δx)"""
    dx = _check_dx(g, dx)
    return assemble(build_stencil(g), 1.0 / dx, OperatorKind.D1, dx=dx)


def build_d2(g: DirectedGraph, dx, dz) -> DifferenceOperator:
    """D2: 엣지별 Δz/Δx 가중 (균일 값이면 (Δz/Δx)·D̂)"""
    dx = _check_dx(g, dx)
    dz = np.asarray(dz, dtype=np.float64)
    if dz.ndim == 0:
        dz = np.full(g.num_edges, float(dz))
    if dz.shape != (g.num_edges,):
        raise ShapeError(f"Δz 길이 {dz.shape} ≠ (|E|,) = ({g.num_edges},)")
    return assemble(build_stencil(g), dz / dx, OperatorKind.D2, dx=dx, dz=dz)


def apply_composite(mu: np.ndarray, alpha: float, D: DifferenceOperator) -> np.ndarray:
    """(I + αD)·μ"""
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape[0] != D.num_nodes:
        raise ShapeError(f"μ 길이 {mu.shape[0]} ≠ |V| {D.num_nodes}")
    return mu + alpha * (D.matrix @ mu)


def composite_matrix(alpha: float, D: DifferenceOperator) -> sp.csr_matrix:
    """I + αD 희소 행렬"""
    return (sp.identity(D.num_nodes, format="csr") + alpha * D.matrix).tocsr()


# ============================================
# 주파수 응답 (DTFT)
# ============================================

@dataclass(frozen=True)
class FrequencyResponse:
    """각주파수 ω ∈ [0, π] 에서의 크기 응답"""
    omega: float
    magnitude: float


def _check_omega(omega: float) -> float:
    omega = float(omega)
    if not (-1e-12 <= omega <= np.pi + 1e-12):
        raise RangeError(f"ω는 [0, π] 범위여야 합니다: {omega}")
    return min(max(omega, 0.0), np.pi)


def closed_form_diff_magnitude(omega: float) -> float:
    """|D(e^{jω})| = 2|sin(ω/2)|"""
    omega = _check_omega(omega)
    return 2.0 * abs(np.sin(omega / 2.0))


def closed_form_composite_magnitude(omega: float, alpha: float) -> float:
    """|H(e^{jω})| = sqrt((1 + α − α·cos ω)² + (α·sin ω)²)"""
    omega = _check_omega(omega)
    return float(np.hypot(1.0 + alpha - alpha * np.cos(omega), alpha * np.sin(omega)))


def frequency_grid(ring_size: int) -> np.ndarray:
    """링 위에서 주기적인 ω_k = π·(2k/N), k = 0..N/2"""
    k = np.arange(ring_size // 2 + 1)
    return np.pi * (2.0 * k / ring_size)


def _ring_exponential(ring_size: int, omega: float) -> tuple[np.ndarray, np.ndarray]:
    if ring_size < 8:
        raise PreconditionError(f"ring_size는 8 이상이어야 합니다: {ring_size}")
    omega = _check_omega(omega)
    k = omega * ring_size / (2.0 * np.pi)
    if abs(k - round(k)) > 1e-9:
        raise PreconditionError(f"ω={omega}는 2π/{ring_size}의 정수배가 아닙니다.")
    n = np.arange(ring_size)
    return np.cos(omega * n), np.sin(omega * n)


@lru_cache(maxsize=8)
def _ring_operator(ring_size: int) -> DifferenceOperator:
    return build_base_difference(directed_ring(ring_size))


def _amplitude_ratio(matrix, re: np.ndarray, im: np.ndarray) -> float:
    out_re, out_im = matrix @ re, matrix @ im
    return float(np.sqrt(np.sum(out_re ** 2 + out_im ** 2) / np.sum(re ** 2 + im ** 2)))


def empirical_response(ring_size: int, omega: float, alpha: float) -> FrequencyResponse:
    """
    방향 링 위 I + αD̂ 를 복소 지수 e^{jωn} 의 실수/허수부에 각각 적용하여
    출력/입력 진폭비를 측정합니다. (순환 행렬이므로 경계 효과 없음)
    """
    re, im = _ring_exponential(ring_size, omega)
    D = _ring_operator(ring_size)
    return FrequencyResponse(omega=float(omega), magnitude=_amplitude_ratio(composite_matrix(alpha, D), re, im))


def empirical_diff_response(ring_size: int, omega: float) -> FrequencyResponse:
    """방향 링 위 D̂ 단독의 진폭비"""
    re, im = _ring_exponential(ring_size, omega)
    D = _ring_operator(ring_size)
    return FrequencyResponse(omega=float(omega), magnitude=_amplitude_ratio(D.matrix, re, im))


def spectrum_table(ring_size: int, alphas: list[float]) -> list[dict]:
    """
    주파수 그리드 전체에 대해 닫힌 형태 / 실측 크기를 나열합니다.
    operator = "diff" 행은 D̂ 단독, "composite" 행은 I + αD̂ 입니다.
    """
    rows = []
    for omega in frequency_grid(ring_size):
        rows.append({
            "omega": float(omega),
            "closed_form": closed_form_diff_magnitude(omega),
            "empirical": empirical_diff_response(ring_size, omega).magnitude,
            "alpha": "",
            "operator": "diff",
        })
        for alpha in alphas:
            rows.append({
                "omega": float(omega),
                "closed_form": closed_form_composite_magnitude(omega, alpha),
                "empirical": empirical_response(ring_size, omega, alpha).magnitude,
                "alpha": float(alpha),
                "operator": "composite",
            })
    return rows
