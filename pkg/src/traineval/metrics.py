"""
평가 지표 (Metrics)
===================
기능:
  - evaluate_mse           : 샘플 평균 (1/|V|)‖y − ŷ‖²
  - direction_sensitivity  : DS = loss(Reverse) − loss(Forward)
  - relative_ds            : RDS = (DS_other − DS_ref) / DS_ref
  - perturbation_response  : 마지막 윈도우 스텝 교란에 대한 노드별 응답 (평균, 3σ 밴드)
  - temporal_gradient      : 노드별 시간 분산 (과평활 진단)
  - smoothing_profile      : 레이어별 temporal_gradient 의 노드 간 표준편차
"""

import logging
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..exceptions import DataError, RangeError, ShapeError, UndefinedReferenceError
from ..graph import DirectedGraph
from ..models import BaseModel
from ..tensorad import no_grad
from .dataset import SampleSet

logger = logging.getLogger(__name__)

EVAL_BATCH = 256


def _require_samples(samples: Optional[SampleSet], what: str):
    if samples is None or len(samples) == 0:
        raise DataError(f"{what}: 샘플이 없습니다.")


def predict_samples(model: BaseModel, graph: DirectedGraph, x: np.ndarray) -> np.ndarray:
    """(S, W, |V|, p) → (S, |V|), 배치 단위 추론"""
    out = [model.predict(graph, x[k:k + EVAL_BATCH]) for k in range(0, len(x), EVAL_BATCH)]
    return np.concatenate(out, axis=0)


def evaluate_mse(model: BaseModel, graph: DirectedGraph, samples: SampleSet) -> float:
    """샘플 평균 (1/|V|)‖y − ŷ‖² (정규화 단위)"""
    _require_samples(samples, "evaluate_mse")
    residual = samples.y - predict_samples(model, graph, samples.x)
    return float(np.mean(np.mean(residual ** 2, axis=1)))


# ============================================
# 방향 민감도
# ============================================

def direction_sensitivity(loss_forward: float, loss_reverse: float) -> float:
    """DS = loss_reverse − loss_forward (양수면 엣지 방향을 활용하는 모델)"""
    if not (np.isfinite(loss_forward) and np.isfinite(loss_reverse)):
        raise RangeError(f"loss 는 유한해야 합니다: F={loss_forward}, R={loss_reverse}")
    return float(loss_reverse) - float(loss_forward)


def relative_ds(ds_ref: float, ds_other: float) -> float:
    """RDS = (ds_other − ds_ref) / ds_ref"""
    if ds_ref == 0:
        raise UndefinedReferenceError("기준 DS 가 0 이므로 RDS 를 정의할 수 없습니다.")
    return (float(ds_other) - float(ds_ref)) / float(ds_ref)


@dataclass
class DSReport:
    """방향 민감도 리포트 (ds = loss_reverse − loss_forward)"""
    loss_forward: float
    loss_reverse: float
    ds: float
    rds: Optional[float] = None
    reference_ds: Optional[float] = None

    @classmethod
    def from_losses(cls, loss_forward: float, loss_reverse: float,
                    reference_ds: Optional[float] = None) -> "DSReport":
        ds = direction_sensitivity(loss_forward, loss_reverse)
        rds = None if reference_ds is None else relative_ds(reference_ds, ds)
        return cls(loss_forward=float(loss_forward), loss_reverse=float(loss_reverse),
                   ds=ds, rds=rds, reference_ds=reference_ds)

    def to_dict(self) -> dict:
        return asdict(self)


# ============================================
# 교란 응답
# ============================================

@dataclass
class PerturbationResult:
    """
    노드별 교란 응답 통계

    Attributes:
        node_ids: 노드 라벨
        mean / std: 샘플 평균 / 표준편차 응답
        lower / upper: mean ∓ 3·std
    """
    node: str
    delta: float
    node_ids: tuple
    mean: np.ndarray
    std: np.ndarray
    num_samples: int

    @property
    def lower(self) -> np.ndarray:
        return self.mean - 3.0 * self.std

    @property
    def upper(self) -> np.ndarray:
        return self.mean + 3.0 * self.std

    def to_rows(self) -> list[dict]:
        """CSV 행: node, mean_response, std_response"""
        return [{"node": label, "mean_response": float(m), "std_response": float(s)}
                for label, m, s in zip(self.node_ids, self.mean, self.std)]

    def to_dict(self) -> dict:
        return {
            "node": self.node, "delta": self.delta, "num_samples": self.num_samples,
            "nodes": list(self.node_ids), "mean": self.mean.tolist(), "std": self.std.tolist(),
            "lower_3sigma": self.lower.tolist(), "upper_3sigma": self.upper.tolist(),
        }


def perturbation_response(model: BaseModel, graph: DirectedGraph, samples: SampleSet,
                          node: int, delta: float = 0.5, channel: int = 0) -> PerturbationResult:
    """
    각 샘플의 마지막 윈도우 스텝에서 node 의 유량 변수(channel)에 delta 를 더하고
    response = ŷ_perturbed − ŷ_clean 의 노드별 평균 / 표준편차를 계산합니다.

    Args:
        node: 교란 노드 내부 ID
        delta: 교란 크기 (정규화 단위, 기본 +0.5)
        channel: 유량 변수 채널 (하천 u, 교통 rho)
    """
    _require_samples(samples, "perturbation_response")
    if not 0 <= node < graph.num_nodes:
        raise RangeError(f"노드 ID {node}가 범위를 벗어났습니다 (|V|={graph.num_nodes}).")
    if not np.isfinite(delta):
        raise RangeError(f"delta 는 유한해야 합니다: {delta}")

    perturbed = samples.x.copy()
    perturbed[:, -1, node, channel] += delta
    response = predict_samples(model, graph, perturbed) - predict_samples(model, graph, samples.x)

    result = PerturbationResult(
        node=graph.node_ids[node], delta=float(delta), node_ids=graph.node_ids,
        mean=response.mean(axis=0), std=response.std(axis=0), num_samples=len(samples),
    )
    logger.info("💥 교란 응답: node=%s, Δ=%+.3f, 최대 평균 응답=%.4g",
                result.node, delta, float(np.max(np.abs(result.mean))))
    return result


# ============================================
# 과평활 진단
# ============================================

def temporal_gradient(values: np.ndarray) -> np.ndarray:
    """
    노드별 (1/t)·Σ_s (x_i[s] − mean(x_i))²

    Args:
        values: (T, |V|) 또는 (T, |V|, c); 채널이 있으면 채널 평균

    Returns:
        (|V|,) 통계
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim not in (2, 3):
        raise ShapeError(f"(T, |V|[, c]) 형태가 필요합니다: {values.shape}")
    if values.shape[0] < 2:
        raise DataError("temporal_gradient 는 2개 이상의 시점이 필요합니다.")
    variance = values.var(axis=0)
    return variance.mean(axis=-1) if variance.ndim == 2 else variance


def collect_layer_embeddings(model: BaseModel, graph: DirectedGraph, samples: SampleSet) -> list[np.ndarray]:
    """레이어별 임베딩 [(S, |V|, d)] × (L + 1)"""
    _require_samples(samples, "collect_layer_embeddings")
    with no_grad():
        layers = model.layer_embeddings(graph, samples.x)
    return [h.data.reshape(len(samples), graph.num_nodes, -1) for h in layers]


def smoothing_profile(embeddings: list) -> list[float]:
    """레이어별 temporal_gradient 의 노드 간 표준편차"""
    return [float(np.std(temporal_gradient(e))) for e in embeddings]
