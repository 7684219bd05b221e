"""
공통 모델 인터페이스 (Base Model)
==================================
모든 유량 예측 모델의 기본 클래스를 정의합니다.

흐름:
  X 윈도우 (W, |V|, p) → embed_input → h⁰ → L개 메시지 패싱 레이어 → 노드별 선형 readout → ŷ (|V|,)

서브클래스 구현 항목:
  - prepare(graph)          : 순전파 1회 동안 재사용할 연산자 구성
  - layer(l, h, context)    : l번째 레이어
  - influence_pattern(graph): 레이어 1회가 정보를 옮기는 희소 패턴 (row ← col)
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from typing import Any, Optional

import numpy as np
import scipy.sparse as sp

from ..diffops import build_stencil
from ..exceptions import ConfigError, ShapeError
from ..graph import DirectedGraph
from ..tensorad import Tensor, matmul, no_grad, reshape, shift

logger = logging.getLogger(__name__)

VARIANTS = ("river", "traffic", "gcn", "resgcn", "dm")
DELTA_T_INIT = 0.7


@dataclass(frozen=True)
class ModelConfig:
    """
    모델 설정

    Attributes:
        variant: river / traffic / gcn / resgcn / dm
        layers: 메시지 패싱 레이어 수 L
        hidden: 은닉 차원 d
        window: 입력 윈도우 W
        horizon: 예측 시점 n
        seed: 가중치 초기화 시드
        edge_hidden: φ1/φ2 MLP 은닉 폭
    """
    variant: str = "river"
    layers: int = 2
    hidden: int = 16
    window: int = 24
    horizon: int = 6
    seed: int = 0
    edge_hidden: int = 8

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"알 수 없는 모델 variant: {self.variant} (허용: {', '.join(VARIANTS)})")
        for name in ("layers", "hidden", "window", "horizon", "edge_hidden"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name}은(는) 1 이상이어야 합니다: {getattr(self, name)}")

    def to_dict(self) -> dict:
        return asdict(self)


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    """균등분포 ±√(6 / (fan_in + fan_out))"""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def stack_window(x_window: np.ndarray, window: int, num_nodes: int, num_features: int) -> tuple[np.ndarray, int]:
    """
    (W, |V|, p) 또는 (B, W, |V|, p) 입력을 (B·|V|, W·p) 행렬로 펼칩니다.

    Returns:
        (행렬, 배치 크기 B 또는 0 (단일 샘플))
    """
    x = np.asarray(x_window, dtype=np.float64)
    single = x.ndim == 3
    if single:
        x = x[np.newaxis]
    if x.ndim != 4 or x.shape[1:] != (window, num_nodes, num_features):
        raise ShapeError(
            f"입력 윈도우 형태 {np.shape(x_window)} ≠ (W={window}, |V|={num_nodes}, p={num_features})"
        )
    batch = x.shape[0]
    flat = x.transpose(0, 2, 1, 3).reshape(batch * num_nodes, window * num_features)
    return flat, 0 if single else batch


class BaseModel(ABC):
    """
    모든 예측 모델의 기본 클래스

    서브클래스는 prepare() / layer() 를 구현해야 합니다.
    """

    def __init__(self, config: ModelConfig, num_features: int, edge_dim: int = 0):
        """
        Args:
            config: ModelConfig
            num_features: 노드 변수 수 p
            edge_dim: 엣지 특성 차원 q
        """
        self.config = config
        self.num_features = int(num_features)
        self.edge_dim = int(edge_dim)
        self.rng = np.random.default_rng(config.seed)
        self.params: dict[str, Tensor] = {}

        d = config.hidden
        self._build_embedding()
        self.add_param("readout_w", glorot(self.rng, d, 1))
        self.add_param("readout_b", np.zeros(()))

    # ---- 파라미터 ----

    def add_param(self, name: str, value) -> Tensor:
        tensor = Tensor(value, requires_grad=True, name=name)
        self.params[name] = tensor
        return tensor

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.params.items()}

    def load_state_dict(self, state: dict):
        missing = set(self.params) - set(state)
        if missing:
            raise ShapeError(f"체크포인트에 없는 파라미터: {sorted(missing)}")
        for name, p in self.params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.shape:
                raise ShapeError(f"파라미터 '{name}' 형태 {value.shape} ≠ {p.shape}")
            p.data = value.copy()

    @property
    def delta_t(self) -> Optional[float]:
        """학습된 Δt (Δt 가 없는 variant 는 None)"""
        p = self.params.get("delta_t")
        return None if p is None else p.item()

    def manifest(self) -> dict:
        c = self.config
        return {"variant": c.variant, "L": c.layers, "d": c.hidden, "W": c.window,
                "n": c.horizon, "seed": c.seed, "delta_t_final": self.delta_t}

    # ---- 순전파 ----

    def _build_embedding(self):
        self.add_param("embed", glorot(self.rng, self.config.window * self.num_features,
                                       self.config.hidden))

    def embed_input(self, x_window, num_nodes: int) -> tuple[Tensor, Any, int]:
        """
        입력 윈도우를 h⁰ 로 임베딩합니다 (편향 없는 선형 사상).

        Returns:
            (h⁰ (B·|V|, d), 부가 상태, 배치 크기)
        """
        flat, batch = stack_window(x_window, self.config.window, num_nodes, self.num_features)
        return matmul(Tensor(flat), self.params["embed"]), None, batch

    @abstractmethod
    def prepare(self, graph: DirectedGraph) -> Any:
        """순전파 1회 동안 공유할 연산자 (φ 파라미터가 바뀌므로 매 순전파마다 재구성)"""

    @abstractmethod
    def layer(self, index: int, h: Tensor, extra: Any, context: Any) -> Tensor:
        """index 번째 메시지 패싱 레이어"""

    def influence_pattern(self, graph: DirectedGraph) -> sp.csr_matrix:
        """레이어 1회의 의존 패턴: [r, c] ≠ 0 이면 h'_r 이 h_c 에 의존"""
        stencil = build_stencil(graph)
        n = graph.num_nodes
        rows = np.concatenate([stencil.rows, np.arange(n)])
        cols = np.concatenate([stencil.cols, np.arange(n)])
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))

    def layer_embeddings(self, graph: DirectedGraph, x_window) -> list[Tensor]:
        """[h⁰, h¹, ..., hᴸ] (과평활 진단용)"""
        h, extra, _ = self.embed_input(x_window, graph.num_nodes)
        context = self.prepare(graph)
        embeddings = [h]
        for index in range(self.config.layers):
            h = self.layer(index, h, extra, context)
            embeddings.append(h)
        return embeddings

    def readout(self, h: Tensor, num_nodes: int, batch: int) -> Tensor:
        out = shift(matmul(h, self.params["readout_w"]), self.params["readout_b"])
        return reshape(out, (batch, num_nodes) if batch else (num_nodes,))

    def forward(self, graph: DirectedGraph, x_window) -> Tensor:
        """
        Args:
            graph: 방향 그래프 (역토폴로지 학습 시 reverse_topology 결과)
            x_window: (W, |V|, p) 또는 (B, W, |V|, p)

        Returns:
            ŷ: (|V|,) 또는 (B, |V|)
        """
        h, extra, batch = self.embed_input(x_window, graph.num_nodes)
        context = self.prepare(graph)
        for index in range(self.config.layers):
            h = self.layer(index, h, extra, context)
        return self.readout(h, graph.num_nodes, batch)

    def predict(self, graph: DirectedGraph, x_window) -> np.ndarray:
        """테이프에 기록하지 않는 추론"""
        with no_grad():
            return self.forward(graph, x_window).numpy()

    def __repr__(self) -> str:
        c = self.config
        return f"{type(self).__name__}(L={c.layers}, d={c.hidden}, W={c.window}, n={c.horizon})"


def influence_mask(model: BaseModel, graph: DirectedGraph, node: int,
                   layers: Optional[int] = None) -> np.ndarray:
    """
    L 레이어 후 예측이 node 의 입력에 의존할 수 있는 노드의 불리언 마스크

    Args:
        model: 학습된 모델 (의존 패턴 제공)
        node: 교란 노드 내부 ID
        layers: 레이어 수 (기본: model.config.layers)
    """
    if not 0 <= node < graph.num_nodes:
        raise IndexError(f"노드 ID {node}가 범위를 벗어났습니다 (|V|={graph.num_nodes}).")
    pattern = model.influence_pattern(graph)
    mask = np.zeros(graph.num_nodes, dtype=bool)
    mask[node] = True
    for _ in range(model.config.layers if layers is None else layers):
        mask = mask | ((pattern @ mask.astype(np.float64)) > 0)
    return mask
