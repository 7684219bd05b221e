"""
학습 루프 (Trainer)
===================
MSE 목적함수에 대한 미니배치 Adam 학습.

규칙:
  - 시드가 같으면 셔플 순서 / 초기화 / 이력이 모두 동일
  - 에폭마다 train/val loss 와 Δt 기록
  - 검증 MSE 기준 early stopping (patience 20, 최대 500 에폭), 최적 파라미터 복원
  - loss NaN/Inf 발생 시 TrainingDivergedError (에폭 포함)
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import DataError, TrainingDivergedError
from ..graph import DirectedGraph
from ..models import BaseModel
from ..tensorad import AdamState, Tape, Tensor, adam_step, backward, mse_loss
from .dataset import SampleSet
from .metrics import evaluate_mse

logger = logging.getLogger(__name__)

PATIENCE = 20
MAX_EPOCHS = 500


@dataclass
class TrainHistory:
    """
    에폭별 학습 이력

    Attributes:
        train_loss / val_loss: 에폭별 MSE (정규화 단위)
        delta_t: 에폭 종료 시점 Δt (Δt 가 없는 모델은 None)
        best_epoch: 복원된 파라미터의 에폭 (학습 없으면 -1)
        wall_time: 소요 시간(초), 비교 / 직렬화 대상 아님
    """
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    delta_t: list = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False
    wall_time: float = field(default=0.0, compare=False)

    @property
    def epochs(self) -> int:
        return len(self.train_loss)

    def record(self, train_loss: float, val_loss: float, delta_t):
        self.train_loss.append(float(train_loss))
        self.val_loss.append(float(val_loss))
        self.delta_t.append(None if delta_t is None else float(delta_t))

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "delta_t": self.delta_t,
            "best_epoch": self.best_epoch,
            "stopped_early": self.stopped_early,
        }


def _check_loss(value: float, epoch: int, name: str):
    if not np.isfinite(value):
        logger.error("🔴 학습 발산: %s=%s (epoch=%d)", name, value, epoch)
        raise TrainingDivergedError(f"{name}이(가) 유한하지 않습니다 (epoch={epoch})", epoch=epoch)


def train(model: BaseModel, graph: DirectedGraph, samples: dict, epochs: int,
          lr: float = 1e-2, seed: int = 0, batch_size: int = 32,
          patience: int = PATIENCE) -> TrainHistory:
    """
    모델을 학습합니다 (파라미터 제자리 갱신).

    Args:
        model: 예측 모델
        graph: 학습 토폴로지 (역방향 실험은 reverse_topology(g))
        samples: {"train": SampleSet, "val": SampleSet}
        epochs: 최대 에폭 수 (MAX_EPOCHS 로 제한)
        lr: Adam 학습률
        seed: 미니배치 셔플 시드
        batch_size: 미니배치 크기

    Returns:
        TrainHistory
    """
    history = TrainHistory()
    epochs = min(int(epochs), MAX_EPOCHS)
    train_set: SampleSet = samples["train"]
    val_set: SampleSet = samples.get("val")
    if epochs <= 0:
        return history
    if len(train_set) == 0:
        raise DataError("학습 샘플이 없습니다.")

    params = model.parameters()
    state = AdamState.for_params(params, lr=lr)
    rng = np.random.default_rng(seed)
    best_val = np.inf
    best_state = model.state_dict()
    wait = 0
    started = time.perf_counter()

    logger.info("=" * 50)
    logger.info("🏋️  학습 시작: %s, %s, epochs=%d, lr=%g, batch=%d",
                model, graph, epochs, lr, batch_size)
    logger.info("=" * 50)

    for epoch in range(epochs):
        order = rng.permutation(len(train_set))
        total = 0.0
        for start in range(0, len(order), batch_size):
            batch = train_set.subset(order[start:start + batch_size])
            with Tape():
                loss = mse_loss(model.forward(graph, batch.x), Tensor(batch.y))
                grads = backward(loss, params)
            _check_loss(loss.item(), epoch, "train_loss")
            adam_step(params, grads, state)
            total += loss.item() * len(batch)
        train_loss = total / len(train_set)

        val_loss = evaluate_mse(model, graph, val_set) if val_set is not None and len(val_set) else train_loss
        _check_loss(val_loss, epoch, "val_loss")
        history.record(train_loss, val_loss, model.delta_t)

        if val_loss < best_val:
            best_val, best_state, wait = val_loss, model.state_dict(), 0
            history.best_epoch = epoch
        else:
            wait += 1

        if epoch % 10 == 0 or epoch == epochs - 1:
            dt = "-" if model.delta_t is None else f"{model.delta_t:.4f}"
            logger.info("   epoch %3d | train %.5f | val %.5f | Δt %s", epoch, train_loss, val_loss, dt)

        if wait >= patience:
            history.stopped_early = True
            logger.warning("⚠️  early stopping: %d 에폭 동안 개선 없음 (epoch=%d)", patience, epoch)
            break

    model.load_state_dict(best_state)
    history.wall_time = time.perf_counter() - started
    logger.info("✅ 학습 완료: best epoch=%d, val=%.5f, %.1fs", history.best_epoch, best_val, history.wall_time)
    return history
