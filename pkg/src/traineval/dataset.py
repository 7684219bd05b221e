"""
정규화 / 분할 / 윈도우 샘플링
=============================
기능:
  - Normalizer : 학습 구간에서 변수별 평균/표준편차 (standard score)
  - Split      : 시간 순 70/15/15 분할 (겹침 없음)
  - make_windows: (X[t−W+1..t], y[t+n]) 샘플 생성, 샘플은 자기 분할 구간 안에 완전히 포함
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..exceptions import ConfigError, DataError, ShapeError
from ..graph import NodeSeries, Targets

logger = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.7, 0.15, 0.15)


@dataclass
class Normalizer:
    """
    변수별 z-score 정규화

    Attributes:
        mean, std: (p,) 통계 (분산 0 변수는 std = 1)
        names: 변수 이름
    """
    mean: np.ndarray
    std: np.ndarray
    names: tuple = ()

    @classmethod
    def fit(cls, values: np.ndarray, names: tuple = ()) -> "Normalizer":
        """
        Args:
            values: 마지막 축이 변수인 배열 (..., p)
        """
        values = np.asarray(values, dtype=np.float64)
        flat = values.reshape(-1, values.shape[-1])
        mean = flat.mean(axis=0)
        std = flat.std(axis=0)
        zero = std == 0
        if zero.any():
            labels = [names[k] if k < len(names) else str(k) for k in np.flatnonzero(zero)]
            logger.warning("⚠️  분산 0 변수 %s: std = 1 로 대체", labels)
            std = np.where(zero, 1.0, std)
        return cls(mean=mean, std=std, names=tuple(names))

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def invert(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(), "names": list(self.names)}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(mean=np.asarray(d["mean"], dtype=np.float64),
                   std=np.asarray(d["std"], dtype=np.float64), names=tuple(d.get("names", ())))


@dataclass(frozen=True)
class Split:
    """시간 순 분할: 각 구간은 [start, end) 시간 인덱스"""
    train: tuple
    val: tuple
    test: tuple

    @classmethod
    def chronological(cls, total_steps: int, fractions: tuple = DEFAULT_FRACTIONS) -> "Split":
        if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
            raise ConfigError(f"분할 비율은 합이 1인 세 개의 비음수여야 합니다: {fractions}")
        a = int(round(total_steps * fractions[0]))
        b = int(round(total_steps * (fractions[0] + fractions[1])))
        return cls(train=(0, a), val=(a, b), test=(b, total_steps))

    def parts(self) -> dict:
        return {"train": self.train, "val": self.val, "test": self.test}

    def to_dict(self) -> dict:
        return {k: list(v) for k, v in self.parts().items()}


@dataclass
class SampleSet:
    """
    윈도우 샘플 모음

    Attributes:
        x: (S, W, |V|, p) 입력 윈도우
        y: (S, |V|) t+n 시점 타겟
        end_index: (S,) 윈도우 마지막 시간 인덱스 t
    """
    x: np.ndarray
    y: np.ndarray
    end_index: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.x.shape[0])

    def subset(self, index) -> "SampleSet":
        return SampleSet(x=self.x[index], y=self.y[index], end_index=self.end_index[index])


def _windows_in(values: np.ndarray, targets: np.ndarray, window: int, horizon: int,
                start: int, end: int, stride: int) -> SampleSet:
    # t − W + 1 ≥ start,  t + n < end
    ends = np.arange(start + window - 1, end - horizon, stride, dtype=np.int64)
    if len(ends) == 0:
        n, p = values.shape[1], values.shape[2]
        return SampleSet(x=np.zeros((0, window, n, p)), y=np.zeros((0, n)), end_index=ends)
    x = np.stack([values[t - window + 1: t + 1] for t in ends])
    y = targets[ends + horizon]
    return SampleSet(x=x, y=y, end_index=ends)


def make_windows(series: Union[NodeSeries, np.ndarray], targets: Union[Targets, np.ndarray],
                 window: int, horizon: int, split: Optional[Split] = None,
                 stride: int = 1) -> Union[SampleSet, dict]:
    """
    윈도우 샘플을 생성합니다.

    Args:
        series: (T, |V|, p) 노드 시계열
        targets: (T, |V|) 타겟
        window: W
        horizon: n
        split: 지정 시 {"train", "val", "test"} 별 SampleSet, 생략 시 전체 구간 SampleSet
        stride: 윈도우 끝 간격

    Returns:
        SampleSet 또는 {분할 이름: SampleSet}
    """
    values = np.asarray(getattr(series, "values", series), dtype=np.float64)
    y = np.asarray(getattr(targets, "values", targets), dtype=np.float64)
    total = values.shape[0]
    if y.shape[0] != total:
        raise ShapeError(f"시계열 길이 {total} ≠ 타겟 길이 {y.shape[0]}")
    if window < 1 or horizon < 1 or stride < 1:
        raise ConfigError("W, n, stride 는 1 이상이어야 합니다.")
    if total < window + horizon:
        raise DataError(f"시계열이 너무 짧습니다: T={total} < W + n = {window + horizon}")

    if split is None:
        return _windows_in(values, y, window, horizon, 0, total, stride)
    return {name: _windows_in(values, y, window, horizon, start, end, stride)
            for name, (start, end) in split.parts().items()}


@dataclass
class PreparedData:
    """정규화된 분할 샘플 + 정규화 통계"""
    samples: dict
    split: Split
    series_norm: Normalizer
    target_norm: Normalizer

    def summary(self) -> dict:
        return {name: len(s) for name, s in self.samples.items()}


def prepare_data(series: NodeSeries, targets: Targets, window: int, horizon: int,
                 fractions: tuple = DEFAULT_FRACTIONS, stride: int = 1) -> PreparedData:
    """
    학습 구간으로 정규화 통계를 맞춘 뒤 정규화된 분할 샘플을 만듭니다.
    (평가 지표와 교란 응답은 모두 정규화 단위)
    """
    split = Split.chronological(series.num_steps, fractions)
    start, end = split.train
    series_norm = Normalizer.fit(series.values[start:end], names=series.variables)
    target_norm = Normalizer.fit(targets.values[start:end][..., np.newaxis], names=("y",))

    x = series_norm.apply(series.values)
    y = target_norm.apply(targets.values[..., np.newaxis])[..., 0]
    samples = make_windows(x, y, window, horizon, split=split, stride=stride)
    logger.info("🧩 윈도우 샘플: train=%d, val=%d, test=%d (W=%d, n=%d, stride=%d)",
                len(samples["train"]), len(samples["val"]), len(samples["test"]),
                window, horizon, stride)
    return PreparedData(samples=samples, split=split, series_norm=series_norm, target_norm=target_norm)
