"""
Adam 옵티마이저
===============
θ ← θ − lr · m̂ / (√v̂ + ε),  m̂ = m / (1 − β1ᵗ),  v̂ = v / (1 − β2ᵗ)
"""

from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from ..exceptions import ShapeError
from .tensor import Tensor


@dataclass
class AdamState:
    """Adam 1차/2차 모멘트와 하이퍼파라미터"""
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: Sequence[Tensor], lr: float = 1e-3, **kwargs) -> "AdamState":
        return cls(m=[np.zeros_like(p.data) for p in params],
                   v=[np.zeros_like(p.data) for p in params], lr=lr, **kwargs)


def adam_step(params: Sequence[Tensor], grads: Union[Sequence[np.ndarray], Mapping],
              state: AdamState) -> AdamState:
    """
    파라미터를 제자리에서 한 스텝 갱신합니다.

    Args:
        params: 학습 파라미터
        grads: params 순서의 기울기 목록 또는 {Tensor: 기울기} 맵
        state: AdamState (m, v 형태가 params 와 일치해야 함)
    """
    if isinstance(grads, Mapping):
        grads = [grads[p] for p in params]
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ShapeError("파라미터 / 기울기 / 모멘트 개수가 다릅니다.")

    state.t += 1
    bias1 = 1.0 - state.beta1 ** state.t
    bias2 = 1.0 - state.beta2 ** state.t
    for k, (p, g) in enumerate(zip(params, grads)):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.shape or state.m[k].shape != p.shape:
            raise ShapeError(f"기울기 형태 {g.shape} ≠ 파라미터 형태 {p.shape}")
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g
        m_hat = state.m[k] / bias1
        v_hat = state.v[k] / bias2
        p.data = p.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return state
