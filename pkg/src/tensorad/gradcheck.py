"""
수치 기울기 검사 (Finite-difference gradient check)
===================================================
역전파 기울기를 중심 차분 (f(θ+ε) − f(θ−ε)) / 2ε 과 비교합니다.
"""

import logging
from typing import Callable, Sequence

import numpy as np

from .tensor import Tape, Tensor, backward, no_grad

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5


def numerical_gradient(fn: Callable[[], Tensor], param: Tensor, step: float = DEFAULT_STEP) -> np.ndarray:
    """param 의 각 원소에 대한 중심 차분 기울기"""
    grad = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    with no_grad():
        for k in range(flat.size):
            original = flat[k]
            flat[k] = original + step
            plus = fn().item()
            flat[k] = original - step
            minus = fn().item()
            flat[k] = original
            grad.reshape(-1)[k] = (plus - minus) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """‖a − n‖ / max(‖a‖ + ‖n‖, 1e-12)"""
    denom = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / denom)


def check_gradients(fn: Callable[[], Tensor], params: Sequence[Tensor],
                    step: float = DEFAULT_STEP) -> dict:
    """
    fn() 이 반환하는 스칼라 loss 에 대해 params 별 상대 오차를 계산합니다.

    Args:
        fn: 인자 없이 params 로부터 loss 를 다시 계산하는 함수
        params: 검사 대상 텐서

    Returns:
        {파라미터 이름 또는 인덱스: 상대 오차}
    """
    with Tape():
        loss = fn()
        analytic = backward(loss, params)

    errors = {}
    for k, p in enumerate(params):
        err = relative_error(analytic[p], numerical_gradient(fn, p, step))
        errors[p.name or k] = err
        logger.debug("gradcheck %s: rel_err=%.3e", p.name or k, err)
    return errors
