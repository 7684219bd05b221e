"""
텐서 / 테이프 / 역전파 (Reverse-mode AD)
========================================
64비트 dense 텐서와 추가 전용(append-only) 테이프 위에서 역방향 자동 미분을 수행합니다.

규칙:
  - 브로드캐스팅 없음 (스칼라 배율은 scale / shift 로 명시)
  - 팬아웃 기울기는 가산 누적
  - 테이프 노드는 생성 순서의 역순으로 정확히 한 번 방문
  - 학습 스칼라(Δt, ĝ)는 같은 테이프 위의 rank-0 텐서
  - `with Tape()` 밖의 연산은 기록되지 않음 (스레드 기본 테이프 없음)
"""

import logging
import threading
from contextlib import contextmanager
from typing import Callable, Iterable, Optional, Union

import numpy as np

from ..exceptions import ContractError, ShapeError

logger = logging.getLogger(__name__)

SOFTPLUS_LINEAR_THRESHOLD = 30.0


class Tensor:
    """
    dense 64비트 텐서

    Attributes:
        data: float64 배열 (rank 0~2)
        requires_grad: 학습 파라미터(leaf) 여부
        grad: 마지막 backward 결과 (leaf 에만 기록)
        tape_id: 테이프 노드 핸들 (연산 결과에만 존재)
    """

    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.tape_id: Optional[int] = None
        self._tape: Optional["Tape"] = None
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def tracked(self) -> bool:
        """기울기가 흐르는 텐서인지 (파라미터 또는 테이프 노드)"""
        return self.requires_grad or self.tape_id is not None

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"스칼라가 아닌 텐서입니다: {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        """테이프와 분리된 복사본 (기울기를 받지 않음)"""
        return Tensor(self.data.copy())

    def __add__(self, other):
        return ewise("add", self, _as_tensor(other))

    def __sub__(self, other):
        return ewise("sub", self, _as_tensor(other))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(float(other), self)
        return ewise("mul", self, _as_tensor(other))

    __rmul__ = __mul__

    def __neg__(self):
        return scale(-1.0, self)

    def __matmul__(self, other):
        return matmul(self, _as_tensor(other))

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# ============================================
# 테이프
# ============================================

class _Node:
    __slots__ = ("op", "output", "inputs", "backward_fn")

    def __init__(self, op: str, output: Tensor, inputs: tuple, backward_fn: Callable):
        self.op = op
        self.output = output
        self.inputs = inputs
        self.backward_fn = backward_fn


class Tape:
    """
    추가 전용 미분 테이프

    입력 노드가 항상 출력보다 먼저 기록되므로 구조적으로 비순환입니다.
    한 테이프는 하나의 학습 워커가 소유합니다.

    사용:
        with Tape() as tape:
            loss = ...
        grads = backward(loss, params)
    """

    def __init__(self, check_finite: bool = False):
        """
        Args:
            check_finite: True 이면 매 연산 결과의 NaN/Inf 를 검사 (디버그용)
        """
        self.nodes: list[_Node] = []
        self.check_finite = check_finite

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, op: str, output: Tensor, inputs: tuple, backward_fn: Callable):
        for t in inputs:
            if t._tape is not None and t._tape is not self:
                raise ContractError(f"'{op}' 입력이 다른 테이프에 기록되어 있습니다.")
        if self.check_finite and not np.all(np.isfinite(output.data)):
            raise ContractError(f"'{op}' 연산 결과에 NaN/Inf 가 있습니다.")
        output.tape_id = len(self.nodes)
        output._tape = self
        self.nodes.append(_Node(op, output, inputs, backward_fn))

    def __enter__(self) -> "Tape":
        _state().tapes.append(self)
        return self

    def __exit__(self, *exc):
        _state().tapes.pop()
        return False


class _ThreadState(threading.local):
    def __init__(self):
        self.tapes: list[Tape] = []
        self.grad_enabled = True


_local = _ThreadState()


def _state() -> _ThreadState:
    return _local


def current_tape() -> Optional[Tape]:
    """활성 테이프 (`with Tape()` 밖이면 None)"""
    state = _state()
    return state.tapes[-1] if state.tapes else None


@contextmanager
def no_grad():
    """블록 안의 연산은 테이프에 기록되지 않습니다 (평가 / 수치 미분용)."""
    state = _state()
    previous = state.grad_enabled
    state.grad_enabled = False
    try:
        yield
    finally:
        state.grad_enabled = previous


def _make(op: str, data: np.ndarray, inputs: tuple, backward_fn: Callable) -> Tensor:
    out = Tensor(data)
    tape = current_tape()
    # 테이프 밖의 연산 (예측, 영향 범위 계산) 은 기록하지 않음
    if tape is not None and _state().grad_enabled and any(t.tracked for t in inputs):
        tape.record(op, out, inputs, backward_fn)
    return out


# ============================================
# 역전파
# ============================================

def backward(loss: Tensor, wrt: Optional[Iterable[Tensor]] = None) -> dict:
    """
    스칼라 loss 에서 역방향으로 기울기를 전파합니다.

    Args:
        loss: 스칼라 텐서 (테이프 위)
        wrt: 기울기를 받을 텐서 목록. 계산에 참여하지 않은 텐서는 0 기울기를 받습니다.

    Returns:
        {Tensor: np.ndarray} 기울기 맵 (wrt 미지정 시 참여한 모든 파라미터)
    """
    if loss.data.size != 1:
        raise ContractError(f"backward 는 스칼라 loss 만 허용합니다: shape={loss.shape}")
    if not loss.tracked:
        raise ContractError("loss 가 테이프에 기록되어 있지 않습니다.")

    grads: dict = {loss: np.ones_like(loss.data)}
    leaves: dict = {}
    if loss.requires_grad and loss.tape_id is None:
        leaves[loss] = None

    if loss.tape_id is not None:
        nodes = loss._tape.nodes
        for node in reversed(nodes[: loss.tape_id + 1]):
            g = grads.pop(node.output, None)
            if g is None:
                continue
            input_grads = node.backward_fn(g)
            for inp, ig in zip(node.inputs, input_grads):
                if ig is None or not inp.tracked:
                    continue
                if inp in grads:
                    grads[inp] = grads[inp] + ig
                else:
                    grads[inp] = ig
                if inp.tape_id is None:
                    leaves[inp] = None

    result = {}
    for leaf in leaves:
        leaf.grad = grads[leaf].reshape(leaf.shape)
        result[leaf] = leaf.grad
    if wrt is None:
        return result
    out = {}
    for t in wrt:
        out[t] = result.get(t, np.zeros_like(t.data))
        if t.requires_grad and t not in result:
            t.grad = out[t]
    return out


# ============================================
# 연산
# ============================================

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2차원 행렬곱: ∂a = g·bᵀ, ∂b = aᵀ·g"""
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul 은 2차원 텐서만 허용합니다: {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul 내부 차원 불일치: {a.shape} @ {b.shape}")
    A, B = a.data, b.data
    return _make("matmul", A @ B, (a, b), lambda g: (g @ B.T, A.T @ g))


def ewise(op: str, a: Tensor, b: Tensor) -> Tensor:
    """동일 형태 원소별 연산 (add / sub / mul)"""
    if a.shape != b.shape:
        raise ShapeError(f"ewise '{op}' 형태 불일치: {a.shape} vs {b.shape}")
    A, B = a.data, b.data
    if op == "add":
        return _make("add", A + B, (a, b), lambda g: (g, g))
    if op == "sub":
        return _make("sub", A - B, (a, b), lambda g: (g, -g))
    if op == "mul":
        return _make("mul", A * B, (a, b), lambda g: (g * B, g * A))
    raise ValueError(f"지원하지 않는 ewise 연산입니다: {op}")


def add(a: Tensor, b: Tensor) -> Tensor:
    return ewise("add", a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return ewise("sub", a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    return ewise("mul", a, b)


def _scalar(s: Union[float, Tensor]) -> Tensor:
    s = _as_tensor(s)
    if s.data.size != 1:
        raise ShapeError(f"스칼라 텐서가 필요합니다: {s.shape}")
    return s


def scale(s: Union[float, Tensor], a: Tensor) -> Tensor:
    """s·a (s 는 실수 또는 rank-0 텐서)"""
    s = _scalar(s)
    S, A = float(s.data.reshape(())), a.data
    return _make("scale", S * A, (s, a),
                 lambda g: (np.sum(g * A).reshape(s.shape), S * g))


def shift(a: Tensor, s: Union[float, Tensor]) -> Tensor:
    """a + s (스칼라 편향)"""
    s = _scalar(s)
    S = float(s.data.reshape(()))
    return _make("shift", a.data + S, (a, s), lambda g: (g, np.sum(g).reshape(s.shape)))


def add_bias(a: Tensor, b: Tensor) -> Tensor:
    """(m, k) 행렬의 모든 행에 (k,) 편향을 더합니다."""
    if a.data.ndim != 2 or b.shape != (a.shape[1],):
        raise ShapeError(f"add_bias 형태 불일치: {a.shape} + {b.shape}")
    return _make("add_bias", a.data + b.data, (a, b), lambda g: (g, g.sum(axis=0)))


def reciprocal(a: Tensor) -> Tensor:
    """1/a"""
    A = a.data
    out = 1.0 / A
    return _make("reciprocal", out, (a,), lambda g: (-g * out * out,))


def _softplus(x: np.ndarray) -> np.ndarray:
    # ★ TS-2 반영: x > 30 에서는 log(1+e^x) = x (e^x 오버플로 방지)
    safe = np.minimum(x, SOFTPLUS_LINEAR_THRESHOLD)
    return np.where(x > SOFTPLUS_LINEAR_THRESHOLD, x, np.log1p(np.exp(safe)))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def activation(kind: str, a: Tensor) -> Tensor:
    """
    원소별 활성화

    Args:
        kind: tanh / softplus / relu (relu 기울기는 x ≤ 0 에서 0)
    """
    A = a.data
    if kind == "tanh":
        out = np.tanh(A)
        return _make("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))
    if kind == "softplus":
        return _make("softplus", _softplus(A), (a,), lambda g: (g * _sigmoid(A),))
    if kind == "relu":
        mask = (A > 0).astype(np.float64)
        return _make("relu", A * mask, (a,), lambda g: (g * mask,))
    raise ValueError(f"지원하지 않는 활성화 함수입니다: {kind}")


def reshape(a: Tensor, shape: tuple) -> Tensor:
    original = a.shape
    return _make("reshape", a.data.reshape(shape), (a,), lambda g: (g.reshape(original),))


def sum_all(a: Tensor) -> Tensor:
    shape = a.shape
    return _make("sum", np.asarray(a.data.sum()), (a,), lambda g: (np.full(shape, float(g)),))


def mse_loss(pred: Tensor, target) -> Tensor:
    """(1/N)·Σ(pred − target)²,  ∂pred = 2(pred − target)/N"""
    target = _as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"mse_loss 형태 불일치: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    n = diff.size
    return _make("mse", np.asarray(np.mean(diff * diff)), (pred, target),
                 lambda g: (2.0 * float(g) * diff / n, -2.0 * float(g) * diff / n))
