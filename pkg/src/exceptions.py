"""
예외 계층 (Exceptions)
======================
프레임워크 전용 예외를 정의합니다.
각 예외는 대응되는 내장 예외도 상속하므로 `except ValueError` 형태로도 잡을 수 있습니다.

CLI 종료 코드 매핑 (src/main.py):
  - 2 : ConfigError
  - 3 : DataError / SchemaError / ProtocolError / FileNotFoundError
  - 4 : InstabilityError / TrainingDivergedError
"""

from typing import Optional


class FluxFrameworkError(Exception):
    """프레임워크 예외의 최상위 클래스"""


class SchemaError(FluxFrameworkError, ValueError):
    """입력 파일 스키마 위반 (중복 엣지, 미정의 노드 참조, 헤더 불일치 등)"""


class DataError(FluxFrameworkError, ValueError):
    """데이터 값 위반 (NaN/Inf, 길이 부족 등)"""


class ShapeError(FluxFrameworkError, ValueError):
    """텐서/연산자 차원 불일치"""


class RangeError(FluxFrameworkError, ValueError):
    """허용 범위 밖의 인자 (예: ω ∉ [0, π])"""


class PreconditionError(FluxFrameworkError, ValueError):
    """연산 사전조건 위반"""


class ContractError(FluxFrameworkError, RuntimeError):
    """자동미분 계약 위반 (스칼라가 아닌 loss 등)"""


class ConfigError(FluxFrameworkError, ValueError):
    """설정 검증 실패 (미정의 키, 잘못된 값)"""


class ProtocolError(FluxFrameworkError, ValueError):
    """실험 프로토콜 위반 (서로 다른 테스트 분할 비교 등)"""


class UndefinedReferenceError(FluxFrameworkError, ZeroDivisionError):
    """RDS 기준 모델의 DS가 0인 경우"""


class InstabilityError(FluxFrameworkError, ArithmeticError):
    """시뮬레이션 발산 (비유한 값 발생)"""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class TrainingDivergedError(FluxFrameworkError, ArithmeticError):
    """학습 중 loss가 NaN/Inf가 된 경우"""

    def __init__(self, message: str, epoch: Optional[int] = None):
        super().__init__(message)
        self.epoch = epoch
