"""
Flux Prediction Framework
=========================
방향성 흐름 그래프 기반 물리 유도 유량(flux) 예측 프레임워크

구성 모듈:
  - graph      : 방향 그래프 데이터 모델 / CSV 적재 / 토폴로지 역전
  - diffops    : 업윈드 차분 행렬 (D̂, D1, D2) 및 주파수 응답
  - pdesim     : Saint-Venant / Aw-Rascle 업윈드 시뮬레이터 (데이터 생성 + 오라클)
  - tensorad   : 역전파 자동미분 텐서 엔진 + Adam
  - models     : 하천/교통 레이어, GCN 계열 베이스라인
  - traineval  : 정규화, 윈도잉, 학습 루프, DS/RDS/섭동 평가
"""

__version__ = "1.0.0"
__author__ = "jiminnote"
