"""
JSON 리포트 생성기
==================
manifest, 학습 이력, DS 리포트, 역재구성 리포트를 키 정렬 JSON 으로 저장합니다.
"""

import json
import logging
import os

import numpy as np

logger = logging.getLogger(__name__)


def _default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if hasattr(value, "to_dict"):
        return value.to_dict()
    raise TypeError(f"JSON 직렬화 불가: {type(value).__name__}")


class JSONReporter:
    """JSON 리포트 생성기"""

    def __init__(self, report_dir: str):
        self.report_dir = os.path.abspath(report_dir)
        os.makedirs(self.report_dir, exist_ok=True)

    def write(self, filename: str, payload) -> str:
        """
        Args:
            filename: 파일 이름 (report_dir 기준)
            payload: dict 또는 to_dict() 를 가진 객체

        Returns:
            생성된 JSON 파일 경로
        """
        if hasattr(payload, "to_dict"):
            payload = payload.to_dict()
        filepath = os.path.join(self.report_dir, filename)
        with open(filepath, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True, ensure_ascii=False, default=_default)
            f.write("\n")
        logger.info("📄 JSON 생성: %s", filepath)
        return filepath

    @staticmethod
    def read(filepath: str) -> dict:
        if not os.path.exists(filepath):
            raise FileNotFoundError(f"JSON 파일을 찾을 수 없습니다: {filepath}")
        with open(filepath, "r", encoding="utf-8") as f:
            return json.load(f)
