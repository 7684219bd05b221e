"""
파라미터 체크포인트
===================
디렉토리 구조:
  manifest.json   : {"parameters": [{"name", "shape", "file"}], ...메타데이터}
  <name>.bin      : little-endian float64 바이트열
"""

import json
import logging
import os

import numpy as np

from ..exceptions import SchemaError

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
BLOB_DTYPE = "<f8"


def save_checkpoint(directory: str, params: dict, metadata: dict = None) -> str:
    """
    Args:
        directory: 저장 디렉토리 (없으면 생성)
        params: {이름: Tensor 또는 np.ndarray}
        metadata: manifest 에 함께 기록할 값

    Returns:
        manifest 경로
    """
    os.makedirs(directory, exist_ok=True)
    entries = []
    for name, value in params.items():
        data = np.asarray(getattr(value, "data", value), dtype=np.float64)
        filename = f"{name}.bin"
        with open(os.path.join(directory, filename), "wb") as f:
            f.write(data.astype(BLOB_DTYPE).tobytes())
        entries.append({"name": name, "shape": list(data.shape), "file": filename})

    manifest = dict(metadata or {})
    manifest["parameters"] = entries
    path = os.path.join(directory, MANIFEST_FILE)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True, ensure_ascii=False)
    logger.info("💾 체크포인트 저장: %s (파라미터 %d개)", directory, len(entries))
    return path


def load_checkpoint(directory: str) -> tuple[dict, dict]:
    """
    Returns:
        ({이름: np.ndarray}, manifest)
    """
    path = os.path.join(directory, MANIFEST_FILE)
    if not os.path.exists(path):
        raise FileNotFoundError(f"체크포인트 manifest 가 없습니다: {path}")
    with open(path, "r", encoding="utf-8") as f:
        manifest = json.load(f)

    params = {}
    for entry in manifest.get("parameters", []):
        shape = tuple(entry["shape"])
        with open(os.path.join(directory, entry["file"]), "rb") as f:
            data = np.frombuffer(f.read(), dtype=BLOB_DTYPE)
        if data.size != int(np.prod(shape, dtype=np.int64)):
            raise SchemaError(f"파라미터 '{entry['name']}' 크기가 shape {list(shape)} 와 다릅니다.")
        params[entry["name"]] = data.astype(np.float64).reshape(shape)
    return params, manifest
