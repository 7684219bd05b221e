"""
CSV 리포트 생성기
=================
데이터셋 CSV(엣지 / 노드 시계열 / 타겟)와 실험 결과 CSV(교란 응답, 스펙트럼, horizon 스윕)를 출력합니다.
부동소수는 repr 로 기록하므로 같은 입력이면 바이트 단위로 동일한 파일이 생성됩니다.
★ TS-4 반영: 시각 정보 없이 repr 기록 (docs/troubleshooting.md 참고)
"""

import csv
import logging
import os

import numpy as np

from ..graph import DirectedGraph, NodeSeries, Targets, save_graph

logger = logging.getLogger(__name__)


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


class CSVReporter:
    """CSV 리포트 생성기"""

    PERTURBATION_COLUMNS = ["node", "mean_response", "std_response"]
    SPECTRUM_COLUMNS = ["omega", "closed_form", "empirical", "alpha", "operator"]
    SWEEP_COLUMNS = ["variant", "horizon", "test_mse"]

    def __init__(self, report_dir: str):
        """
        Args:
            report_dir: 출력 디렉토리 (없으면 생성)
        """
        self.report_dir = os.path.abspath(report_dir)
        os.makedirs(self.report_dir, exist_ok=True)

    def _path(self, filename: str) -> str:
        return os.path.join(self.report_dir, filename)

    def write_rows(self, filename: str, columns: list, rows: list[dict]) -> str:
        """
        dict 행 목록을 CSV 로 저장합니다.

        Returns:
            생성된 CSV 파일 경로
        """
        filepath = self._path(filename)
        with open(filepath, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=columns, extrasaction="ignore")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _fmt(v) for k, v in row.items()})
        logger.info("📄 CSV 생성: %s (%d행)", filepath, len(rows))
        return filepath

    # ---- 데이터셋 ----

    def write_series(self, filename: str, graph: DirectedGraph, series: NodeSeries) -> str:
        filepath = self._path(filename)
        with open(filepath, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["time", "node"] + list(series.variables))
            for t in range(series.num_steps):
                for i, label in enumerate(graph.node_ids):
                    writer.writerow([t, label] + [repr(float(v)) for v in series.values[t, i]])
        logger.info("📄 노드 시계열 CSV: %s", filepath)
        return filepath

    def write_targets(self, filename: str, graph: DirectedGraph, targets: Targets) -> str:
        filepath = self._path(filename)
        with open(filepath, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["time", "node", "y"])
            for t in range(targets.num_steps):
                for i, label in enumerate(graph.node_ids):
                    writer.writerow([t, label, repr(float(targets.values[t, i]))])
        logger.info("📄 타겟 CSV: %s", filepath)
        return filepath

    def write_dataset(self, graph: DirectedGraph, series: NodeSeries, targets: Targets) -> dict:
        """
        Returns:
            {"edges": 경로, "series": 경로, "targets": 경로}
        """
        edges = save_graph(graph, self._path("edges.csv"))
        logger.info("📄 엣지 CSV: %s", edges)
        return {
            "edges": edges,
            "series": self.write_series("series.csv", graph, series),
            "targets": self.write_targets("targets.csv", graph, targets),
        }

    # ---- 실험 결과 ----

    def write_perturbation(self, result, filename: str = "perturbation.csv") -> str:
        return self.write_rows(filename, self.PERTURBATION_COLUMNS, result.to_rows())

    def write_spectrum(self, rows: list[dict], filename: str = "spectrum.csv") -> str:
        return self.write_rows(filename, self.SPECTRUM_COLUMNS, rows)

    def write_sweep(self, rows: list[dict], filename: str = "sweep.csv") -> str:
        return self.write_rows(filename, self.SWEEP_COLUMNS, rows)
