"""
HTML 실험 리포트 생성기
=======================
실행 디렉토리의 결과(JSON/CSV)를 한 페이지 HTML 로 요약합니다. (Jinja2 렌더링, 플롯 없음)

섹션:
  - 방향 민감도 (DS / RDS)
  - 에폭별 Δt 이력
  - 교란 응답 (평균 ± 3σ)
  - 역재구성 증폭률 / horizon 스윕

색상 코드:
  - DS > 0 : 초록 (#27ae60)
  - DS ≤ 0 : 빨강 (#e74c3c)
"""

import logging
import os

from jinja2 import Environment, select_autoescape

logger = logging.getLogger(__name__)

HTML_TEMPLATE = """<!DOCTYPE html>
<html lang="ko">
<head>
    <meta charset="UTF-8">
    <title>유량 예측 실험 리포트 - {{ title }}</title>
    <style>
        * { margin: 0; padding: 0; box-sizing: border-box; }
        body { font-family: 'Malgun Gothic', 'Apple SD Gothic Neo', sans-serif;
               background: #f5f6fa; color: #2c3e50; padding: 20px; }
        .container { max-width: 1200px; margin: 0 auto; }
        .header { background: linear-gradient(135deg, #1B4F72, #2E86C1); color: white;
                  padding: 30px; border-radius: 10px; margin-bottom: 20px; }
        .header h1 { font-size: 24px; margin-bottom: 5px; }
        .header .subtitle { font-size: 14px; opacity: 0.8; }
        .section { background: white; border-radius: 8px; padding: 20px; margin-bottom: 20px;
                   box-shadow: 0 2px 8px rgba(0,0,0,0.1); }
        .section h2 { font-size: 18px; margin-bottom: 15px; padding-bottom: 10px;
                      border-bottom: 2px solid #ecf0f1; }
        table { width: 100%; border-collapse: collapse; font-size: 13px; }
        th { background: #1B4F72; color: white; padding: 10px 12px; text-align: left; font-weight: 500; }
        td { padding: 8px 12px; border-bottom: 1px solid #ecf0f1; }
        .pos { color: #27ae60; font-weight: bold; }
        .neg { color: #e74c3c; font-weight: bold; }
        .footer { text-align: center; padding: 20px; color: #95a5a6; font-size: 12px; }
    </style>
</head>
<body>
<div class="container">
    <div class="header">
        <h1>🌊 유량 예측 실험 리포트</h1>
        <div class="subtitle">{{ title }} | config hash {{ config_hash or "-" }}</div>
    </div>

    {% if ds %}
    <div class="section">
        <h2>🧭 방향 민감도</h2>
        <table>
            <tr><th>Forward MSE</th><th>Reverse MSE</th><th>DS</th><th>RDS</th></tr>
            <tr>
                <td>{{ "%.4f"|format(ds.loss_forward) }}</td>
                <td>{{ "%.4f"|format(ds.loss_reverse) }}</td>
                <td class="{{ 'pos' if ds.ds > 0 else 'neg' }}">{{ "%+.4f"|format(ds.ds) }}</td>
                <td>{{ "%+.1f%%"|format(ds.rds * 100) if ds.rds is not none else "-" }}</td>
            </tr>
        </table>
    </div>
    {% endif %}

    {% if histories %}
    <div class="section">
        <h2>⏱️ Δt 이력</h2>
        <table>
            <tr><th>체크포인트</th><th>에폭</th><th>초기 Δt</th><th>최종 Δt</th><th>최종 val MSE</th></tr>
            {% for h in histories %}
            <tr>
                <td>{{ h.name }}</td><td>{{ h.epochs }}</td>
                <td>{{ h.first_dt if h.first_dt is not none else "-" }}</td>
                <td>{{ h.last_dt if h.last_dt is not none else "-" }}</td>
                <td>{{ "%.5f"|format(h.last_val) if h.last_val is not none else "-" }}</td>
            </tr>
            {% endfor %}
        </table>
    </div>
    {% endif %}

    {% if perturbation %}
    <div class="section">
        <h2>💥 교란 응답</h2>
        <table>
            <tr><th>노드</th><th>평균 응답</th><th>표준편차</th><th>−3σ</th><th>+3σ</th></tr>
            {% for row in perturbation %}
            <tr>
                <td>{{ row.node }}</td>
                <td>{{ "%.5f"|format(row.mean_response) }}</td>
                <td>{{ "%.5f"|format(row.std_response) }}</td>
                <td>{{ "%.5f"|format(row.mean_response - 3 * row.std_response) }}</td>
                <td>{{ "%.5f"|format(row.mean_response + 3 * row.std_response) }}</td>
            </tr>
            {% endfor %}
        </table>
    </div>
    {% endif %}

    {% if inverse %}
    <div class="section">
        <h2>🔁 역재구성</h2>
        <table>
            <tr><th>링 크기</th><th>스텝</th><th>CFL</th><th>σ</th><th>증폭률</th><th>고주파 에너지 비율</th></tr>
            <tr>
                <td>{{ inverse.ring_size }}</td><td>{{ inverse.steps }}</td>
                <td>{{ inverse.cfl }}</td><td>{{ inverse.noise_sigma }}</td>
                <td>{{ "%.4g"|format(inverse.growth_factor) }}</td>
                <td>{{ "%.4f"|format(inverse.high_share) }}</td>
            </tr>
        </table>
    </div>
    {% endif %}

    {% if sweep %}
    <div class="section">
        <h2>📏 예측 시점 스윕</h2>
        <table>
            <tr><th>variant</th><th>horizon</th><th>test MSE</th></tr>
            {% for row in sweep %}
            <tr><td>{{ row.variant }}</td><td>{{ row.horizon }}</td><td>{{ "%.5f"|format(row.test_mse) }}</td></tr>
            {% endfor %}
        </table>
    </div>
    {% endif %}

    <div class="footer">Flux Prediction Framework | Generated by html_reporter.py</div>
</div>
</body>
</html>"""


class HTMLReporter:
    """HTML 실험 리포트 생성기"""

    def __init__(self, report_dir: str):
        """
        Args:
            report_dir: 리포트 저장 디렉토리
        """
        self.report_dir = os.path.abspath(report_dir)
        os.makedirs(self.report_dir, exist_ok=True)
        self.env = Environment(autoescape=select_autoescape(default=True))

    def render(self, summary: dict) -> str:
        template = self.env.from_string(HTML_TEMPLATE)
        inverse = summary.get("inverse")
        if inverse:
            total = inverse["high_band_energy"] + inverse["low_band_energy"]
            inverse = dict(inverse, high_share=inverse["high_band_energy"] / total if total else 0.0)
        return template.render(
            title=summary.get("title", "run"),
            config_hash=summary.get("config_hash"),
            ds=summary.get("ds"),
            histories=summary.get("histories", []),
            perturbation=summary.get("perturbation", []),
            inverse=inverse,
            sweep=summary.get("sweep", []),
        )

    def generate(self, summary: dict, filename: str = "report.html") -> str:
        """
        실행 요약을 HTML 리포트로 생성합니다.

        Args:
            summary: {"title", "config_hash", "ds", "histories", "perturbation", "inverse", "sweep"}

        Returns:
            생성된 HTML 파일 경로
        """
        filepath = os.path.join(self.report_dir, filename)
        with open(filepath, "w", encoding="utf-8") as f:
            f.write(self.render(summary))
        logger.info("📄 HTML 리포트 생성: %s", filepath)
        return filepath
