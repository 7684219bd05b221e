"""
리포터 모듈 패키지
"""

from .csv_reporter import CSVReporter
from .html_reporter import HTMLReporter
from .json_reporter import JSONReporter

__all__ = ["CSVReporter", "HTMLReporter", "JSONReporter"]
