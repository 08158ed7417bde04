# Run metrics collection
# Wall time, CPU time and peak memory of an experiment run, logged but never written to CSVs

import time
import psutil
import os
from typing import Dict, List, Any
from dataclasses import dataclass, field


@dataclass
class StageMetrics:
    """Timing for one named stage of a run"""
    name: str
    wall_time: float
    rows: int = 0
    failed: int = 0


@dataclass
class RunMetrics:
    """Metrics for an entire experiment run"""
    start_time: float = field(default_factory=time.time)
    end_time: float = 0
    total_rows: int = 0
    failed_rows: int = 0
    stages: List[StageMetrics] = field(default_factory=list)


class MetricsCollector:
    """Collects resource usage for a command run"""

    def __init__(self):
        self.run_metrics = RunMetrics()
        self._process = psutil.Process(os.getpid())
        self._cpu_start = self._cpu_seconds()
        self._peak_rss = self._rss()
        self._stage_start = time.time()
        self._pending_rows = 0
        self._pending_failed = 0

    def _cpu_seconds(self) -> float:
        times = self._process.cpu_times()
        return times.user + times.system

    def _rss(self) -> int:
        return self._process.memory_info().rss

    def start_stage(self) -> None:
        self._stage_start = time.time()
        self._pending_rows = 0
        self._pending_failed = 0
        self._peak_rss = max(self._peak_rss, self._rss())

    def record_rows(self, rows: int, failed: int = 0) -> None:
        """Account output rows (and failed grid points) to the open stage"""
        self._pending_rows += int(rows)
        self._pending_failed += int(failed)

    def end_stage(self, name: str, rows: int = 0, failed: int = 0) -> None:
        """Close the current stage with its recorded rows plus any given here"""
        rows += self._pending_rows
        failed += self._pending_failed
        self._pending_rows = self._pending_failed = 0
        self.run_metrics.stages.append(StageMetrics(name, time.time() - self._stage_start, rows, failed))
        self.run_metrics.total_rows += rows
        self.run_metrics.failed_rows += failed
        self._peak_rss = max(self._peak_rss, self._rss())

    def get_summary_stats(self) -> Dict[str, Any]:
        """Get summary statistics"""
        self.run_metrics.end_time = time.time()
        self._peak_rss = max(self._peak_rss, self._rss())
        return {
            'wall_time': self.run_metrics.end_time - self.run_metrics.start_time,
            'cpu_time': self._cpu_seconds() - self._cpu_start,
            'peak_rss_mb': self._peak_rss / (1024 * 1024),
            'total_rows': self.run_metrics.total_rows,
            'failed_rows': self.run_metrics.failed_rows,
            'stages': {stage.name: round(stage.wall_time, 3) for stage in self.run_metrics.stages},
        }
