# Reporting utilities
# Writes result CSVs, JSON run metadata and key=value text reports for experiment commands

import csv
import json
import math
import platform
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
import scipy

from core import __version__

FLOAT_FORMAT = '%.17g'


def format_value(value: Any) -> str:
    """CSV cell text; floats carry 17 significant digits"""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return FLOAT_FORMAT % value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return '' if value is None else str(value)


def _plain(value: Any) -> Any:
    """JSON-safe copy of numpy scalars, arrays, tuples and non-finite floats"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


def versions() -> Dict[str, str]:
    return {
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'shnolkit': __version__,
    }


class ReportGenerator:
    """Writes the output files of one experiment command"""

    def __init__(self, output_dir: str = "results"):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def path(self, name: str, suffix: str) -> Path:
        return self.output_dir / f"{name}{suffix}"

    def open_csv(self, name: str, header: Sequence[str]) -> 'CsvSink':
        """Streaming CSV writer, so rows written before a failure survive"""
        return CsvSink(self.path(name, '.csv'), header)

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        with self.open_csv(name, header) as sink:
            for row in rows:
                sink.write(row)
        return sink.path

    def write_meta(self, name: str, config: Dict[str, Any], summary: Optional[Dict[str, Any]] = None,
                   thresholds: Optional[Dict[str, Any]] = None) -> Path:
        """<name>.meta as JSON; no timestamps, so reruns are byte-identical"""
        meta = {
            'command': name,
            'config': config,
            'thresholds': thresholds or {},
            'summary': summary or {},
            'versions': versions(),
        }
        path = self.path(name, '.meta')
        with open(path, 'w', newline='\n') as f:
            f.write(json.dumps(_plain(meta), indent=2, sort_keys=True))
            f.write('\n')
        return path

    def write_text(self, name: str, text: str, suffix: str = '.txt') -> Path:
        path = self.path(name, suffix)
        with open(path, 'w', newline='\n') as f:
            f.write(text)
        return path


class CsvSink:
    """Context-managed CSV file with a fixed header row and LF line endings"""

    def __init__(self, path: Path, header: Sequence[str]):
        self.path = Path(path)
        self.header = tuple(header)
        self.rows = 0
        self._file = None
        self._writer = None

    def __enter__(self) -> 'CsvSink':
        self._file = open(self.path, 'w', newline='')
        self._writer = csv.writer(self._file, lineterminator='\n')
        self._writer.writerow(self.header)
        return self

    def write(self, row: Sequence[Any]) -> None:
        if len(row) != len(self.header):
            raise ValueError(f"row has {len(row)} cells, header has {len(self.header)}")
        self._writer.writerow([format_value(value) for value in row])
        self.rows += 1

    def flush(self) -> None:
        self._file.flush()

    def __exit__(self, exc_type, exc, tb) -> None:
        self._file.close()
