"""
artifacts.py – CSV and JSON result files
"""

import csv
import json
import logging
import math
import numpy as np
from pathlib import Path
from typing import Dict, Iterable, List

_logger = logging.getLogger(__name__)


def format_cell(value) -> str:
    """Shortest round trip text for floats, empty for a missing value"""
    if value is None:
        return ''
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, header: List[str], rows: Iterable[Iterable]) -> Path:
    """
    RFC 4180 CSV, UTF-8, header first

    :param path: Output file
    :param header: Column names
    :param rows: Row values, None for an explicit null
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\r\n')
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
            count += 1
    _logger.info(f'Wrote {count} rows to {path}')
    return path


def columns_to_rows(columns: Dict[str, object], length: int) -> List[List]:
    """Turn {name: array or None} into rows, a None column stays null in every row"""
    rows = []
    for i in range(length):
        rows.append([None if col is None else col[i] for col in columns.values()])
    return rows


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


def write_json(path: Path, doc: Dict) -> Path:
    """Sorted keys so identical runs give identical bytes, non finite floats written as strings"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(_jsonable(doc), f, sort_keys=True, indent=2, allow_nan=False)
        f.write('\n')
    _logger.info(f'Wrote {path}')
    return path
