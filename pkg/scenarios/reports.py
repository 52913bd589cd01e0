import json
import logging
from pathlib import Path
from typing import Iterator, List, Tuple

import numpy as np
import pandas as pd

from .runner import RunReport

logger = logging.getLogger(__name__)


def report_json(report: RunReport) -> str:
    """Comparable part of the report; identical runs give identical text."""
    return json.dumps(report.to_dict(), sort_keys=True, indent=2)


def _flatten(value, prefix: str = "") -> Iterator[Tuple[str, float]]:
    if isinstance(value, dict):
        for key in sorted(value, key=str):
            yield from _flatten(value[key], f"{prefix}{key}_")
    elif isinstance(value, np.ndarray):
        for (i, j), entry in np.ndenumerate(value):
            yield f"{prefix}{i}_{j}_re", float(entry.real)
            yield f"{prefix}{i}_{j}_im", float(entry.imag)
    elif isinstance(value, complex):
        yield f"{prefix}re", value.real
        yield f"{prefix}im", value.imag
    else:
        yield prefix.rstrip("_") or "value", float(value)


def series_frame(report: RunReport, name: str) -> pd.DataFrame:
    """One row per time point: t, then the flattened values with re/im split."""
    rows = []
    for t, value in zip(report.times, report.series[name]):
        if isinstance(value, dict) and "error" in value:
            rows.append({"t": t, "error": value["error"]})
            continue
        rows.append({"t": t, **dict(_flatten(value))})
    return pd.DataFrame(rows)


def write_report(report: RunReport, directory) -> List[Path]:
    """report.json, timing.json and one CSV per output series."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    path = directory / "report.json"
    path.write_text(report_json(report) + "\n")
    written.append(path)
    path = directory / "timing.json"
    path.write_text(json.dumps(report.timing, sort_keys=True, indent=2) + "\n")
    written.append(path)
    for name in sorted(report.series):
        path = directory / f"{name}.csv"
        series_frame(report, name).to_csv(path, index=False, float_format="%.17g")
        written.append(path)
    logger.info(f"[REPORTS] wrote {len(written)} files to {directory}")
    return written
