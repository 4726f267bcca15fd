import csv
import io
import json
import logging
import math
import sys
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO, Tuple, Type

import numpy as np

FLOAT_FORMAT = ".17g"


@dataclass
class Report:
    """The result of one experiment run.

    ``breaches`` names any tolerance checks that failed; the report is still written, but the
    CLI exits with the tolerance-breach code.
    """

    meta: Dict[str, Any]
    summary: Dict[str, Any]
    columns: Tuple[str, ...]
    rows: List[Tuple[Any, ...]]
    breaches: Tuple[str, ...] = field(default=())


def format_value(value: Any) -> str:
    """Text form of a report value with 17 significant digits for floats."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), FLOAT_FORMAT)
    if isinstance(value, (complex, np.complexfloating)):
        value = complex(value)
        return f"{format(value.real, FLOAT_FORMAT)}{format(value.imag, '+' + FLOAT_FORMAT)}j"
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(format_value(item) for item in value)
    return str(value)


def json_value(value: Any) -> Any:
    """JSON-safe form of a report value; floats go through the same 17 digit formatting."""
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return format(value, FLOAT_FORMAT)
        return float(format(value, FLOAT_FORMAT))
    if isinstance(value, (complex, np.complexfloating)):
        value = complex(value)
        return {"re": json_value(value.real), "im": json_value(value.imag)}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [json_value(item) for item in value]
    if isinstance(value, dict):
        return {key: json_value(item) for key, item in value.items()}
    return value


class ReportWriter(ABC):
    """A base class for report writers to define the interface they all must meet."""

    def __init__(self, logger: logging.Logger, *, stdout: TextIO = None):
        """
        Args:
            logger: The CLI's logger
            stdout: Stream used when no output path is given
        """
        self._logger = logger
        self._stdout = stdout or sys.stdout

    @abstractmethod
    def render(self, report: Report) -> str: ...

    def write(self, report: Report, out: Optional[Path] = None):
        text = self.render(report)
        if out is None:
            self._stdout.write(text)
            return
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open(mode="w", newline="") as f:
            f.write(text)
        self._logger.info(f"Wrote {len(report.rows)} rows to {out}")


class CsvReportWriter(ReportWriter):
    """`#`-prefixed metadata lines, then a header row, then data rows."""

    def render(self, report: Report) -> str:
        buffer = io.StringIO()
        for key, value in report.meta.items():
            buffer.write(f"# {key}: {format_value(value)}\n")
        for key, value in report.summary.items():
            buffer.write(f"# result.{key}: {format_value(value)}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(report.columns)
        for row in report.rows:
            writer.writerow([format_value(value) for value in row])
        return buffer.getvalue()


class JsonReportWriter(ReportWriter):
    """A JSON object with ``meta``, ``summary`` and ``rows`` keys."""

    def render(self, report: Report) -> str:
        document = {
            "meta": json_value(report.meta),
            "summary": json_value(report.summary),
            "rows": [
                {column: json_value(value) for column, value in zip(report.columns, row)}
                for row in report.rows
            ],
        }
        return json.dumps(document, indent=2) + "\n"


WRITERS: Dict[str, Type[ReportWriter]] = {
    "csv": CsvReportWriter,
    "json": JsonReportWriter,
}
