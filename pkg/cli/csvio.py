from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence

logger = logging.getLogger(__name__)


def format_cell(value: Any) -> str:
    """Shortest round-trip text for floats, locale independent."""

    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(float(value))
    if hasattr(value, "dtype"):
        return format_cell(value.item())
    return str(value)


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(value) for value in row])
            count += 1
    logger.info("wrote %d rows to %s", count, path)
    return path


__all__ = ["format_cell", "write_rows"]
