"""
Deterministic CSV / JSON writers for experiment outputs.

Floats are written with 17 significant digits in CSV and with Python's
round-trip repr in JSON, so identical configs give byte-identical files.
"""
import json
import logging
import os
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import aiofiles
from pydantic import BaseModel

from core import __version__

logger = logging.getLogger(__name__)


def format_value(value: Any) -> str:
    """Render one CSV cell."""
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _plain(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    return value


def to_json_text(payload: Dict[str, Any]) -> str:
    return json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n"


def to_csv_text(header: Sequence[str], rows: Sequence[Any]) -> str:
    lines = [",".join(header)]
    for row in rows:
        data = row.model_dump() if isinstance(row, BaseModel) else dict(row)
        lines.append(",".join(format_value(data.get(col)).replace(",", ";") for col in header))
    return "\n".join(lines) + "\n"


def build_envelope(command: str, config: BaseModel, rows: Sequence[Any], fit: Any = None,
                   grids: Optional[Dict[str, Any]] = None, wall_time: Optional[float] = None,
                   extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """{command, config, rows, fit?, metadata{version, tolerances, grids, wall_time}}."""
    resolved = config.model_dump(mode="json")
    envelope: Dict[str, Any] = {
        "command": command,
        "config": resolved,
        "rows": _plain(list(rows)),
        "metadata": {
            "version": __version__,
            "tolerances": {
                "quadrature": resolved.get("quadrature"),
                "ode": resolved.get("ode"),
            },
            "grids": _plain(grids or {}),
            "wall_time": wall_time,
        },
    }
    if fit is not None:
        envelope["fit"] = _plain(fit)
    if extra:
        envelope.update(_plain(extra))
    return envelope


class ResultExporter:
    """Writes result files under one output directory."""

    def __init__(self, output_dir: str):
        self.output_dir = output_dir

    async def write_text(self, filename: str, text: str) -> str:
        os.makedirs(self.output_dir, exist_ok=True)
        path = os.path.join(self.output_dir, filename)
        async with aiofiles.open(path, "w", encoding="utf-8", newline="\n") as f:
            await f.write(text)
        logger.info(f"💾 Wrote {path}")
        return path

    async def export(self, stem: str, envelope: Dict[str, Any], csv_header: Sequence[str],
                     csv_rows: Sequence[Any]) -> List[str]:
        """Write <stem>.json and its <stem>.csv mirror."""
        json_path = await self.write_text(f"{stem}.json", to_json_text(envelope))
        csv_path = await self.write_text(f"{stem}.csv", to_csv_text(csv_header, csv_rows))
        return [json_path, csv_path]
