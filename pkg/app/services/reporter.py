import json
import math
import os
from typing import Any, Optional, Union

import pandas as pd
from pydantic import ValidationError

from app.config import settings
from app.models.report import ScenarioReport, SuiteSummary
from app.utils.errors import IoFailure
from app.utils.logger import LoggerMixin

FORMATS = ("json", "csv-summary")

Report = Union[ScenarioReport, SuiteSummary]


def _render(value: Any, indent: int, level: int) -> str:
    """JSON text with every float written at 17 significant digits"""
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_render(v, indent, level + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in value):
            return "[" + ", ".join(_render(v, indent, level + 1) for v in value) + "]"
        items = [f"{pad}{_render(v, indent, level + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return "null"
        return format(value, ".17g")
    if isinstance(value, int):
        return str(value)
    return json.dumps(value, ensure_ascii=False)


def canonical_json(report: Report, timing: bool = False) -> str:
    payload = report.model_dump(mode="python")
    if not timing:
        payload.pop("wall_time_s", None)
    return _render(payload, indent=2, level=0) + "\n"


def checks_frame(report: Report) -> pd.DataFrame:
    """One row per check: scenario_id, check, error, tolerance, pass"""
    ident = report.scenario_id if isinstance(report, ScenarioReport) else report.suite
    rows = [
        {
            "scenario_id": ident,
            "check": c.name,
            "error": c.error,
            "tolerance": c.tolerance,
            "pass": c.passed,
            "flag": c.flag or "",
        }
        for c in report.checks
    ]
    return pd.DataFrame(rows, columns=["scenario_id", "check", "error", "tolerance", "pass", "flag"])


class ReportEmitter(LoggerMixin):
    """Writes scenario reports and suite summaries to disk"""

    def __init__(self, output_dir: Optional[str] = None):
        super().__init__()
        self.output_dir = output_dir or settings.OUTPUT_DIR

    def default_path(self, report: Report, fmt: str) -> str:
        ident = report.scenario_id if isinstance(report, ScenarioReport) else f"verify-{report.suite}"
        ext = "json" if fmt == "json" else "csv"
        return os.path.join(self.output_dir, f"{ident}.{ext}")

    def emit(self, report: Report, fmt: str = "json", output_path: Optional[str] = None, timing: bool = False) -> str:
        if fmt not in FORMATS:
            raise IoFailure(f"unknown output format {fmt!r}, expected one of {list(FORMATS)}")
        output_path = output_path or self.default_path(report, fmt)
        try:
            parent = os.path.dirname(output_path)
            if parent:
                os.makedirs(parent, exist_ok=True)
            if fmt == "json":
                with open(output_path, "w", encoding="utf-8") as f:
                    f.write(canonical_json(report, timing=timing))
            else:
                checks_frame(report).to_csv(output_path, index=False, float_format="%.17g")
            self.log_info(f"Wrote {fmt} report to {output_path}")
            return output_path

        except OSError as e:
            self.log_error(f"Error writing report to {output_path}: {str(e)}")
            raise IoFailure(f"cannot write {output_path}: {e.strerror or e}") from e

    def load(self, path: str) -> Report:
        try:
            with open(path, "r", encoding="utf-8") as f:
                payload = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise IoFailure(f"cannot read report {path}: {e}") from e
        try:
            if "suite" in payload:
                return SuiteSummary.model_validate(payload)
            return ScenarioReport.model_validate(payload)
        except ValidationError as e:
            raise IoFailure(f"{path} is not a report: {e.errors()[0]['msg']}") from e


# Global emitter instance
reporter = ReportEmitter()
