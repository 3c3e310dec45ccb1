"""Metrics and point-set export service"""
import csv
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from src.utils.errors import DataError
from src.utils.logger import get_logger


def _cell(value: Any) -> str:
    """Text of one CSV cell; floats use repr so reruns are byte-identical"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


class ExportService(ABC):
    """Abstract export service interface"""

    @abstractmethod
    def export_csv(self, data: List[Dict[str, Any]], output_path: Path, headers: List[str]) -> Path:
        """Export rows to a CSV file"""
        pass

    @abstractmethod
    def export_records(
        self, records: Sequence[BaseModel], output_path: Path, headers: Optional[List[str]] = None
    ) -> Path:
        """Export pydantic records, one row each, columns in field order"""
        pass

    @abstractmethod
    def export_points(self, points: np.ndarray, output_path: Path) -> Path:
        """Export an (m, 2) point set as x,y rows"""
        pass


class CsvExportService(ExportService):
    """File-based CSV export"""

    def __init__(self):
        self.logger = get_logger("export_service")

    def export_csv(self, data: List[Dict[str, Any]], output_path: Path, headers: List[str]) -> Path:
        output_path = Path(output_path)
        try:
            output_path.parent.mkdir(parents=True, exist_ok=True)

            with open(output_path, "w", newline="", encoding="utf-8") as csvfile:
                writer = csv.writer(csvfile, lineterminator="\n")
                writer.writerow(headers)
                for row_data in data:
                    writer.writerow([_cell(row_data.get(header)) for header in headers])

            self.logger.info(f"Exported {len(data)} rows to CSV: {output_path}")
            return output_path

        except OSError as e:
            self.logger.error(f"CSV export failed: {e}")
            raise DataError(f"cannot write CSV: {e}", output_path) from e

    def export_records(self, records: Sequence[BaseModel], output_path: Path, headers: Optional[List[str]] = None) -> Path:
        if headers is None:
            headers = list(type(records[0]).model_fields) if records else []
        rows = [record.model_dump() for record in records]
        return self.export_csv(rows, output_path, headers)

    def export_points(self, points: np.ndarray, output_path: Path) -> Path:
        points = np.asarray(points)
        if points.ndim != 2 or points.shape[1] != 2:
            raise DataError(f"point export needs (m, 2) samples, got {points.shape}", output_path)
        rows = [{"x": float(x), "y": float(y)} for x, y in points]
        return self.export_csv(rows, output_path, ["x", "y"])
