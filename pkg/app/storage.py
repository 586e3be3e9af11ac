"""
Result storage for Triwell: CSV tables, text reports and run metadata.
"""
import csv
import logging
from pathlib import Path
from typing import Iterable, Union

from app.models import RunMetadata

logger = logging.getLogger(__name__)

Cell = Union[float, int, str, None]


def format_cell(value: Cell) -> str:
    """17 significant digits for floats so every double survives a round trip."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


class ResultStore:
    """Files written into one output directory, tracked so a failed run can be rolled back."""

    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        return self.output_dir / name

    def track(self, path: Path) -> None:
        if path not in self.written:
            self.written.append(path)

    # ========================================================
    # Tables
    # ========================================================

    def write_csv(self, name: str, header: list[str], rows: Iterable[Iterable[Cell]]) -> Path:
        """Comma-separated, header first, Unix newlines."""
        path = self.path(name)
        self.track(path)
        count = 0
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_cell(value) for value in row])
                count += 1
        logger.info(f"Wrote {path} ({count} rows)")
        return path

    # ========================================================
    # Text
    # ========================================================

    def write_text(self, name: str, text: str) -> Path:
        path = self.path(name)
        self.track(path)
        path.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {path}")
        return path

    def write_metadata(self, metadata: RunMetadata) -> Path:
        metadata = metadata.model_copy(update={"files": [p.name for p in self.written] + ["metadata.json"]})
        return self.write_text("metadata.json", metadata.model_dump_json(indent=2) + "\n")

    # ========================================================
    # Rollback
    # ========================================================

    def discard(self) -> None:
        """Remove every file this store wrote."""
        for path in self.written:
            try:
                path.unlink(missing_ok=True)
            except OSError as e:
                logger.error(f"Failed to remove partial output {path}: {e}")
        if self.written:
            logger.info(f"Removed {len(self.written)} partial output file(s)")
        self.written = []
