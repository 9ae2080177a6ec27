from pathlib import Path
from typing import Dict, List, Optional, Sequence
import logging

import pandas as pd
from pydantic import ValidationError

from src.models.records import OUTPUT_COLUMNS, RAW_COLUMNS, ProcessedRecord, RawRecord
from src.utils.errors import EmitError, InputFormatError

logger = logging.getLogger("DatasetIO")

COORDINATE_FIELDS = frozenset(
    {"municipality_latitude", "municipality_longitude", "province_latitude", "province_longitude"}
)
DATING_FIELDS = frozenset({"dating_min", "dating_max", "dating_mean", "dating_width"})
# Non-optional text columns: an empty cell reads back as "" rather than null
_TEXT_FIELDS = frozenset(
    name for name, info in ProcessedRecord.model_fields.items() if info.annotation is str
)


def detect_delimiter(header_line: str) -> str:
    """Tab when the header holds a tab, comma otherwise."""
    return "\t" if "\t" in header_line else ","


def read_raw_records(path, delimiter: str = "auto") -> List[RawRecord]:
    """
    Read a raw export (header row, comma- or tab-separated, UTF-8).

    The authenticity column may be omitted, in which case every record is
    GENUINE. Any other missing column aborts the read.
    """
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as f:
            header = f.readline()
        sep = detect_delimiter(header) if delimiter == "auto" else delimiter
        frame = pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False, encoding="utf-8")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputFormatError(f"{path}: cannot read raw export: {e}")

    expected = [c for c in RAW_COLUMNS if c != "authenticity"]
    missing = [c for c in expected if c not in frame.columns]
    if missing:
        raise InputFormatError(f"{path}: missing columns {missing}")
    if "authenticity" not in frame.columns:
        logger.info(f"{path.name} has no authenticity column; every record is treated as GENUINE")
    extra = [c for c in frame.columns if c not in RAW_COLUMNS]
    if extra:
        logger.warning(f"{path.name}: ignoring unknown columns {extra}")

    columns = [c for c in RAW_COLUMNS if c in frame.columns]
    records: List[RawRecord] = []
    for row, entry in enumerate(frame[columns].to_dict("records"), start=1):
        try:
            records.append(RawRecord.model_validate(entry))
        except ValidationError as e:
            raise InputFormatError(f"{path}, data row {row}: {e}")
    return records


def _format_cell(name: str, value) -> Optional[str]:
    if value is None:
        return None
    if name in DATING_FIELDS:
        return f"{value:.1f}"
    if name in COORDINATE_FIELDS:
        return repr(float(value))
    return str(value)


def format_row(record: ProcessedRecord) -> List[Optional[str]]:
    """Render one record as output cells; None is written as an empty cell."""
    return [_format_cell(name, value) for name, value in record.model_dump().items()]


def emit_dataset(records: Sequence[ProcessedRecord], path) -> None:
    """Write the processed dataset with the published header, in the given order."""
    path = Path(path)
    frame = pd.DataFrame([format_row(r) for r in records], columns=OUTPUT_COLUMNS, dtype=object)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    except OSError as e:
        raise EmitError(f"cannot write dataset to {path}: {e}")
    logger.info(f"Dataset written: {path} ({len(records)} records)")


def read_dataset(path) -> List[ProcessedRecord]:
    """Read a dataset written by emit_dataset back into records."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputFormatError(f"{path}: cannot read dataset: {e}")
    if list(frame.columns) != OUTPUT_COLUMNS:
        raise InputFormatError(f"{path}: header does not match the dataset schema")

    names = list(ProcessedRecord.model_fields)
    records: List[ProcessedRecord] = []
    for row, cells in enumerate(frame.itertuples(index=False, name=None), start=1):
        values: Dict[str, Optional[str]] = {
            name: (cell if cell != "" or name in _TEXT_FIELDS else None) for name, cell in zip(names, cells)
        }
        try:
            records.append(ProcessedRecord.model_validate(values))
        except ValidationError as e:
            raise InputFormatError(f"{path}, data row {row}: {e}")
    return records
