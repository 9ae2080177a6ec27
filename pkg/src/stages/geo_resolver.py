from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Any, Dict, List, Mapping, Optional
import logging

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.models.records import RawRecord
from src.stages.base_stage import BaseStage, IssueKind
from src.utils.errors import ConfigError, ResourceLoadError
from src.utils.text import fold

logger = logging.getLogger("GeoResolver")

DEFAULT_COLUMNS = {"name": "name", "latitude": "latitude", "longitude": "longitude"}


class GazetteerKind(str, Enum):
    ES_MUNICIPALITY = "ES_MUNICIPALITY"
    FR_COMMUNE = "FR_COMMUNE"
    PROVINCE = "PROVINCE"


class GeoPoint(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    latitude: float = Field(ge=-90, le=90)
    longitude: float = Field(ge=-180, le=180)


@dataclass(frozen=True)
class Gazetteer:
    kind: GazetteerKind
    entries: Mapping[str, GeoPoint]
    source: str = ""

    def __len__(self) -> int:
        return len(self.entries)


def normalize_place_name(name: str) -> str:
    """Lowercase, strip diacritics and collapse whitespace ("  Càlig " -> "calig")."""
    alternatives = place_name_alternatives(name)
    return "/".join(alternatives)


def place_name_alternatives(name: Optional[str]) -> List[str]:
    """Split bilingual "Sagunto/Sagunt" forms into normalized alternatives, in order."""
    if not name:
        return []
    alternatives: List[str] = []
    for part in name.split("/"):
        key = fold(part)
        if key and key not in alternatives:
            alternatives.append(key)
    return alternatives


def load_gazetteer(
    path,
    kind: GazetteerKind,
    columns: Optional[Mapping[str, str]] = None,
    delimiter: str = ",",
) -> Gazetteer:
    """
    Load one gazetteer file.

    `columns` maps the logical names (name, latitude, longitude) to the file's
    header. Row numbers in errors are file lines (the header is line 1).
    """
    path = Path(path)
    columns = {**DEFAULT_COLUMNS, **(columns or {})}
    try:
        frame = pd.read_csv(path, sep=delimiter, dtype=str, keep_default_na=False, encoding="utf-8")
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ResourceLoadError(path, f"cannot read {kind.value} gazetteer: {e}")

    missing = [header for header in columns.values() if header not in frame.columns]
    if missing:
        raise ResourceLoadError(path, f"missing columns {missing}")

    entries: Dict[str, GeoPoint] = {}
    first_line: Dict[str, int] = {}
    collisions = 0
    for line, row in enumerate(frame.to_dict("records"), start=2):
        name = row[columns["name"]]
        try:
            point = GeoPoint(
                latitude=float(row[columns["latitude"]].replace(",", ".")),
                longitude=float(row[columns["longitude"]].replace(",", ".")),
            )
        except (ValueError, ValidationError) as e:
            raise ResourceLoadError(path, f"bad coordinates for {name!r}: {e}", row=line)

        keys = place_name_alternatives(name)
        full = "/".join(keys)
        if full and full not in keys:
            keys.insert(0, full)
        for key in keys:
            if key in entries:
                collisions += 1
                logger.warning(
                    f"{path.name} line {line}: {key!r} already loaded from line {first_line[key]}, keeping the first"
                )
                continue
            entries[key] = point
            first_line[key] = line

    logger.info(f"Loaded {kind.value} gazetteer {path.name}: {len(entries)} names ({collisions} collisions)")
    return Gazetteer(kind=kind, entries=MappingProxyType(entries), source=str(path))


def resolve(name: Optional[str], gazetteer: Gazetteer) -> Optional[GeoPoint]:
    """Return the point of the first alternative found in the gazetteer, else None."""
    for key in place_name_alternatives(name):
        point = gazetteer.entries.get(key)
        if point is not None:
            return point
    return None


class GeoResolver(BaseStage):
    """Stage that geocodes municipality and province names"""

    def __init__(
        self,
        municipalities: List[Gazetteer],
        provinces: Gazetteer,
    ):
        super().__init__(name="GeoResolver")
        # Spanish municipalities first, then French communes
        self.municipalities = list(municipalities)
        self.provinces = provinces

    @classmethod
    def from_config(cls, gazetteers: Dict[str, Dict[str, Any]], directory) -> "GeoResolver":
        """
        Build the resolver from the `gazetteers` section of the configuration

        Input (per kind key: es_municipality, fr_commune, province):
            - file: str (relative to `directory`)
            - columns: dict (name, latitude, longitude)
            - delimiter: str (optional)
        """
        loaded: Dict[GazetteerKind, Gazetteer] = {}
        for kind in GazetteerKind:
            spec = gazetteers.get(kind.value.lower())
            if spec is None:
                raise ResourceLoadError(directory, f"no gazetteer configured for {kind.value}")
            columns = spec.get("columns", DEFAULT_COLUMNS)
            cls._check_columns(columns)
            loaded[kind] = load_gazetteer(
                Path(directory) / spec["file"],
                kind,
                columns=columns,
                delimiter=spec.get("delimiter", ","),
            )
        return cls(
            municipalities=[loaded[GazetteerKind.ES_MUNICIPALITY], loaded[GazetteerKind.FR_COMMUNE]],
            provinces=loaded[GazetteerKind.PROVINCE],
        )

    @classmethod
    def _check_columns(cls, columns: Dict[str, str]) -> None:
        try:
            cls.validate_input(columns, list(DEFAULT_COLUMNS))
        except ValueError as e:
            raise ConfigError(f"gazetteer column mapping: {e}")

    def process(self, record: RawRecord) -> Dict[str, Any]:
        """
        Geocode one record

        Output:
            - municipality_latitude, municipality_longitude: float or None
            - province_latitude, province_longitude: float or None
            - issues: list of RecordIssue
        """
        issues = []

        municipality = self.resolve_municipality(record.municipality)
        if municipality is None and record.municipality:
            issues.append(
                self.issue(record, IssueKind.UNRESOLVED_PLACE, f"municipality {record.municipality!r} not found")
            )

        province = resolve(record.province, self.provinces)
        if province is None and record.province:
            issues.append(self.issue(record, IssueKind.UNRESOLVED_PLACE, f"province {record.province!r} not found"))

        return {
            "municipality_latitude": municipality.latitude if municipality else None,
            "municipality_longitude": municipality.longitude if municipality else None,
            "province_latitude": province.latitude if province else None,
            "province_longitude": province.longitude if province else None,
            "issues": issues,
        }

    def resolve_municipality(self, name: Optional[str]) -> Optional[GeoPoint]:
        for gazetteer in self.municipalities:
            point = resolve(name, gazetteer)
            if point is not None:
                return point
        return None
