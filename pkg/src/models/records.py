from collections import Counter
from enum import Enum
from typing import Iterable, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.utils.text import fold


class Authenticity(str, Enum):
    GENUINE = "GENUINE"
    FALSE = "FALSE"
    SUSPICIOUS = "SUSPICIOUS"


# Marks seen in Hesperia exports and their English spellings
_AUTHENTICITY_MARKS = {
    "": Authenticity.GENUINE,
    "genuine": Authenticity.GENUINE,
    "autentica": Authenticity.GENUINE,
    "falsa": Authenticity.FALSE,
    "falso": Authenticity.FALSE,
    "false": Authenticity.FALSE,
    "suspicious": Authenticity.SUSPICIOUS,
    "sospechosa": Authenticity.SUSPICIOUS,
    "sospechoso": Authenticity.SUSPICIOUS,
}

# The seven categorical attributes, in published column order
CATEGORICAL_ATTRIBUTES = (
    "material",
    "medium",
    "writing_direction",
    "technique",
    "signary",
    "dual_system",
    "separators",
)

# Dating columns are emitted with one decimal, so re-read rows may drift by one unit
_DATING_TOLERANCE = 0.1 + 1e-9


def parse_authenticity(mark: Optional[str]) -> Authenticity:
    """Map a raw authenticity mark onto the enum; no mark means GENUINE."""
    if mark is None:
        return Authenticity.GENUINE
    if isinstance(mark, Authenticity):
        return mark
    key = fold(str(mark))
    if key not in _AUTHENTICITY_MARKS:
        raise ValueError(f"Unknown authenticity mark: {mark!r}")
    return _AUTHENTICITY_MARKS[key]


def _blank_to_none(value):
    if value is None:
        return None
    value = str(value)
    return value if value.strip() else None


class RawRecord(BaseModel):
    """One harvested inscription: the 14 string attributes plus its authenticity flag"""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    site: str = ""
    ref_mlh: str = Field(default="", alias="refMLH")
    ref_hesperia: str = Field(default="", alias="refHesperia")
    text: str = ""
    municipality: Optional[str] = None
    province: Optional[str] = None
    material: Optional[str] = None
    medium: Optional[str] = None
    writing_direction: Optional[str] = None
    technique: Optional[str] = None
    signary: Optional[str] = None
    dual_system: Optional[str] = None
    separators: Optional[str] = None
    dating: Optional[str] = None
    authenticity: Authenticity = Authenticity.GENUINE

    @field_validator("site", "ref_mlh", "ref_hesperia", "text", mode="before")
    @classmethod
    def _none_to_empty(cls, value):
        return "" if value is None else value

    @field_validator(
        "municipality",
        "province",
        "dating",
        *CATEGORICAL_ATTRIBUTES,
        mode="before",
    )
    @classmethod
    def _absent_when_blank(cls, value):
        return _blank_to_none(value)

    @field_validator("authenticity", mode="before")
    @classmethod
    def _parse_mark(cls, value):
        return parse_authenticity(value)


class ProcessedRecord(BaseModel):
    """One output row; field order is the published column order"""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    site: str = ""
    ref_mlh: str = Field(default="", alias="refMLH")
    ref_hesperia: str = Field(default="", alias="refHesperia")
    text: str = ""
    municipality: Optional[str] = None
    province: Optional[str] = None
    material: Optional[str] = None
    medium: Optional[str] = None
    writing_direction: Optional[str] = None
    technique: Optional[str] = None
    signary: Optional[str] = None
    dual_system: Optional[str] = None
    separators: Optional[str] = None
    dating: Optional[str] = None
    municipality_latitude: Optional[float] = None
    municipality_longitude: Optional[float] = None
    province_latitude: Optional[float] = None
    province_longitude: Optional[float] = None
    dating_min: Optional[float] = None
    dating_max: Optional[float] = None
    dating_mean: Optional[float] = None
    dating_width: Optional[float] = None
    clean_text: str = ""
    material_cat: Optional[str] = None
    material_cat_code: Optional[int] = Field(default=None, ge=0)
    medium_cat: Optional[str] = None
    medium_cat_code: Optional[int] = Field(default=None, ge=0)
    # writing direction is published with a code column only
    writing_direction_cat_code: Optional[int] = Field(default=None, ge=0)
    technique_cat: Optional[str] = None
    technique_cat_code: Optional[int] = Field(default=None, ge=0)
    signary_cat: Optional[str] = None
    signary_cat_code: Optional[int] = Field(default=None, ge=0)
    dual_system_cat: Optional[str] = None
    dual_system_cat_code: Optional[int] = Field(default=None, ge=0)
    separators_cat: Optional[str] = None
    separators_cat_code: Optional[int] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _check_consistency(self):
        lo, hi = self.dating_min, self.dating_max
        if lo is not None and hi is not None:
            if lo > hi:
                raise ValueError(f"dating_min {lo} exceeds dating_max {hi}")
            if self.dating_mean is not None and abs(self.dating_mean - (lo + hi) / 2) > _DATING_TOLERANCE:
                raise ValueError("dating_mean is not the interval midpoint")
            if self.dating_width is not None and abs(self.dating_width - (hi - lo)) > _DATING_TOLERANCE:
                raise ValueError("dating_width is not the interval amplitude")

        for attribute in CATEGORICAL_ATTRIBUTES:
            code = getattr(self, f"{attribute}_cat_code")
            if code is not None and getattr(self, attribute) is None:
                raise ValueError(f"{attribute}_cat_code set for an absent {attribute}")
            if attribute == "writing_direction":
                continue
            if (getattr(self, f"{attribute}_cat") is None) != (code is None):
                raise ValueError(f"{attribute}_cat and its code must be null together")
        return self


def _wire_names(model) -> List[str]:
    return [field.alias or name for name, field in model.model_fields.items()]


RAW_COLUMNS: List[str] = _wire_names(RawRecord)
OUTPUT_COLUMNS: List[str] = _wire_names(ProcessedRecord)


def validate_record(record: RawRecord) -> List[str]:
    """Return one description per violated RawRecord invariant (empty when valid)."""
    violations: List[str] = []
    if not record.ref_hesperia.strip():
        violations.append("ref_hesperia empty")
    return violations


def validate_corpus(records: Iterable[RawRecord]) -> List[str]:
    """Per-record checks plus the corpus-wide uniqueness of ref_hesperia."""
    records = list(records)
    violations: List[str] = []
    for position, record in enumerate(records, start=1):
        for violation in validate_record(record):
            violations.append(f"record {position}: {violation}")

    counts = Counter(r.ref_hesperia for r in records if r.ref_hesperia.strip())
    for ref, count in counts.items():
        if count > 1:
            violations.append(f"ref_hesperia duplicated: {ref} ({count} records)")
    return violations
