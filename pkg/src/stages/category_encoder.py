from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import pandas as pd

from src.models.records import RawRecord
from src.stages.base_stage import BaseStage, IssueKind
from src.utils.errors import ResourceLoadError
from src.utils.text import fold

MISC_MARKER = "*"


class Attribute(str, Enum):
    MATERIAL = "MATERIAL"
    MEDIUM = "MEDIUM"
    WRITING_DIRECTION = "WRITING_DIRECTION"
    TECHNIQUE = "TECHNIQUE"
    SIGNARY = "SIGNARY"
    DUAL_SYSTEM = "DUAL_SYSTEM"
    SEPARATORS = "SEPARATORS"

    @property
    def column(self) -> str:
        return self.value.lower()


# Final number of values per attribute after consolidation
CATEGORY_CEILINGS: Dict[Attribute, int] = {
    Attribute.MATERIAL: 12,
    Attribute.MEDIUM: 28,
    Attribute.WRITING_DIRECTION: 6,
    Attribute.TECHNIQUE: 10,
    Attribute.SIGNARY: 9,
    Attribute.DUAL_SYSTEM: 3,
    Attribute.SEPARATORS: 12,
}


def fold_value(raw: str) -> str:
    # Accents are meaningful here ("CERÁMICA" vs "CERAMICA" are grouped explicitly)
    return fold(raw, keep_diacritics=True)


@dataclass(frozen=True)
class CategoryMapping:
    attribute: Attribute
    groups: Mapping[str, str] = field(default_factory=dict)
    codes: Mapping[str, int] = field(default_factory=dict)
    misc_category: Optional[str] = None

    @property
    def categories(self) -> List[str]:
        return sorted(self.codes, key=self.codes.get)

    def validate(self, ceiling: Optional[int] = None) -> List[str]:
        """Return the violated invariants of this mapping (empty when valid)."""
        problems: List[str] = []
        seen: Dict[int, str] = {}
        for category, code in self.codes.items():
            if code < 0:
                problems.append(f"{self.attribute.value}: negative code {code} for {category!r}")
            if code in seen:
                problems.append(
                    f"{self.attribute.value}: code {code} shared by {seen[code]!r} and {category!r}"
                )
            seen[code] = category
        for raw, category in self.groups.items():
            if category not in self.codes:
                problems.append(f"{self.attribute.value}: {raw!r} maps to {category!r}, which has no code")
        if self.misc_category is not None and self.misc_category not in self.codes:
            problems.append(f"{self.attribute.value}: miscellaneous category {self.misc_category!r} has no code")
        if ceiling is not None and len(self.codes) > ceiling:
            problems.append(f"{self.attribute.value}: {len(self.codes)} categories exceed the ceiling of {ceiling}")
        return problems


def encode(
    attribute: Attribute, raw_value: Optional[str], mapping: CategoryMapping
) -> Tuple[Optional[str], Optional[int]]:
    """Return (category, code); absent values and misses without a misc bucket give (None, None)."""
    if raw_value is None or not raw_value.strip():
        return None, None
    if mapping.attribute is not attribute:
        raise ValueError(f"Mapping for {mapping.attribute.value} used to encode {attribute.value}")
    category = mapping.groups.get(fold_value(raw_value), mapping.misc_category)
    if category is None:
        return None, None
    return category, mapping.codes[category]


def decode(code: int, mapping: CategoryMapping) -> str:
    for category, assigned in mapping.codes.items():
        if assigned == code:
            return category
    raise KeyError(f"No {mapping.attribute.value} category has code {code}")


def load_mapping(path, ceilings: Optional[Mapping[Attribute, int]] = None) -> Dict[Attribute, CategoryMapping]:
    """
    Load the mapping file: attribute, raw_value, category, code.

    A raw_value of "*" declares the attribute's miscellaneous category. Codes
    are checked for injectivity and category counts against `ceilings`.
    """
    path = Path(path)
    ceilings = CATEGORY_CEILINGS if ceilings is None else ceilings
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, comment="#", skipinitialspace=True, encoding="utf-8"
        )
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ResourceLoadError(path, f"cannot read category mapping: {e}")

    required = ["attribute", "raw_value", "category", "code"]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise ResourceLoadError(path, f"missing columns {missing}")

    groups: Dict[Attribute, Dict[str, str]] = {a: {} for a in Attribute}
    codes: Dict[Attribute, Dict[str, int]] = {a: {} for a in Attribute}
    misc: Dict[Attribute, Optional[str]] = {a: None for a in Attribute}

    for row, entry in enumerate(frame.to_dict("records"), start=1):
        try:
            attribute = Attribute(entry["attribute"].strip().upper())
        except ValueError:
            raise ResourceLoadError(path, f"unknown attribute {entry['attribute']!r}", row=row)
        category = entry["category"].strip()
        if not category:
            raise ResourceLoadError(path, "empty category", row=row)
        try:
            code = int(entry["code"])
        except ValueError:
            raise ResourceLoadError(path, f"code {entry['code']!r} is not an integer", row=row)

        known = codes[attribute].get(category)
        if known is not None and known != code:
            raise ResourceLoadError(path, f"{category!r} already has code {known}, got {code}", row=row)
        codes[attribute][category] = code

        raw_value = entry["raw_value"].strip()
        if raw_value == MISC_MARKER:
            misc[attribute] = category
        elif raw_value:
            key = fold_value(raw_value)
            if groups[attribute].get(key, category) != category:
                raise ResourceLoadError(
                    path, f"{raw_value!r} already grouped under {groups[attribute][key]!r}", row=row
                )
            groups[attribute][key] = category

    mappings: Dict[Attribute, CategoryMapping] = {}
    for attribute in Attribute:
        mapping = CategoryMapping(
            attribute=attribute,
            groups=MappingProxyType(groups[attribute]),
            codes=MappingProxyType(codes[attribute]),
            misc_category=misc[attribute],
        )
        problems = mapping.validate(ceilings.get(attribute))
        if problems:
            raise ResourceLoadError(path, "; ".join(problems))
        mappings[attribute] = mapping
    return mappings


def check_counts(observed: Mapping[Attribute, int], targets: Mapping[Attribute, int]) -> List[str]:
    """Compare distinct categories seen in a corpus with the expected final counts."""
    return [
        f"{attribute.value}: {observed.get(attribute, 0)} distinct categories, expected {target}"
        for attribute, target in targets.items()
        if observed.get(attribute, 0) != target
    ]


class CategoryEncoder(BaseStage):
    """Stage that consolidates categorical attributes and assigns their codes"""

    def __init__(self, mappings: Mapping[Attribute, CategoryMapping]):
        super().__init__(name="CategoryEncoder")
        self.mappings = dict(mappings)

    def process(self, record: RawRecord) -> Dict[str, Any]:
        """
        Encode the seven categorical attributes of one record

        Output:
            - <attribute>_cat and <attribute>_cat_code for every attribute
              (writing_direction only has its code column in the dataset)
            - issues: list of RecordIssue
        """
        output: Dict[str, Any] = {}
        issues = []
        for attribute in Attribute:
            raw_value = getattr(record, attribute.column)
            category, code = encode(attribute, raw_value, self.mappings[attribute])
            if category is None and raw_value is not None:
                issues.append(
                    self.issue(record, IssueKind.UNMAPPED_VALUE, f"{attribute.column} value {raw_value!r} is unmapped")
                )
            if attribute is not Attribute.WRITING_DIRECTION:
                output[f"{attribute.column}_cat"] = category
            output[f"{attribute.column}_cat_code"] = code
        output["issues"] = issues
        return output

    def distinct_categories(self, records: Iterable[RawRecord]) -> Dict[Attribute, int]:
        seen: Dict[Attribute, set] = {a: set() for a in Attribute}
        for record in records:
            for attribute in Attribute:
                category, _ = encode(attribute, getattr(record, attribute.column), self.mappings[attribute])
                if category is not None:
                    seen[attribute].add(category)
        return {attribute: len(categories) for attribute, categories in seen.items()}
