from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple
import math
import re

import pandas as pd

from src.models.records import RawRecord
from src.stages.base_stage import BaseStage, IssueKind
from src.utils.errors import ResourceLoadError
from src.utils.text import fold

NULL_DATING: Tuple[None, None, None, None] = (None, None, None, None)

_ROMAN = {"i": 1, "ii": 2, "iii": 3, "iv": 4, "v": 5, "vi": 6, "vii": 7, "viii": 8, "ix": 9, "x": 10}


class Era(str, Enum):
    BC = "BC"
    AD = "AD"


class ModifierKind(str, Enum):
    CENTURY = "CENTURY"
    YEAR = "YEAR"


@dataclass(frozen=True)
class DatingInterval:
    """Closed year interval; negative years are B.C. and there is no year zero"""

    lower: float
    upper: float
    provenance: str = ""

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"Interval lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def mean(self) -> float:
        return (self.lower + self.upper) / 2

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (float(self.lower), float(self.upper), self.mean, self.width)


@dataclass(frozen=True)
class ChronologyModifier:
    """
    A keyword that narrows a dating interval.

    CENTURY modifiers carry the fraction pair [fraction_low, fraction_high] of
    the century they keep; fraction_low may be -inf ("anterior a finales") and
    the degenerate pair [1, 1] marks the change of era. YEAR modifiers carry
    the number of years added before and after the year.
    """

    keywords: Tuple[str, ...]
    applies_to: ModifierKind
    fraction_low: float
    fraction_high: float

    def __post_init__(self):
        low, high = self.fraction_low, self.fraction_high
        if self.applies_to is ModifierKind.YEAR:
            if not (0 <= low and 0 <= high) or math.isinf(low) or math.isinf(high):
                raise ValueError(f"Year window must be finite and non-negative, got [{low}, {high}]")
            return
        if self.is_era_change:
            return
        if not 0 <= high <= 1:
            raise ValueError(f"Fraction {high} outside [0, 1]")
        if not self.is_unbounded_below and not 0 <= low <= high:
            raise ValueError(f"Fraction pair [{low}, {high}) outside [0, 1]")

    @property
    def is_unbounded_below(self) -> bool:
        return math.isinf(self.fraction_low) and self.fraction_low < 0

    @property
    def is_era_change(self) -> bool:
        return self.applies_to is ModifierKind.CENTURY and self.fraction_low == self.fraction_high == 1


@dataclass
class _Atom:
    kind: ModifierKind
    value: int
    source: str
    era: Optional[Era] = None
    modifier: Optional[ChronologyModifier] = None
    fixed: Optional[DatingInterval] = None
    notes: List[str] = field(default_factory=list)


def _snap_year_zero(lower: float, upper: float) -> Tuple[float, float]:
    """Move bounds that fall inside (-1, 1) to the nearest real year, keeping lower <= upper."""
    if -1 < lower < 1:
        lower = 1.0 if upper >= 1 else -1.0
    if -1 < upper < 1:
        upper = -1.0 if lower <= -1 else 1.0
    return lower, upper


def century_to_interval(century: int, era: Era) -> DatingInterval:
    """Century c spans [100(c-1)+1, 100c]; B.C. centuries are that interval negated."""
    if century < 1:
        raise ValueError(f"There is no century {century}")
    first, last = 100 * (century - 1) + 1, 100 * (century - 1) + 100
    if era is Era.BC:
        return DatingInterval(-last, -first, f"century {century} {era.value}")
    return DatingInterval(first, last, f"century {century} {era.value}")


def year_to_interval(year: int, era: Era) -> DatingInterval:
    if year < 1:
        raise ValueError(f"There is no year {year}")
    signed = -year if era is Era.BC else year
    return DatingInterval(signed, signed, f"year {year} {era.value}")


def apply_modifier(interval: DatingInterval, modifier: ChronologyModifier) -> DatingInterval:
    provenance = f"{modifier.keywords[0]} {interval.provenance}".strip()

    if modifier.is_era_change:
        return DatingInterval(-1, 1, provenance)

    a, b = interval.lower, interval.upper
    if modifier.applies_to is ModifierKind.YEAR:
        lower, upper = a - modifier.fraction_low, b + modifier.fraction_high
    else:
        # "anterior a finales" has no finite floor; the century start is used
        low = 0.0 if modifier.is_unbounded_below else modifier.fraction_low
        lower = a + low * (b - a)
        upper = a + modifier.fraction_high * (b - a)

    lower, upper = _snap_year_zero(lower, upper)
    return DatingInterval(lower, upper, provenance)


def hull(intervals: Sequence[DatingInterval]) -> DatingInterval:
    """Smallest interval containing every alternative."""
    if not intervals:
        raise ValueError("Cannot take the hull of no intervals")
    if len(intervals) == 1:
        return intervals[0]
    return DatingInterval(
        min(iv.lower for iv in intervals),
        max(iv.upper for iv in intervals),
        " | ".join(iv.provenance for iv in intervals if iv.provenance),
    )


def _parse_bound(raw: str) -> float:
    value = raw.strip().lower()
    if value in ("-inf", "-infinity", "−inf"):
        return -math.inf
    return float(Fraction(value))


def load_modifiers(path) -> List[ChronologyModifier]:
    """
    Load the modifier table: keywords (slash separated), applies_to,
    fraction_low, fraction_high. Row numbers in errors count data rows.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, comment="#", skipinitialspace=True, encoding="utf-8"
        )
    except (OSError, UnicodeDecodeError, pd.errors.ParserError) as e:
        raise ResourceLoadError(path, f"cannot read modifier table: {e}")

    required = ["keywords", "applies_to", "fraction_low", "fraction_high"]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise ResourceLoadError(path, f"missing columns {missing}")

    modifiers: List[ChronologyModifier] = []
    for row, entry in enumerate(frame.to_dict("records"), start=1):
        keywords = tuple(fold(k) for k in entry["keywords"].split("/") if k.strip())
        try:
            modifiers.append(
                ChronologyModifier(
                    keywords=keywords,
                    applies_to=ModifierKind(entry["applies_to"].strip().upper()),
                    fraction_low=_parse_bound(entry["fraction_low"]),
                    fraction_high=_parse_bound(entry["fraction_high"]),
                )
            )
        except (ValueError, ZeroDivisionError) as e:
            raise ResourceLoadError(path, str(e), row=row)
        if not keywords:
            raise ResourceLoadError(path, "empty keyword list", row=row)
    return modifiers


class ChronologyParser(BaseStage):
    """Stage that turns Spanish dating expressions into year intervals"""

    _ERA = (
        r"(?P<bc>(?<!\w)a\.\s*(?:de\s*)?c\b\.?|(?<!\w)a\.\s*n\.\s*e\b\.?|(?<!\w)antes\s+de\s+cristo(?!\w))"
        r"|(?P<ad>(?<!\w)d\.\s*(?:de\s*)?c\b\.?|(?<!\w)d\.\s*n\.\s*e\b\.?|(?<!\w)despues\s+de\s+cristo(?!\w))"
    )
    _TAIL = (
        r"|(?P<century_word>(?<!\w)(?:siglos?(?!\w)|ss?\.))"
        r"|(?P<roman>(?<!\w)[ivx]+(?!\w))"
        r"|(?P<number>(?<!\w)\d{1,4}(?!\w))"
        r"|(?P<filler>(?<!\w)(?:al|a|y|o|u|e|hasta|entre|desde|del|de|la|el|los|las|en"
        r"|probablemente|posiblemente|quizas?)(?!\w))"
        r"|(?P<word>[^\W\d_]+)"
    )
    _ATTRIBUTION = re.compile(r"^\s*([^:]+):\s*(.*)$", re.DOTALL)
    _DATE_HINT = re.compile(r"\d|(?<!\w)(?i:siglos?(?!\w)|ss?\.)|(?<!\w)[IVX]+(?!\w)")

    def __init__(self, modifiers: Iterable[ChronologyModifier] = ()):
        super().__init__(name="ChronologyParser")
        self.modifiers = list(modifiers)
        self._by_keyword: Dict[str, ChronologyModifier] = {}
        for modifier in self.modifiers:
            for keyword in modifier.keywords:
                self._by_keyword.setdefault(keyword, modifier)

        keywords = sorted(self._by_keyword, key=lambda k: (-len(k), k))
        head = ""
        if keywords:
            alternatives = "|".join(r"\s+".join(map(re.escape, k.split())) for k in keywords)
            head = rf"(?P<modifier>(?<!\w)(?:{alternatives})(?!\w))|"
        self._token = re.compile(head + self._ERA + self._TAIL)

    def process(self, record: RawRecord) -> Dict[str, Any]:
        """
        Parse the dating attribute of one record

        Output:
            - dating_min, dating_max, dating_mean, dating_width: float or None
            - issues: list of RecordIssue
        """
        warnings: List[str] = []
        lower, upper, mean, width = self.parse_dating(record.dating, warnings)
        return {
            "dating_min": lower,
            "dating_max": upper,
            "dating_mean": mean,
            "dating_width": width,
            "issues": [self.issue(record, IssueKind.UNPARSED_DATING, w) for w in warnings],
        }

    def parse_dating(
        self, expr: Optional[str], warnings: Optional[List[str]] = None
    ) -> Tuple[Optional[float], Optional[float], Optional[float], Optional[float]]:
        """Return (min, max, mean, width) of the hull of every dated alternative, or four nulls."""
        intervals = self.parse_intervals(expr, warnings)
        if not intervals:
            return NULL_DATING
        return hull(intervals).as_tuple()

    def parse_intervals(self, expr: Optional[str], warnings: Optional[List[str]] = None) -> List[DatingInterval]:
        sink = warnings if warnings is not None else []
        if expr is None or not expr.strip():
            return []

        atoms = self._tokenize(expr, sink)
        intervals: List[DatingInterval] = []
        for atom in atoms:
            interval = self._interval_for(atom, sink)
            if interval is not None:
                intervals.append(interval)

        if not intervals:
            sink.append(f"no date recognized in {expr.strip()!r}")
        return intervals

    def _strip_attribution(self, segment: str) -> str:
        # "Rodríguez Ramos: 200 - 50 a.C." -> "200 - 50 a.C."
        # "Untermann (1990): siglo II a.C." and "MLH IV: siglo II a.C." lose the citation too
        match = self._ATTRIBUTION.match(segment)
        if match is None:
            return segment
        if not self._DATE_HINT.search(match.group(1)) or self._has_date(match.group(2)):
            return match.group(2)
        return segment

    def _has_date(self, text: str) -> bool:
        return any(
            m.lastgroup in ("modifier", "roman", "number") for m in self._token.finditer(fold(text))
        )

    def _tokenize(self, expr: str, warnings: List[str]) -> List[_Atom]:
        atoms: List[_Atom] = []
        pending: Optional[ChronologyModifier] = None
        century_context = False
        fragment: List[str] = []

        def flush_fragment():
            if fragment:
                warnings.append(f"unparsed fragment {' '.join(fragment)!r}")
                fragment.clear()

        for segment in expr.split(";"):
            text = fold(self._strip_attribution(segment))
            for match in self._token.finditer(text):
                kind, token = match.lastgroup, match.group(0)
                if kind == "word":
                    fragment.append(token)
                    continue
                flush_fragment()

                if kind == "modifier":
                    modifier = self._by_keyword[fold(token)]
                    if modifier.is_era_change:
                        atoms.append(
                            _Atom(ModifierKind.CENTURY, 0, token, fixed=apply_modifier(DatingInterval(-1, 1), modifier))
                        )
                        continue
                    if pending is not None:
                        warnings.append(f"modifier {pending.keywords[0]!r} not followed by a date")
                    pending = modifier
                    century_context = False
                elif kind == "century_word":
                    century_context = True
                elif kind in ("bc", "ad"):
                    era = Era.BC if kind == "bc" else Era.AD
                    for atom in atoms:
                        if atom.era is None and atom.fixed is None:
                            atom.era = era
                    century_context = False
                elif kind == "roman":
                    if token not in _ROMAN:
                        fragment.append(token)
                        continue
                    atoms.append(_Atom(ModifierKind.CENTURY, _ROMAN[token], token, modifier=pending))
                    pending = None
                    # "siglo IV o 200": Arabic numerals after a Roman century are years
                    century_context = False
                elif kind == "number":
                    unit = ModifierKind.CENTURY if century_context else ModifierKind.YEAR
                    atoms.append(_Atom(unit, int(token), token, modifier=pending))
                    pending = None
            flush_fragment()

        if pending is not None:
            warnings.append(f"modifier {pending.keywords[0]!r} not followed by a date")
        return atoms

    def _interval_for(self, atom: _Atom, warnings: List[str]) -> Optional[DatingInterval]:
        if atom.fixed is not None:
            return atom.fixed

        era = atom.era or Era.AD
        try:
            if atom.kind is ModifierKind.CENTURY:
                interval = century_to_interval(atom.value, era)
            else:
                interval = year_to_interval(atom.value, era)
        except ValueError as e:
            warnings.append(f"{e} ({atom.source!r})")
            return None

        modifier = atom.modifier
        if modifier is None:
            return interval
        if modifier.applies_to is not atom.kind:
            warnings.append(
                f"modifier {modifier.keywords[0]!r} applies to {modifier.applies_to.value.lower()}s, "
                f"ignored for {atom.source!r}"
            )
            return interval
        return apply_modifier(interval, modifier)
