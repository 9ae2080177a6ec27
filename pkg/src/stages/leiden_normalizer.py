from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple
import re

from src.models.records import RawRecord
from src.stages.base_stage import BaseStage, IssueKind
from src.utils.errors import ResourceLoadError


class PatternClass(str, Enum):
    GAP_COUNT = "GAP_COUNT"
    CITATION = "CITATION"
    PARENS = "PARENS"
    BRACKETS = "BRACKETS"
    CURLY = "CURLY"
    NUMERAL = "NUMERAL"
    DISPUTED_CHAR = "DISPUTED_CHAR"
    METROLOGY_KEEP = "METROLOGY_KEEP"
    LINE_BAR = "LINE_BAR"
    ANNOTATION = "ANNOTATION"
    HYPHEN_JOIN = "HYPHEN_JOIN"
    VOWEL_REDUNDANCY = "VOWEL_REDUNDANCY"


@dataclass(frozen=True)
class RewriteRule:
    id: int
    description: str
    pattern_class: PatternClass


RULES: Tuple[RewriteRule, ...] = (
    RewriteRule(1, "Counted gap [-c.X-] becomes the generic [---]", PatternClass.GAP_COUNT),
    RewriteRule(2, "Bibliographic citations are removed", PatternClass.CITATION),
    RewriteRule(3, "Parentheses removed; abbreviations kept, commentary dropped", PatternClass.PARENS),
    RewriteRule(4, "Brackets removed; restorations kept, commentary dropped", PatternClass.BRACKETS),
    RewriteRule(5, "Curly brackets removed with their contents", PatternClass.CURLY),
    RewriteRule(6, "Arabic numerals removed unless they number a list", PatternClass.NUMERAL),
    RewriteRule(7, "Disputed or illegible characters become +", PatternClass.DISPUTED_CHAR),
    RewriteRule(8, "Metrology elements are kept", PatternClass.METROLOGY_KEEP),
    RewriteRule(9, "Line-split bars removed", PatternClass.LINE_BAR),
    RewriteRule(10, "Spanish and Latin annotations removed", PatternClass.ANNOTATION),
    RewriteRule(11, "Words continued on the next line are rejoined", PatternClass.HYPHEN_JOIN),
    RewriteRule(12, "Repeated vowel after an occlusive syllabogram removed", PatternClass.VOWEL_REDUNDANCY),
)

GAP_MARKER = "[---]"
DISPUTED_CHARS = frozenset({"⌶", "Σ", "\U00010603", "‡", "Ϡ"})  # ⌶ Σ 𐘃 ‡ Ϡ
LINE_BARS = frozenset({"|", "│"})
OCCLUSIVES = "bdgkt"
MAX_PASSES = 4

_COUNTED_GAP = re.compile(r"\[\s*-*\s*ca?\.[^\[\]]*\]")
_GAP = re.compile(r"\[\s*-+(?:\s+-+)*\s*\]")
_ILLEGIBLE = re.compile(r"\[[\s.]*\.[\s.]*\]")
_METROLOGY = re.compile(r"(?<!\w)(?:III|II|I|ssss)\??(?!\w)|[ΠΔ<>=]\??")
_LISTING = re.compile(r"(?<!\S)\d+[.)](?!\S)")
_NUMERAL = re.compile(r"(?<!\S)\d+[.)](?!\S)|\d+")
_BRACKETED_CITATION = re.compile(
    r"[(\[][^()\[\]]*?"
    r"(?:(?<!\w)(?:cf|vid|vide|apud|ibid|op\.\s*cit)\.|\bMLH\b"
    r"|\b[A-ZÁÉÍÓÚÑ][\w'’\-]+,?\s+(?:1[5-9]|20)\d{2}[a-z]?\b)"
    r"[^()\[\]]*[)\]]"
)
_INLINE_CITATION = re.compile(
    r"\b[A-ZÁÉÍÓÚÑ][a-záéíóúñü]+"
    r"(?:\s+(?:(?:y|et|i|&)\s+)?[A-ZÁÉÍÓÚÑ][a-záéíóúñü]+)*(?:\s+et\s+al\.)?"
    r",?\s+(?:1[5-9]|20)\d{2}[a-z]?"
    r"(?:\s*[:,]\s*(?:p\.\s*)?\d+(?:\s*[-–]\s*\d+)?)?"
)
_CURLY = re.compile(r"\{[^{}]*\}")
_CONTINUATION = re.compile(r"(?<=\w)-[ \t]*(?:\r?\n|[|│])[ \t]*(?=\w)")
_REDUNDANT_VOWEL = re.compile(rf"([{OCCLUSIVES}])([aeiou])\2+")
_STRAY = re.compile(r"[(){}]")
_WHITESPACE = re.compile(r"\s+")
_PAIRS = {"(": re.compile(r"\(([^()]*)\)"), "[": re.compile(r"\[([^\[\]]*)\]")}
_DISPUTED_TABLE = str.maketrans({ch: "+" for ch in DISPUTED_CHARS})
_LINE_BAR_TABLE = str.maketrans({ch: None for ch in LINE_BARS})

# Supplementary private-use plane; one code point per shielded token
_SHIELD_BASE = 0xF0000


def _list_item(match: re.Match) -> Optional[str]:
    """A list number outside any open parenthesis, written as "N."."""
    before = match.string[: match.start()]
    if before.count("(") > before.count(")"):
        return None
    return match.group(0)[:-1] + "."


class _Shield:
    """Swap tokens that no rule may touch for private-use placeholders."""

    def __init__(self):
        self._tokens: List[str] = []

    def hide(self, text: str, pattern: re.Pattern, canonical: Optional[str] = None) -> str:
        return self.hide_matches(text, pattern, lambda match: canonical or match.group(0))

    def hide_matches(
        self, text: str, pattern: re.Pattern, token: Callable[[re.Match], Optional[str]]
    ) -> str:
        """Shield each match as `token(match)`; a None token leaves the match in place."""

        def swap(match: re.Match) -> str:
            kept = token(match)
            if kept is None:
                return match.group(0)
            self._tokens.append(kept)
            return chr(_SHIELD_BASE + len(self._tokens) - 1)

        return pattern.sub(swap, text)

    def reveal(self, text: str) -> str:
        if not self._tokens:
            return text
        return "".join(
            self._tokens[ord(ch) - _SHIELD_BASE]
            if _SHIELD_BASE <= ord(ch) < _SHIELD_BASE + len(self._tokens)
            else ch
            for ch in text
        )


class AnnotationLexicon:
    """Spanish/Latin commentary phrases, matched case-insensitively on word boundaries"""

    def __init__(self, phrases: Iterable[str] = ()):
        self.phrases = tuple(sorted({p.strip() for p in phrases if p.strip()}, key=lambda p: (-len(p), p)))
        self._pattern = None
        if self.phrases:
            alternatives = "|".join(r"\s+".join(map(re.escape, p.split())) for p in self.phrases)
            self._pattern = re.compile(rf"(?<!\w)(?:{alternatives})(?!\w)(?:\s*:)?", re.IGNORECASE)

    @classmethod
    def from_file(cls, path) -> "AnnotationLexicon":
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except (OSError, UnicodeDecodeError) as e:
            raise ResourceLoadError(path, f"cannot read annotation lexicon: {e}")
        phrases = [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
        return cls(phrases)

    def matches(self, text: str) -> bool:
        return bool(self._pattern and self._pattern.search(text))

    def remove(self, text: str) -> str:
        return self._pattern.sub(" ", text) if self._pattern else text


def rewrite_gap_counts(text: str) -> str:
    """Replace every counted gap "[-c.X-]" with the generic "[---]"."""
    return _COUNTED_GAP.sub(GAP_MARKER, text)


def remove_citations(text: str) -> str:
    text = _BRACKETED_CITATION.sub(" ", text)
    return _INLINE_CITATION.sub(" ", text)


def remove_annotations(text: str, lexicon: AnnotationLexicon) -> str:
    """Drop bracket groups holding commentary, then any free-standing commentary."""
    if not lexicon.matches(text):
        return text

    def drop_commentary(match: re.Match) -> str:
        return "" if lexicon.matches(match.group(0)[1:-1]) else match.group(0)

    text = re.sub(r"\([^()\[\]]*\)|\[[^()\[\]]*\]", drop_commentary, text)
    return lexicon.remove(text)


def _resolve_pairs(
    text: str,
    opener: str,
    lexicon: Optional[AnnotationLexicon],
    warnings: Optional[List[str]],
) -> str:
    pattern = _PAIRS[opener]

    def unwrap(match: re.Match) -> str:
        content = match.group(1)
        if lexicon is not None and lexicon.matches(content):
            return ""
        return content

    while True:
        resolved = pattern.sub(unwrap, text)
        if resolved == text:
            break
        text = resolved

    closer = ")" if opener == "(" else "]"
    if (opener in text or closer in text) and warnings is not None:
        warnings.append(f"unbalanced '{opener}{closer}' left in text")
    return text


def resolve_brackets(
    text: str,
    lexicon: Optional[AnnotationLexicon] = None,
    warnings: Optional[List[str]] = None,
) -> str:
    """
    Resolve Leiden parentheses and square brackets.

    Gap markers are kept; "[.]" becomes one "+" per dot; restored content keeps
    its characters; commentary (anything matching the lexicon) is dropped.
    Unbalanced openers are left literally and reported through `warnings`.
    """
    shield = _Shield()
    text = shield.hide(text, _GAP)
    text = _resolve_pairs(text, "(", lexicon, warnings)
    text = _ILLEGIBLE.sub(lambda m: "+" * m.group(0).count("."), text)
    text = _resolve_pairs(text, "[", lexicon, warnings)
    return shield.reveal(text)


def remove_curly(text: str) -> str:
    while True:
        stripped = _CURLY.sub("", text)
        if stripped == text:
            return text
        text = stripped


def remove_numerals(text: str) -> str:
    """Remove Arabic numerals; a numeral followed by "." or ")" at token start is a list item."""
    return _NUMERAL.sub(lambda m: m.group(0) if m.group(0)[-1] in ".)" else "", text)


def replace_disputed_chars(text: str) -> str:
    return text.translate(_DISPUTED_TABLE)


def join_hyphenated_lines(text: str) -> str:
    """Rejoin words split across lines with a trailing "-" and drop line-split bars."""
    text = _CONTINUATION.sub("", text)
    return text.translate(_LINE_BAR_TABLE)


def collapse_vowel_redundancy(text: str) -> str:
    # kaabaarinos -> kabarinos
    return _REDUNDANT_VOWEL.sub(r"\1\2", text)


def tidy_whitespace(text: str) -> str:
    return _WHITESPACE.sub(" ", text).strip()


class LeidenNormalizer(BaseStage):
    """Stage that strips the epigraphic apparatus from inscription texts"""

    def __init__(self, lexicon: Optional[AnnotationLexicon] = None):
        super().__init__(name="LeidenNormalizer")
        self.lexicon = lexicon or AnnotationLexicon()

        # Application order; rule 1 runs before shielding, rule 8 is the shield
        self.steps: List[Tuple[str, Callable[[str, List[str]], str]]] = [
            ("citations", lambda t, w: remove_citations(t)),
            ("annotations", lambda t, w: remove_annotations(t, self.lexicon)),
            ("parentheses", lambda t, w: _resolve_pairs(t, "(", self.lexicon, w)),
            ("brackets", self._resolve_square_brackets),
            ("curly", lambda t, w: remove_curly(t)),
            ("numerals", lambda t, w: remove_numerals(t)),
            ("disputed", lambda t, w: replace_disputed_chars(t)),
            ("line_join", lambda t, w: join_hyphenated_lines(t)),
            ("vowels", lambda t, w: collapse_vowel_redundancy(t)),
            ("tidy", self._tidy),
        ]

    def process(self, record: RawRecord) -> Dict[str, Any]:
        """
        Normalize the inscription text of one record

        Output:
            - clean_text: str
            - issues: list of RecordIssue
        """
        warnings: List[str] = []
        clean_text = self.normalize_text(record.text, warnings)
        issues = [self.issue(record, IssueKind.NORMALIZATION, w) for w in warnings]
        return {"clean_text": clean_text, "issues": issues}

    def normalize_text(self, raw: str, warnings: Optional[List[str]] = None) -> str:
        """Apply the ordered rule pipeline until the text stops changing."""
        if not raw:
            return ""

        text = raw
        for attempt in range(MAX_PASSES):
            result = self._run(text, warnings if attempt == 0 else None)
            if result == text:
                break
            text = result
        return text

    def trace(self, raw: str) -> List[Tuple[str, str]]:
        """Return (step, text) after every step of a single pass."""
        steps: List[Tuple[str, str]] = []
        self._run(raw, [], steps)
        return steps

    def _run(
        self,
        text: str,
        warnings: Optional[List[str]],
        trace: Optional[List[Tuple[str, str]]] = None,
    ) -> str:
        sink = warnings if warnings is not None else []

        text = rewrite_gap_counts(text)
        if trace is not None:
            trace.append(("gap_counts", text))

        shield = _Shield()
        text = shield.hide(text, _GAP, canonical=GAP_MARKER)
        text = shield.hide(text, _METROLOGY)
        text = shield.hide_matches(text, _LISTING, _list_item)

        for name, step in self.steps:
            text = step(text, sink)
            if trace is not None:
                trace.append((name, shield.reveal(text)))

        return shield.reveal(text)

    def _resolve_square_brackets(self, text: str, warnings: List[str]) -> str:
        text = _ILLEGIBLE.sub(lambda m: "+" * m.group(0).count("."), text)
        return _resolve_pairs(text, "[", self.lexicon, warnings)

    def _tidy(self, text: str, warnings: List[str]) -> str:
        stray = sorted(set(_STRAY.findall(text)))
        if stray:
            warnings.append(f"stray {' '.join(stray)} removed")
            text = _STRAY.sub("", text)
        return tidy_whitespace(text)
