import re
import unicodedata

_WHITESPACE = re.compile(r"\s+")


def strip_diacritics(value: str) -> str:
    """Drop combining marks after NFKD decomposition ("Càlig" -> "Calig")."""
    decomposed = unicodedata.normalize("NFKD", value)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def collapse_whitespace(value: str) -> str:
    return _WHITESPACE.sub(" ", value).strip()


def fold(value: str, keep_diacritics: bool = False) -> str:
    """Case-fold, trim and collapse whitespace; optionally strip diacritics."""
    folded = collapse_whitespace(value).casefold()
    if keep_diacritics:
        return folded
    return strip_diacritics(folded)
