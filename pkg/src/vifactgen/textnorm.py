"""Text normalization helpers shared by corpus ingestion and filtering."""

from __future__ import annotations

import re
import unicodedata

_PUNCT_EDGE = re.compile(r"^[\W_]+|[\W_]+$", re.UNICODE)
_WS = re.compile(r"\s+")

# Precomposed Vietnamese letters that never occur in plain English text.
VIETNAMESE_MARKED = set(
    "àáảãạăằắẳẵặâầấẩẫậđèéẻẽẹêềếểễệìíỉĩịòóỏõọôồốổỗộơờớởỡợ"
    "ùúủũụưừứửữựỳýỷỹỵ"
)
VIETNAMESE_MARKED |= {c.upper() for c in VIETNAMESE_MARKED}


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def collapse_ws(text: str) -> str:
    return _WS.sub(" ", text).strip()


def strip_token_punct(token: str) -> str:
    """Drop punctuation hugging a whitespace token ("đô." -> "đô")."""
    return _PUNCT_EDGE.sub("", token)


def tokens(text: str) -> list[str]:
    """Whitespace tokens with edge punctuation stripped, empties dropped."""
    out = []
    for raw in nfc(text).split():
        tok = strip_token_punct(raw)
        if tok:
            out.append(tok)
    return out


def has_vietnamese_mark(token: str) -> bool:
    return any(c in VIETNAMESE_MARKED for c in token)


def is_han_char(c: str) -> bool:
    """CJK unified ideographs (base block, extension A, compat block)."""
    cp = ord(c)
    return (
        0x4E00 <= cp <= 0x9FFF
        or 0x3400 <= cp <= 0x4DBF
        or 0xF900 <= cp <= 0xFAFF
    )


def is_latin_token(token: str) -> bool:
    """True when every letter in the token is from the Latin script."""
    saw_letter = False
    for c in token:
        if c.isalpha():
            saw_letter = True
            name = unicodedata.name(c, "")
            if not name.startswith("LATIN"):
                return False
    return saw_letter
