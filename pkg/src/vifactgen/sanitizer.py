"""Abnormal-case filters: raw generations become clean claims or typed
rejections.

Rule order (first failing rule wins): empty output, meta-response,
claim extraction, verbatim-copy check, language-mix thresholds. The
language detector is a script/diacritic/lexicon heuristic behind a small
interface so a cld3-equivalent can be plugged in; thresholds reject only
on strict excess.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .corpus import EvidenceItem
from .datasetstore import ClaimRecord
from .errors import ToolkitError, ValidationError
from .genclient import GenerationRecord
from .promptkit import LABELS, Label
from .textnorm import collapse_ws, has_vietnamese_mark, is_han_char, is_latin_token, nfc, tokens


class Fix(Enum):
    STRIPPED_CLAIM_TOKEN = "StrippedClaimToken"
    STRIPPED_EXPLANATION = "StrippedExplanation"
    TRIMMED_WHITESPACE = "TrimmedWhitespace"


class RejectReason(Enum):
    META_RESPONSE = "MetaResponse"
    EXTRACTION_COPY = "ExtractionCopy"
    ENGLISH_MIX_OVER_THRESHOLD = "EnglishMixOverThreshold"
    CHINESE_MIX_OVER_THRESHOLD = "ChineseMixOverThreshold"
    EMPTY = "Empty"
    FORMAT_VIOLATION = "FormatViolation"


class EmptyClaimError(ToolkitError):
    pass


class FormatViolationError(ToolkitError):
    pass


class UnknownEvidenceId(ValidationError):
    pass


@dataclass(frozen=True)
class SanitizedClaim:
    claim: str
    fixes_applied: tuple[Fix, ...] = ()

    def __post_init__(self) -> None:
        if not self.claim.strip():
            raise ValidationError("sanitized claim must be non-empty")
        if "[CLAIM]" in self.claim:
            raise ValidationError("sanitized claim still contains a [CLAIM] token")


@dataclass(frozen=True)
class Rejection:
    reason: RejectReason
    detail: str
    measured: float | None = None

    def __post_init__(self) -> None:
        language_reasons = (
            RejectReason.ENGLISH_MIX_OVER_THRESHOLD,
            RejectReason.CHINESE_MIX_OVER_THRESHOLD,
        )
        if self.reason in language_reasons and self.measured is None:
            raise ValidationError(f"{self.reason.value} rejection requires a measured ratio")


@dataclass(frozen=True)
class LanguageMix:
    english_fraction: float
    chinese_fraction: float

    def __post_init__(self) -> None:
        for name, value in (("english", self.english_fraction), ("chinese", self.chinese_fraction)):
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name}_fraction {value} outside [0, 1]")


@dataclass(frozen=True)
class Thresholds:
    english: float = 0.30
    chinese: float = 0.05


class VietnameseSyllableLexicon:
    """Lowercased syllable set; membership marks a Latin token as Vietnamese."""

    def __init__(self, syllables: Iterable[str]):
        self._syllables = {s.strip().lower() for s in syllables if s.strip()}

    def __contains__(self, token: str) -> bool:
        return token.lower() in self._syllables

    def __len__(self) -> int:
        return len(self._syllables)

    @classmethod
    def load(cls, path: str | Path) -> "VietnameseSyllableLexicon":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(line for line in lines if not line.lstrip().startswith("#"))

    @classmethod
    def default(cls) -> "VietnameseSyllableLexicon":
        path = resources.files("vifactgen.data") / "viet_syllables.txt"
        return cls.load(str(path))


# --- claim extraction ---------------------------------------------------

_CLAIM_MARKER = re.compile(r"^\s*\[?\s*claim\s*\]?\s*[::\-–]\s*", re.IGNORECASE)
_TERMINAL_RE = re.compile(r"[.!?…]")
_QUOTES = "\"'“”‘’«»"

DEFAULT_EXPLANATION_CUES = ("giải thích", "explanation", "note:")
_BULLET_CUE = re.compile(r"\n\s*-\s")


def _strip_outer_quotes(text: str) -> str:
    pairs = {('"', '"'), ("'", "'"), ("“", "”"), ("‘", "’"), ("«", "»")}
    while len(text) >= 2 and (text[0], text[-1]) in pairs:
        text = text[1:-1].strip()
    return text


def extract_claim(
    raw: str,
    explanation_cues: Sequence[str] = DEFAULT_EXPLANATION_CUES,
) -> SanitizedClaim:
    """Strip claim markers, cut trailing explanations, trim quotes.

    Raises EmptyClaimError when nothing survives and FormatViolationError
    when a [CLAIM] token remains embedded mid-claim.
    """
    fixes: list[Fix] = []
    trimmed = False

    work = nfc(raw)
    stripped = work.strip()
    if stripped != work:
        trimmed = True
    work = stripped
    unquoted = _strip_outer_quotes(work)
    if unquoted != work:
        trimmed = True
    work = unquoted

    marked = _CLAIM_MARKER.sub("", work, count=1)
    if marked != work:
        fixes.append(Fix.STRIPPED_CLAIM_TOKEN)
    work = marked

    cut = _cut_explanation(work, explanation_cues)
    if cut != work:
        fixes.append(Fix.STRIPPED_EXPLANATION)
    work = cut

    final = _strip_outer_quotes(work.strip(" \t\r\n"))
    if final != work:
        trimmed = True
    work = final
    if trimmed:
        fixes.append(Fix.TRIMMED_WHITESPACE)

    if not work:
        raise EmptyClaimError("nothing left after stripping")
    if "[CLAIM]" in work:
        raise FormatViolationError("claim still contains a [CLAIM] token")
    return SanitizedClaim(claim=work, fixes_applied=tuple(fixes))


def _cut_explanation(text: str, cues: Sequence[str]) -> str:
    first_terminal = _TERMINAL_RE.search(text)
    if first_terminal is None:
        return text
    tail_start = first_terminal.end()
    lowered = text.lower()
    cut_at = None
    for cue in cues:
        idx = lowered.find(cue.lower(), tail_start)
        if idx >= 0 and (cut_at is None or idx < cut_at):
            cut_at = idx
    bullet = _BULLET_CUE.search(text, tail_start)
    if bullet is not None and (cut_at is None or bullet.start() < cut_at):
        cut_at = bullet.start()
    if cut_at is None:
        return text
    return text[:cut_at].rstrip()


# --- meta-response detection ---------------------------------------------

DEFAULT_META_SUBSTRINGS = ("hope", "i cannot", "as an ai")

# Function/instruction words allowed in a bare restatement of the prompt.
_INSTRUCTION_WORDS = frozenset(
    {
        "the", "a", "an", "you", "i", "me", "my", "your", "we", "us", "to",
        "of", "on", "in", "for", "with", "and", "or", "is", "are", "be",
        "this", "that", "these", "those", "please", "based", "provided",
        "given", "here", "it", "from", "can", "will", "must", "need",
        "needs", "create", "make", "write", "generate", "give", "label",
        "sentence", "sentences",
    }
)


def detect_meta_response(text: str, patterns: Sequence[str] = DEFAULT_META_SUBSTRINGS) -> bool:
    """True when the model answered the prompt instead of obeying it."""
    lowered = text.lower()
    if any(p.lower() in lowered for p in patterns):
        return True
    toks = [t.lower() for t in tokens(text)]
    if not toks:
        return False
    if "claim" in toks and "evidence" in toks:
        content = [t for t in toks if t not in ("claim", "evidence") and t not in _INSTRUCTION_WORDS]
        if not content:
            return True
    return False


# --- language mix ---------------------------------------------------------

# Anything with this shape can replace the built-in heuristic (e.g. a
# cld3-backed adapter); the pipeline only thresholds the two fractions.
LanguageDetector = Callable[[str], LanguageMix]


def language_mix(text: str, lexicon: VietnameseSyllableLexicon) -> LanguageMix:
    """Han chars over non-space chars; diacritic-free, lexicon-miss Latin
    tokens over all tokens."""
    text = nfc(text)
    non_space = [c for c in text if not c.isspace()]
    han = sum(1 for c in non_space if is_han_char(c))
    chinese = han / len(non_space) if non_space else 0.0

    toks = tokens(text)
    english_hits = sum(
        1
        for t in toks
        if is_latin_token(t) and not has_vietnamese_mark(t) and t not in lexicon
    )
    english = english_hits / len(toks) if toks else 0.0
    return LanguageMix(english_fraction=english, chinese_fraction=chinese)


# --- extraction-copy check -------------------------------------------------

_PUNCT_TO_SPACE = re.compile(r"[^\w\s]", re.UNICODE)


def _normalize_for_copy(text: str) -> str:
    return collapse_ws(_PUNCT_TO_SPACE.sub(" ", nfc(text).lower()))


def is_extraction_copy(claim: str, evidence: EvidenceItem) -> bool:
    """True iff the normalized claim sits verbatim inside one evidence
    sentence (word-boundary aware) or equals one."""
    c = _normalize_for_copy(claim)
    if not c:
        return False
    for sentence in evidence.sentences:
        s = _normalize_for_copy(sentence)
        if c == s or f" {c} " in f" {s} ":
            return True
    return False


# --- pipeline ---------------------------------------------------------------

def sanitize(
    record: GenerationRecord,
    evidence: EvidenceItem,
    thresholds: Thresholds = Thresholds(),
    lexicon: VietnameseSyllableLexicon | None = None,
    explanation_cues: Sequence[str] = DEFAULT_EXPLANATION_CUES,
    meta_patterns: Sequence[str] = DEFAULT_META_SUBSTRINGS,
    detector: LanguageDetector | None = None,
) -> SanitizedClaim | Rejection:
    """Apply the abnormal-case rules in order; first failing rule wins."""
    if detector is None:
        lexicon = lexicon if lexicon is not None else _default_lexicon()
        detector = lambda text: language_mix(text, lexicon)
    raw = record.raw_text
    if not raw.strip():
        detail = record.error or "empty raw generation"
        return Rejection(RejectReason.EMPTY, detail=detail)
    if detect_meta_response(raw, meta_patterns):
        return Rejection(RejectReason.META_RESPONSE, detail=_snippet(raw))
    try:
        cleaned = extract_claim(raw, explanation_cues)
    except EmptyClaimError:
        return Rejection(RejectReason.EMPTY, detail="nothing left after stripping")
    except FormatViolationError as exc:
        return Rejection(RejectReason.FORMAT_VIOLATION, detail=str(exc))
    if is_extraction_copy(cleaned.claim, evidence):
        return Rejection(RejectReason.EXTRACTION_COPY, detail=_snippet(cleaned.claim))
    mix = detector(cleaned.claim)
    if mix.english_fraction > thresholds.english:
        return Rejection(
            RejectReason.ENGLISH_MIX_OVER_THRESHOLD,
            detail=_snippet(cleaned.claim),
            measured=mix.english_fraction,
        )
    if mix.chinese_fraction > thresholds.chinese:
        return Rejection(
            RejectReason.CHINESE_MIX_OVER_THRESHOLD,
            detail=_snippet(cleaned.claim),
            measured=mix.chinese_fraction,
        )
    return cleaned


_LEXICON_CACHE: VietnameseSyllableLexicon | None = None


def _default_lexicon() -> VietnameseSyllableLexicon:
    global _LEXICON_CACHE
    if _LEXICON_CACHE is None:
        _LEXICON_CACHE = VietnameseSyllableLexicon.default()
    return _LEXICON_CACHE


def _snippet(text: str, limit: int = 120) -> str:
    text = collapse_ws(text)
    return text if len(text) <= limit else text[: limit - 1] + "…"


@dataclass(frozen=True)
class GoodDataStats:
    """Table-1-style accounting: per-label good counts over attempts."""

    per_label: dict[Label, int]
    attempted: int

    @property
    def good_total(self) -> int:
        return sum(self.per_label.values())

    @property
    def proportion_pct(self) -> float:
        if self.attempted == 0:
            return 0.0
        return round(100.0 * self.good_total / self.attempted, 2)

    @classmethod
    def from_counts(cls, per_label: dict[Label, int], attempted: int) -> "GoodDataStats":
        return cls(per_label=dict(per_label), attempted=attempted)

    def to_json(self) -> dict:
        return {
            "per_label": {label.value: self.per_label.get(label, 0) for label in LABELS},
            "attempted": self.attempted,
            "good_total": self.good_total,
            "proportion_pct": self.proportion_pct,
        }


@dataclass
class FilterResult:
    good: list[ClaimRecord]
    rejected: list[tuple[GenerationRecord, Rejection]]
    stats: GoodDataStats


def _claim_record_id(record: GenerationRecord, claim: str) -> str:
    key = "|".join(
        (
            record.evidence_id,
            record.label.value if record.label else "",
            record.stage.value if record.stage else "",
            record.provider_model,
            claim,
        )
    )
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:16]


def filter_batch(
    records: Sequence[GenerationRecord],
    evidence_index: dict[str, EvidenceItem] | Sequence[EvidenceItem],
    thresholds: Thresholds = Thresholds(),
    lexicon: VietnameseSyllableLexicon | None = None,
    detector: LanguageDetector | None = None,
) -> FilterResult:
    """Sanitize a batch; stats count per-label good records over attempts."""
    if not isinstance(evidence_index, dict):
        evidence_index = {item.id: item for item in evidence_index}
    good: list[ClaimRecord] = []
    rejected: list[tuple[GenerationRecord, Rejection]] = []
    per_label: dict[Label, int] = {label: 0 for label in LABELS}
    for record in records:
        evidence = evidence_index.get(record.evidence_id)
        if evidence is None:
            raise UnknownEvidenceId(f"record references unknown evidence {record.evidence_id!r}")
        outcome = sanitize(record, evidence, thresholds, lexicon, detector=detector)
        if isinstance(outcome, Rejection):
            rejected.append((record, outcome))
            continue
        per_label[record.label] = per_label.get(record.label, 0) + 1
        good.append(
            ClaimRecord(
                id=_claim_record_id(record, outcome.claim),
                evidence_id=record.evidence_id,
                evidence_sentences=tuple(evidence.sentences),
                claim=outcome.claim,
                label=record.label,
                stage=record.stage,
                generator_model=record.provider_model,
                sanitize_audit=tuple(f.value for f in outcome.fixes_applied),
            )
        )
    stats = GoodDataStats.from_counts(per_label, attempted=len(records))
    return FilterResult(good=good, rejected=rejected, stats=stats)


def write_quarantine(
    rejected: Sequence[tuple[GenerationRecord, Rejection]],
    path: str | Path,
) -> int:
    """Persist rejected records with reason and measured ratio for audit."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for record, rejection in rejected:
            obj = {
                "evidence_id": record.evidence_id,
                "label": record.label.value if record.label else None,
                "stage": record.stage.value if record.stage else None,
                "model": record.provider_model,
                "reason": rejection.reason.value,
                "detail": rejection.detail,
                "measured": rejection.measured,
                "raw_text": record.raw_text,
            }
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")
    return len(rejected)
