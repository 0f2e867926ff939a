"""Linguistic feature suite over claim/evidence pairs.

Vietnamese words are often multi-syllable, so texts are segmented with a
greedy longest-match over a word lexicon before lexical statistics.
The segmenter and tagger sit behind plain callables/classes so an
external tool can be swapped in through a subprocess adapter.

LCS is reported as a mean length with a selectable unit (character by
default); the unit is recorded in every report row.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .datasetstore import ClaimRecord
from .errors import ToolkitError, ValidationError
from .textnorm import collapse_ws, nfc, tokens


class POS(Enum):
    NOUN = "Noun"
    VERB = "Verb"
    ADJECTIVE = "Adjective"
    PREPOSITION = "Preposition"
    ADJUNCT = "Adjunct"
    OTHER = "Other"

    @classmethod
    def parse(cls, value: str) -> "POS":
        try:
            return cls(value.strip().capitalize())
        except ValueError:
            raise ValidationError(f"unknown POS tag {value!r}")


POS_ORDER = (POS.NOUN, POS.VERB, POS.ADJECTIVE, POS.PREPOSITION, POS.ADJUNCT, POS.OTHER)

UNITS = ("character", "syllable", "word")


class EmptyClaim(ValidationError):
    pass


class NoNewWords(ToolkitError):
    pass


class EmptySlice(ValidationError):
    pass


class WordLexicon:
    """Multi-syllable word entries with optional POS tags."""

    def __init__(self, entries: dict[str, POS | None]):
        self._entries = {collapse_ws(k.lower()): v for k, v in entries.items()}
        self.max_syllables = max((len(k.split()) for k in self._entries), default=1)

    def __contains__(self, word: str) -> bool:
        return collapse_ws(word.lower()) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def pos(self, word: str) -> POS:
        return self._entries.get(collapse_ws(word.lower())) or POS.OTHER

    @classmethod
    def load(cls, path: str | Path) -> "WordLexicon":
        entries: dict[str, POS | None] = {}
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "\t" in line:
                word, tag = line.split("\t", 1)
                entries[word.strip()] = POS.parse(tag)
            else:
                entries[line] = None
        return cls(entries)

    @classmethod
    def default(cls) -> "WordLexicon":
        path = resources.files("vifactgen.data") / "word_lexicon.txt"
        return cls.load(str(path))


@dataclass(frozen=True)
class SegmentedText:
    syllables: tuple[str, ...]
    words: tuple[str, ...]
    pos: tuple[POS, ...] | None = None

    def __post_init__(self) -> None:
        rebuilt = tuple(s for w in self.words for s in w.split())
        if rebuilt != self.syllables:
            raise ValidationError("word syllables do not reproduce the syllable sequence")
        if self.pos is not None and len(self.pos) != len(self.words):
            raise ValidationError("POS tags must align one-to-one with words")


def segment(text: str, lexicon: WordLexicon, tag: bool = True) -> SegmentedText:
    """Greedy longest-match over whitespace syllables; unmatched syllables
    stay single-syllable words; POS from lexicon with Other fallback."""
    syllables = tuple(tokens(text))
    words: list[str] = []
    i = 0
    n = len(syllables)
    while i < n:
        matched = None
        top = min(lexicon.max_syllables, n - i)
        for length in range(top, 1, -1):
            candidate = " ".join(syllables[i : i + length])
            if candidate in lexicon:
                matched = length
                break
        if matched is None:
            matched = 1
        words.append(" ".join(syllables[i : i + matched]))
        i += matched
    pos = tuple(lexicon.pos(w) for w in words) if tag else None
    return SegmentedText(syllables=syllables, words=tuple(words), pos=pos)


def _unique_lower(words: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    for word in words:
        lowered = word.lower()
        if lowered not in seen:
            seen.add(lowered)
            out.append(lowered)
    return out


def new_word_rate(claim: SegmentedText, evidence: SegmentedText) -> float:
    """Fraction of unique claim words absent from the evidence word set."""
    claim_words = _unique_lower(claim.words)
    if not claim_words:
        raise EmptyClaim("claim has no words")
    evidence_words = {w.lower() for w in evidence.words}
    new = [w for w in claim_words if w not in evidence_words]
    return len(new) / len(claim_words)


def new_pos_distribution(claim: SegmentedText, evidence: SegmentedText) -> dict[POS, float]:
    """POS distribution over the claim's new words; sums to 1."""
    if claim.pos is None:
        raise ValidationError("claim segmentation carries no POS tags")
    evidence_words = {w.lower() for w in evidence.words}
    first_pos: dict[str, POS] = {}
    for word, pos in zip(claim.words, claim.pos):
        first_pos.setdefault(word.lower(), pos)
    new_words = [w for w in _unique_lower(claim.words) if w not in evidence_words]
    if not new_words:
        raise NoNewWords("claim introduces no new words")
    counts = {pos: 0 for pos in POS_ORDER}
    for word in new_words:
        counts[first_pos[word]] += 1
    total = len(new_words)
    return {pos: counts[pos] / total for pos in POS_ORDER}


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    """Set intersection over union of unique tokens; 0 when both empty."""
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 0.0
    return len(sa & sb) / len(sa | sb)


def lcs_length(a: Sequence, b: Sequence) -> int:
    """Classic DP longest-common-subsequence length, O(|a|*|b|) time and
    O(min(|a|,|b|)) memory."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            if x == y:
                curr[j] = prev[j - 1] + 1
            else:
                curr[j] = max(prev[j], curr[j - 1])
        prev = curr
    return prev[-1]


@dataclass(frozen=True)
class PairMetrics:
    new_word_rate: float
    new_pos_distribution: dict[POS, float]
    jaccard: float
    lcs_len: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.new_word_rate <= 1.0:
            raise ValidationError("new_word_rate outside [0, 1]")
        if not 0.0 <= self.jaccard <= 1.0:
            raise ValidationError("jaccard outside [0, 1]")
        if self.lcs_len < 0:
            raise ValidationError("lcs_len negative")
        if self.new_pos_distribution:
            total = sum(self.new_pos_distribution.values())
            if abs(total - 1.0) > 1e-9:
                raise ValidationError("non-empty new-POS distribution must sum to 1")
        elif self.new_word_rate != 0.0:
            raise ValidationError("empty distribution requires new_word_rate == 0")


def _lcs_tokens(text: str, unit: str, lexicon: WordLexicon) -> Sequence:
    normalized = collapse_ws(nfc(text))
    if unit == "character":
        return list(normalized)
    if unit == "syllable":
        return [t.lower() for t in tokens(normalized)]
    if unit == "word":
        return [w.lower() for w in segment(normalized, lexicon, tag=False).words]
    raise ValidationError(f"unknown LCS unit {unit!r}; expected one of {UNITS}")


def pair_metrics(
    claim_text: str,
    evidence_sentences: Sequence[str],
    lexicon: WordLexicon,
    unit: str = "character",
) -> PairMetrics:
    """All four metrics for one claim/evidence pair. Evidence tokens are
    the concatenation of all evidence sentences."""
    evidence_text = " ".join(evidence_sentences)
    claim_seg = segment(claim_text, lexicon)
    evidence_seg = segment(evidence_text, lexicon, tag=False)
    rate = new_word_rate(claim_seg, evidence_seg)
    try:
        distribution = new_pos_distribution(claim_seg, evidence_seg)
    except NoNewWords:
        distribution = {}
    overlap = jaccard(
        (w.lower() for w in claim_seg.words), (w.lower() for w in evidence_seg.words)
    )
    lcs = lcs_length(_lcs_tokens(claim_text, unit, lexicon), _lcs_tokens(evidence_text, unit, lexicon))
    return PairMetrics(
        new_word_rate=rate, new_pos_distribution=distribution, jaccard=overlap, lcs_len=lcs
    )


@dataclass(frozen=True)
class ReportRow:
    model: str
    stage: str
    label: str
    n_pairs: int
    new_word_rate: float
    new_pos_distribution: dict[POS, float]
    jaccard: float
    lcs: float


@dataclass
class LinguisticReport:
    rows: list[ReportRow]
    unit: str

    CSV_COLUMNS = (
        "model", "stage", "label", "new_word_rate",
        "noun", "verb", "adjective", "preposition", "adjunct", "other",
        "jaccard", "lcs", "unit",
    )

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.CSV_COLUMNS)
        for row in self.rows:
            dist = row.new_pos_distribution
            writer.writerow(
                [
                    row.model,
                    row.stage,
                    row.label,
                    f"{100 * row.new_word_rate:.2f}",
                    *[f"{100 * dist.get(pos, 0.0):.2f}" for pos in POS_ORDER],
                    f"{100 * row.jaccard:.2f}",
                    f"{row.lcs:.2f}",
                    self.unit,
                ]
            )
        return buffer.getvalue()

    def format_table(self) -> str:
        header = (
            f"Linguistic features (rates in %, LCS = mean length, unit: {self.unit})"
        )
        lines = [header, "-" * len(header)]
        lines.append(
            f"{'model':<14}{'stage':<14}{'label':<10}{'new_word%':>10}"
            f"{'jaccard%':>10}{'lcs':>10}{'pairs':>8}"
        )
        for row in self.rows:
            lines.append(
                f"{row.model:<14}{row.stage:<14}{row.label:<10}"
                f"{100 * row.new_word_rate:>10.2f}{100 * row.jaccard:>10.2f}"
                f"{row.lcs:>10.2f}{row.n_pairs:>8}"
            )
        return "\n".join(lines)


def dataset_report(
    records: Sequence[ClaimRecord],
    lexicon: WordLexicon | None = None,
    unit: str = "character",
) -> LinguisticReport:
    """Mean pair metrics per (model, stage, label) slice.

    POS distributions average over the pairs that introduced at least one
    new word, so each reported distribution still sums to 1.
    """
    if not records:
        raise EmptySlice("no records to report on")
    if unit not in UNITS:
        raise ValidationError(f"unknown unit {unit!r}; expected one of {UNITS}")
    lexicon = lexicon or WordLexicon.default()

    grouped: dict[tuple[str, str, str], list[PairMetrics]] = {}
    for record in records:
        key = (record.generator_model, record.stage.value, record.label.value)
        metrics = pair_metrics(record.claim, record.evidence_sentences, lexicon, unit)
        grouped.setdefault(key, []).append(metrics)

    rows: list[ReportRow] = []
    for key in sorted(grouped):
        metrics_list = grouped[key]
        n = len(metrics_list)
        mean_rate = sum(m.new_word_rate for m in metrics_list) / n
        mean_jaccard = sum(m.jaccard for m in metrics_list) / n
        mean_lcs = sum(m.lcs_len for m in metrics_list) / n
        with_new = [m for m in metrics_list if m.new_pos_distribution]
        if with_new:
            distribution = {
                pos: sum(m.new_pos_distribution.get(pos, 0.0) for m in with_new) / len(with_new)
                for pos in POS_ORDER
            }
        else:
            distribution = {}
        rows.append(
            ReportRow(
                model=key[0],
                stage=key[1],
                label=key[2],
                n_pairs=n,
                new_word_rate=mean_rate,
                new_pos_distribution=distribution,
                jaccard=mean_jaccard,
                lcs=mean_lcs,
            )
        )
    return LinguisticReport(rows=rows, unit=unit)
