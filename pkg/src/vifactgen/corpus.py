"""Topical corpus ingestion and multi-sentence evidence sampling.

Evidence groups are 2-3 contiguous sentences drawn from a single
paragraph, so a claim generated from them has to fuse neighbouring
statements instead of rewriting one sentence.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .errors import ToolkitError, ValidationError
from .textnorm import collapse_ws, nfc


class MalformedRecord(ValidationError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"malformed corpus record at line {line}: {reason}")
        self.line = line
        self.reason = reason


class EmptyCorpus(ValidationError):
    pass


class ExhaustedCorpus(ToolkitError):
    """Fewer eligible evidence spans exist than were requested."""

    def __init__(self, requested: int, achievable: int):
        super().__init__(
            f"corpus exhausted: requested {requested} evidence items, "
            f"only {achievable} distinct spans available"
        )
        self.requested = requested
        self.achievable = achievable


# Tokens that end with a period without ending a sentence.
ABBREVIATION_GUARD = frozenset(
    {
        "tp.", "mr.", "mrs.", "ms.", "dr.", "ths.", "ts.", "gs.", "pgs.",
        "st.", "no.", "tr.", "v.v.", "kts.", "bs.", "ca.",
    }
)

_TERMINAL = ".!?…"

SentenceSplitter = Callable[[str], "list[str]"]


def split_sentences(text: str) -> list[str]:
    """Rule-based sentence splitter.

    Splits after a run of terminal punctuation (. ! ? …) that is followed
    by whitespace and an uppercase letter or digit, unless the token
    carrying the punctuation is a guarded abbreviation.
    """
    text = collapse_ws(nfc(text))
    if not text:
        return []
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(text)
    while i < n:
        if text[i] in _TERMINAL:
            j = i + 1
            while j < n and text[j] in _TERMINAL:
                j += 1
            k = j
            while k < n and text[k].isspace():
                k += 1
            if k > j and k < n and (text[k].isupper() or text[k].isdigit()):
                last_token = text[start:j].rsplit(" ", 1)[-1]
                if last_token.lower() not in ABBREVIATION_GUARD:
                    sentences.append(text[start:j].strip())
                    start = k
                    i = k
                    continue
            i = j
        else:
            i += 1
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


@dataclass(frozen=True)
class Paragraph:
    topic_id: str
    index: int
    sentences: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.sentences:
            raise ValidationError(f"paragraph {self.topic_id}#{self.index} has no sentences")
        if any(not s.strip() for s in self.sentences):
            raise ValidationError(f"paragraph {self.topic_id}#{self.index} has a blank sentence")


@dataclass(frozen=True)
class Topic:
    id: str
    title: str
    paragraphs: tuple[Paragraph, ...]

    def __post_init__(self) -> None:
        if not self.paragraphs:
            raise ValidationError(f"topic {self.id!r} has no paragraphs")


@dataclass(frozen=True)
class EvidenceItem:
    """2-3 contiguous sentences extracted from one paragraph."""

    id: str
    topic_id: str
    paragraph_index: int
    sentence_span: tuple[int, int]  # (start, length)
    sentences: tuple[str, ...]

    def __post_init__(self) -> None:
        start, length = self.sentence_span
        if not 2 <= length <= 3:
            raise ValidationError(f"evidence {self.id}: span length {length} outside 2..3")
        if start < 0 or length != len(self.sentences):
            raise ValidationError(f"evidence {self.id}: span/sentences mismatch")

    @property
    def text(self) -> str:
        return " ".join(self.sentences)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "topic_id": self.topic_id,
            "paragraph_index": self.paragraph_index,
            "span": list(self.sentence_span),
            "sentences": list(self.sentences),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvidenceItem":
        return cls(
            id=obj["id"],
            topic_id=obj["topic_id"],
            paragraph_index=obj["paragraph_index"],
            sentence_span=tuple(obj["span"]),
            sentences=tuple(obj["sentences"]),
        )


class Corpus:
    """Read-only after construction; safe for concurrent readers."""

    def __init__(self, topics: list[Topic]):
        if not topics:
            raise EmptyCorpus("corpus contains no topics")
        self.topics = list(topics)
        self._by_id = {t.id: t for t in self.topics}
        if len(self._by_id) != len(self.topics):
            raise ValidationError("duplicate topic ids in corpus")

    def __len__(self) -> int:
        return len(self.topics)

    def topic(self, topic_id: str) -> Topic:
        return self._by_id[topic_id]

    @property
    def paragraph_count(self) -> int:
        return sum(len(t.paragraphs) for t in self.topics)

    @property
    def sentence_count(self) -> int:
        return sum(len(p.sentences) for t in self.topics for p in t.paragraphs)


def slugify(title: str) -> str:
    slug = re.sub(r"[^0-9a-zA-Z]+", "-", nfc(title).lower()).strip("-")
    digest = hashlib.sha1(nfc(title).encode("utf-8")).hexdigest()[:8]
    return f"{slug or 'topic'}-{digest}"


def _clean_sentences(raw, line: int, splitter: SentenceSplitter) -> tuple[str, ...]:
    if isinstance(raw, str):
        parts = splitter(raw)
    elif isinstance(raw, list) and all(isinstance(s, str) for s in raw):
        parts = [collapse_ws(nfc(s)) for s in raw]
    else:
        raise MalformedRecord(line, "paragraph must be a string or list of strings")
    parts = [p for p in parts if p]
    if not parts:
        raise MalformedRecord(line, "paragraph has no sentences after cleanup")
    return tuple(parts)


def ingest_corpus(
    path: str | Path,
    format: str = "jsonl",
    splitter: SentenceSplitter = split_sentences,
) -> Corpus:
    """Load a corpus from JSONL ({"title","paragraphs":[...]}) or a
    directory of plain-text topic files with blank-line paragraph breaks."""
    path = Path(path)
    if format == "jsonl":
        topics = _ingest_jsonl(path, splitter)
    elif format == "plain-dir":
        topics = _ingest_plain_dir(path, splitter)
    else:
        raise ValidationError(f"unknown corpus format {format!r}")
    return Corpus(topics)


def _ingest_jsonl(path: Path, splitter: SentenceSplitter) -> list[Topic]:
    if not path.is_file():
        raise ValidationError(f"corpus path not readable: {path}")
    topics: list[Topic] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(line_no, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise MalformedRecord(line_no, "record is not an object")
            title = obj.get("title")
            if not isinstance(title, str) or not title.strip():
                raise MalformedRecord(line_no, "missing or empty 'title'")
            paragraphs_raw = obj.get("paragraphs")
            if not isinstance(paragraphs_raw, list) or not paragraphs_raw:
                raise MalformedRecord(line_no, "missing or empty 'paragraphs'")
            topic_id = obj.get("id") or slugify(title)
            paragraphs = tuple(
                Paragraph(topic_id, idx, _clean_sentences(raw, line_no, splitter))
                for idx, raw in enumerate(paragraphs_raw)
            )
            topics.append(Topic(id=topic_id, title=nfc(title.strip()), paragraphs=paragraphs))
    return topics


def _ingest_plain_dir(path: Path, splitter: SentenceSplitter) -> list[Topic]:
    if not path.is_dir():
        raise ValidationError(f"corpus directory not readable: {path}")
    topics: list[Topic] = []
    for file in sorted(p for p in path.iterdir() if p.is_file()):
        text = nfc(file.read_text(encoding="utf-8"))
        blocks = [b for b in re.split(r"\n\s*\n", text) if b.strip()]
        if not blocks:
            continue
        title = file.stem
        topic_id = slugify(title)
        paragraphs = tuple(
            Paragraph(topic_id, idx, _clean_sentences(block, 0, splitter))
            for idx, block in enumerate(blocks)
        )
        topics.append(Topic(id=topic_id, title=title, paragraphs=paragraphs))
    return topics


def write_corpus(corpus: Corpus, path: str | Path) -> int:
    """Serialize to the canonical JSONL form (paragraphs as sentence lists)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for topic in corpus.topics:
            obj = {
                "id": topic.id,
                "title": topic.title,
                "paragraphs": [list(p.sentences) for p in topic.paragraphs],
            }
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")
    return len(corpus.topics)


def sample_evidence(
    corpus: Corpus,
    n_items: int,
    seed: int,
    min_sentences: int = 2,
    max_sentences: int = 3,
) -> list[EvidenceItem]:
    """Seed-deterministic sampling of contiguous sentence spans.

    Spans may overlap but never repeat exactly; topics are cycled
    round-robin so breadth comes before depth.
    """
    if n_items < 1:
        raise ValidationError("n_items must be >= 1")
    if not (2 <= min_sentences <= max_sentences <= 3):
        raise ValidationError("sentence span bounds must satisfy 2 <= min <= max <= 3")

    rng = random.Random(seed)
    pools: list[list[tuple[int, int, int]]] = []  # per topic: (paragraph, start, length)
    topic_order = list(corpus.topics)
    rng.shuffle(topic_order)
    for topic in topic_order:
        spans = [
            (p.index, start, length)
            for p in topic.paragraphs
            if len(p.sentences) >= min_sentences
            for length in range(min_sentences, max_sentences + 1)
            for start in range(0, len(p.sentences) - length + 1)
        ]
        rng.shuffle(spans)
        pools.append(spans)

    achievable = sum(len(p) for p in pools)
    if achievable < n_items:
        raise ExhaustedCorpus(n_items, achievable)

    items: list[EvidenceItem] = []
    while len(items) < n_items:
        for topic, pool in zip(topic_order, pools):
            if not pool:
                continue
            pi, start, length = pool.pop()
            paragraph = topic.paragraphs[pi]
            items.append(
                EvidenceItem(
                    id=f"{topic.id}:p{pi}:s{start}+{length}",
                    topic_id=topic.id,
                    paragraph_index=pi,
                    sentence_span=(start, length),
                    sentences=tuple(paragraph.sentences[start : start + length]),
                )
            )
            if len(items) == n_items:
                break
    return items


def write_evidence(items: list[EvidenceItem], path: str | Path) -> int:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for item in items:
            fh.write(json.dumps(item.to_json(), ensure_ascii=False, sort_keys=True) + "\n")
    return len(items)


def read_evidence(path: str | Path) -> list[EvidenceItem]:
    items = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                items.append(EvidenceItem.from_json(json.loads(line)))
    return items
