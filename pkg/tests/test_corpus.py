from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vifactgen.corpus import (
    Corpus,
    EvidenceItem,
    ExhaustedCorpus,
    MalformedRecord,
    Paragraph,
    Topic,
    ingest_corpus,
    read_evidence,
    sample_evidence,
    split_sentences,
    write_corpus,
    write_evidence,
)
from vifactgen.errors import ValidationError


def make_paragraph(n_sentences: int, topic_id: str = "t1", index: int = 0) -> Paragraph:
    return Paragraph(
        topic_id, index, tuple(f"Câu số {i} của đoạn văn." for i in range(n_sentences))
    )


# --- sentence splitter ---------------------------------------------------

def test_splitter_three_sentences():
    # hand application of the rule: split after terminal punct + space + upper
    assert split_sentences("A b c. D e f! G h?") == ["A b c.", "D e f!", "G h?"]


def test_splitter_keeps_abbreviations_together():
    text = "Ông sống tại TP. Hồ Chí Minh. Dr. Nam làm việc ở đó."
    assert split_sentences(text) == ["Ông sống tại TP. Hồ Chí Minh.", "Dr. Nam làm việc ở đó."]


def test_splitter_requires_upper_or_digit_after_punct():
    assert split_sentences("Giá 3.5 triệu đồng. năm sau tăng") == ["Giá 3.5 triệu đồng. năm sau tăng"]
    assert split_sentences("Kết thúc năm 1900. 2 năm sau chiến tranh nổ ra.") == [
        "Kết thúc năm 1900.",
        "2 năm sau chiến tranh nổ ra.",
    ]


def test_splitter_ellipsis_and_runs():
    assert split_sentences("Chờ đã… Được rồi!") == ["Chờ đã…", "Được rồi!"]
    assert split_sentences("Thật sao?! Đúng vậy.") == ["Thật sao?!", "Đúng vậy."]


def test_splitter_empty_text():
    assert split_sentences("   ") == []


# --- ingestion -----------------------------------------------------------

def test_ingest_jsonl_counts(tmp_path: Path):
    path = tmp_path / "c.jsonl"
    rows = [
        {"title": "Chủ đề một", "paragraphs": ["Câu một. Câu hai.", "Câu ba. Câu bốn."]},
        {"title": "Chủ đề hai", "paragraphs": ["Câu năm. Câu sáu."]},
    ]
    path.write_text("\n".join(json.dumps(r, ensure_ascii=False) for r in rows), encoding="utf-8")
    corpus = ingest_corpus(path, format="jsonl")
    assert len(corpus) == 2
    assert corpus.paragraph_count == 3
    assert corpus.sentence_count == 6


def test_ingest_missing_title_reports_line(tmp_path: Path):
    path = tmp_path / "c.jsonl"
    path.write_text(
        '{"title": "Ok", "paragraphs": ["Câu một."]}\n{"paragraphs": ["Câu hai."]}\n',
        encoding="utf-8",
    )
    with pytest.raises(MalformedRecord) as err:
        ingest_corpus(path, format="jsonl")
    assert err.value.line == 2


def test_ingest_accepts_presplit_sentence_lists(tmp_path: Path):
    path = tmp_path / "c.jsonl"
    path.write_text(
        json.dumps({"title": "T", "paragraphs": [["Câu một.", "Câu hai."]]}, ensure_ascii=False),
        encoding="utf-8",
    )
    corpus = ingest_corpus(path, format="jsonl")
    assert corpus.topics[0].paragraphs[0].sentences == ("Câu một.", "Câu hai.")


def test_ingest_plain_dir(tmp_path: Path):
    d = tmp_path / "topics"
    d.mkdir()
    (d / "hanoi.txt").write_text("Câu một. Câu hai.\n\nCâu ba. Câu bốn.", encoding="utf-8")
    corpus = ingest_corpus(d, format="plain-dir")
    assert len(corpus) == 1
    assert corpus.paragraph_count == 2


def test_ingest_unreadable_path(tmp_path: Path):
    with pytest.raises(ValidationError):
        ingest_corpus(tmp_path / "missing.jsonl", format="jsonl")


def test_ingest_empty_corpus(tmp_path: Path):
    path = tmp_path / "c.jsonl"
    path.write_text("", encoding="utf-8")
    with pytest.raises(ValidationError):
        ingest_corpus(path, format="jsonl")


def test_ingest_nfc_normalizes(tmp_path: Path):
    decomposed = "Hà Nội là thủ đô."  # NFD-style combining marks
    path = tmp_path / "c.jsonl"
    path.write_text(
        json.dumps({"title": "T", "paragraphs": [decomposed + " Thêm câu nữa."]}, ensure_ascii=False),
        encoding="utf-8",
    )
    corpus = ingest_corpus(path, format="jsonl")
    first = corpus.topics[0].paragraphs[0].sentences[0]
    assert "Hà Nội" in first  # NFC form


def test_corpus_roundtrip(tmp_path: Path, corpus_jsonl: Path):
    corpus = ingest_corpus(corpus_jsonl)
    out = tmp_path / "canonical.jsonl"
    write_corpus(corpus, out)
    again = ingest_corpus(out)
    assert [t.id for t in again.topics] == [t.id for t in corpus.topics]
    assert again.sentence_count == corpus.sentence_count


# --- evidence sampling ----------------------------------------------------

def test_sample_pairs_subset_of_enumeration():
    # oracle: a 5-sentence paragraph has exactly these 4 length-2 spans
    paragraph = make_paragraph(5)
    corpus = Corpus([Topic("t1", "T", (paragraph,))])
    expected_spans = {(0, 2), (1, 2), (2, 2), (3, 2)}
    items = sample_evidence(corpus, 3, seed=5, min_sentences=2, max_sentences=2)
    assert len(items) == 3
    spans = [(i.sentence_span[0], i.sentence_span[1]) for i in items]
    assert set(spans) <= expected_spans
    assert len(set(spans)) == 3  # no duplicates
    for item in items:
        start, length = item.sentence_span
        assert item.sentences == paragraph.sentences[start : start + length]


def test_sample_rejects_zero_items():
    corpus = Corpus([Topic("t1", "T", (make_paragraph(4),))])
    with pytest.raises(ValidationError):
        sample_evidence(corpus, 0, seed=1)


def test_sample_deterministic():
    corpus = Corpus([Topic("t1", "T", (make_paragraph(6), make_paragraph(5, index=1)))])
    a = sample_evidence(corpus, 8, seed=42)
    b = sample_evidence(corpus, 8, seed=42)
    assert a == b
    c = sample_evidence(corpus, 8, seed=43)
    assert a != c  # overwhelmingly likely with 17 candidate spans


def test_sample_exhaustion_reports_achievable():
    corpus = Corpus([Topic("t1", "T", (make_paragraph(3),))])
    # spans: len2 -> 2, len3 -> 1, total 3
    with pytest.raises(ExhaustedCorpus) as err:
        sample_evidence(corpus, 10, seed=0)
    assert err.value.achievable == 3


def test_sample_round_robin_spreads_topics():
    topics = [Topic(f"t{i}", f"T{i}", (make_paragraph(4, topic_id=f"t{i}"),)) for i in range(4)]
    corpus = Corpus(topics)
    items = sample_evidence(corpus, 4, seed=3)
    assert len({i.topic_id for i in items}) == 4  # breadth before repeats


def test_sample_skips_short_paragraphs():
    corpus = Corpus(
        [Topic("t1", "T", (make_paragraph(1), make_paragraph(4, index=1)))]
    )
    items = sample_evidence(corpus, 5, seed=0)
    assert all(i.paragraph_index == 1 for i in items)


@given(
    n_sentences=st.integers(min_value=2, max_value=8),
    n_items=st.integers(min_value=1, max_value=6),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
@settings(max_examples=60, deadline=None)
def test_sample_span_invariants(n_sentences, n_items, seed):
    paragraph = make_paragraph(n_sentences)
    corpus = Corpus([Topic("t1", "T", (paragraph,))])
    try:
        items = sample_evidence(corpus, n_items, seed=seed)
    except ExhaustedCorpus:
        return
    seen = set()
    for item in items:
        start, length = item.sentence_span
        assert 2 <= length <= 3
        assert item.sentences == paragraph.sentences[start : start + length]
        key = (item.paragraph_index, start, length)
        assert key not in seen
        seen.add(key)
    assert sample_evidence(corpus, n_items, seed=seed) == items


def test_evidence_item_rejects_bad_span():
    with pytest.raises(ValidationError):
        EvidenceItem("e", "t", 0, (0, 4), ("a.", "b.", "c.", "d."))
    with pytest.raises(ValidationError):
        EvidenceItem("e", "t", 0, (0, 2), ("a.",))


def test_evidence_jsonl_roundtrip(tmp_path: Path):
    paragraph = make_paragraph(5)
    corpus = Corpus([Topic("t1", "T", (paragraph,))])
    items = sample_evidence(corpus, 4, seed=1)
    path = tmp_path / "ev.jsonl"
    write_evidence(items, path)
    assert read_evidence(path) == items
