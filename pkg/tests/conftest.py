from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from vifactgen.corpus import EvidenceItem
from vifactgen.datasetstore import ClaimRecord
from vifactgen.promptkit import Label, Stage

SUBJECTS = (
    "Thành phố", "Ngôi làng", "Dòng sông", "Khu chợ", "Trường học",
    "Bảo tàng", "Nhà máy", "Công viên", "Bến cảng", "Quảng trường",
)
NAMES = (
    "Hà Nội", "Đà Lạt", "Cần Thơ", "Huế", "Nha Trang",
    "Đà Nẵng", "Hải Phòng", "Vinh", "Sa Pa", "Hội An",
)
VERBS = ("phát triển", "xây dựng", "bảo tồn", "thu hút", "mở rộng", "ghi nhận")
NOUNS = (
    "văn hóa", "lịch sử", "kinh tế", "du lịch", "giáo dục",
    "kiến trúc", "truyền thống", "khí hậu",
)
ADJS = (
    "nổi tiếng", "quan trọng", "đặc biệt", "lâu đời",
    "hiện đại", "phong phú", "đa dạng", "rộng lớn",
)


def make_sentence(rng: random.Random) -> str:
    pattern = rng.randrange(3)
    if pattern == 0:
        return (f"{rng.choice(SUBJECTS)} {rng.choice(NAMES)} {rng.choice(VERBS)} "
                f"{rng.choice(NOUNS)} {rng.choice(ADJS)} từ năm {rng.randrange(1800, 2020)}.")
    if pattern == 1:
        return (f"Vào năm {rng.randrange(1800, 2020)}, {rng.choice(NOUNS)} của "
                f"{rng.choice(NAMES)} đã {rng.choice(VERBS)} rất {rng.choice(ADJS)}.")
    return (f"Người dân {rng.choice(NAMES)} luôn {rng.choice(VERBS)} "
            f"{rng.choice(NOUNS)} {rng.choice(ADJS)} của {rng.choice(SUBJECTS).lower()} này.")


def build_corpus_objects(
    n_topics: int = 4,
    paragraphs_per_topic: int = 2,
    sentences_per_paragraph: int = 4,
    seed: int = 99,
) -> list[dict]:
    rng = random.Random(seed)
    topics = []
    for t in range(n_topics):
        paragraphs = [
            " ".join(make_sentence(rng) for _ in range(sentences_per_paragraph))
            for _ in range(paragraphs_per_topic)
        ]
        topics.append({"title": f"Chủ đề {t} {rng.choice(NAMES)}", "paragraphs": paragraphs})
    return topics


def write_corpus_jsonl(path: Path, topics: list[dict]) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        for topic in topics:
            fh.write(json.dumps(topic, ensure_ascii=False) + "\n")
    return path


@pytest.fixture
def corpus_jsonl(tmp_path: Path) -> Path:
    return write_corpus_jsonl(tmp_path / "corpus.jsonl", build_corpus_objects())


def make_evidence(evidence_id: str = "e1", sentences: tuple[str, ...] | None = None) -> EvidenceItem:
    sentences = sentences or (
        "Hà Nội là thủ đô của Việt Nam.",
        "Thành phố có lịch sử lâu đời.",
    )
    return EvidenceItem(
        id=evidence_id,
        topic_id="t1",
        paragraph_index=0,
        sentence_span=(0, len(sentences)),
        sentences=sentences,
    )


def make_claim_record(
    record_id: str = "r1",
    evidence_id: str = "e1",
    claim: str = "Thủ đô có lịch sử và văn hóa lâu đời.",
    label: Label = Label.SUPPORTED,
    stage: Stage = Stage.UNCALIBRATED,
    model: str = "mock-llm",
    evidence_sentences: tuple[str, ...] | None = None,
) -> ClaimRecord:
    return ClaimRecord(
        id=record_id,
        evidence_id=evidence_id,
        evidence_sentences=evidence_sentences
        or ("Hà Nội là thủ đô của Việt Nam.", "Thành phố có lịch sử lâu đời."),
        claim=claim,
        label=label,
        stage=stage,
        generator_model=model,
    )
