from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vifactgen.errors import ValidationError
from vifactgen.genclient import GenerationRecord
from vifactgen.promptkit import Label, Stage
from vifactgen.sanitizer import (
    EmptyClaimError,
    Fix,
    GoodDataStats,
    RejectReason,
    Rejection,
    SanitizedClaim,
    Thresholds,
    UnknownEvidenceId,
    VietnameseSyllableLexicon,
    detect_meta_response,
    extract_claim,
    filter_batch,
    is_extraction_copy,
    language_mix,
    sanitize,
    write_quarantine,
)
from tests.conftest import make_evidence


LEXICON = VietnameseSyllableLexicon.default()


def raw_record(text: str, label: Label = Label.SUPPORTED, evidence_id: str = "e1",
               error: str | None = None) -> GenerationRecord:
    return GenerationRecord(
        evidence_id=evidence_id,
        label=label,
        stage=Stage.UNCALIBRATED,
        provider_model="mock-llm",
        raw_text=text,
        attempts=1,
        latency=0.0,
        error=error,
    )


# --- extract_claim -----------------------------------------------------------

def test_extract_strips_claim_token():
    out = extract_claim("[CLAIM]: X là Y.")
    assert out.claim == "X là Y."
    assert out.fixes_applied == (Fix.STRIPPED_CLAIM_TOKEN,)


def test_extract_strips_plain_claim_marker():
    out = extract_claim("CLAIM: X là Y.")
    assert out.claim == "X là Y."
    assert Fix.STRIPPED_CLAIM_TOKEN in out.fixes_applied


def test_extract_cuts_explanation():
    out = extract_claim("X là Y. Explanation: because the evidence says so")
    assert out.claim == "X là Y."
    assert out.fixes_applied == (Fix.STRIPPED_EXPLANATION,)


def test_extract_cuts_vietnamese_explanation_cue():
    out = extract_claim("Hà Nội là thủ đô. Giải thích: vì bằng chứng nói vậy.")
    assert out.claim == "Hà Nội là thủ đô."
    assert Fix.STRIPPED_EXPLANATION in out.fixes_applied


def test_extract_cuts_bullet_after_claim():
    out = extract_claim("Hà Nội là thủ đô.\n- vì bằng chứng nói vậy")
    assert out.claim == "Hà Nội là thủ đô."


def test_extract_keeps_cue_inside_first_sentence():
    # the cue word appears before any terminal punctuation: not an explanation
    out = extract_claim("Lời giải thích nằm trong bảo tàng.")
    assert out.claim == "Lời giải thích nằm trong bảo tàng."
    assert out.fixes_applied == ()


def test_extract_trims_whitespace_and_quotes():
    out = extract_claim('  "Hà Nội là thủ đô."  ')
    assert out.claim == "Hà Nội là thủ đô."
    assert Fix.TRIMMED_WHITESPACE in out.fixes_applied


def test_extract_empty_raises():
    with pytest.raises(EmptyClaimError):
        extract_claim("")
    with pytest.raises(EmptyClaimError):
        extract_claim("[CLAIM]:   ")


def test_extract_idempotent_on_clean_claim():
    first = extract_claim("[CLAIM]: Hà Nội là thủ đô. Explanation: x")
    second = extract_claim(first.claim)
    assert second.claim == first.claim
    assert second.fixes_applied == ()


# --- meta detection -----------------------------------------------------------

@pytest.mark.parametrize(
    "text",
    [
        "Hope you create the CLAIM based on the provided EVIDENCE!",
        "Hope this works!",
        "As an AI, I cannot produce that.",
        "I cannot generate a claim for this.",
        "CLAIM based on the EVIDENCE provided",  # bare restatement
    ],
)
def test_meta_positive(text):
    assert detect_meta_response(text) is True


@pytest.mark.parametrize(
    "text",
    [
        "Hà Nội là thủ đô.",
        "Thành phố có lịch sử lâu đời và văn hóa phong phú.",
        "",
    ],
)
def test_meta_negative(text):
    assert detect_meta_response(text) is False


def test_meta_custom_patterns():
    assert detect_meta_response("xin lỗi, tôi không thể", patterns=("không thể",)) is True


# --- language mix ---------------------------------------------------------------

def test_language_mix_all_vietnamese():
    mix = language_mix("Hà Nội là thủ đô", LEXICON)
    assert mix.english_fraction == 0.0
    assert mix.chinese_fraction == 0.0


def test_language_mix_english_tokens_hand_count():
    # 7 tokens, 5 of them English by the stated rule
    mix = language_mix("Hà Nội is the capital city today", LEXICON)
    assert mix.english_fraction == pytest.approx(5 / 7)


def test_language_mix_han_chars_hand_count():
    # "Hà Nội 北京": 7 non-space characters, 2 of them Han
    mix = language_mix("Hà Nội 北京", LEXICON)
    assert mix.chinese_fraction == pytest.approx(2 / 7)


def test_language_mix_empty():
    mix = language_mix("", LEXICON)
    assert mix.english_fraction == 0.0 and mix.chinese_fraction == 0.0


def test_language_mix_lexicon_syllables_not_english():
    # diacritic-free Vietnamese syllables in the lexicon stay Vietnamese
    mix = language_mix("anh em trong nam", LEXICON)
    assert mix.english_fraction == 0.0


# --- extraction copy -------------------------------------------------------------

def test_copy_verbatim_sentence():
    evidence = make_evidence()
    assert is_extraction_copy("Hà Nội là thủ đô của Việt Nam.", evidence) is True


def test_copy_contiguous_prefix():
    evidence = make_evidence()
    assert is_extraction_copy("Hà Nội là thủ đô", evidence) is True


def test_copy_paraphrase_of_two_sentences_is_not_copy():
    evidence = make_evidence()
    assert is_extraction_copy("Thủ đô Việt Nam có lịch sử lâu đời.", evidence) is False


def test_copy_ignores_case_and_punctuation():
    evidence = make_evidence()
    assert is_extraction_copy('"hà nội LÀ thủ đô của việt nam"', evidence) is True


def test_copy_requires_word_boundaries():
    evidence = make_evidence("e2", ("Bản đồ đánh dấu vùng xa.", "Câu nữa ở đây."))
    assert is_extraction_copy("đánh dấu vùng", evidence) is True
    assert is_extraction_copy("ánh dấu vùng", evidence) is False


# --- sanitize pipeline ------------------------------------------------------------

def test_sanitize_accepts_clean_claim():
    record = raw_record("Thủ đô ngàn năm văn hiến có nhiều di sản quý.")
    out = sanitize(record, make_evidence(), lexicon=LEXICON)
    assert isinstance(out, SanitizedClaim)
    assert out.fixes_applied == ()


def test_sanitize_rejects_english_over_threshold():
    # 10 tokens, 5 English -> 0.50 > 0.30
    record = raw_record("Hà Nội là thủ đô and the city is beautiful")
    out = sanitize(record, make_evidence(), lexicon=LEXICON)
    assert isinstance(out, Rejection)
    assert out.reason is RejectReason.ENGLISH_MIX_OVER_THRESHOLD
    assert out.measured == pytest.approx(0.50)


def test_sanitize_boundary_chinese_exactly_at_threshold_accepted():
    # 20 non-space chars, 1 Han char -> exactly 0.05, strict > keeps it
    text = "Thủ đô nghìn năm văn 北 đẹp"
    assert sum(1 for c in text if not c.isspace()) == 20
    record = raw_record(text)
    out = sanitize(record, make_evidence(), lexicon=LEXICON)
    assert isinstance(out, SanitizedClaim)


def test_sanitize_chinese_over_threshold_rejected():
    text = "Thủ đô 北京 của nước 中国 này"
    record = raw_record(text)
    out = sanitize(record, make_evidence(), lexicon=LEXICON)
    assert isinstance(out, Rejection)
    assert out.reason is RejectReason.CHINESE_MIX_OVER_THRESHOLD
    assert out.measured is not None and out.measured > 0.05


def test_sanitize_order_meta_before_extraction():
    record = raw_record("Hope you create the CLAIM based on the provided EVIDENCE!")
    out = sanitize(record, make_evidence(), lexicon=LEXICON)
    assert isinstance(out, Rejection)
    assert out.reason is RejectReason.META_RESPONSE


def test_sanitize_empty_first():
    record = raw_record("", error="RetriesExhausted: last status 500")
    out = sanitize(record, make_evidence(), lexicon=LEXICON)
    assert isinstance(out, Rejection)
    assert out.reason is RejectReason.EMPTY
    assert "RetriesExhausted" in out.detail


def test_sanitize_extraction_copy_rejected():
    record = raw_record("[CLAIM]: Hà Nội là thủ đô của Việt Nam.")
    out = sanitize(record, make_evidence(), lexicon=LEXICON)
    assert isinstance(out, Rejection)
    assert out.reason is RejectReason.EXTRACTION_COPY


def test_sanitize_format_violation_for_embedded_token():
    record = raw_record("Một câu có [CLAIM] ở giữa và vài từ nữa.")
    out = sanitize(record, make_evidence(), lexicon=LEXICON)
    assert isinstance(out, Rejection)
    assert out.reason is RejectReason.FORMAT_VIOLATION


def test_sanitize_idempotent_on_accepted_claim():
    record = raw_record('[CLAIM]: "Thủ đô ngàn năm có nhiều di sản quý giá."')
    first = sanitize(record, make_evidence(), lexicon=LEXICON)
    assert isinstance(first, SanitizedClaim)
    again = sanitize(raw_record(first.claim), make_evidence(), lexicon=LEXICON)
    assert isinstance(again, SanitizedClaim)
    assert again.claim == first.claim
    assert again.fixes_applied == ()


def test_rejection_requires_measured_for_language_reasons():
    with pytest.raises(ValidationError):
        Rejection(RejectReason.ENGLISH_MIX_OVER_THRESHOLD, detail="x")


@given(
    english=st.floats(min_value=0.0, max_value=0.6),
    chinese=st.floats(min_value=0.0, max_value=0.2),
)
@settings(max_examples=60, deadline=None)
def test_sanitize_monotone_in_thresholds(english, chinese):
    records = [
        raw_record("Thủ đô ngàn năm văn hiến có nhiều di sản quý."),
        raw_record("Hà Nội là thủ đô and the city is very đẹp"),
        raw_record("Thủ đô 北京 của nước 中国 này"),
        raw_record("Hà Nội is the capital city of the country today"),
    ]
    evidence = make_evidence()
    loose = Thresholds(english=0.60, chinese=0.20)
    tight = Thresholds(english=english, chinese=chinese)
    good_loose = sum(
        1 for r in records if isinstance(sanitize(r, evidence, loose, LEXICON), SanitizedClaim)
    )
    good_tight = sum(
        1 for r in records if isinstance(sanitize(r, evidence, tight, LEXICON), SanitizedClaim)
    )
    assert good_tight <= good_loose


# --- batch accounting ----------------------------------------------------------

def test_stats_from_counts_reference_percentages():
    gemini = GoodDataStats.from_counts(
        {Label.SUPPORTED: 3635, Label.REFUTED: 3641, Label.NEI: 3632}, attempted=3 * 3643
    )
    assert gemini.proportion_pct == pytest.approx(99.81, abs=0.01)
    llama = GoodDataStats.from_counts(
        {Label.SUPPORTED: 1677, Label.REFUTED: 1944, Label.NEI: 1187}, attempted=3 * 3643
    )
    assert llama.proportion_pct == pytest.approx(43.99, abs=0.01)


def test_stats_all_rejected_zero():
    stats = GoodDataStats.from_counts({label: 0 for label in Label}, attempted=50)
    assert stats.proportion_pct == 0.0


def test_filter_batch_counts_and_quarantine(tmp_path: Path):
    evidence = make_evidence()
    records = [
        raw_record("Thủ đô ngàn năm văn hiến có nhiều di sản quý.", Label.SUPPORTED),
        raw_record("Hope this works!", Label.REFUTED),
        raw_record("Thủ đô chưa từng có lịch sử lâu đời như vậy.", Label.REFUTED),
        raw_record("Hà Nội là thủ đô của Việt Nam.", Label.NEI),  # verbatim copy
    ]
    result = filter_batch(records, [evidence])
    assert len(result.good) == 2
    assert len(result.rejected) == 2
    assert result.stats.attempted == 4
    assert result.stats.per_label[Label.SUPPORTED] == 1
    assert result.stats.per_label[Label.REFUTED] == 1
    assert result.stats.per_label[Label.NEI] == 0
    assert result.stats.proportion_pct == 50.0
    reasons = {rej.reason for _, rej in result.rejected}
    assert reasons == {RejectReason.META_RESPONSE, RejectReason.EXTRACTION_COPY}

    quarantine = tmp_path / "q.jsonl"
    write_quarantine(result.rejected, quarantine)
    lines = [json.loads(l) for l in quarantine.read_text(encoding="utf-8").splitlines()]
    assert len(lines) == 2
    assert {l["reason"] for l in lines} == {"MetaResponse", "ExtractionCopy"}


def test_filter_batch_unknown_evidence():
    records = [raw_record("Một câu.", evidence_id="missing")]
    with pytest.raises(UnknownEvidenceId):
        filter_batch(records, [make_evidence()])


def test_filter_batch_stats_permutation_invariant():
    evidence = make_evidence()
    records = [
        raw_record("Thủ đô ngàn năm văn hiến có nhiều di sản quý.", Label.SUPPORTED),
        raw_record("Hope this works!", Label.REFUTED),
        raw_record("Hà Nội là thủ đô của Việt Nam.", Label.NEI),
        raw_record("Thành phố chưa bao giờ đổi tên trong lịch sử.", Label.REFUTED),
    ]
    forward = filter_batch(records, [evidence])
    backward = filter_batch(list(reversed(records)), [evidence])
    assert forward.stats.to_json() == backward.stats.to_json()
    assert {r.id for r in forward.good} == {r.id for r in backward.good}


def test_filter_batch_claim_record_fields():
    evidence = make_evidence()
    records = [raw_record("[CLAIM]: Thủ đô ngàn năm có di sản quý.", Label.SUPPORTED)]
    result = filter_batch(records, [evidence])
    claim = result.good[0]
    assert claim.evidence_sentences == evidence.sentences
    assert claim.sanitize_audit == ("StrippedClaimToken",)
    assert claim.label is Label.SUPPORTED
    assert claim.stage is Stage.UNCALIBRATED
    # deterministic id
    again = filter_batch(records, [evidence]).good[0]
    assert again.id == claim.id
