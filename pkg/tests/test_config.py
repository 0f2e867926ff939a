from __future__ import annotations

import json
from pathlib import Path

import pytest

from vifactgen.cli import _resolve_provider, load_config, main
from vifactgen.errors import ValidationError
from vifactgen.sanitizer import LanguageMix, sanitize
from vifactgen.genclient import GenerationRecord
from vifactgen.promptkit import Label, Stage
from tests.conftest import build_corpus_objects, make_evidence, write_corpus_jsonl


def test_load_config_env_interpolation(tmp_path: Path, monkeypatch):
    monkeypatch.setenv("MY_TOKEN_VAR", "OPENAI_KEY")
    config = tmp_path / "config.yaml"
    config.write_text(
        "providers:\n"
        "  remote:\n"
        "    kind: openai_compatible_http\n"
        "    model_name: big-model\n"
        "    endpoint: https://example.test/v1/chat/completions\n"
        "    credential_env: ${MY_TOKEN_VAR}\n",
        encoding="utf-8",
    )
    loaded = load_config(config)
    assert loaded["providers"]["remote"]["credential_env"] == "OPENAI_KEY"


def test_load_config_unset_env_var_fails(tmp_path: Path, monkeypatch):
    monkeypatch.delenv("MISSING_VAR_XYZ", raising=False)
    config = tmp_path / "config.yaml"
    config.write_text("token: ${MISSING_VAR_XYZ}\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_config(config)


def test_load_config_validates_paths_exist(tmp_path: Path):
    config = tmp_path / "config.yaml"
    config.write_text("paths:\n  corpus: /nowhere/at/all.jsonl\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_config(config)
    exists = tmp_path / "corpus.jsonl"
    exists.write_text("", encoding="utf-8")
    config.write_text(f"paths:\n  corpus: {exists}\n", encoding="utf-8")
    assert load_config(config)["paths"]["corpus"] == str(exists)


def test_resolve_provider_from_config():
    config = {
        "providers": {
            "demo": {"kind": "mock", "model_name": "demo-llm", "seed": 9,
                     "abnormal_rate": 0.2},
        }
    }
    spec = _resolve_provider(config, "demo", seed=0, abnormal_rate=0.0, model=None)
    assert spec.kind == "mock"
    assert spec.model_name == "demo-llm"
    assert spec.seed == 9
    assert spec.abnormal_rate == 0.2


def test_resolve_provider_unknown_name():
    with pytest.raises(ValidationError):
        _resolve_provider({}, "ghost", seed=0, abnormal_rate=0.0, model=None)


def test_generate_with_config_defined_provider(tmp_path: Path):
    write_corpus_jsonl(tmp_path / "source.jsonl", build_corpus_objects(n_topics=3))
    config = tmp_path / "config.yaml"
    config.write_text(
        "providers:\n"
        "  demo:\n"
        "    kind: mock\n"
        "    model_name: demo-llm\n"
        "    seed: 4\n",
        encoding="utf-8",
    )
    assert main(["ingest", "--path", str(tmp_path / "source.jsonl"),
                 "--format", "jsonl", "--out", str(tmp_path / "corpus.jsonl")]) == 0
    assert main(["sample", "--corpus", str(tmp_path / "corpus.jsonl"), "--n", "2",
                 "--seed", "1", "--out", str(tmp_path / "ev.jsonl")]) == 0
    assert main(["--config", str(config), "generate",
                 "--evidence", str(tmp_path / "ev.jsonl"), "--labels", "SUPPORTED",
                 "--provider", "demo", "--out", str(tmp_path / "raw.jsonl")]) == 0
    lines = (tmp_path / "raw.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    assert all(json.loads(l)["model"] == "demo-llm" for l in lines)


def test_sanitize_accepts_pluggable_language_detector():
    record = GenerationRecord(
        evidence_id="e1", label=Label.SUPPORTED, stage=Stage.UNCALIBRATED,
        provider_model="m", raw_text="Một câu hoàn toàn ổn về di sản.",
        attempts=1, latency=0.0,
    )
    flagged = sanitize(
        record, make_evidence(),
        detector=lambda text: LanguageMix(english_fraction=0.9, chinese_fraction=0.0),
    )
    from vifactgen.sanitizer import Rejection, RejectReason
    assert isinstance(flagged, Rejection)
    assert flagged.reason is RejectReason.ENGLISH_MIX_OVER_THRESHOLD
    assert flagged.measured == 0.9
