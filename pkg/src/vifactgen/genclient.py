"""LLM provider dispatch: per-label sampling configs, retry/rate-limit
machinery, a deterministic mock provider, and the resumable job runner.

The mock provider is a pure function of (seed, prompt text, config), so a
whole pipeline run is byte-reproducible. It can be told to emit abnormal
outputs (meta-responses, language mixing, verbatim evidence copies) at a
configured probability to exercise the downstream filters.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import requests

from .corpus import EvidenceItem, split_sentences
from .errors import ToolkitError, ValidationError
from .promptkit import Label, PromptPack, Stage, render_prompt


class AuthMissing(ValidationError):
    pass


class RetriesExhausted(ToolkitError):
    def __init__(self, last_status: object, attempts: int):
        super().__init__(f"retries exhausted after {attempts} attempts (last status: {last_status})")
        self.last_status = last_status
        self.attempts = attempts


class RequestTimeout(ToolkitError):
    def __init__(self, attempts: int):
        super().__init__(f"request timed out after {attempts} attempts")
        self.attempts = attempts


class MissingAuxiliaryClaim(ValidationError):
    def __init__(self, evidence_id: str, label: Label):
        super().__init__(
            f"calibration needs auxiliary claim(s) for evidence {evidence_id!r} "
            f"to generate label {label.value}"
        )
        self.evidence_id = evidence_id
        self.label = label


class CheckpointCorruption(ToolkitError):
    pass


@dataclass(frozen=True)
class GenerationConfig:
    temperature: float
    top_p: float
    top_k: int
    max_new_tokens: int = 256

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValidationError(f"temperature {self.temperature} outside [0, 2]")
        if not 0.0 < self.top_p <= 1.0:
            raise ValidationError(f"top_p {self.top_p} outside (0, 1]")
        if self.top_k < 1:
            raise ValidationError(f"top_k {self.top_k} must be positive")
        if self.max_new_tokens < 1:
            raise ValidationError(f"max_new_tokens {self.max_new_tokens} must be positive")

    def to_json(self) -> dict:
        return {
            "temperature": self.temperature,
            "top_p": self.top_p,
            "top_k": self.top_k,
            "max_new_tokens": self.max_new_tokens,
        }


_LABEL_TEMPERATURE = {Label.SUPPORTED: 0.5, Label.REFUTED: 0.4, Label.NEI: 0.9}


def default_config(label: Label) -> GenerationConfig:
    """Per-label sampling parameters: low temperature keeps Supported and
    Refuted claims inside the evidence, a hot one lets NEI wander."""
    return GenerationConfig(temperature=_LABEL_TEMPERATURE[label], top_p=0.7, top_k=10)


@dataclass(frozen=True)
class ProviderSpec:
    kind: str  # "openai_compatible_http" | "mock"
    model_name: str
    endpoint: str | None = None
    credential_env: str | None = None
    max_requests_per_minute: int = 60
    max_retries: int = 3
    timeout: float = 30.0
    backoff_base: float = 0.5
    supports_top_k: bool = False
    # mock-only knobs
    seed: int | None = None
    abnormal_rate: float = 0.0
    abnormal_kinds: tuple[str, ...] = ("meta", "english", "chinese", "copy")

    def __post_init__(self) -> None:
        if self.kind == "openai_compatible_http":
            if not self.endpoint or not self.credential_env:
                raise ValidationError("http provider requires endpoint and credential_env")
        elif self.kind == "mock":
            if self.seed is None:
                raise ValidationError("mock provider requires a seed")
        else:
            raise ValidationError(f"unknown provider kind {self.kind!r}")


@dataclass
class GenerationRecord:
    evidence_id: str
    label: Label | None
    stage: Stage | None
    provider_model: str
    raw_text: str
    attempts: int
    latency: float
    audit: tuple[str, ...] = ()
    error: str | None = None

    def __post_init__(self) -> None:
        if self.attempts < 1:
            raise ValidationError("attempts must be >= 1")
        if self.raw_text == "" and self.error is None:
            raise ValidationError("empty raw_text requires a recorded transport failure")

    def to_json(self) -> dict:
        return {
            "evidence_id": self.evidence_id,
            "label": self.label.value if self.label else None,
            "stage": self.stage.value if self.stage else None,
            "model": self.provider_model,
            "raw_text": self.raw_text,
            "attempts": self.attempts,
            "latency": self.latency,
            "audit": list(self.audit),
            "error": self.error,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GenerationRecord":
        return cls(
            evidence_id=obj["evidence_id"],
            label=Label.parse(obj["label"]) if obj.get("label") else None,
            stage=Stage.parse(obj["stage"]) if obj.get("stage") else None,
            provider_model=obj["model"],
            raw_text=obj["raw_text"],
            attempts=obj["attempts"],
            latency=obj["latency"],
            audit=tuple(obj.get("audit", [])),
            error=obj.get("error"),
        )


class RateLimiter:
    """Sliding-window limiter: at most `max_per_minute` acquisitions in
    any 60 s window. Thread-safe; clock and sleep are injectable."""

    def __init__(
        self,
        max_per_minute: int,
        time_fn: Callable[[], float] = time.monotonic,
        sleep_fn: Callable[[float], None] = time.sleep,
        window: float = 60.0,
    ):
        if max_per_minute < 1:
            raise ValidationError("max_per_minute must be >= 1")
        self.max_per_minute = max_per_minute
        self.window = window
        self._time = time_fn
        self._sleep = sleep_fn
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> float:
        while True:
            with self._lock:
                now = self._time()
                while self._stamps and self._stamps[0] <= now - self.window:
                    self._stamps.popleft()
                if len(self._stamps) < self.max_per_minute:
                    self._stamps.append(now)
                    return now
                wait = self._stamps[0] + self.window - now
            self._sleep(max(wait, 1e-3))


# --- mock provider -----------------------------------------------------

_MOCK_META = (
    "Hope you create the CLAIM based on the provided EVIDENCE!",
    "Hope this works!",
    "As an AI, I cannot create the CLAIM for this EVIDENCE.",
)

_MOCK_FILLERS = (
    "được", "nhắc", "đến", "trong", "đoạn", "văn", "về", "của", "những",
    "với", "từ", "rằng", "các", "điều", "này",
)

_MOCK_NOVEL = ("tương lai", "quốc tế", "hội nghị", "kế hoạch", "nổi bật", "bất ngờ")

_MOCK_ENGLISH_TAIL = "is the most famous capital city in the world according to many travel review sites today"

_MOCK_CHINESE_TAIL = "là thủ đô 北京 của 中国 ngày nay"


def _extract_evidence_block(prompt: str) -> str:
    """Pull the live evidence text out of a rendered prompt."""
    marker = "[EVIDENCE]: "
    idx = prompt.rfind(marker)
    if idx < 0:
        return ""
    block = prompt[idx + len(marker):]
    return block.split("\n", 1)[0].strip()


def _detect_target_label(prompt: str) -> Label | None:
    for label, phrase in (
        (Label.SUPPORTED, "with the SUPPORTED label"),
        (Label.REFUTED, "with the REFUTED label"),
        (Label.NEI, "with the NOT ENOUGH INFORMATION label"),
    ):
        if phrase in prompt:
            return label
    return None


def mock_completion(spec: ProviderSpec, prompt: str, config: GenerationConfig) -> str:
    """Deterministic pseudo-claim; pure in (spec.seed, prompt, config)."""
    key = json.dumps(
        {"seed": spec.seed, "prompt": prompt, "config": config.to_json()},
        sort_keys=True,
        ensure_ascii=False,
    )
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    rng = random.Random(int.from_bytes(digest[:8], "big"))

    evidence = _extract_evidence_block(prompt)
    if rng.random() < spec.abnormal_rate and spec.abnormal_kinds:
        kind = rng.choice(spec.abnormal_kinds)
        if kind == "meta":
            return rng.choice(_MOCK_META)
        if kind == "english":
            lead = " ".join(evidence.split()[:2]) or "Hà Nội"
            return f"{lead} {_MOCK_ENGLISH_TAIL}."
        if kind == "chinese":
            lead = " ".join(evidence.split()[:3]) or "Thành phố này"
            return f"{lead} {_MOCK_CHINESE_TAIL}."
        if kind == "copy":
            sentences = split_sentences(evidence)
            if sentences:
                return rng.choice(sentences)

    words = evidence.split() or list(_MOCK_FILLERS)
    n_core = min(len(words), max(4, len(words) // 3))
    core = rng.sample(words, n_core)
    core += rng.sample(_MOCK_FILLERS, 3)
    target = _detect_target_label(prompt)
    if target is Label.REFUTED:
        core.insert(rng.randrange(len(core)), "không")
    elif target is Label.NEI:
        core += rng.sample(_MOCK_NOVEL, 2)
    claim = " ".join(core).strip().rstrip(".,;:") + "."

    roll = rng.random()
    if roll < 0.35:
        claim = f"[CLAIM]: {claim}"
    elif roll < 0.45:
        claim = f'"{claim}"'
    elif roll < 0.55:
        claim = f"{claim} Giải thích: thông tin được suy ra từ đoạn văn."
    return claim


# --- HTTP transport ----------------------------------------------------

Transport = Callable[[str, dict, dict, float], "tuple[int, object]"]


def _requests_transport(url: str, payload: dict, headers: dict, timeout: float) -> tuple[int, object]:
    resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    try:
        body = resp.json()
    except ValueError:
        body = resp.text
    return resp.status_code, body


def _completion_text(body: object) -> str:
    if isinstance(body, dict):
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            pass
    raise ToolkitError(f"provider response missing choices[0].message.content: {body!r}")


def generate(
    provider: ProviderSpec,
    prompt: str,
    config: GenerationConfig,
    *,
    evidence_id: str = "",
    label: Label | None = None,
    stage: Stage | None = None,
    limiter: RateLimiter | None = None,
    transport: Transport | None = None,
    time_fn: Callable[[], float] = time.monotonic,
    sleep_fn: Callable[[float], None] = time.sleep,
) -> GenerationRecord:
    """One raw completion with retry/backoff on transport, 429 and 5xx."""
    if provider.kind == "mock":
        if limiter is not None:
            limiter.acquire()
        text = mock_completion(provider, prompt, config)
        return GenerationRecord(
            evidence_id=evidence_id,
            label=label,
            stage=stage,
            provider_model=provider.model_name,
            raw_text=text,
            attempts=1,
            latency=0.0,
        )

    assert provider.credential_env and provider.endpoint
    token = os.environ.get(provider.credential_env, "")
    if not token:
        raise AuthMissing(f"credential env var {provider.credential_env!r} is not set")

    headers = {"Authorization": f"Bearer {token}", "Content-Type": "application/json"}
    payload = {
        "model": provider.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": config.temperature,
        "top_p": config.top_p,
        "max_tokens": config.max_new_tokens,
    }
    audit: list[str] = []
    if provider.supports_top_k:
        payload["top_k"] = config.top_k
    else:
        audit.append("top_k=unsupported")

    send = transport or _requests_transport
    max_attempts = provider.max_retries + 1
    last_status: object = None
    timed_out = False
    started = time_fn()
    for attempt in range(1, max_attempts + 1):
        if limiter is not None:
            limiter.acquire()
        try:
            status, body = send(provider.endpoint, payload, headers, provider.timeout)
        except requests.Timeout:
            last_status, timed_out = "timeout", True
        except requests.RequestException as exc:
            last_status, timed_out = f"transport:{type(exc).__name__}", False
        else:
            timed_out = False
            last_status = status
            if status == 200:
                return GenerationRecord(
                    evidence_id=evidence_id,
                    label=label,
                    stage=stage,
                    provider_model=provider.model_name,
                    raw_text=_completion_text(body),
                    attempts=attempt,
                    latency=time_fn() - started,
                    audit=tuple(audit),
                )
            if status not in (429,) and not 500 <= status < 600:
                raise ToolkitError(f"provider returned non-retryable status {status}: {body!r}")
        if attempt < max_attempts:
            sleep_fn(provider.backoff_base * (2 ** (attempt - 1)))
    if timed_out:
        raise RequestTimeout(max_attempts)
    raise RetriesExhausted(last_status, max_attempts)


# --- job runner --------------------------------------------------------

def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _load_checkpoint(path: Path) -> dict[tuple[str, str], GenerationRecord]:
    done: dict[tuple[str, str], GenerationRecord] = {}
    lines = path.read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            record = GenerationRecord.from_json(obj["record"])
            expected = obj["raw_sha256"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            if i == len(lines) - 1:
                break  # torn final line from an interrupted writer
            raise CheckpointCorruption(f"{path}:{i + 1}: unreadable checkpoint line") from exc
        if _sha256(record.raw_text) != expected:
            raise CheckpointCorruption(f"{path}:{i + 1}: raw_text hash mismatch")
        done[(obj["evidence_id"], obj["label"])] = record
    return done


def _checkpoint_line(record: GenerationRecord) -> str:
    return json.dumps(
        {
            "evidence_id": record.evidence_id,
            "label": record.label.value if record.label else None,
            "raw_sha256": _sha256(record.raw_text),
            "record": record.to_json(),
        },
        ensure_ascii=False,
        sort_keys=True,
    )


def build_aux_index(records: Iterable) -> dict[tuple[str, Label], str]:
    """Index auxiliary claims by (evidence_id, label). Accepts ClaimRecord
    objects or plain dicts with evidence_id/label/claim keys."""
    index: dict[tuple[str, Label], str] = {}
    for rec in records:
        if isinstance(rec, dict):
            eid, label, claim = rec["evidence_id"], Label.parse(rec["label"]), rec["claim"]
        else:
            eid, label, claim = rec.evidence_id, rec.label, rec.claim
        index[(eid, label)] = claim
    return index


_AUX_NEEDS = {
    Label.REFUTED: (("supported_claim", Label.SUPPORTED),),
    Label.NEI: (("supported_claim", Label.SUPPORTED), ("refuted_claim", Label.REFUTED)),
}


def run_generation_job(
    items: Sequence[EvidenceItem],
    stage: Stage,
    labels: Iterable[Label],
    provider: ProviderSpec,
    pack: PromptPack,
    aux_source: Iterable | None = None,
    parallelism: int = 1,
    seed: int = 0,
    checkpoint_path: str | Path | None = None,
    configs: dict[Label, GenerationConfig] | None = None,
    limiter: RateLimiter | None = None,
) -> list[GenerationRecord]:
    """Generate |items| x |labels| records, resumable and order-stable.

    Per-item failures become error records instead of aborting the job;
    output is sorted by (evidence_id, label) regardless of scheduling.
    `seed` is recorded for reproducibility manifests; mock determinism
    itself lives in the provider's own seed.
    """
    label_list = sorted(set(labels), key=lambda l: l.order)
    if not label_list:
        raise ValidationError("labels must be non-empty")
    if parallelism < 1:
        raise ValidationError("parallelism must be >= 1")
    configs = configs or {}
    if limiter is None and provider.kind == "openai_compatible_http":
        limiter = RateLimiter(provider.max_requests_per_minute)

    aux_index = build_aux_index(aux_source) if aux_source is not None else {}
    aux_by_task: dict[tuple[str, Label], dict[str, str]] = {}
    if stage is Stage.CALIBRATION:
        for item in items:
            for label in label_list:
                slots: dict[str, str] = {}
                for slot, aux_label in _AUX_NEEDS.get(label, ()):
                    claim = aux_index.get((item.id, aux_label))
                    if claim is None:
                        raise MissingAuxiliaryClaim(item.id, label)
                    slots[slot] = claim
                aux_by_task[(item.id, label)] = slots

    completed: dict[tuple[str, str], GenerationRecord] = {}
    checkpoint = Path(checkpoint_path) if checkpoint_path else None
    if checkpoint and checkpoint.exists():
        completed = _load_checkpoint(checkpoint)

    pending: list[tuple[EvidenceItem, Label]] = [
        (item, label)
        for item in items
        for label in label_list
        if (item.id, label.value) not in completed
    ]

    def _one(item: EvidenceItem, label: Label) -> GenerationRecord:
        template = pack[(stage, label)]
        prompt = render_prompt(template, item, aux_by_task.get((item.id, label), {}))
        config = configs.get(label) or default_config(label)
        try:
            return generate(
                provider,
                prompt,
                config,
                evidence_id=item.id,
                label=label,
                stage=stage,
                limiter=limiter,
            )
        except ToolkitError as exc:
            return GenerationRecord(
                evidence_id=item.id,
                label=label,
                stage=stage,
                provider_model=provider.model_name,
                raw_text="",
                attempts=getattr(exc, "attempts", 1),
                latency=0.0,
                error=f"{type(exc).__name__}: {exc}",
            )

    new_records: list[GenerationRecord] = []
    ckpt_fh = checkpoint.open("a", encoding="utf-8") if checkpoint else None
    try:
        if parallelism == 1:
            for item, label in pending:
                record = _one(item, label)
                new_records.append(record)
                if ckpt_fh:
                    ckpt_fh.write(_checkpoint_line(record) + "\n")
                    ckpt_fh.flush()
        else:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                futures = {pool.submit(_one, item, label): (item, label) for item, label in pending}
                for future in as_completed(futures):
                    record = future.result()
                    new_records.append(record)
                    if ckpt_fh:
                        ckpt_fh.write(_checkpoint_line(record) + "\n")
                        ckpt_fh.flush()
    finally:
        if ckpt_fh:
            ckpt_fh.close()

    all_records = list(completed.values()) + new_records
    all_records.sort(key=lambda r: (r.evidence_id, r.label.order if r.label else -1))
    return all_records


def write_records(records: Sequence[GenerationRecord], path: str | Path) -> int:
    with Path(path).open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), ensure_ascii=False, sort_keys=True) + "\n")
    return len(records)


def read_records(path: str | Path) -> list[GenerationRecord]:
    out = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(GenerationRecord.from_json(json.loads(line)))
    return out
