"""Label-conditioned prompt templates for the three generation stages.

Templates are data (a JSON pack), not code, so the English translations
can be swapped for the Vietnamese originals without touching the
renderer. Rendering is a pure function of (template, evidence, aux).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .corpus import EvidenceItem
from .errors import ValidationError


class Label(Enum):
    SUPPORTED = "SUPPORTED"
    REFUTED = "REFUTED"
    NEI = "NEI"

    @classmethod
    def parse(cls, value: str) -> "Label":
        try:
            return cls(value.strip().upper())
        except ValueError:
            raise ValidationError(f"unknown label {value!r}; expected SUPPORTED/REFUTED/NEI")

    @property
    def order(self) -> int:
        return _LABEL_ORDER[self]


_LABEL_ORDER = {Label.SUPPORTED: 0, Label.REFUTED: 1, Label.NEI: 2}

LABELS = (Label.SUPPORTED, Label.REFUTED, Label.NEI)


class Stage(Enum):
    UNCALIBRATED = "uncalibrated"
    CALIBRATION = "calibration"
    ALIGNMENT = "alignment"

    @classmethod
    def parse(cls, value: str) -> "Stage":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValidationError(
                f"unknown stage {value!r}; expected uncalibrated/calibration/alignment"
            )


STAGES = (Stage.UNCALIBRATED, Stage.CALIBRATION, Stage.ALIGNMENT)


class PackError(ValidationError):
    pass


class MissingTemplate(PackError):
    def __init__(self, stage: Stage, label: Label):
        super().__init__(f"prompt pack is missing template ({stage.value}, {label.value})")
        self.stage = stage
        self.label = label


class MissingSlot(ValidationError):
    pass


class ExtraSlot(ValidationError):
    pass


class EmptyEvidence(ValidationError):
    pass


# Auxiliary slot -> claim header used when rendering.
SLOT_HEADERS = {
    "supported_claim": "[CLAIM SUPPORTED]",
    "refuted_claim": "[CLAIM REFUTED]",
}

# Which auxiliary claims each (stage, label) pair receives.
REQUIRED_SLOTS: dict[tuple[Stage, Label], tuple[str, ...]] = {
    (Stage.CALIBRATION, Label.REFUTED): ("supported_claim",),
    (Stage.CALIBRATION, Label.NEI): ("supported_claim", "refuted_claim"),
}

IMPORTANT_MARKER = "[IMPORTANT NOTE]"
_SEPARATOR = "-" * 31


@dataclass(frozen=True)
class FewShotExample:
    evidence: str
    claims: dict[Label, str]

    def __post_init__(self) -> None:
        if not self.evidence.strip():
            raise PackError("few-shot example with empty evidence")
        if not self.claims or any(not c.strip() for c in self.claims.values()):
            raise PackError("few-shot example with empty demonstrated claim")


@dataclass(frozen=True)
class PromptTemplate:
    stage: Stage
    label: Label
    role_preamble: str
    rules: tuple[str, ...]
    few_shot: tuple[FewShotExample, ...] = ()
    evidence_slot: str = "evidence"
    auxiliary_claim_slots: tuple[str, ...] = ()

    def validate(self) -> None:
        if self.stage is Stage.ALIGNMENT and self.few_shot:
            raise PackError(
                f"alignment template ({self.label.value}) must not carry few-shot examples"
            )
        expected = REQUIRED_SLOTS.get((self.stage, self.label), ())
        if self.auxiliary_claim_slots != expected:
            raise PackError(
                f"template ({self.stage.value}, {self.label.value}) declares slots "
                f"{list(self.auxiliary_claim_slots)}, expected {list(expected)}"
            )
        for slot in self.auxiliary_claim_slots:
            if slot not in SLOT_HEADERS:
                raise PackError(f"unknown auxiliary slot name {slot!r}")
        marked = [r for r in self.rules if IMPORTANT_MARKER in r]
        if len(marked) < 2:
            raise PackError(
                f"template ({self.stage.value}, {self.label.value}) must keep the "
                f"no-copy and claim-only rules marked with {IMPORTANT_MARKER}"
            )
        for example in self.few_shot:
            if self.label not in example.claims:
                raise PackError(
                    f"few-shot example in ({self.stage.value}, {self.label.value}) "
                    f"does not demonstrate the template's label"
                )


PromptPack = dict[tuple[Stage, Label], PromptTemplate]


def default_pack_path() -> Path:
    return Path(str(resources.files("vifactgen.data") / "prompt_pack.json"))


def load_prompt_pack(path: str | Path | None = None) -> PromptPack:
    """Load and validate all nine (stage, label) templates."""
    path = Path(path) if path is not None else default_pack_path()
    if not path.is_file():
        raise PackError(f"prompt pack not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PackError(f"prompt pack is not valid JSON: {exc.msg}") from exc

    stages_doc = doc.get("stages")
    if not isinstance(stages_doc, dict):
        raise PackError("prompt pack must carry a 'stages' mapping")

    pack: PromptPack = {}
    for stage in STAGES:
        for label in LABELS:
            raw = stages_doc.get(stage.value, {}).get(label.value)
            if raw is None:
                raise MissingTemplate(stage, label)
            examples = tuple(
                FewShotExample(
                    evidence=e["evidence"],
                    claims={Label.parse(k): v for k, v in e["claims"].items()},
                )
                for e in raw.get("examples", [])
            )
            template = PromptTemplate(
                stage=stage,
                label=label,
                role_preamble=raw["role_preamble"],
                rules=tuple(raw.get("rules", [])),
                few_shot=examples,
                auxiliary_claim_slots=tuple(raw.get("slots", [])),
            )
            template.validate()
            pack[(stage, label)] = template
    return pack


def _claim_header(example: FewShotExample) -> list[str]:
    lines = [f"[EVIDENCE]: {example.evidence}"]
    demonstrated = sorted(example.claims, key=lambda l: l.order)
    if len(demonstrated) == 1:
        lines.append(f"[CLAIM]: {example.claims[demonstrated[0]]}")
    else:
        for lab in demonstrated:
            header = {
                Label.SUPPORTED: "[CLAIM SUPPORTED]",
                Label.REFUTED: "[CLAIM REFUTED]",
                Label.NEI: "[CLAIM NEI]",
            }[lab]
            lines.append(f"{header}: {example.claims[lab]}")
    return lines


def render_prompt(
    template: PromptTemplate,
    evidence: EvidenceItem,
    aux: dict[str, str] | None = None,
) -> str:
    """Render the full prompt text, ending with the "[CLAIM]:" cue."""
    aux = aux or {}
    declared = set(template.auxiliary_claim_slots)
    missing = declared - aux.keys()
    extra = aux.keys() - declared
    if missing:
        raise MissingSlot(f"auxiliary slot(s) not supplied: {sorted(missing)}")
    if extra:
        raise ExtraSlot(f"auxiliary slot(s) not declared by template: {sorted(extra)}")
    evidence_text = " ".join(s.strip() for s in evidence.sentences).strip()
    if not evidence_text:
        raise EmptyEvidence("evidence has no text")

    parts: list[str] = [template.role_preamble.strip(), ""]
    for i, rule in enumerate(template.rules, start=1):
        parts.append(f"{i}. {rule}")

    if template.few_shot:
        parts += ["", _SEPARATOR, "", "Here are some examples:", ""]
        for example in template.few_shot:
            parts.extend(_claim_header(example))
            parts.append("")

    parts += ["", _SEPARATOR, ""]
    parts.append("Here is the EVIDENCE you need to rely on to create the CLAIM:")
    parts.append("")
    parts.append(f"[EVIDENCE]: {evidence_text}")
    for slot in template.auxiliary_claim_slots:
        claim = aux[slot].strip()
        if not claim:
            raise MissingSlot(f"auxiliary slot {slot!r} supplied but empty")
        parts.append(f"{SLOT_HEADERS[slot]}: {claim}")
    parts.append("[CLAIM]:")
    return "\n".join(parts)
