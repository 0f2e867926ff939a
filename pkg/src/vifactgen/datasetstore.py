"""Claim-record persistence, leakage-free splits, and the three
fine-tuning dataset-composition methods.

Splits assign whole evidence groups to one subset so the three labels
sharing an evidence group can never leak across train/dev/test.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ValidationError
from .promptkit import LABELS, Label, Stage

SCHEMA_VERSION = 1


class SchemaMismatch(ValidationError):
    pass


class TooFewRecords(ValidationError):
    pass


class RoleLabelViolation(ValidationError):
    pass


@dataclass(frozen=True)
class ClaimRecord:
    id: str
    evidence_id: str
    evidence_sentences: tuple[str, ...]
    claim: str
    label: Label
    stage: Stage
    generator_model: str
    sanitize_audit: tuple[str, ...] = ()
    created_at: str | None = None

    def __post_init__(self) -> None:
        if not self.claim.strip():
            raise ValidationError(f"claim record {self.id}: empty claim")
        if "[CLAIM]" in self.claim:
            raise ValidationError(f"claim record {self.id}: claim carries a [CLAIM] token")

    def to_json(self) -> dict:
        obj = {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "evidence_id": self.evidence_id,
            "evidence": list(self.evidence_sentences),
            "claim": self.claim,
            "label": self.label.value,
            "stage": self.stage.value,
            "model": self.generator_model,
            "audit": list(self.sanitize_audit),
        }
        if self.created_at is not None:
            obj["created_at"] = self.created_at
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "ClaimRecord":
        version = obj.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaMismatch(f"unsupported schema_version {version!r}")
        return cls(
            id=obj["id"],
            evidence_id=obj["evidence_id"],
            evidence_sentences=tuple(obj["evidence"]),
            claim=obj["claim"],
            label=Label.parse(obj["label"]),
            stage=Stage.parse(obj["stage"]),
            generator_model=obj["model"],
            sanitize_audit=tuple(obj.get("audit", [])),
            created_at=obj.get("created_at"),
        )


def write_dataset(records: Sequence[ClaimRecord], path: str | Path) -> int:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json(), ensure_ascii=False, sort_keys=True) + "\n")
    return len(records)


def read_dataset(path: str | Path) -> list[ClaimRecord]:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"dataset not readable: {path}")
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(ClaimRecord.from_json(json.loads(line)))
    return records


def label_counts(records: Iterable[ClaimRecord]) -> dict[Label, int]:
    counts = {label: 0 for label in LABELS}
    for record in records:
        counts[record.label] = counts.get(record.label, 0) + 1
    return counts


@dataclass
class DatasetSplit:
    train: list[str]
    dev: list[str]
    test: list[str]
    ratios: tuple[float, float, float]
    seed: int

    def __post_init__(self) -> None:
        subsets = [set(self.train), set(self.dev), set(self.test)]
        total = sum(len(s) for s in subsets)
        if len(subsets[0] | subsets[1] | subsets[2]) != total:
            raise ValidationError("split subsets overlap")

    def materialize(
        self, records: Sequence[ClaimRecord]
    ) -> tuple[list[ClaimRecord], list[ClaimRecord], list[ClaimRecord]]:
        by_name = {name: set(getattr(self, name)) for name in ("train", "dev", "test")}
        out = {name: [] for name in by_name}
        for record in records:
            for name, ids in by_name.items():
                if record.id in ids:
                    out[name].append(record)
                    break
        return out["train"], out["dev"], out["test"]


def _round_to_quotas(quotas: Sequence[float], total: int) -> list[int]:
    """Integer counts summing to `total`, tracking fractional quotas.
    Greedy largest-deficit assignment; ties break on subset index."""
    counts = [0] * len(quotas)
    for _ in range(total):
        deficits = [quotas[i] - counts[i] for i in range(len(quotas))]
        winner = max(range(len(quotas)), key=lambda i: (deficits[i], -i))
        counts[winner] += 1
    return counts


def split(
    records: Sequence[ClaimRecord],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> DatasetSplit:
    """Deterministic stratified split with zero evidence leakage.

    Evidence groups move whole. Groups are stratified by their label
    signature, then a bounded repair pass nudges per-label counts toward
    the requested ratios. For the natural dataset shape (at most one
    record per label per evidence group) per-label counts land within
    one record of the target.
    """
    if len(records) < 3:
        raise TooFewRecords(f"need at least 3 records to split, got {len(records)}")
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ValidationError("ratios must be three positive numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"ratios must sum to 1, got {sum(ratios)}")
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate record ids in dataset")

    # group records by evidence, preserving first-seen order
    groups: dict[str, list[ClaimRecord]] = {}
    for record in records:
        groups.setdefault(record.evidence_id, []).append(record)

    def signature(members: list[ClaimRecord]) -> tuple:
        return tuple(sorted((r.label.value for r in members)))

    by_signature: dict[tuple, list[str]] = {}
    for evidence_id, members in groups.items():
        by_signature.setdefault(signature(members), []).append(evidence_id)

    rng = random.Random(seed)
    assignment: dict[str, int] = {}  # evidence_id -> subset index
    allocated = [0, 0, 0]
    cum_groups = 0
    for sig in sorted(by_signature):
        bucket = list(by_signature[sig])
        rng.shuffle(bucket)
        cum_groups += len(bucket)
        # cumulative quotas keep rounding error under one group overall
        quotas = [cum_groups * r - allocated[s] for s, r in enumerate(ratios)]
        counts = _round_to_quotas(quotas, len(bucket))
        cursor = 0
        for subset_idx, count in enumerate(counts):
            for evidence_id in bucket[cursor : cursor + count]:
                assignment[evidence_id] = subset_idx
            cursor += count
            allocated[subset_idx] += count

    _repair(assignment, groups, ratios)

    subsets: tuple[list[str], list[str], list[str]] = ([], [], [])
    for record in records:
        subsets[assignment[record.evidence_id]].append(record.id)
    return DatasetSplit(
        train=subsets[0], dev=subsets[1], test=subsets[2], ratios=tuple(ratios), seed=seed
    )


def _label_deviation(
    assignment: dict[str, int],
    groups: dict[str, list[ClaimRecord]],
    ratios: Sequence[float],
) -> tuple[float, dict[tuple[Label, int], float]]:
    totals: dict[Label, int] = {}
    counts: dict[tuple[Label, int], int] = {}
    for evidence_id, members in groups.items():
        subset = assignment[evidence_id]
        for record in members:
            totals[record.label] = totals.get(record.label, 0) + 1
            counts[(record.label, subset)] = counts.get((record.label, subset), 0) + 1
    deviations: dict[tuple[Label, int], float] = {}
    worst = 0.0
    for label, total in totals.items():
        for subset in range(3):
            dev = counts.get((label, subset), 0) - total * ratios[subset]
            deviations[(label, subset)] = dev
            worst = max(worst, abs(dev))
    return worst, deviations


def _repair(
    assignment: dict[str, int],
    groups: dict[str, list[ClaimRecord]],
    ratios: Sequence[float],
    max_moves: int | None = None,
) -> None:
    """Greedy group moves while they strictly reduce the worst per-label
    deviation. No-op for homogeneous signatures (already within one group)."""
    if max_moves is None:
        max_moves = 2 * len(groups)
    worst, _ = _label_deviation(assignment, groups, ratios)
    ordered = sorted(assignment)
    for _ in range(max_moves):
        if worst <= 1.0:
            return
        best: tuple[float, str, int] | None = None
        for evidence_id in ordered:
            current = assignment[evidence_id]
            for target in range(3):
                if target == current:
                    continue
                assignment[evidence_id] = target
                candidate, _ = _label_deviation(assignment, groups, ratios)
                assignment[evidence_id] = current
                if candidate < worst and (best is None or candidate < best[0]):
                    best = (candidate, evidence_id, target)
        if best is None:
            return
        worst, evidence_id, target = best
        assignment[evidence_id] = target


class CompositionMethod(Enum):
    SYNTHETIC = "synthetic"
    SPECIFIC = "specific"
    SEMI_SYNTHETIC = "semi-synthetic"

    @classmethod
    def parse(cls, value: str) -> "CompositionMethod":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValidationError(
                f"unknown composition method {value!r}; "
                f"expected synthetic/specific/semi-synthetic"
            )


def compose(
    method: CompositionMethod,
    full_three_label: Sequence[ClaimRecord],
    best_two_label: Sequence[ClaimRecord],
    nei_only_generated: Sequence[ClaimRecord],
) -> list[ClaimRecord]:
    """Fine-tuning dataset composition.

    synthetic: the three-label set unchanged. specific: two-label set plus
    NEI records from an NEI-specialized generator. semi-synthetic:
    two-label set plus the NEI slice of the three-label set.
    """
    for record in best_two_label:
        if record.label is Label.NEI:
            raise RoleLabelViolation(f"NEI record {record.id} inside best_two_label input")
    for record in nei_only_generated:
        if record.label is not Label.NEI:
            raise RoleLabelViolation(
                f"non-NEI record {record.id} inside nei_only_generated input"
            )

    if method is CompositionMethod.SYNTHETIC:
        combined = list(full_three_label)
    elif method is CompositionMethod.SPECIFIC:
        combined = list(best_two_label) + list(nei_only_generated)
    else:
        nei_slice = [r for r in full_three_label if r.label is Label.NEI]
        combined = list(best_two_label) + nei_slice

    seen: set[str] = set()
    out: list[ClaimRecord] = []
    for record in combined:
        if record.id in seen:
            continue
        seen.add(record.id)
        out.append(record)
    return out
