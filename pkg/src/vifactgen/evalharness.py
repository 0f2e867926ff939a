"""Evaluation harness for pluggable verdict classifiers.

Classifiers are in-process objects (or subprocess adapters speaking a
line-oriented JSON protocol) that map (claim, evidence sentences) to a
label. The harness evaluates them on LLM-generated vs human test sets in
the 3-label and 2-label regimes. "F1" throughout is macro-F1; report
headers say so.
"""

from __future__ import annotations

import csv
import io
import json
import subprocess
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Protocol, Sequence

from .datasetstore import ClaimRecord
from .errors import ToolkitError, ValidationError
from .lingstats import jaccard
from .promptkit import Label
from .textnorm import tokens


class EmptyTestSet(ValidationError):
    pass


class LabelOutsideRegime(ValidationError):
    pass


class Regime(Enum):
    THREE_LABEL = "3-label"
    TWO_LABEL = "2-label"

    @property
    def labels(self) -> tuple[Label, ...]:
        if self is Regime.THREE_LABEL:
            return (Label.SUPPORTED, Label.REFUTED, Label.NEI)
        return (Label.SUPPORTED, Label.REFUTED)

    @classmethod
    def parse(cls, value: str) -> "Regime":
        normalized = value.strip().lower().replace("_", "-")
        for regime in cls:
            if regime.value == normalized:
                return regime
        raise ValidationError(f"unknown regime {value!r}; expected 3-label or 2-label")


class VerdictClassifier(Protocol):
    name: str

    def predict(self, claim: str, evidence: Sequence[str]) -> Label: ...


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalMetrics:
    labels: tuple[Label, ...]
    confusion: tuple[tuple[int, ...], ...]  # rows = gold, cols = predicted
    accuracy: float
    macro_f1: float
    per_class: dict[Label, ClassScores]

    @classmethod
    def from_confusion(
        cls, labels: Sequence[Label], confusion: Sequence[Sequence[int]]
    ) -> "EvalMetrics":
        k = len(labels)
        if len(confusion) != k or any(len(row) != k for row in confusion):
            raise ValidationError("confusion matrix shape must match label count")
        total = sum(sum(row) for row in confusion)
        if total == 0:
            raise EmptyTestSet("confusion matrix is empty")
        correct = sum(confusion[i][i] for i in range(k))
        per_class: dict[Label, ClassScores] = {}
        present_f1: list[float] = []
        for i, label in enumerate(labels):
            gold = sum(confusion[i])
            predicted = sum(confusion[r][i] for r in range(k))
            tp = confusion[i][i]
            precision = tp / predicted if predicted else 0.0
            recall = tp / gold if gold else 0.0
            f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
            per_class[label] = ClassScores(precision=precision, recall=recall, f1=f1)
            if gold:
                present_f1.append(f1)
        macro = sum(present_f1) / len(present_f1) if present_f1 else 0.0
        return cls(
            labels=tuple(labels),
            confusion=tuple(tuple(int(v) for v in row) for row in confusion),
            accuracy=correct / total,
            macro_f1=macro,
            per_class=per_class,
        )


def _bind_regime(classifier: VerdictClassifier, regime: Regime) -> VerdictClassifier:
    binder = getattr(classifier, "bind_regime", None)
    return binder(regime) if callable(binder) else classifier


def evaluate(
    classifier: VerdictClassifier,
    testset: Sequence[ClaimRecord],
    regime: Regime = Regime.THREE_LABEL,
) -> EvalMetrics:
    """Confusion-matrix metrics; macro-F1 averages over regime labels
    present in the gold set."""
    if not testset:
        raise EmptyTestSet("test set is empty")
    labels = regime.labels
    index = {label: i for i, label in enumerate(labels)}
    for record in testset:
        if record.label not in index:
            raise LabelOutsideRegime(
                f"gold label {record.label.value} not in regime {regime.value}"
            )
    bound = _bind_regime(classifier, regime)
    lock = threading.Lock() if not getattr(bound, "share_safe", True) else None
    confusion = [[0] * len(labels) for _ in labels]
    for record in testset:
        if lock:
            with lock:
                predicted = bound.predict(record.claim, record.evidence_sentences)
        else:
            predicted = bound.predict(record.claim, record.evidence_sentences)
        if predicted not in index:
            raise LabelOutsideRegime(
                f"classifier {bound.name!r} predicted {predicted.value} "
                f"outside regime {regime.value}"
            )
        confusion[index[record.label]][index[predicted]] += 1
    return EvalMetrics.from_confusion(labels, confusion)


def project_two_label(dataset: Sequence[ClaimRecord]) -> list[ClaimRecord]:
    """Drop NEI records; everything else passes through unchanged."""
    return [record for record in dataset if record.label is not Label.NEI]


class OverlapClassifier:
    """Desk-scale stand-in classifier: word Jaccard between claim and
    evidence, banded into Supported / Refuted / NEI."""

    share_safe = True

    def __init__(self, support: float, refute: float, regime: Regime = Regime.THREE_LABEL):
        if not 0.0 <= refute < support <= 1.0:
            raise ValidationError("thresholds must satisfy 0 <= refute < support <= 1")
        self.support = support
        self.refute = refute
        self.regime = regime
        self.name = f"overlap(s={support},r={refute})"

    def bind_regime(self, regime: Regime) -> "OverlapClassifier":
        return OverlapClassifier(self.support, self.refute, regime)

    def predict(self, claim: str, evidence: Sequence[str]) -> Label:
        claim_tokens = [t.lower() for t in tokens(claim)]
        evidence_tokens = [t.lower() for t in tokens(" ".join(evidence))]
        score = jaccard(claim_tokens, evidence_tokens)
        if score >= self.support:
            return Label.SUPPORTED
        if score < self.refute:
            return Label.NEI if self.regime is Regime.THREE_LABEL else Label.REFUTED
        return Label.REFUTED


def baseline_overlap_classifier(
    thresholds: dict[str, float] | tuple[float, float] = (0.6, 0.2),
) -> OverlapClassifier:
    if isinstance(thresholds, dict):
        support, refute = thresholds["support"], thresholds["refute"]
    else:
        support, refute = thresholds
    return OverlapClassifier(support=support, refute=refute)


class SubprocessClassifier:
    """Adapter for external classifiers speaking line-delimited JSON:
    one {"claim", "evidence": [...]} request per line on stdin, one
    {"label": "..."} per line on stdout."""

    share_safe = False

    def __init__(self, command: Sequence[str], name: str | None = None):
        self.command = list(command)
        self.name = name or f"subprocess({self.command[0]})"
        self._proc: subprocess.Popen | None = None

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._proc

    def predict(self, claim: str, evidence: Sequence[str]) -> Label:
        proc = self._ensure()
        assert proc.stdin and proc.stdout
        request = json.dumps({"claim": claim, "evidence": list(evidence)}, ensure_ascii=False)
        proc.stdin.write(request + "\n")
        proc.stdin.flush()
        line = proc.stdout.readline()
        if not line:
            raise ToolkitError(f"classifier process {self.command} closed its stdout")
        return Label.parse(json.loads(line)["label"])

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.terminate()
            self._proc.wait(timeout=5)
        self._proc = None


@dataclass(frozen=True)
class ComparisonRow:
    classifier: str
    test_set: str
    regime: Regime
    metrics: EvalMetrics


@dataclass
class ComparisonReport:
    rows: list[ComparisonRow]

    CSV_COLUMNS = (
        "classifier", "test_set", "regime", "accuracy", "macro_f1",
        "supported_precision", "supported_recall", "supported_f1",
        "refuted_precision", "refuted_recall", "refuted_f1",
        "nei_precision", "nei_recall", "nei_f1",
    )

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.CSV_COLUMNS)
        for row in self.rows:
            record = [
                row.classifier,
                row.test_set,
                row.regime.value,
                f"{row.metrics.accuracy:.4f}",
                f"{row.metrics.macro_f1:.4f}",
            ]
            for label in (Label.SUPPORTED, Label.REFUTED, Label.NEI):
                scores = row.metrics.per_class.get(label)
                if scores is None:
                    record += ["", "", ""]
                else:
                    record += [
                        f"{scores.precision:.4f}",
                        f"{scores.recall:.4f}",
                        f"{scores.f1:.4f}",
                    ]
            writer.writerow(record)
        return buffer.getvalue()

    def format_table(self) -> str:
        header = "Verdict-classifier comparison (F1 = macro-F1)"
        lines = [header, "-" * len(header)]
        lines.append(
            f"{'classifier':<26}{'test_set':<10}{'regime':<10}{'acc':>8}{'macro_f1':>10}"
        )
        for row in self.rows:
            lines.append(
                f"{row.classifier:<26}{row.test_set:<10}{row.regime.value:<10}"
                f"{row.metrics.accuracy:>8.4f}{row.metrics.macro_f1:>10.4f}"
            )
        return "\n".join(lines)


def compare(
    classifiers: Sequence[VerdictClassifier],
    llm_testset: Sequence[ClaimRecord],
    human_testset: Sequence[ClaimRecord],
    regimes: Iterable[Regime] = (Regime.THREE_LABEL, Regime.TWO_LABEL),
) -> ComparisonReport:
    """Full cross-product of classifier x {LLM, Human} x regime rows."""
    if not classifiers:
        raise ValidationError("at least one classifier required")
    if not llm_testset or not human_testset:
        raise EmptyTestSet("both test sets must be non-empty")
    rows: list[ComparisonRow] = []
    for classifier in classifiers:
        for set_name, dataset in (("LLM", llm_testset), ("Human", human_testset)):
            for regime in regimes:
                effective = (
                    project_two_label(dataset) if regime is Regime.TWO_LABEL else list(dataset)
                )
                metrics = evaluate(classifier, effective, regime)
                rows.append(
                    ComparisonRow(
                        classifier=classifier.name,
                        test_set=set_name,
                        regime=regime,
                        metrics=metrics,
                    )
                )
    return ComparisonReport(rows=rows)
