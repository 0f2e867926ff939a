"""Human-evaluation protocol: review sampling, judgment storage, Fleiss
kappa agreement, criteria summaries, and the HTTP annotation service.

Each sampled claim is judged on four binary criteria (fluency, logical,
abstract, precision) by a fixed number of annotators; agreement is
chance-corrected per criterion and pooled as the mean across criteria.
State is an append-only JSONL log, so restarts lose nothing.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from pydantic import BaseModel

from .datasetstore import ClaimRecord
from .errors import ToolkitError, ValidationError
from .promptkit import LABELS, Label

CRITERIA = ("fluency", "logical", "abstract", "precision")


class JudgmentBody(BaseModel):
    """POST /api/judgments payload; module-level so FastAPI can resolve
    the stringified annotation under `from __future__ import annotations`."""

    annotator_id: str
    task_id: str
    fluency: bool
    logical: bool
    abstract: bool
    precision: bool


class DatasetTooSmall(ValidationError):
    pass


class UnknownTask(ValidationError):
    pass


class UnknownAnnotator(ValidationError):
    pass


class TooFewItems(ValidationError):
    pass


class DegenerateAgreement(ToolkitError):
    pass


class NoJudgments(ValidationError):
    pass


@dataclass
class AnnotationTask:
    task_id: str
    record: ClaimRecord
    assigned_to: list[str] = field(default_factory=list)
    status: str = "pending"  # pending -> done only

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "evidence": list(self.record.evidence_sentences),
            "claim": self.record.claim,
            "label": self.record.label.value,
            "stage": self.record.stage.value,
            "model": self.record.generator_model,
            "status": self.status,
        }


@dataclass(frozen=True)
class CriteriaJudgment:
    annotator_id: str
    task_id: str
    fluency: bool
    logical: bool
    abstract: bool
    precision: bool
    submitted_at: str = ""

    def value(self, criterion: str) -> bool:
        if criterion not in CRITERIA:
            raise ValidationError(f"unknown criterion {criterion!r}")
        return getattr(self, criterion)

    def to_json(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "task_id": self.task_id,
            "fluency": self.fluency,
            "logical": self.logical,
            "abstract": self.abstract,
            "precision": self.precision,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CriteriaJudgment":
        return cls(
            annotator_id=obj["annotator_id"],
            task_id=obj["task_id"],
            fluency=bool(obj["fluency"]),
            logical=bool(obj["logical"]),
            abstract=bool(obj["abstract"]),
            precision=bool(obj["precision"]),
            submitted_at=obj.get("submitted_at", ""),
        )


def sample_for_review(
    dataset: Sequence[ClaimRecord], n: int = 100, seed: int = 0
) -> list[AnnotationTask]:
    """Uniform, label-stratified (within one) sample without replacement."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    if len(dataset) < n:
        raise DatasetTooSmall(f"dataset has {len(dataset)} records, need {n}")
    rng = random.Random(seed)
    by_label: dict[Label, list[ClaimRecord]] = {}
    for record in dataset:
        by_label.setdefault(record.label, []).append(record)

    labels = [label for label in LABELS if label in by_label]
    totals = [len(by_label[label]) for label in labels]
    grand = sum(totals)
    quotas = [n * t / grand for t in totals]
    base = [int(q) for q in quotas]
    leftover = n - sum(base)
    order = sorted(range(len(labels)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:leftover]:
        base[i] += 1
    # a quota can exceed a small stratum after rounding; shift the surplus
    for i, label in enumerate(labels):
        if base[i] > totals[i]:
            surplus = base[i] - totals[i]
            base[i] = totals[i]
            for j in order:
                if j != i and base[j] + surplus <= totals[j]:
                    base[j] += surplus
                    break

    tasks: list[AnnotationTask] = []
    for label, take in zip(labels, base):
        pool = by_label[label]
        chosen_idx = sorted(rng.sample(range(len(pool)), take))
        for idx in chosen_idx:
            record = pool[idx]
            tasks.append(AnnotationTask(task_id=f"task-{record.id}", record=record))
    return tasks


# --- agreement -----------------------------------------------------------

@dataclass
class AnnotationMatrix:
    """Per criterion: item rows of (pass_count, fail_count), constant n."""

    n_annotators: int
    rows: dict[str, list[tuple[int, int]]]

    def __post_init__(self) -> None:
        if self.n_annotators < 2:
            raise ValidationError("annotation matrix needs n >= 2 annotators")
        for criterion, criterion_rows in self.rows.items():
            for row in criterion_rows:
                if sum(row) != self.n_annotators:
                    raise ValidationError(
                        f"{criterion}: row {row} does not sum to n={self.n_annotators}"
                    )


def build_matrix(
    judgments: Iterable[CriteriaJudgment], n_annotators: int
) -> AnnotationMatrix:
    """Rows come from items holding exactly n distinct annotators
    (latest judgment per annotator wins)."""
    latest: dict[tuple[str, str], CriteriaJudgment] = {}
    for judgment in judgments:
        latest[(judgment.task_id, judgment.annotator_id)] = judgment
    by_task: dict[str, list[CriteriaJudgment]] = {}
    for (task_id, _), judgment in sorted(latest.items()):
        by_task.setdefault(task_id, []).append(judgment)
    rows: dict[str, list[tuple[int, int]]] = {c: [] for c in CRITERIA}
    for task_id in sorted(by_task):
        group = by_task[task_id]
        if len(group) != n_annotators:
            continue
        for criterion in CRITERIA:
            passes = sum(1 for j in group if j.value(criterion))
            rows[criterion].append((passes, n_annotators - passes))
    return AnnotationMatrix(n_annotators=n_annotators, rows=rows)


def fleiss_kappa(matrix: AnnotationMatrix, criterion: str) -> float:
    """Chance-corrected agreement for one criterion.

    kappa = (P_bar - P_bar_e) / (1 - P_bar_e) with
    P_i = (sum_k n_ik^2 - n) / (n (n - 1)) and P_bar_e = sum_k p_k^2.
    Unanimity (P_bar = 1) returns exactly 1.0 by convention even when the
    chance term degenerates.
    """
    if criterion not in matrix.rows:
        raise ValidationError(f"criterion {criterion!r} not in matrix")
    rows = matrix.rows[criterion]
    n = matrix.n_annotators
    if len(rows) < 2:
        raise TooFewItems(f"need >= 2 items to compute kappa, got {len(rows)}")
    item_agreements = [
        (sum(c * c for c in row) - n) / (n * (n - 1)) for row in rows
    ]
    p_bar = sum(item_agreements) / len(rows)
    total = n * len(rows)
    category_shares = [
        sum(row[k] for row in rows) / total for k in range(2)
    ]
    p_bar_e = sum(share * share for share in category_shares)
    if p_bar == 1.0:
        return 1.0
    if p_bar_e == 1.0:
        raise DegenerateAgreement("expected agreement is 1 while observed is not")
    return (p_bar - p_bar_e) / (1.0 - p_bar_e)


def pooled_kappa(matrix: AnnotationMatrix) -> float:
    """Mean kappa across the four criteria."""
    values = [fleiss_kappa(matrix, criterion) for criterion in CRITERIA]
    return sum(values) / len(values)


def criteria_summary(
    judgments: Sequence[CriteriaJudgment],
    tasks_by_id: dict[str, AnnotationTask],
    group_by: tuple[str, ...] = ("model", "stage"),
) -> list[dict]:
    """Per group, per criterion: pass-fraction across all (item, annotator)
    judgments, as a percentage."""
    if not judgments:
        raise NoJudgments("no judgments recorded")

    def group_key(task: AnnotationTask) -> tuple:
        record = task.record
        values = {
            "model": record.generator_model,
            "stage": record.stage.value,
            "label": record.label.value,
        }
        try:
            return tuple(values[g] for g in group_by)
        except KeyError as exc:
            raise ValidationError(f"unknown group_by field {exc.args[0]!r}") from exc

    grouped: dict[tuple, list[CriteriaJudgment]] = {}
    for judgment in judgments:
        task = tasks_by_id.get(judgment.task_id)
        if task is None:
            raise UnknownTask(f"judgment references unknown task {judgment.task_id!r}")
        grouped.setdefault(group_key(task), []).append(judgment)

    rows: list[dict] = []
    for key in sorted(grouped):
        group = grouped[key]
        row: dict = dict(zip(group_by, key))
        row["n_judgments"] = len(group)
        for criterion in CRITERIA:
            passes = sum(1 for j in group if j.value(criterion))
            row[f"{criterion}_pct"] = round(100.0 * passes / len(group), 2)
        rows.append(row)
    return rows


# --- durable store behind the service ------------------------------------

class AnnotationStore:
    """Single-writer judgment log with latest-wins resubmission."""

    def __init__(
        self,
        tasks: Sequence[AnnotationTask],
        roster: Sequence[str],
        n_annotators: int | None = None,
        state_path: str | Path | None = None,
    ):
        if not roster:
            raise ValidationError("annotator roster must be non-empty")
        self.tasks = list(tasks)
        self.tasks_by_id = {t.task_id: t for t in self.tasks}
        self.roster = list(dict.fromkeys(roster))
        self.n_annotators = n_annotators or len(self.roster)
        if self.n_annotators < 2:
            raise ValidationError("need n >= 2 annotators per item for agreement")
        self.state_path = Path(state_path) if state_path else None
        self._latest: dict[tuple[str, str], CriteriaJudgment] = {}
        self._audit: list[CriteriaJudgment] = []
        self._lock = threading.Lock()
        if self.state_path and self.state_path.exists():
            self._replay()

    def _replay(self) -> None:
        assert self.state_path is not None
        for line_no, line in enumerate(
            self.state_path.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                judgment = CriteriaJudgment.from_json(json.loads(line))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ToolkitError(
                    f"corrupt state file {self.state_path}:{line_no}"
                ) from exc
            self._apply(judgment)

    def _apply(self, judgment: CriteriaJudgment) -> bool:
        key = (judgment.annotator_id, judgment.task_id)
        superseded = key in self._latest
        self._latest[key] = judgment
        self._audit.append(judgment)
        task = self.tasks_by_id.get(judgment.task_id)
        if task is not None:
            judges = {a for (a, t) in self._latest if t == task.task_id}
            if len(judges) >= self.n_annotators:
                task.status = "done"
        return superseded

    def judges_of(self, task_id: str) -> set[str]:
        return {a for (a, t) in self._latest if t == task_id}

    def record_judgment(self, judgment: CriteriaJudgment) -> bool:
        """Store durably; duplicates overwrite with the latest and the
        supersession stays in the audit log. Returns True on overwrite."""
        with self._lock:
            if judgment.task_id not in self.tasks_by_id:
                raise UnknownTask(f"unknown task {judgment.task_id!r}")
            if judgment.annotator_id not in self.roster:
                raise UnknownAnnotator(f"unknown annotator {judgment.annotator_id!r}")
            superseded = self._apply(judgment)
            if self.state_path:
                with self.state_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(judgment.to_json(), ensure_ascii=False) + "\n")
            return superseded

    def next_task(self, annotator_id: str) -> AnnotationTask | None:
        """Least-covered pending task this annotator has not judged."""
        if annotator_id not in self.roster:
            raise UnknownAnnotator(f"unknown annotator {annotator_id!r}")
        with self._lock:
            best: tuple[int, int] | None = None
            chosen: AnnotationTask | None = None
            for idx, task in enumerate(self.tasks):
                judges = self.judges_of(task.task_id)
                if annotator_id in judges or len(judges) >= self.n_annotators:
                    continue
                key = (len(judges), idx)
                if best is None or key < best:
                    best = key
                    chosen = task
            if chosen is not None and annotator_id not in chosen.assigned_to:
                chosen.assigned_to.append(annotator_id)
            return chosen

    def audit_length(self, annotator_id: str, task_id: str) -> int:
        return sum(
            1
            for j in self._audit
            if j.annotator_id == annotator_id and j.task_id == task_id
        )

    def judgments(self) -> list[CriteriaJudgment]:
        return list(self._latest.values())

    def matrix(self) -> AnnotationMatrix:
        return build_matrix(self._latest.values(), self.n_annotators)

    def progress(self) -> dict:
        done = sum(1 for t in self.tasks if t.status == "done")
        per_annotator = {
            a: sum(1 for (annotator, _) in self._latest if annotator == a)
            for a in self.roster
        }
        return {
            "total": len(self.tasks),
            "done": done,
            "pending": len(self.tasks) - done,
            "per_annotator": per_annotator,
            "n_annotators": self.n_annotators,
        }

    def agreement(self) -> dict:
        matrix = self.matrix()
        criteria: dict[str, float | None] = {}
        computable = True
        for criterion in CRITERIA:
            try:
                criteria[criterion] = round(fleiss_kappa(matrix, criterion), 6)
            except (TooFewItems, DegenerateAgreement):
                criteria[criterion] = None
                computable = False
        pooled = None
        if computable:
            values = [v for v in criteria.values() if v is not None]
            pooled = round(sum(values) / len(values), 6)
        return {
            "n_annotators": matrix.n_annotators,
            "n_items": len(matrix.rows[CRITERIA[0]]),
            "criteria": criteria,
            "pooled": pooled,
        }

    def summary(self) -> dict:
        judgments = self.judgments()
        if not judgments:
            return {"groups": []}
        rows = criteria_summary(judgments, self.tasks_by_id)
        return {"groups": rows}


# --- HTTP service ---------------------------------------------------------

_FALLBACK_INDEX = """<!doctype html>
<html><head><meta charset="utf-8"><title>annotation service</title></head>
<body><h1>Annotation service is running</h1>
<p>No frontend bundle configured. API lives under <code>/api/</code>:</p>
<ul>
<li>GET /api/tasks/next?annotator=ID</li>
<li>GET /api/tasks/{id}</li>
<li>POST /api/judgments</li>
<li>GET /api/progress · /api/agreement · /api/summary</li>
</ul></body></html>
"""


def create_app(store: AnnotationStore, static_dir: str | Path | None = None):
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import HTMLResponse, JSONResponse
    from fastapi.staticfiles import StaticFiles

    app = FastAPI(title="vifactgen annotation service")

    @app.get("/api/tasks/next")
    def tasks_next(annotator: str):
        try:
            task = store.next_task(annotator)
        except UnknownAnnotator as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        if task is None:
            return {"task": None, "remaining": 0}
        remaining = sum(
            1
            for t in store.tasks
            if annotator not in store.judges_of(t.task_id)
            and len(store.judges_of(t.task_id)) < store.n_annotators
        )
        return {"task": task.to_json(), "remaining": remaining}

    @app.get("/api/tasks/{task_id}")
    def get_task(task_id: str):
        task = store.tasks_by_id.get(task_id)
        if task is None:
            raise HTTPException(status_code=404, detail=f"unknown task {task_id!r}")
        payload = task.to_json()
        payload["judged_by"] = sorted(store.judges_of(task_id))
        return payload

    @app.post("/api/judgments")
    def post_judgment(body: JudgmentBody):
        task = store.tasks_by_id.get(body.task_id)
        if task is None:
            raise HTTPException(status_code=404, detail=f"unknown task {body.task_id!r}")
        judges = store.judges_of(body.task_id)
        if len(judges) >= store.n_annotators and body.annotator_id not in judges:
            raise HTTPException(
                status_code=409, detail="task already completed by other annotators"
            )
        judgment = CriteriaJudgment(
            annotator_id=body.annotator_id,
            task_id=body.task_id,
            fluency=body.fluency,
            logical=body.logical,
            abstract=body.abstract,
            precision=body.precision,
            submitted_at=time.strftime("%Y-%m-%dT%H:%M:%S"),
        )
        try:
            superseded = store.record_judgment(judgment)
        except UnknownAnnotator as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        except UnknownTask as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {
            "stored": True,
            "superseded": superseded,
            "task_status": store.tasks_by_id[body.task_id].status,
        }

    @app.get("/api/progress")
    def progress():
        return store.progress()

    @app.get("/api/agreement")
    def agreement():
        return JSONResponse(store.agreement())

    @app.get("/api/summary")
    def summary():
        return store.summary()

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="frontend")
    else:
        @app.get("/", response_class=HTMLResponse)
        def index():
            return _FALLBACK_INDEX

    return app


def serve(
    dataset: Sequence[ClaimRecord],
    roster: Sequence[str],
    bind: str = "127.0.0.1:8400",
    state_path: str | Path | None = None,
    n_annotators: int | None = None,
    sample_n: int | None = None,
    seed: int = 0,
    static_dir: str | Path | None = None,
) -> None:
    """Blocking entry point used by the CLI's annotate-serve command."""
    import uvicorn

    if sample_n:
        tasks = sample_for_review(dataset, n=sample_n, seed=seed)
    else:
        tasks = [AnnotationTask(task_id=f"task-{r.id}", record=r) for r in dataset]
    store = AnnotationStore(
        tasks, roster, n_annotators=n_annotators, state_path=state_path
    )
    host, _, port = bind.partition(":")
    app = create_app(store, static_dir=static_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8400), log_level="info")
