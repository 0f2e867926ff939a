"""Single CLI entry point wiring the full pipeline.

Every run appends a manifest line (command, resolved params + hash,
input/output file hashes) so any output can be re-derived from the
manifest alone. Exit codes: 0 success, 1 validation error, 2 runtime
failure.
"""

from __future__ import annotations

import csv as csv_module
import hashlib
import json
import os
import re
import shlex
import sys
import time
from pathlib import Path
from types import SimpleNamespace

import click
import yaml

from . import corpus as corpusmod
from .annotation import (
    CRITERIA,
    AnnotationTask,
    CriteriaJudgment,
    build_matrix,
    criteria_summary,
    fleiss_kappa,
    pooled_kappa,
    serve as serve_annotation,
)
from .datasetstore import (
    CompositionMethod,
    compose,
    label_counts,
    read_dataset,
    split as split_dataset,
    write_dataset,
)
from .errors import ToolkitError, ValidationError
from .evalharness import (
    Regime,
    SubprocessClassifier,
    baseline_overlap_classifier,
    compare,
)
from .genclient import ProviderSpec, read_records, run_generation_job, write_records
from .lingstats import WordLexicon, dataset_report
from .promptkit import LABELS, Label, Stage, load_prompt_pack
from .sanitizer import (
    Thresholds,
    VietnameseSyllableLexicon,
    filter_batch,
    write_quarantine,
)

_ENV_PATTERN = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


def _interpolate_env(value):
    if isinstance(value, str):
        def sub(match):
            name = match.group(1)
            if name not in os.environ:
                raise ValidationError(f"config references unset env var ${{{name}}}")
            return os.environ[name]
        return _ENV_PATTERN.sub(sub, value)
    if isinstance(value, dict):
        return {k: _interpolate_env(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_interpolate_env(v) for v in value]
    return value


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    config = _interpolate_env(yaml.safe_load(path.read_text(encoding="utf-8")) or {})
    for name, ref in (config.get("paths") or {}).items():
        if ref and not Path(ref).exists():
            raise ValidationError(f"config paths.{name} does not exist: {ref}")
    return config


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(command: str, params: dict, inputs: list[Path], outputs: list[Path]) -> None:
    out_dir = outputs[0].parent if outputs else Path(".")
    entry = {
        "command": command,
        "params": params,
        "config_hash": hashlib.sha256(
            json.dumps(params, sort_keys=True, default=str).encode("utf-8")
        ).hexdigest(),
        "inputs": {str(p): _sha256_file(p) for p in inputs if p.is_file()},
        "outputs": {str(p): _sha256_file(p) for p in outputs if p.is_file()},
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    with (out_dir / "manifest.jsonl").open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")


def _parse_labels(value: str) -> list[Label]:
    if value.strip().lower() == "all":
        return list(LABELS)
    return [Label.parse(part) for part in value.split(",") if part.strip()]


def _resolve_provider(config: dict, name: str, seed: int, abnormal_rate: float, model: str | None) -> ProviderSpec:
    if name == "mock":
        return ProviderSpec(
            kind="mock",
            model_name=model or "mock-llm",
            seed=seed,
            abnormal_rate=abnormal_rate,
        )
    providers = config.get("providers") or {}
    if name not in providers:
        raise ValidationError(f"provider {name!r} not defined in config (and is not 'mock')")
    spec = dict(providers[name])
    kind = spec.pop("kind", "openai_compatible_http")
    model_name = model or spec.pop("model_name", name)
    spec.pop("name", None)
    return ProviderSpec(kind=kind, model_name=model_name, **spec)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="YAML pipeline config; flags override it.")
@click.pass_context
def cli(ctx, config_path):
    """Build, filter, analyze and evaluate LLM-generated fact-checking data."""
    ctx.obj = load_config(config_path)


@cli.command()
@click.option("--path", "src", required=True, type=click.Path(), help="Source corpus path.")
@click.option("--format", "fmt", type=click.Choice(["jsonl", "plain-dir"]), default="jsonl")
@click.option("--out", required=True, type=click.Path())
def ingest(src, fmt, out):
    """Ingest a topical corpus into the canonical JSONL form."""
    corpus = corpusmod.ingest_corpus(src, format=fmt)
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    count = corpusmod.write_corpus(corpus, out_path)
    _write_manifest("ingest", {"path": str(src), "format": fmt, "out": str(out)},
                    [Path(src)] if Path(src).is_file() else [], [out_path])
    click.echo(f"ingested {count} topics ({corpus.paragraph_count} paragraphs, "
               f"{corpus.sentence_count} sentences) -> {out}")


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--n", "n_items", required=True, type=int)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--min-sentences", type=int, default=2, show_default=True)
@click.option("--max-sentences", type=int, default=3, show_default=True)
@click.option("--out", required=True, type=click.Path())
def sample(corpus_path, n_items, seed, min_sentences, max_sentences, out):
    """Sample contiguous 2-3 sentence evidence groups."""
    corpus = corpusmod.ingest_corpus(corpus_path, format="jsonl")
    items = corpusmod.sample_evidence(corpus, n_items, seed, min_sentences, max_sentences)
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    corpusmod.write_evidence(items, out_path)
    _write_manifest("sample", {"corpus": str(corpus_path), "n": n_items, "seed": seed,
                               "min_sentences": min_sentences, "max_sentences": max_sentences,
                               "out": str(out)},
                    [Path(corpus_path)], [out_path])
    click.echo(f"sampled {len(items)} evidence items -> {out}")


@cli.command()
@click.option("--evidence", "evidence_path", required=True, type=click.Path())
@click.option("--stage", default="uncalibrated", show_default=True)
@click.option("--labels", default="all", show_default=True, help="'all' or comma-separated labels.")
@click.option("--provider", default="mock", show_default=True, help="'mock' or a provider name from config.")
@click.option("--model", default=None, help="Override the provider's model name.")
@click.option("--pack", "pack_path", type=click.Path(), default=None, help="Prompt pack (default: shipped).")
@click.option("--aux", "aux_path", type=click.Path(), default=None, help="Dataset supplying calibration auxiliary claims.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--abnormal-rate", type=float, default=0.0, show_default=True, help="Mock-provider abnormal output probability.")
@click.option("--parallelism", type=int, default=1, show_default=True)
@click.option("--checkpoint", "checkpoint_path", type=click.Path(), default=None)
@click.option("--out", required=True, type=click.Path())
@click.pass_context
def generate(ctx, evidence_path, stage, labels, provider, model, pack_path, aux_path,
             seed, abnormal_rate, parallelism, checkpoint_path, out):
    """Generate raw claims for each (evidence, label) pair."""
    items = corpusmod.read_evidence(evidence_path)
    stage_enum = Stage.parse(stage)
    label_list = _parse_labels(labels)
    pack = load_prompt_pack(pack_path or (ctx.obj.get("paths") or {}).get("prompt_pack"))
    spec = _resolve_provider(ctx.obj, provider, seed, abnormal_rate, model)
    aux_source = read_dataset(aux_path) if aux_path else None
    records = run_generation_job(
        items, stage_enum, label_list, spec, pack,
        aux_source=aux_source, parallelism=parallelism, seed=seed,
        checkpoint_path=checkpoint_path,
    )
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_records(records, out_path)
    failures = sum(1 for r in records if r.error)
    _write_manifest("generate", {"evidence": str(evidence_path), "stage": stage,
                                 "labels": labels, "provider": provider, "seed": seed,
                                 "abnormal_rate": abnormal_rate, "parallelism": parallelism,
                                 "out": str(out)},
                    [Path(evidence_path)], [out_path])
    click.echo(f"generated {len(records)} records ({failures} failures) -> {out}")


@cli.command()
@click.option("--raw", "raw_path", required=True, type=click.Path())
@click.option("--evidence", "evidence_path", required=True, type=click.Path())
@click.option("--english-threshold", type=float, default=0.30, show_default=True)
@click.option("--chinese-threshold", type=float, default=0.05, show_default=True)
@click.option("--syllable-lexicon", type=click.Path(), default=None)
@click.option("--out", required=True, type=click.Path())
@click.option("--quarantine", "quarantine_path", required=True, type=click.Path())
@click.option("--stats-out", type=click.Path(), default=None)
def sanitize(raw_path, evidence_path, english_threshold, chinese_threshold,
             syllable_lexicon, out, quarantine_path, stats_out):
    """Filter raw generations into clean claims and a quarantine file."""
    records = read_records(raw_path)
    evidence = corpusmod.read_evidence(evidence_path)
    lexicon = VietnameseSyllableLexicon.load(syllable_lexicon) if syllable_lexicon else None
    thresholds = Thresholds(english=english_threshold, chinese=chinese_threshold)
    result = filter_batch(records, evidence, thresholds, lexicon)
    out_path, quarantine_file = Path(out), Path(quarantine_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(result.good, out_path)
    write_quarantine(result.rejected, quarantine_file)
    stats = result.stats.to_json()
    if stats_out:
        Path(stats_out).write_text(
            json.dumps(stats, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
    outputs = [out_path, quarantine_file] + ([Path(stats_out)] if stats_out else [])
    _write_manifest("sanitize", {"raw": str(raw_path), "evidence": str(evidence_path),
                                 "english_threshold": english_threshold,
                                 "chinese_threshold": chinese_threshold, "out": str(out),
                                 "quarantine": str(quarantine_path)},
                    [Path(raw_path), Path(evidence_path)], outputs)
    click.echo(f"kept {len(result.good)}, rejected {len(result.rejected)} "
               f"({stats['proportion_pct']:.2f}% good) -> {out}")


@cli.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path())
@click.option("--unit", type=click.Choice(["character", "syllable", "word"]),
              default="character", show_default=True)
@click.option("--word-lexicon", type=click.Path(), default=None)
@click.option("--out", required=True, type=click.Path())
def stats(dataset_path, unit, word_lexicon, out):
    """Linguistic feature report (new-word rate, POS, Jaccard, LCS)."""
    records = read_dataset(dataset_path)
    lexicon = WordLexicon.load(word_lexicon) if word_lexicon else None
    report = dataset_report(records, lexicon, unit)
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(report.to_csv(), encoding="utf-8")
    _write_manifest("stats", {"dataset": str(dataset_path), "unit": unit, "out": str(out)},
                    [Path(dataset_path)], [out_path])
    click.echo(report.format_table())
    click.echo(f"report -> {out}")


@cli.command("split")
@click.option("--dataset", "dataset_path", required=True, type=click.Path())
@click.option("--ratios", default="0.8,0.1,0.1", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
def split_cmd(dataset_path, ratios, seed, out_dir):
    """Stratified, evidence-leakage-free train/dev/test split."""
    records = read_dataset(dataset_path)
    ratio_tuple = tuple(float(x) for x in ratios.split(","))
    if len(ratio_tuple) != 3:
        raise ValidationError("--ratios needs three comma-separated numbers")
    result = split_dataset(records, ratio_tuple, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, dev, test = result.materialize(records)
    outputs = []
    for name, subset in (("train", train), ("dev", dev), ("test", test)):
        path = out / f"{name}.jsonl"
        write_dataset(subset, path)
        outputs.append(path)
    meta_path = out / "split.json"
    meta_path.write_text(
        json.dumps({"ratios": list(ratio_tuple), "seed": seed,
                    "sizes": {"train": len(train), "dev": len(dev), "test": len(test)}},
                   sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    outputs.append(meta_path)
    _write_manifest("split", {"dataset": str(dataset_path), "ratios": ratios, "seed": seed,
                              "out_dir": str(out_dir)},
                    [Path(dataset_path)], outputs)
    click.echo(f"split {len(records)} records -> train {len(train)} / dev {len(dev)} / test {len(test)}")


@cli.command("compose")
@click.option("--method", required=True,
              type=click.Choice(["synthetic", "specific", "semi-synthetic"]))
@click.option("--full", "full_path", required=True, type=click.Path(),
              help="Three-label dataset.")
@click.option("--two-label", "two_label_path", required=True, type=click.Path(),
              help="Best two-label dataset (no NEI).")
@click.option("--nei", "nei_path", required=True, type=click.Path(),
              help="NEI-only dataset from an NEI-specialized generator.")
@click.option("--out", required=True, type=click.Path())
def compose_cmd(method, full_path, two_label_path, nei_path, out):
    """Compose a fine-tuning dataset with one of the three methods."""
    full = read_dataset(full_path)
    two_label = read_dataset(two_label_path)
    nei = read_dataset(nei_path)
    result = compose(CompositionMethod.parse(method), full, two_label, nei)
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(result, out_path)
    counts = {label.value: count for label, count in label_counts(result).items()}
    _write_manifest("compose", {"method": method, "full": str(full_path),
                                "two_label": str(two_label_path), "nei": str(nei_path),
                                "out": str(out)},
                    [Path(full_path), Path(two_label_path), Path(nei_path)], [out_path])
    click.echo(f"composed {len(result)} records {counts} -> {out}")


@cli.command()
@click.option("--llm-test", "llm_path", required=True, type=click.Path())
@click.option("--human-test", "human_path", required=True, type=click.Path())
@click.option("--regime", default="both", show_default=True,
              type=click.Choice(["both", "3-label", "2-label"]))
@click.option("--support", type=float, default=0.5, show_default=True,
              help="Overlap classifier: Jaccard >= support predicts Supported.")
@click.option("--refute", type=float, default=0.15, show_default=True,
              help="Overlap classifier: Jaccard < refute predicts NEI.")
@click.option("--classifier-cmd", default=None,
              help="External classifier command (line-delimited JSON protocol).")
@click.option("--out", required=True, type=click.Path())
def evaluate(llm_path, human_path, regime, support, refute, classifier_cmd, out):
    """Compare classifiers on LLM-generated vs human test sets."""
    llm_testset = read_dataset(llm_path)
    human_testset = read_dataset(human_path)
    regimes = [Regime.THREE_LABEL, Regime.TWO_LABEL] if regime == "both" else [Regime.parse(regime)]
    classifiers = [baseline_overlap_classifier((support, refute))]
    external = None
    if classifier_cmd:
        external = SubprocessClassifier(shlex.split(classifier_cmd))
        classifiers.append(external)
    try:
        report = compare(classifiers, llm_testset, human_testset, regimes)
    finally:
        if external is not None:
            external.close()
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(report.to_csv(), encoding="utf-8")
    _write_manifest("evaluate", {"llm_test": str(llm_path), "human_test": str(human_path),
                                 "regime": regime, "support": support, "refute": refute,
                                 "out": str(out)},
                    [Path(llm_path), Path(human_path)], [out_path])
    click.echo(report.format_table())
    click.echo(f"report -> {out}")


@cli.command("annotate-serve")
@click.option("--dataset", "dataset_path", required=True, type=click.Path())
@click.option("--roster", required=True, help="Comma-separated annotator ids.")
@click.option("--bind", default="127.0.0.1:8400", show_default=True)
@click.option("--state", "state_path", required=True, type=click.Path())
@click.option("--n-annotators", type=int, default=None,
              help="Judges per item (default: roster size).")
@click.option("--sample-n", type=int, default=None,
              help="Review-sample size (default: annotate every record).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--static-dir", type=click.Path(), default=None,
              help="Frontend bundle directory served at /.")
def annotate_serve(dataset_path, roster, bind, state_path, n_annotators, sample_n, seed, static_dir):
    """Run the human-annotation HTTP service."""
    records = read_dataset(dataset_path)
    annotators = [a.strip() for a in roster.split(",") if a.strip()]
    _write_manifest("annotate-serve", {"dataset": str(dataset_path), "roster": roster,
                                       "bind": bind, "state": str(state_path),
                                       "n_annotators": n_annotators, "sample_n": sample_n,
                                       "seed": seed},
                    [Path(dataset_path)], [Path(state_path)])
    serve_annotation(
        records, annotators, bind=bind, state_path=state_path,
        n_annotators=n_annotators, sample_n=sample_n, seed=seed, static_dir=static_dir,
    )


@cli.command()
@click.option("--state", "state_path", required=True, type=click.Path(),
              help="Judgment JSONL written by the annotation service.")
@click.option("--n-annotators", type=int, required=True)
@click.option("--out", type=click.Path(), default=None)
def kappa(state_path, n_annotators, out):
    """Fleiss kappa per criterion (and pooled) over completed items."""
    judgments = _read_judgments(state_path)
    matrix = build_matrix(judgments, n_annotators)
    values = {criterion: fleiss_kappa(matrix, criterion) for criterion in CRITERIA}
    pooled = pooled_kappa(matrix)
    for criterion, value in values.items():
        click.echo(f"{criterion}: {value:.4f}")
    click.echo(f"pooled: {pooled:.4f}")
    if out:
        payload = {"criteria": {k: round(v, 6) for k, v in values.items()},
                   "pooled": round(pooled, 6),
                   "n_items": len(matrix.rows[CRITERIA[0]]),
                   "n_annotators": n_annotators}
        Path(out).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                             encoding="utf-8")
        _write_manifest("kappa", {"state": str(state_path), "n_annotators": n_annotators,
                                  "out": str(out)},
                        [Path(state_path)], [Path(out)])


def _read_judgments(path: str | Path) -> list[CriteriaJudgment]:
    judgments = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                judgments.append(CriteriaJudgment.from_json(json.loads(line)))
    if not judgments:
        raise ValidationError(f"no judgments in {path}")
    return judgments


@cli.command()
@click.option("--dataset", "dataset_path", type=click.Path(), default=None,
              help="Claim dataset: renders the linguistics figure + CSV.")
@click.option("--unit", type=click.Choice(["character", "syllable", "word"]),
              default="character", show_default=True)
@click.option("--eval-csv", "eval_csv", type=click.Path(), default=None,
              help="Existing evaluation CSV: renders the comparison figure.")
@click.option("--state", "state_path", type=click.Path(), default=None,
              help="Judgment log: renders the criteria figure + CSV (needs --dataset).")
@click.option("--n-annotators", type=int, default=None)
@click.option("--out-dir", required=True, type=click.Path())
def report(dataset_path, unit, eval_csv, state_path, n_annotators, out_dir):
    """Render figures next to the delimited outputs."""
    from .report import render_criteria_figure, render_eval_figure, render_lingstats_figure

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []
    inputs: list[Path] = []

    if dataset_path:
        records = read_dataset(dataset_path)
        ling = dataset_report(records, unit=unit)
        csv_path = out / "lingstats.csv"
        csv_path.write_text(ling.to_csv(), encoding="utf-8")
        outputs += [csv_path, render_lingstats_figure(ling, out / "lingstats.png")]
        inputs.append(Path(dataset_path))

    if eval_csv:
        rows = _eval_rows_from_csv(eval_csv)
        outputs.append(render_eval_figure(SimpleNamespace(rows=rows), out / "eval.png"))
        inputs.append(Path(eval_csv))

    if state_path:
        if not dataset_path:
            raise ValidationError("--state needs --dataset to resolve task metadata")
        judgments = _read_judgments(state_path)
        records = read_dataset(dataset_path)
        tasks_by_id = {f"task-{r.id}": AnnotationTask(task_id=f"task-{r.id}", record=r)
                       for r in records}
        groups = criteria_summary(judgments, tasks_by_id)
        crit_csv = out / "criteria.csv"
        with crit_csv.open("w", encoding="utf-8", newline="") as fh:
            writer = csv_module.writer(fh, lineterminator="\n")
            writer.writerow(["model", "stage", "n_judgments"] + [f"{c}_pct" for c in CRITERIA])
            for g in groups:
                writer.writerow([g["model"], g["stage"], g["n_judgments"]]
                                + [g[f"{c}_pct"] for c in CRITERIA])
        outputs += [crit_csv, render_criteria_figure(groups, out / "criteria.png")]
        if n_annotators:
            matrix = build_matrix(judgments, n_annotators)
            agreement_path = out / "agreement.json"
            agreement_path.write_text(
                json.dumps({"criteria": {c: round(fleiss_kappa(matrix, c), 6) for c in CRITERIA},
                            "pooled": round(pooled_kappa(matrix), 6)},
                           sort_keys=True, indent=2) + "\n",
                encoding="utf-8",
            )
            outputs.append(agreement_path)
        inputs.append(Path(state_path))

    if not outputs:
        raise ValidationError("nothing to report: pass --dataset, --eval-csv and/or --state")
    _write_manifest("report", {"dataset": dataset_path, "eval_csv": eval_csv,
                               "state": state_path, "unit": unit, "out_dir": str(out_dir)},
                    inputs, outputs)
    for path in outputs:
        click.echo(f"wrote {path}")


def _eval_rows_from_csv(path: str | Path) -> list[SimpleNamespace]:
    rows = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for record in csv_module.DictReader(fh):
            rows.append(
                SimpleNamespace(
                    classifier=record["classifier"],
                    test_set=record["test_set"],
                    regime=SimpleNamespace(value=record["regime"]),
                    metrics=SimpleNamespace(
                        accuracy=float(record["accuracy"]),
                        macro_f1=float(record["macro_f1"]),
                    ),
                )
            )
    if not rows:
        raise ValidationError(f"no rows in evaluation CSV {path}")
    return rows


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except (click.UsageError, ValidationError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except ToolkitError as exc:
        click.echo(f"runtime failure: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"io failure: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
