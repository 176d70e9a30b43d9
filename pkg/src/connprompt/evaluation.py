"""Inference and measurement: answer-mapped prediction, accuracy, per-class
F1, Macro-F1, confusion matrices, case studies and template search.

The argmax at the mask is restricted to the verbalizer's answer vocabulary,
so every prediction maps to a label. Ties break by scheme-label order and
then answer-set order, making inference deterministic.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .corpus import RelationInstance, SenseLabel, resolve_gold_sense
from .errors import DataError, ToolkitError
from .prompt import RenderedPrompt, Template, render
from .scorer import Scorer, ScoreVector
from .verbalizer import Verbalizer

_CHUNK = 32


@dataclass
class PredictionRecord:
    instance: RelationInstance
    predicted_token: str
    predicted_label: SenseLabel
    gold_label: SenseLabel
    scores: ScoreVector | None = field(default=None, repr=False)


def _argmax_token(scores: ScoreVector, ordered_candidates: Sequence[str]) -> str:
    best = None
    best_score = None
    for token in ordered_candidates:
        value = scores[token]
        if best_score is None or value > best_score:
            best, best_score = token, value
    return best


def predict_pair(
    arg1: str,
    arg2: str,
    template: Template,
    verbalizer: Verbalizer,
    scorer: Scorer,
    connective: str | None = None,
) -> tuple[str, SenseLabel, ScoreVector]:
    """Classify a bare argument pair (no gold annotation needed)."""
    prompt = render(template, arg1, arg2, connective,
                    mask_token=scorer.mask_token, sep_token=scorer.sep_token)
    candidates = verbalizer.all_answers()
    scores = scorer.score_mask(prompt, candidates)
    token = _argmax_token(scores, candidates)
    return token, verbalizer.label_of(token), scores


def predict(
    instance: RelationInstance,
    template: Template,
    verbalizer: Verbalizer,
    scorer: Scorer,
) -> PredictionRecord:
    """Predict one annotated instance; its gold label comes from the scheme."""
    gold = resolve_gold_sense(instance, verbalizer.scheme)
    if gold is None:
        raise DataError(
            f"instance {instance.doc_id} does not resolve under "
            f"{verbalizer.scheme.scheme_id.value}"
        )
    connective = instance.connective if template.requires_connective else None
    token, label, scores = predict_pair(
        instance.arg1, instance.arg2, template, verbalizer, scorer, connective
    )
    return PredictionRecord(instance, token, label, gold, scores)


def predict_all(
    instances: Sequence[RelationInstance],
    template: Template,
    verbalizer: Verbalizer,
    scorer: Scorer,
    jobs: int = 1,
    keep_scores: bool = False,
) -> list[PredictionRecord]:
    """Predict every resolvable instance, preserving input order.

    Scoring is read-only, so chunks can fan out across threads; results
    are reassembled in order either way.
    """
    resolvable: list[tuple[RelationInstance, SenseLabel, RenderedPrompt]] = []
    for inst in instances:
        gold = resolve_gold_sense(inst, verbalizer.scheme)
        if gold is None:
            continue
        connective = inst.connective if template.requires_connective else None
        prompt = render(template, inst.arg1, inst.arg2, connective,
                        mask_token=scorer.mask_token, sep_token=scorer.sep_token,
                        source=inst)
        resolvable.append((inst, gold, prompt))

    candidates = verbalizer.all_answers()
    chunks = [resolvable[i : i + _CHUNK] for i in range(0, len(resolvable), _CHUNK)]

    def score_chunk(chunk):
        return scorer.score_many([p for _, _, p in chunk], candidates)

    if jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scored = list(pool.map(score_chunk, chunks))
    else:
        scored = [score_chunk(chunk) for chunk in chunks]

    records = []
    for chunk, vectors in zip(chunks, scored):
        for (inst, gold, _prompt), scores in zip(chunk, vectors):
            token = _argmax_token(scores, candidates)
            records.append(
                PredictionRecord(inst, token, verbalizer.label_of(token), gold,
                                 scores if keep_scores else None)
            )
    return records


@dataclass
class MetricsReport:
    """Classification metrics over the full, fixed label inventory.

    Classes with zero predictions and zero gold support keep F1 = 0 by
    convention and still count toward the macro average.
    """

    labels: list[str]
    confusion: list[list[int]]
    accuracy: float
    per_class_precision: dict[str, float]
    per_class_recall: dict[str, float]
    per_class_f1: dict[str, float]
    macro_f1: float
    support: dict[str, int]
    n: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "n": self.n,
            "per_class": {
                label: {
                    "precision": self.per_class_precision[label],
                    "recall": self.per_class_recall[label],
                    "f1": self.per_class_f1[label],
                    "support": self.support[label],
                }
                for label in self.labels
            },
            "confusion": {"labels": self.labels, "matrix": self.confusion},
        }

    def to_text(self) -> str:
        width = max(len(label) for label in self.labels + ["label"])
        lines = [f"{'label'.ljust(width)}  precision  recall     f1       support"]
        for label in self.labels:
            lines.append(
                f"{label.ljust(width)}  "
                f"{self.per_class_precision[label]:9.4f}  "
                f"{self.per_class_recall[label]:9.4f}  "
                f"{self.per_class_f1[label]:7.4f}  "
                f"{self.support[label]:7d}"
            )
        lines.append("")
        lines.append(f"accuracy  {self.accuracy:.4f}  (n={self.n})")
        lines.append(f"macro-f1  {self.macro_f1:.4f}")
        return "\n".join(lines) + "\n"

    def confusion_tsv(self) -> str:
        header = "gold\\pred\t" + "\t".join(self.labels)
        rows = [header]
        for label, row in zip(self.labels, self.confusion):
            rows.append(label + "\t" + "\t".join(str(c) for c in row))
        return "\n".join(rows) + "\n"


def metrics_from_records(
    records: Sequence[PredictionRecord], labels: Sequence[SenseLabel]
) -> MetricsReport:
    names = [label.canonical_name for label in labels]
    index = {name: i for i, name in enumerate(names)}
    matrix = [[0] * len(names) for _ in names]
    for record in records:
        matrix[index[record.gold_label.canonical_name]][
            index[record.predicted_label.canonical_name]
        ] += 1
    n = len(records)
    correct = sum(matrix[i][i] for i in range(len(names)))
    precision: dict[str, float] = {}
    recall: dict[str, float] = {}
    f1: dict[str, float] = {}
    support: dict[str, int] = {}
    for i, name in enumerate(names):
        tp = matrix[i][i]
        gold_total = sum(matrix[i])
        pred_total = sum(row[i] for row in matrix)
        p = tp / pred_total if pred_total else 0.0
        r = tp / gold_total if gold_total else 0.0
        precision[name] = p
        recall[name] = r
        f1[name] = 2 * p * r / (p + r) if p + r else 0.0
        support[name] = gold_total
    return MetricsReport(
        labels=names,
        confusion=matrix,
        accuracy=correct / n if n else 0.0,
        per_class_precision=precision,
        per_class_recall=recall,
        per_class_f1=f1,
        macro_f1=sum(f1.values()) / len(names),
        support=support,
        n=n,
    )


def evaluate(
    instances: Sequence[RelationInstance],
    template: Template,
    verbalizer: Verbalizer,
    scorer: Scorer,
    jobs: int = 1,
) -> MetricsReport:
    """Predict and measure; unresolvable instances are skipped."""
    records = predict_all(instances, template, verbalizer, scorer, jobs=jobs)
    if not records:
        raise DataError("no instance is resolvable under the verbalizer's scheme")
    return metrics_from_records(records, verbalizer.scheme.labels)


@dataclass
class CaseStudyRow:
    mapped_label: str
    predicted_connective: str
    count: int


def case_study(
    records: Sequence[PredictionRecord], gold_label: SenseLabel | None = None
) -> list[CaseStudyRow]:
    """Group predictions by (mapped label, predicted connective), count-desc.

    Typically run over the instances of one gold label to see where they
    end up after answer mapping.
    """
    if gold_label is not None:
        records = [r for r in records if r.gold_label == gold_label]
    counts: dict[tuple[str, str], int] = {}
    for record in records:
        key = (record.predicted_label.canonical_name, record.predicted_token)
        counts[key] = counts.get(key, 0) + 1
    rows = [CaseStudyRow(label, token, count) for (label, token), count in counts.items()]
    rows.sort(key=lambda row: (-row.count, row.mapped_label, row.predicted_connective))
    return rows


def case_study_tsv(rows: Sequence[CaseStudyRow]) -> str:
    lines = ["mapped_label\tpredicted_connective\tcount"]
    lines += [f"{r.mapped_label}\t{r.predicted_connective}\t{r.count}" for r in rows]
    return "\n".join(lines) + "\n"


@dataclass
class TemplateSearchResult:
    template_id: str
    dev_top_accuracy: float | None
    note: str = ""


def _top_level_accuracy(records: Sequence[PredictionRecord]) -> float:
    if not records:
        return 0.0
    hits = sum(
        r.predicted_label.top_level().canonical_name == r.gold_label.top_level().canonical_name
        for r in records
    )
    return hits / len(records)


def template_search(
    templates: dict[str, Template],
    train_set: Sequence[RelationInstance],
    dev_set: Sequence[RelationInstance],
    verbalizer: Verbalizer,
    scorer_factory: Callable[[], Scorer],
    config,
    jobs: int = 1,
) -> list[TemplateSearchResult]:
    """Fit one fresh scorer per template (identical config and seed) and rank
    templates by top-level dev accuracy, descending; ties break by id.

    A template whose run fails is ranked last with the failure note; a
    non-trainable scorer is evaluated as-is (zero-shot).
    """
    from .train import fit  # late import; train builds on this module

    results: list[TemplateSearchResult] = []
    for template_id, template in templates.items():
        scorer = scorer_factory()
        try:
            if scorer.capabilities().trainable:
                fit(train_set, dev_set, template, verbalizer, scorer, config, jobs=jobs)
            records = predict_all(dev_set, template, verbalizer, scorer, jobs=jobs)
            results.append(
                TemplateSearchResult(template_id, _top_level_accuracy(records))
            )
        except ToolkitError as exc:
            results.append(TemplateSearchResult(template_id, None, note=str(exc)))
    results.sort(
        key=lambda r: (r.dev_top_accuracy is None, -(r.dev_top_accuracy or 0.0), r.template_id)
    )
    return results


def template_search_tsv(results: Sequence[TemplateSearchResult]) -> str:
    lines = ["template_id\tdev_top_accuracy\tnote"]
    for r in results:
        acc = "" if r.dev_top_accuracy is None else f"{r.dev_top_accuracy:.6f}"
        lines.append(f"{r.template_id}\t{acc}\t{r.note}")
    return "\n".join(lines) + "\n"
