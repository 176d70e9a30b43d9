"""Prediction, metrics (against a brute-force oracle), case studies and
template search."""

from __future__ import annotations

import random

import pytest

from connprompt import (
    MockScorer,
    PredictionRecord,
    ReferenceScorer,
    RelationInstance,
    RelationType,
    TrainConfig,
    builtin_templates,
    builtin_verbalizer,
    case_study,
    evaluate,
    predict,
    predict_all,
    predict_pair,
    template_search,
)
from connprompt.corpus import SchemeId, SenseLabel
from connprompt.errors import DataError
from connprompt.evaluation import (
    case_study_tsv,
    metrics_from_records,
    template_search_tsv,
)
from conftest import make_separable_corpus


def _implicit(sense: str, connective: str | None = None) -> RelationInstance:
    return RelationInstance("wsj_2101", 21, RelationType.IMPLICIT, "a", "b",
                            connective, (sense,))


def brute_force_metrics(gold: list[str], pred: list[str], labels: list[str]):
    """Independent oracle: per-class stats from direct pair scans."""
    accuracy = sum(g == p for g, p in zip(gold, pred)) / len(gold)
    f1 = {}
    for name in labels:
        tp = sum(1 for g, p in zip(gold, pred) if g == name and p == name)
        fp = sum(1 for g, p in zip(gold, pred) if g != name and p == name)
        fn = sum(1 for g, p in zip(gold, pred) if g == name and p != name)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1[name] = (
            2 * precision * recall / (precision + recall) if precision + recall else 0.0
        )
    macro = sum(f1.values()) / len(labels)
    return accuracy, f1, macro


def _records(gold: list[str], pred: list[str], labels: list[SenseLabel]):
    by_name = {l.canonical_name: l for l in labels}
    return [
        PredictionRecord(None, "tok", by_name[p], by_name[g]) for g, p in zip(gold, pred)
    ]


class TestPredict:
    def test_highest_scoring_word_maps_to_its_label(self):
        verb = builtin_verbalizer("pdtb-second")
        scorer = MockScorer({"because": 2.0, "but": 1.0})
        record = predict(_implicit("Expansion.Conjunction"), builtin_templates()["t6"],
                         verb, scorer)
        assert record.predicted_token == "because"
        assert record.predicted_label.canonical_name == "Contingency.Cause"
        assert record.gold_label.canonical_name == "Expansion.Conjunction"

    def test_tie_breaks_by_scheme_then_set_order(self):
        verb = builtin_verbalizer("pdtb-second")
        scorer = MockScorer({"but": 2.0, "because": 2.0})
        outcomes = {
            predict(_implicit("Expansion.List"), builtin_templates()["t6"], verb,
                    scorer).predicted_token
            for _ in range(5)
        }
        # Comparison.Contrast precedes Contingency.Cause in scheme order
        assert outcomes == {"but"}

    def test_all_equal_scores_pick_first_scheme_label(self):
        verb = builtin_verbalizer("pdtb-second")
        record = predict(_implicit("Expansion.List"), builtin_templates()["t6"], verb,
                         MockScorer())
        assert record.predicted_label.canonical_name == "Comparison.Concession"
        assert record.predicted_token == "although"

    def test_affine_transforms_do_not_change_prediction(self):
        verb = builtin_verbalizer("pdtb-second")
        rng = random.Random(23)
        base = {w: rng.uniform(-3, 3) for w in verb.all_answers()}
        for _ in range(10):
            scale = rng.uniform(0.1, 9.0)
            shift = rng.uniform(-50, 50)
            transformed = {w: scale * v + shift for w, v in base.items()}
            a = predict(_implicit("Expansion.List"), builtin_templates()["t6"], verb,
                        MockScorer(base))
            b = predict(_implicit("Expansion.List"), builtin_templates()["t6"], verb,
                        MockScorer(transformed))
            assert a.predicted_token == b.predicted_token

    def test_unresolvable_instance_rejected(self):
        verb = builtin_verbalizer("pdtb-second")
        with pytest.raises(DataError):
            predict(_implicit("Contingency.Condition"), builtin_templates()["t6"],
                    verb, MockScorer())

    def test_predict_pair_needs_no_annotation(self):
        verb = builtin_verbalizer("pdtb-second")
        token, label, scores = predict_pair("It rained", "the game was cancelled",
                                            builtin_templates()["t6"], verb,
                                            MockScorer({"because": 1.0}))
        assert token == "because"
        assert label.canonical_name == "Contingency.Cause"

    def test_predict_all_skips_unresolvable_and_keeps_order(self):
        verb = builtin_verbalizer("pdtb-second")
        instances = [
            _implicit("Comparison.Contrast"),
            _implicit("Contingency.Condition"),  # excluded from the scheme
            _implicit("Expansion.List"),
        ]
        records = predict_all(instances, builtin_templates()["t6"], verb, MockScorer())
        assert [r.gold_label.canonical_name for r in records] == [
            "Comparison.Contrast", "Expansion.List",
        ]

    def test_parallel_prediction_matches_serial(self):
        train, dev, test, verb = make_separable_corpus(110, 22, 66, seed=12)
        scorer = ReferenceScorer(seed=0)
        from connprompt import fit
        fit(train, dev, builtin_templates()["t6"], verb, scorer,
            TrainConfig(seed=0, max_epochs=1))
        serial = predict_all(test, builtin_templates()["t6"], verb, scorer, jobs=1)
        parallel = predict_all(test, builtin_templates()["t6"], verb, scorer, jobs=4)
        assert [r.predicted_token for r in serial] == [r.predicted_token for r in parallel]


class TestEvaluate:
    def test_all_correct(self):
        verb = builtin_verbalizer("pdtb-second")
        instances = [_implicit("Contingency.Cause") for _ in range(3)]
        report = evaluate(instances, builtin_templates()["t6"], verb,
                          MockScorer({"because": 5.0}))
        assert report.accuracy == 1.0
        assert report.per_class_f1["Contingency.Cause"] == 1.0

    def test_four_case_example(self):
        labels = [SenseLabel(SchemeId.CONLL15, n) for n in ("A", "B")]
        records = _records(["A", "A", "B", "B"], ["A", "B", "B", "B"], labels)
        report = metrics_from_records(records, labels)
        assert report.accuracy == pytest.approx(0.75)
        assert report.per_class_f1["A"] == pytest.approx(2 / 3)
        assert report.per_class_f1["B"] == pytest.approx(0.8)
        assert report.macro_f1 == pytest.approx((2 / 3 + 0.8) / 2)

    def test_zero_support_class_lowers_macro(self):
        labels = [SenseLabel(SchemeId.CONLL15, n) for n in ("A", "B", "C")]
        records = _records(["A", "B"], ["A", "B"], labels)
        report = metrics_from_records(records, labels)
        assert report.per_class_f1["C"] == 0.0
        assert report.macro_f1 == pytest.approx(2 / 3)

    def test_confusion_margins_match_supports_and_prediction_counts(self):
        rng = random.Random(31)
        labels = [SenseLabel(SchemeId.CONLL15, f"L{i}") for i in range(6)]
        names = [l.canonical_name for l in labels]
        gold = [rng.choice(names) for _ in range(300)]
        pred = [rng.choice(names) for _ in range(300)]
        report = metrics_from_records(_records(gold, pred, labels), labels)
        for i, name in enumerate(names):
            assert sum(report.confusion[i]) == gold.count(name) == report.support[name]
            assert sum(row[i] for row in report.confusion) == pred.count(name)

    def test_matches_brute_force_oracle_on_random_sets(self):
        rng = random.Random(37)
        for _ in range(200):
            k = rng.randint(2, 15)
            labels = [SenseLabel(SchemeId.CONLL15, f"L{i}") for i in range(k)]
            names = [l.canonical_name for l in labels]
            n = rng.randint(1, 120)
            gold = [rng.choice(names) for _ in range(n)]
            pred = [rng.choice(names) for _ in range(n)]
            report = metrics_from_records(_records(gold, pred, labels), labels)
            accuracy, f1, macro = brute_force_metrics(gold, pred, names)
            assert report.accuracy == pytest.approx(accuracy, abs=1e-12)
            assert report.macro_f1 == pytest.approx(macro, abs=1e-12)
            for name in names:
                assert report.per_class_f1[name] == pytest.approx(f1[name], abs=1e-12)

    def test_zero_resolvable_instances_is_an_error(self):
        verb = builtin_verbalizer("pdtb-second")
        with pytest.raises(DataError):
            evaluate([_implicit("Contingency.Condition")], builtin_templates()["t6"],
                     verb, MockScorer())

    def test_report_serializations(self):
        verb = builtin_verbalizer("pdtb-second")
        report = evaluate([_implicit("Contingency.Cause")], builtin_templates()["t6"],
                          verb, MockScorer({"because": 5.0}))
        payload = report.to_dict()
        assert len(payload["per_class"]) == 11
        assert payload["confusion"]["labels"] == [
            l.canonical_name for l in verb.scheme.labels
        ]
        text = report.to_text()
        assert "macro-f1" in text
        tsv = report.confusion_tsv()
        assert tsv.splitlines()[0].startswith("gold\\pred\t")


class TestCaseStudy:
    def test_counts_grouped_and_ordered(self):
        verb = builtin_verbalizer("pdtb-second")
        labels = verb.scheme
        cause = labels.by_name("Contingency.Cause")
        conj = labels.by_name("Expansion.Conjunction")
        rest = labels.by_name("Expansion.Restatement")
        prag = labels.by_name("Contingency.Pragmatic cause")
        records = (
            [PredictionRecord(None, "because", cause, prag)] * 3
            + [PredictionRecord(None, "and", conj, prag)] * 2
            + [PredictionRecord(None, "as", cause, prag)]
            + [PredictionRecord(None, "indeed", rest, prag)]
        )
        rows = case_study(records, gold_label=prag)
        assert [(r.mapped_label, r.predicted_connective, r.count) for r in rows] == [
            ("Contingency.Cause", "because", 3),
            ("Expansion.Conjunction", "and", 2),
            ("Contingency.Cause", "as", 1),
            ("Expansion.Restatement", "indeed", 1),
        ]
        assert sum(r.count for r in rows) == len(records)
        tsv = case_study_tsv(rows)
        assert tsv.splitlines()[1] == "Contingency.Cause\tbecause\t3"

    def test_empty_input_empty_table(self):
        assert case_study([]) == []

    def test_single_cluster(self):
        verb = builtin_verbalizer("pdtb-second")
        cause = verb.scheme.by_name("Contingency.Cause")
        records = [PredictionRecord(None, "because", cause, cause)] * 4
        rows = case_study(records)
        assert len(rows) == 1 and rows[0].count == 4


class TestTemplateSearch:
    def test_constant_scorer_ties_all_templates(self):
        _, dev, _, verb = make_separable_corpus(11, 33, 0, seed=13)
        templates = {tid: t for tid, t in builtin_templates().items()
                     if tid.startswith("t")}
        results = template_search(templates, [], dev, verb, MockScorer, TrainConfig())
        accuracies = {r.dev_top_accuracy for r in results}
        assert len(accuracies) == 1
        assert [r.template_id for r in results] == sorted(templates)

    def test_trainable_scorer_is_fit_per_template(self):
        train, dev, _, verb = make_separable_corpus(66, 22, 0, seed=14)
        templates = {"t1": builtin_templates()["t1"], "t6": builtin_templates()["t6"]}
        results = template_search(
            templates, train, dev, verb,
            lambda: ReferenceScorer(seed=0), TrainConfig(seed=0, max_epochs=1),
        )
        assert all(r.dev_top_accuracy is not None for r in results)
        assert results[0].dev_top_accuracy >= results[-1].dev_top_accuracy

    def test_failing_template_ranked_last_with_note(self):
        import dataclasses

        train, dev, _, verb = make_separable_corpus(44, 22, 0, seed=15)
        train = [dataclasses.replace(i, connective=None) for i in train]
        templates = {
            "t6": builtin_templates()["t6"],
            "pedrr": builtin_templates()["pedrr"],  # data without connectives
        }
        results = template_search(
            templates, train, dev, verb,
            lambda: ReferenceScorer(seed=0), TrainConfig(seed=0, max_epochs=1),
        )
        assert results[-1].template_id == "pedrr"
        assert results[-1].dev_top_accuracy is None
        assert results[-1].note
        tsv = template_search_tsv(results)
        assert tsv.splitlines()[0] == "template_id\tdev_top_accuracy\tnote"
