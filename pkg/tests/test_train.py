"""Loss, training pairs, and the fit loop."""

from __future__ import annotations

import math
import random

import pytest

from connprompt import (
    MockScorer,
    ReferenceScorer,
    RelationInstance,
    RelationType,
    ScoreVector,
    TrainConfig,
    TrainStepConfig,
    builtin_templates,
    builtin_verbalizer,
    fit,
    make_training_pair,
    smoothed_cross_entropy,
)
from connprompt.errors import CapabilityError, ContractError, DataError, PromptError
from connprompt.prompt import RenderedPrompt
from connprompt.train import SelectionMetric
from conftest import make_separable_corpus


def oracle_loss(scores: dict[str, float], gold: str, eps: float) -> float:
    """Independent arithmetic evaluation of -sum q_i ln p_i."""
    z = sum(math.exp(v) for v in scores.values())
    k = len(scores)
    total = 0.0
    for token, value in scores.items():
        p = math.exp(value) / z
        q = eps / k + ((1.0 - eps) if token == gold else 0.0)
        total -= q * math.log(p)
    return total


class TestSmoothedCrossEntropy:
    def test_uniform_scores_give_ln_k(self):
        vec = ScoreVector({c: 0.7 for c in "abcd"})
        assert smoothed_cross_entropy(vec, "a", 0.0) == math.log(4)

    def test_saturated_softmax_drives_loss_to_zero(self):
        vec = ScoreVector({"gold": 1000.0, "o1": 0.0, "o2": 0.0})
        assert smoothed_cross_entropy(vec, "gold", 0.0) <= 1e-6

    def test_two_candidate_smoothed_case(self):
        # frozen from the independent oracle: p=(0.731059, 0.268941), q=(0.975, 0.025)
        vec = ScoreVector({"a": 1.0, "b": 0.0})
        expected = 0.33826168751822283
        assert smoothed_cross_entropy(vec, "a", 0.05) == pytest.approx(expected, abs=1e-12)
        assert oracle_loss({"a": 1.0, "b": 0.0}, "a", 0.05) == pytest.approx(expected, abs=1e-12)

    def test_matches_oracle_on_random_cases(self):
        rng = random.Random(17)
        for _ in range(300):
            k = rng.randint(2, 12)
            scores = {f"w{i}": rng.uniform(-6, 6) for i in range(k)}
            gold = f"w{rng.randrange(k)}"
            eps = rng.choice([0.0, 0.05, 0.2])
            got = smoothed_cross_entropy(ScoreVector(scores), gold, eps)
            assert got == pytest.approx(oracle_loss(scores, gold, eps), abs=1e-9)
            assert got >= 0.0

    def test_gold_missing_is_contract_error(self):
        with pytest.raises(ContractError):
            smoothed_cross_entropy(ScoreVector({"a": 0.0, "b": 0.0}), "c", 0.0)

    def test_single_candidate_rejected(self):
        with pytest.raises(ContractError):
            smoothed_cross_entropy(ScoreVector({"a": 0.0}), "a", 0.0)


class TestMakeTrainingPair:
    def test_in_set_connective_is_gold(self):
        verb = builtin_verbalizer("pdtb-second")
        inst = RelationInstance("wsj_0201", 2, RelationType.IMPLICIT, "a", "b",
                                "because", ("Contingency.Cause.Reason",))
        prompt, gold = make_training_pair(inst, builtin_templates()["t6"], verb)
        assert gold == "because"
        assert "<mask>" in prompt.text

    def test_fallback_gold_for_out_of_set_connective(self):
        verb = builtin_verbalizer("pdtb-second")
        inst = RelationInstance("wsj_0201", 2, RelationType.IMPLICIT, "a", "b",
                                "and", ("Expansion.List",))
        _, gold = make_training_pair(inst, builtin_templates()["t6"], verb)
        assert gold == "first"

    def test_relation_word_gold_for_direct_prediction(self):
        verb = builtin_verbalizer("pidrp-top")
        inst = RelationInstance("wsj_0201", 2, RelationType.IMPLICIT, "a", "b",
                                "but", ("Comparison.Contrast",))
        _, gold = make_training_pair(inst, builtin_templates()["pidrp"], verb)
        assert gold == "comparison"

    def test_unresolvable_instance_is_skip_signal(self):
        verb = builtin_verbalizer("pdtb-second")
        inst = RelationInstance("wsj_0201", 2, RelationType.IMPLICIT, "a", "b",
                                None, ("Contingency.Condition",))
        assert make_training_pair(inst, builtin_templates()["t6"], verb) is None

    def test_explicit_template_needs_connective(self):
        verb = builtin_verbalizer("pedrr-second")
        inst = RelationInstance("wsj_0201", 2, RelationType.EXPLICIT, "a", "b",
                                "but", ("Comparison.Contrast",))
        _, gold = make_training_pair(inst, builtin_templates()["pedrr"], verb)
        assert gold == "contrast"
        bare = RelationInstance("wsj_0201", 2, RelationType.IMPLICIT, "a", "b",
                                None, ("Comparison.Contrast",))
        with pytest.raises(PromptError):
            make_training_pair(bare, builtin_templates()["pedrr"], verb)

    def test_backend_placeholders_forwarded(self):
        verb = builtin_verbalizer("pdtb-second")
        inst = RelationInstance("wsj_0201", 2, RelationType.IMPLICIT, "a", "b",
                                None, ("Contingency.Cause",))
        prompt, _ = make_training_pair(inst, builtin_templates()["t6"], verb,
                                       mask_token="[MASK]", sep_token="[SEP]")
        assert "[MASK]" in prompt.text and "[SEP]" in prompt.text


class TestFit:
    def test_separable_corpus_reaches_dev_accuracy(self):
        train, dev, test, verb = make_separable_corpus(220, 44, 44, seed=2)
        scorer = ReferenceScorer(seed=0)
        run = fit(train, dev, builtin_templates()["t6"], verb, scorer, TrainConfig(seed=0))
        best = max(e.dev_metric for e in run.epochs)
        assert best >= 0.95
        assert run.selected_epoch == min(
            e.epoch for e in run.epochs if e.dev_metric == best
        )

    def test_zero_epochs_returns_untrained_state(self):
        train, dev, _, verb = make_separable_corpus(44, 22, 0, seed=3)
        scorer = ReferenceScorer(seed=0)
        run = fit(train, dev, builtin_templates()["t6"], verb, scorer,
                  TrainConfig(max_epochs=0, seed=0))
        assert run.selected_epoch == 0
        assert run.epochs[0].train_loss is None
        vec = scorer.score_mask(
            RenderedPrompt("anything <mask>", "t"), ["because", "and"]
        )
        assert set(vec.scores.values()) == {0.0}

    def test_same_seed_gives_identical_loss_curves(self):
        train, dev, _, verb = make_separable_corpus(66, 22, 0, seed=4)
        curves = []
        for _ in range(2):
            scorer = ReferenceScorer(seed=0)
            run = fit(train, dev, builtin_templates()["t6"], verb, scorer,
                      TrainConfig(seed=11))
            curves.append([e.train_loss for e in run.epochs])
        assert curves[0] == curves[1]

    def test_different_seed_changes_batch_order(self):
        train, dev, _, verb = make_separable_corpus(66, 22, 0, seed=4)
        losses = []
        for seed in (1, 2):
            scorer = ReferenceScorer(seed=0)
            run = fit(train, dev, builtin_templates()["t6"], verb, scorer,
                      TrainConfig(seed=seed, learning_rate=0.1))
            losses.append([e.train_loss for e in run.epochs])
        assert losses[0] != losses[1]

    def test_empty_train_set_rejected(self):
        _, dev, _, verb = make_separable_corpus(11, 11, 0, seed=5)
        with pytest.raises(DataError):
            fit([], dev, builtin_templates()["t6"], verb, ReferenceScorer(),
                TrainConfig())

    def test_non_trainable_scorer_rejected(self):
        train, dev, _, verb = make_separable_corpus(11, 11, 0, seed=5)
        with pytest.raises(CapabilityError):
            fit(train, dev, builtin_templates()["t6"], verb, MockScorer(), TrainConfig())

    def test_unresolvable_instances_counted_not_fatal(self):
        train, dev, _, verb = make_separable_corpus(22, 11, 0, seed=6)
        stray = RelationInstance("wsj_0202", 2, RelationType.IMPLICIT, "x", "y",
                                 None, ("Contingency.Condition",))
        run = fit(train + [stray], dev, builtin_templates()["t6"], verb,
                  ReferenceScorer(), TrainConfig())
        assert run.skipped_train_instances == 1

    def test_selected_checkpoint_restored(self):
        train, dev, _, verb = make_separable_corpus(110, 22, 0, seed=8)
        scorer = ReferenceScorer(seed=0)
        run = fit(train, dev, builtin_templates()["t6"], verb, scorer,
                  TrainConfig(seed=0, selection_metric=SelectionMetric.SCHEME_DEV_ACCURACY))
        assert run.selected_checkpoint_id == f"epoch-{run.selected_epoch}"
        selected = run.epochs[run.selected_epoch - 1]
        assert selected.dev_metric == max(e.dev_metric for e in run.epochs)

    def test_config_violations_rejected(self):
        train, dev, _, verb = make_separable_corpus(11, 11, 0, seed=5)
        with pytest.raises(ContractError):
            fit(train, dev, builtin_templates()["t6"], verb, ReferenceScorer(),
                TrainConfig(label_smoothing=1.0))


class TestTrainStepLossConsistency:
    def test_train_step_loss_equals_mean_smoothed_ce(self):
        # the scorer's internal objective and the public loss must agree
        scorer = ReferenceScorer()
        texts = ["alpha beta <mask>", "beta gamma <mask>", "alpha <mask>"]
        scorer.prepare(texts)
        prompts = [RenderedPrompt(t, "t") for t in texts]
        golds = ["x", "y", "x"]
        cfg = TrainStepConfig(candidates=("x", "y", "z"), learning_rate=0.2,
                              weight_decay=0.0, label_smoothing=0.05)
        expected = sum(
            smoothed_cross_entropy(
                scorer.score_mask(p, cfg.candidates), g, cfg.label_smoothing
            )
            for p, g in zip(prompts, golds)
        ) / len(prompts)
        loss = scorer.train_step(list(zip(prompts, golds)), cfg)
        assert loss == pytest.approx(expected, abs=1e-12)
