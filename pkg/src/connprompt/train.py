"""Fine-tuning loop: prompts in, label-smoothed cross-entropy down, best
dev-accuracy checkpoint out.

Epoch order is reshuffled from a seeded RNG, the last partial batch is
kept, and the checkpoint with the best dev metric (earliest epoch on ties)
is restored into the scorer when fitting finishes.
"""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Sequence

from . import evaluation
from .corpus import RelationInstance, SenseScheme, resolve_gold_sense
from .errors import CapabilityError, ContractError, DataError, PromptError
from .prompt import RenderedPrompt, Template, render
from .scorer import Scorer, ScoreVector, TrainStepConfig
from .verbalizer import Verbalizer, gold_answer


class SelectionMetric(str, Enum):
    TOP_LEVEL_DEV_ACCURACY = "top-level-dev-accuracy"
    SCHEME_DEV_ACCURACY = "scheme-dev-accuracy"


@dataclass
class TrainConfig:
    learning_rate: float = 1e-5
    weight_decay: float = 1e-4
    batch_size: int = 4
    max_epochs: int = 3
    label_smoothing: float = 0.05
    seed: int = 0
    selection_metric: SelectionMetric = SelectionMetric.TOP_LEVEL_DEV_ACCURACY

    def violations(self) -> list[str]:
        out = []
        if self.learning_rate <= 0:
            out.append(f"learning_rate must be positive, got {self.learning_rate}")
        if self.weight_decay < 0:
            out.append(f"weight_decay must be non-negative, got {self.weight_decay}")
        if self.batch_size < 1:
            out.append(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 0:
            out.append(f"max_epochs must be >= 0, got {self.max_epochs}")
        if not 0.0 <= self.label_smoothing < 1.0:
            out.append(f"label_smoothing must be in [0, 1), got {self.label_smoothing}")
        return out


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float | None
    dev_metric: float


@dataclass
class TrainRun:
    config: dict
    epochs: list[EpochRecord]
    selected_epoch: int
    selected_checkpoint_id: str
    skipped_train_instances: int = 0

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "epochs": [asdict(e) for e in self.epochs],
            "selected_epoch": self.selected_epoch,
            "selected_checkpoint_id": self.selected_checkpoint_id,
            "skipped_train_instances": self.skipped_train_instances,
        }


def smoothed_cross_entropy(scores: ScoreVector, gold: str, label_smoothing: float) -> float:
    """-sum_i q_i ln p_i with p = softmax(scores) and q the smoothed one-hot
    target spread uniformly over the candidate answers."""
    if gold not in scores.scores:
        raise ContractError(f"gold answer {gold!r} is not among the scored candidates")
    k = len(scores.scores)
    if k < 2:
        raise ContractError(f"need at least 2 candidates, got {k}")
    values = list(scores.scores.values())
    high = max(values)
    log_sum = math.log(sum(math.exp(v - high) for v in values))
    eps = label_smoothing
    if eps == 0.0:
        # plain CE: -ln p_gold (exact ln K when all scores are equal)
        return (high - scores[gold]) + log_sum
    log_z = high + log_sum
    loss = 0.0
    for token, value in scores.items():
        q = eps / k + (1.0 - eps if token == gold else 0.0)
        loss -= q * (value - log_z)
    return loss


def make_training_pair(
    instance: RelationInstance,
    template: Template,
    verbalizer: Verbalizer,
    scheme: SenseScheme | None = None,
    mask_token: str | None = None,
    sep_token: str | None = None,
) -> tuple[RenderedPrompt, str] | None:
    """Render one instance and pick its gold answer token.

    Returns None when the instance does not resolve under the scheme (a
    skip signal, not an error). A connective-bearing template on an
    instance without a connective is an error.
    """
    scheme = scheme or verbalizer.scheme
    gold_label = resolve_gold_sense(instance, scheme)
    if gold_label is None:
        return None
    kwargs = {}
    if mask_token is not None:
        kwargs["mask_token"] = mask_token
    if sep_token is not None:
        kwargs["sep_token"] = sep_token
    if template.requires_connective:
        if instance.connective is None:
            raise PromptError(
                f"template {template.template_id!r} needs the instance's connective, "
                f"but {instance.doc_id} has none"
            )
        prompt = render(template, instance.arg1, instance.arg2, instance.connective,
                        source=instance, **kwargs)
    else:
        prompt = render(template, instance.arg1, instance.arg2, source=instance, **kwargs)
    return prompt, gold_answer(instance, verbalizer, gold_label)


def _dev_metric(
    dev_set: Sequence[RelationInstance],
    template: Template,
    verbalizer: Verbalizer,
    scorer: Scorer,
    metric: SelectionMetric,
    jobs: int = 1,
) -> float:
    records = evaluation.predict_all(dev_set, template, verbalizer, scorer, jobs=jobs)
    if not records:
        return 0.0
    if metric is SelectionMetric.TOP_LEVEL_DEV_ACCURACY:
        hits = sum(
            r.predicted_label.top_level().canonical_name == r.gold_label.top_level().canonical_name
            for r in records
        )
    else:
        hits = sum(r.predicted_label == r.gold_label for r in records)
    return hits / len(records)


def fit(
    train_set: Sequence[RelationInstance],
    dev_set: Sequence[RelationInstance],
    template: Template,
    verbalizer: Verbalizer,
    scorer: Scorer,
    config: TrainConfig,
    jobs: int = 1,
) -> TrainRun:
    """Train the scorer and leave it holding the dev-best checkpoint."""
    problems = config.violations()
    if problems:
        raise ContractError("; ".join(problems))
    if not scorer.capabilities().trainable:
        raise CapabilityError("fit requires a trainable scorer")
    if not train_set:
        raise DataError("train set is empty")

    pairs = []
    skipped = 0
    for inst in train_set:
        pair = make_training_pair(inst, template, verbalizer,
                                  mask_token=scorer.mask_token, sep_token=scorer.sep_token)
        if pair is None:
            skipped += 1
        else:
            pairs.append(pair)
    if not pairs:
        raise DataError("no train instance is resolvable under the verbalizer's scheme")

    scorer.prepare(prompt.text for prompt, _ in pairs)
    step_config = TrainStepConfig(
        candidates=verbalizer.all_answers(),
        learning_rate=config.learning_rate,
        weight_decay=config.weight_decay,
        label_smoothing=config.label_smoothing,
    )

    config_echo = asdict(config)
    config_echo["selection_metric"] = config.selection_metric.value

    if config.max_epochs == 0:
        checkpoint_id = scorer.save_checkpoint("epoch-0")
        metric = _dev_metric(dev_set, template, verbalizer, scorer,
                             config.selection_metric, jobs)
        return TrainRun(
            config=config_echo,
            epochs=[EpochRecord(epoch=0, train_loss=None, dev_metric=metric)],
            selected_epoch=0,
            selected_checkpoint_id=checkpoint_id,
            skipped_train_instances=skipped,
        )

    rng = random.Random(config.seed)
    order = list(range(len(pairs)))
    epochs: list[EpochRecord] = []
    for epoch in range(1, config.max_epochs + 1):
        rng.shuffle(order)
        total_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = [pairs[i] for i in order[start : start + config.batch_size]]
            loss = scorer.train_step(batch, step_config)
            total_loss += loss * len(batch)
        scorer.save_checkpoint(f"epoch-{epoch}")
        metric = _dev_metric(dev_set, template, verbalizer, scorer,
                             config.selection_metric, jobs)
        epochs.append(EpochRecord(epoch=epoch, train_loss=total_loss / len(order),
                                  dev_metric=metric))

    best = epochs[0]
    for record in epochs[1:]:
        if record.dev_metric > best.dev_metric:
            best = record
    checkpoint_id = f"epoch-{best.epoch}"
    scorer.load_checkpoint(checkpoint_id)
    return TrainRun(
        config=config_echo,
        epochs=epochs,
        selected_epoch=best.epoch,
        selected_checkpoint_id=checkpoint_id,
        skipped_train_instances=skipped,
    )
