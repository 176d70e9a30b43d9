"""Shared fixtures: synthetic keyword-separable corpora and tiny helpers."""

from __future__ import annotations

import random

from connprompt import RelationInstance, RelationType, builtin_verbalizer

FILLERS = (
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
    "iota", "kappa", "lam", "mu", "nu", "xi", "omicron", "pi", "rho",
    "sigma", "tau", "upsilon",
)

_TRAIN_SECTIONS = (2, 3, 4, 5, 6, 7)
_DEV_SECTIONS = (0, 1)
_TEST_SECTIONS = (21, 22)


def label_marker(label_name: str) -> str:
    """A unique keyword derived from the label, e.g. 'causemarker'."""
    return label_name.split(".")[-1].replace(" ", "").lower() + "marker"


def make_separable_corpus(
    n_train: int = 440,
    n_dev: int = 80,
    n_test: int = 80,
    seed: int = 7,
    verbalizer_id: str = "pdtb-second",
):
    """Synthetic implicit instances whose arguments carry one marker word
    per sense label, so a bag-of-words scorer can separate them.

    Annotated connectives are deliberately outside the answer sets (the
    word 'when'), exercising the first-element fallback for gold answers.
    """
    rng = random.Random(seed)
    verb = builtin_verbalizer(verbalizer_id)
    labels = list(verb.scheme.labels)

    def build(count: int, sections: tuple[int, ...]) -> list[RelationInstance]:
        out = []
        for i in range(count):
            label = labels[i % len(labels)]
            marker = label_marker(label.canonical_name)
            arg1 = " ".join(rng.sample(FILLERS, 3) + [marker])
            arg2 = " ".join([marker] + rng.sample(FILLERS, 3))
            section = rng.choice(sections)
            out.append(
                RelationInstance(
                    doc_id=f"wsj_{section:02d}{i % 100:02d}",
                    section=section,
                    rel_type=RelationType.IMPLICIT,
                    arg1=arg1,
                    arg2=arg2,
                    connective="when",
                    senses=(label.canonical_name,),
                )
            )
        return out

    return (
        build(n_train, _TRAIN_SECTIONS),
        build(n_dev, _DEV_SECTIONS),
        build(n_test, _TEST_SECTIONS),
        verb,
    )
