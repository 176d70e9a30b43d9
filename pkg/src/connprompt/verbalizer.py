"""Answer sets: the label-to-connective mappings that close the cloze loop.

An answer set is an ordered list of candidate words for one sense label;
its first element doubles as the fallback gold word for instances whose
annotated connective is not in the set. Sets within one verbalizer must be
pairwise disjoint so a predicted word maps back to exactly one label.

Besides the built-in tables, answer sets can be induced from annotated
training data by connective frequency (most frequent, least ambiguous,
single-token candidates per label).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import (
    PDTB_SECOND11,
    PDTB_SECOND_EXPLICIT,
    PDTB_TOP4,
    PDTB_TOP_EXPLICIT,
    CONLL15,
    RelationInstance,
    SchemeId,
    SenseLabel,
    SenseScheme,
    resolve_gold_sense,
)
from .errors import (
    DomainError,
    InductionError,
    ParseError,
    SchemaError,
    UnmappedAnswerError,
)


def canonical_answer(word: str) -> str:
    return word.strip().lower()


@dataclass(frozen=True)
class AnswerSet:
    """Ordered candidate words for one label; answers[0] is the fallback."""

    label: SenseLabel
    answers: tuple[str, ...]

    def __post_init__(self):
        answers = tuple(canonical_answer(a) for a in self.answers)
        object.__setattr__(self, "answers", answers)
        if not answers:
            raise SchemaError("answers", f"empty answer set for {self.label}")
        if len(set(answers)) != len(answers):
            raise SchemaError("answers", f"duplicate answer word in set for {self.label}")


class Verbalizer:
    """One AnswerSet per scheme label, plus the reverse word-to-label map.

    The built-ins and everything induce_answer_sets produces are pairwise
    disjoint; a hand-written file may not be, which validate() reports.
    Until fixed, a duplicated word maps to the first label (in scheme
    order) that claims it, keeping answer mapping deterministic.
    """

    def __init__(self, scheme: SenseScheme, sets: Sequence[AnswerSet]):
        by_label = {aset.label: aset for aset in sets}
        missing = [l.canonical_name for l in scheme.labels if l not in by_label]
        if missing:
            raise SchemaError("sets", f"labels without an answer set: {missing}")
        extra = [a.label.canonical_name for a in sets if a.label not in set(scheme.labels)]
        if extra:
            raise SchemaError("sets", f"answer sets for labels outside the scheme: {extra}")
        self.scheme = scheme
        self.sets: dict[SenseLabel, AnswerSet] = {
            label: by_label[label] for label in scheme.labels
        }
        self._word_to_label: dict[str, SenseLabel] = {}
        for label in scheme.labels:
            for word in self.sets[label].answers:
                self._word_to_label.setdefault(word, label)

    def answers_for(self, label: SenseLabel) -> tuple[str, ...]:
        return self.sets[label].answers

    def all_answers(self) -> tuple[str, ...]:
        """Union of all sets, in scheme-label order then set order."""
        out = []
        for label in self.scheme.labels:
            for word in self.sets[label].answers:
                if word not in out:
                    out.append(word)
        return tuple(out)

    def label_of(self, answer_word: str) -> SenseLabel:
        word = canonical_answer(answer_word)
        try:
            return self._word_to_label[word]
        except KeyError:
            raise UnmappedAnswerError(answer_word) from None


def label_of(verbalizer: Verbalizer, answer_word: str) -> SenseLabel:
    return verbalizer.label_of(answer_word)


def gold_answer(
    instance: RelationInstance, verbalizer: Verbalizer, gold_label: SenseLabel
) -> str:
    """Gold answer word for training: the annotated connective when it is in
    the gold label's set, otherwise that set's first element."""
    answers = verbalizer.answers_for(gold_label)
    if instance.connective is not None:
        conn = canonical_answer(instance.connective)
        if conn in answers:
            return conn
    return answers[0]


def derive_top_level(verbalizer_second: Verbalizer) -> Verbalizer:
    """Union the second-level sets per top-level parent, preserving row order."""
    second_to_top = {
        SchemeId.PDTB_SECOND11: PDTB_TOP4,
        SchemeId.PDTB_SECOND_EXPLICIT: PDTB_TOP_EXPLICIT,
    }
    top_scheme = second_to_top.get(verbalizer_second.scheme.scheme_id)
    if top_scheme is None:
        raise DomainError(
            f"cannot derive top level from scheme {verbalizer_second.scheme.scheme_id.value}"
        )
    merged: dict[SenseLabel, list[str]] = {label: [] for label in top_scheme.labels}
    for second_label in verbalizer_second.scheme.labels:
        parent = second_label.parent
        if parent is None:
            raise DomainError(f"label {second_label} has no top-level parent")
        top_label = top_scheme.by_name(parent.canonical_name)
        bucket = merged[top_label]
        for word in verbalizer_second.answers_for(second_label):
            if word not in bucket:
                bucket.append(word)
    sets = [AnswerSet(label, tuple(words)) for label, words in merged.items()]
    return Verbalizer(top_scheme, sets)


def _sets_from_table(scheme: SenseScheme, table: dict[str, tuple[str, ...]]) -> Verbalizer:
    sets = [AnswerSet(scheme.by_name(name), words) for name, words in table.items()]
    return Verbalizer(scheme, sets)


_PDTB_SECOND_TABLE = {
    "Comparison.Concession": ("although", "nevertheless"),
    "Comparison.Contrast": ("but", "however"),
    "Contingency.Cause": ("because", "as", "so", "consequently", "thus"),
    "Contingency.Pragmatic cause": ("since",),
    "Expansion.Alternative": ("instead", "rather", "or"),
    "Expansion.Conjunction": ("and", "also", "furthermore"),
    "Expansion.Instantiation": ("instance", "example"),
    "Expansion.List": ("first",),
    "Expansion.Restatement": ("indeed", "specifically"),
    "Temporal.Asynchronous": ("then", "subsequently", "previously", "earlier", "after"),
    "Temporal.Synchrony": ("meanwhile",),
}

_CONLL15_TABLE = {
    "Comparison.Concession": ("although", "nevertheless"),
    "Comparison.Contrast": ("but", "however"),
    "Contingency.Cause.Reason": ("because", "as"),
    "Contingency.Cause.Result": ("so", "thus", "consequently"),
    "Contingency.Condition": ("if",),
    "Expansion.Alternative": ("unless", "or"),
    "Expansion.Alternative.Chosen alternative": ("instead",),
    "Expansion.Conjunction": ("and", "also", "furthermore"),
    "Expansion.Exception": ("rather",),
    "Expansion.Instantiation": ("instance", "example"),
    "Expansion.Restatement": ("specifically",),
    "Temporal.Asynchronous.Precedence": ("then", "subsequently"),
    "Temporal.Asynchronous.Succession": ("previously", "earlier", "after"),
    "Temporal.Synchrony": ("meanwhile",),
    "EntRel": ("none",),
}

_PIDRP_TOP_TABLE = {
    "Comparison": ("comparison",),
    "Contingency": ("contingency",),
    "Expansion": ("expansion",),
    "Temporal": ("temporal",),
}

# Relation words for the explicit variant; labels whose own name is not a
# single token use a synonym or subtype word instead.
_PEDRR_SECOND_TABLE = {
    "Comparison.Concession": ("concession",),
    "Comparison.Contrast": ("contrast",),
    "Contingency.Cause": ("cause",),
    "Contingency.Pragmatic cause": ("justification",),
    "Expansion.Alternative": ("alternative",),
    "Expansion.Conjunction": ("conjunction",),
    "Expansion.Instantiation": ("instance",),
    "Expansion.List": ("list",),
    "Expansion.Restatement": ("repetition",),
    "Temporal.Asynchronous": ("asynchronous",),
    "Temporal.Synchrony": ("simultaneous",),
}


def builtin_verbalizer(verbalizer_id: str) -> Verbalizer:
    """Look up one of the shipped verbalizers by id."""
    try:
        factory = _BUILTINS[verbalizer_id]
    except KeyError:
        valid = ", ".join(sorted(_BUILTINS))
        raise DomainError(f"unknown verbalizer {verbalizer_id!r} (valid: {valid})") from None
    return factory()


_BUILTINS = {
    "pdtb-second": lambda: _sets_from_table(PDTB_SECOND11, _PDTB_SECOND_TABLE),
    "pdtb-top": lambda: derive_top_level(builtin_verbalizer("pdtb-second")),
    "conll15": lambda: _sets_from_table(CONLL15, _CONLL15_TABLE),
    "pidrp-top": lambda: _sets_from_table(PDTB_TOP4, _PIDRP_TOP_TABLE),
    "pedrr-second": lambda: _sets_from_table(PDTB_SECOND_EXPLICIT, _PEDRR_SECOND_TABLE),
    "pedrr-top": lambda: derive_top_level(builtin_verbalizer("pedrr-second")),
}

BUILTIN_VERBALIZER_IDS = tuple(sorted(_BUILTINS))


@dataclass
class ValidationReport:
    """Empty lists mean the verbalizer is usable with the given scorer."""

    disjointness_violations: list[tuple[str, str, str]]  # (word, label, label)
    multi_token_words: list[str]
    empty_labels: list[str]

    def ok(self) -> bool:
        return not (self.disjointness_violations or self.multi_token_words or self.empty_labels)

    def lines(self) -> list[str]:
        out = []
        for word, a, b in self.disjointness_violations:
            out.append(f"disjointness\t{word}\t{a}\t{b}")
        for word in self.multi_token_words:
            out.append(f"multi-token\t{word}")
        for label in self.empty_labels:
            out.append(f"empty-set\t{label}")
        return out


def validate(verbalizer: Verbalizer, scorer) -> ValidationReport:
    """Check disjointness, the single-token constraint and set coverage.

    The single-token check runs in prompt context (the scorer decides what
    that means for its tokenizer, e.g. a preceding space).
    """
    seen: dict[str, SenseLabel] = {}
    disjointness = []
    empty = []
    words: list[str] = []
    owners: list[SenseLabel] = []
    for label in verbalizer.scheme.labels:
        answers = verbalizer.sets[label].answers
        if not answers:
            empty.append(label.canonical_name)
        for word in answers:
            if word in seen and seen[word] != label:
                disjointness.append((word, seen[word].canonical_name, label.canonical_name))
            seen.setdefault(word, label)
            words.append(word)
            owners.append(label)
    flags = scorer.single_token_flags(words)
    multi = [word for word, ok in zip(words, flags) if not ok]
    return ValidationReport(disjointness, multi, empty)


@dataclass
class InductionRow:
    label: str
    word: str
    count: int
    share: float
    status: str  # kept | below-threshold | multi-token | truncated | reassigned


def induce_answer_sets(
    train_instances: Iterable[RelationInstance],
    scheme: SenseScheme,
    scorer,
    max_per_label: int = 5,
    ambiguity_threshold: float = 0.7,
) -> tuple[Verbalizer, list[InductionRow]]:
    """Induce answer sets from annotated connectives by frequency.

    Per label, keep connectives whose occurrences concentrate in that label
    (share >= ambiguity_threshold), that are single tokens for the scorer,
    ranked by in-label frequency and truncated to max_per_label. A word
    surviving under several labels is kept only under its majority label.
    """
    label_counts: dict[SenseLabel, dict[str, int]] = {l: {} for l in scheme.labels}
    word_totals: dict[str, int] = {}
    for inst in train_instances:
        if inst.connective is None:
            continue
        label = resolve_gold_sense(inst, scheme)
        if label is None:
            continue
        word = canonical_answer(inst.connective)
        label_counts[label][word] = label_counts[label].get(word, 0) + 1
        word_totals[word] = word_totals.get(word, 0) + 1

    rows: list[InductionRow] = []
    survivors: dict[SenseLabel, list[tuple[str, int]]] = {}
    all_words = sorted({w for counts in label_counts.values() for w in counts})
    token_ok = dict(zip(all_words, scorer.single_token_flags(all_words))) if all_words else {}

    for label in scheme.labels:
        counts = label_counts[label]
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        kept: list[tuple[str, int]] = []
        for word, count in ranked:
            share = count / word_totals[word]
            if share < ambiguity_threshold:
                rows.append(InductionRow(label.canonical_name, word, count, share, "below-threshold"))
            elif not token_ok[word]:
                rows.append(InductionRow(label.canonical_name, word, count, share, "multi-token"))
            elif len(kept) >= max_per_label:
                rows.append(InductionRow(label.canonical_name, word, count, share, "truncated"))
            else:
                kept.append((word, count))
                rows.append(InductionRow(label.canonical_name, word, count, share, "kept"))
        survivors[label] = kept

    # A word can clear the threshold under several labels when the threshold
    # is <= 0.5; keep it only where it is most frequent.
    owner: dict[str, SenseLabel] = {}
    for label in scheme.labels:
        for word, count in survivors[label]:
            current = owner.get(word)
            if current is None or label_counts[label][word] > label_counts[current][word]:
                owner[word] = label
    sets = []
    for label in scheme.labels:
        words = []
        for word, count in survivors[label]:
            if owner[word] == label:
                words.append(word)
            else:
                rows.append(
                    InductionRow(label.canonical_name, word, count,
                                 count / word_totals[word], "reassigned")
                )
        if not words:
            raise InductionError(label.canonical_name)
        sets.append(AnswerSet(label, tuple(words)))
    return Verbalizer(scheme, sets), rows


def load_verbalizer_file(stream: str | Iterable[str], scheme: SenseScheme) -> Verbalizer:
    """Load a verbalizer from its file format: ``label<TAB>word1,word2,...``."""
    lines = stream.splitlines() if isinstance(stream, str) else stream
    sets = []
    seen: set[str] = set()
    for line_no, line in enumerate(lines, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "\t" not in stripped:
            raise ParseError(line_no, "expected 'label<TAB>word1,word2,...'")
        name, words_field = stripped.split("\t", 1)
        name = name.strip()
        label = scheme.by_name(name)
        if label is None:
            raise ParseError(line_no, f"label {name!r} is not in scheme {scheme.scheme_id.value}")
        if name in seen:
            raise ParseError(line_no, f"duplicate label {name!r}")
        seen.add(name)
        words = tuple(w.strip() for w in words_field.split(",") if w.strip())
        if not words:
            raise ParseError(line_no, f"empty answer set for {name!r}")
        sets.append(AnswerSet(label, words))
    return Verbalizer(scheme, sets)


def dump_verbalizer(verbalizer: Verbalizer) -> str:
    lines = [
        f"{label.canonical_name}\t{','.join(verbalizer.answers_for(label))}"
        for label in verbalizer.scheme.labels
    ]
    return "\n".join(lines) + "\n"
