"""Corpus ingestion, sense schemes, gold-sense resolution and split assignment.

Two JSON-lines input formats are supported: the shared-task style format
(one relation object per line with ``Arg1``/``Arg2`` raw texts, a ``Sense``
list, ``Type`` and ``DocID``) and this toolkit's own normalized record
format (flat fields ``doc_id``, ``section``, ``rel_type``, ``arg1``,
``arg2``, ``connective``, ``senses``). Parsing never mutates shared state,
so instances can be fanned out across workers freely.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator

from .errors import DomainError, ParseError, SchemaError

_WSJ_DOC_RE = re.compile(r"^wsj_(\d{2})\d{2}")


def normalize_ws(text: str) -> str:
    """Collapse internal whitespace runs to single spaces and trim the ends."""
    return " ".join(text.split())


class RelationType(str, Enum):
    IMPLICIT = "Implicit"
    EXPLICIT = "Explicit"
    ENTREL = "EntRel"
    ALTLEX = "AltLex"
    NOREL = "NoRel"


class Split(str, Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"
    BLIND = "blind"
    UNASSIGNED = "unassigned"


class Dataset(str, Enum):
    PDTB = "pdtb"
    CONLL16 = "conll16"


class SchemeId(str, Enum):
    PDTB_TOP4 = "pdtb-top"
    PDTB_SECOND11 = "pdtb-second"
    CONLL15 = "conll15"
    PDTB_TOP_EXPLICIT = "pdtb-top-explicit"
    PDTB_SECOND_EXPLICIT = "pdtb-second-explicit"


@dataclass(frozen=True)
class SenseLabel:
    """One classifiable sense. ``parent`` links second-level to top-level."""

    scheme_id: SchemeId
    canonical_name: str
    parent: "SenseLabel | None" = field(default=None, compare=False)

    def top_level(self) -> "SenseLabel":
        return self.parent if self.parent is not None else self

    def __str__(self) -> str:
        return self.canonical_name


@dataclass(frozen=True)
class SenseScheme:
    """A fixed, ordered label inventory. Order drives confusion-matrix axes
    and deterministic tie-breaking, so it must never change between runs."""

    scheme_id: SchemeId
    labels: tuple[SenseLabel, ...]

    def __post_init__(self):
        expected = _SCHEME_SIZES[self.scheme_id]
        if len(self.labels) != expected:
            raise ValueError(
                f"{self.scheme_id.value} must have {expected} labels, got {len(self.labels)}"
            )

    def by_name(self, canonical_name: str) -> SenseLabel | None:
        return self._index().get(canonical_name)

    def _index(self) -> dict[str, SenseLabel]:
        idx = getattr(self, "_cached_index", None)
        if idx is None:
            idx = {label.canonical_name: label for label in self.labels}
            object.__setattr__(self, "_cached_index", idx)
        return idx


_SCHEME_SIZES = {
    SchemeId.PDTB_TOP4: 4,
    SchemeId.PDTB_SECOND11: 11,
    SchemeId.CONLL15: 15,
    SchemeId.PDTB_TOP_EXPLICIT: 4,
    SchemeId.PDTB_SECOND_EXPLICIT: 11,
}

_TOP_NAMES = ("Comparison", "Contingency", "Expansion", "Temporal")

_SECOND_NAMES = (
    "Comparison.Concession",
    "Comparison.Contrast",
    "Contingency.Cause",
    "Contingency.Pragmatic cause",
    "Expansion.Alternative",
    "Expansion.Conjunction",
    "Expansion.Instantiation",
    "Expansion.List",
    "Expansion.Restatement",
    "Temporal.Asynchronous",
    "Temporal.Synchrony",
)

_CONLL15_NAMES = (
    "Comparison.Concession",
    "Comparison.Contrast",
    "Contingency.Cause.Reason",
    "Contingency.Cause.Result",
    "Contingency.Condition",
    "Expansion.Alternative",
    "Expansion.Alternative.Chosen alternative",
    "Expansion.Conjunction",
    "Expansion.Exception",
    "Expansion.Instantiation",
    "Expansion.Restatement",
    "Temporal.Asynchronous.Precedence",
    "Temporal.Asynchronous.Succession",
    "Temporal.Synchrony",
    "EntRel",
)


def _build_hierarchy(top_id: SchemeId, second_id: SchemeId) -> tuple[SenseScheme, SenseScheme]:
    tops = tuple(SenseLabel(top_id, name) for name in _TOP_NAMES)
    top_by_name = {t.canonical_name: t for t in tops}
    seconds = tuple(
        SenseLabel(second_id, name, parent=top_by_name[name.split(".")[0]])
        for name in _SECOND_NAMES
    )
    return SenseScheme(top_id, tops), SenseScheme(second_id, seconds)


PDTB_TOP4, PDTB_SECOND11 = _build_hierarchy(SchemeId.PDTB_TOP4, SchemeId.PDTB_SECOND11)
PDTB_TOP_EXPLICIT, PDTB_SECOND_EXPLICIT = _build_hierarchy(
    SchemeId.PDTB_TOP_EXPLICIT, SchemeId.PDTB_SECOND_EXPLICIT
)
CONLL15 = SenseScheme(
    SchemeId.CONLL15, tuple(SenseLabel(SchemeId.CONLL15, name) for name in _CONLL15_NAMES)
)

SCHEMES: dict[SchemeId, SenseScheme] = {
    SchemeId.PDTB_TOP4: PDTB_TOP4,
    SchemeId.PDTB_SECOND11: PDTB_SECOND11,
    SchemeId.CONLL15: CONLL15,
    SchemeId.PDTB_TOP_EXPLICIT: PDTB_TOP_EXPLICIT,
    SchemeId.PDTB_SECOND_EXPLICIT: PDTB_SECOND_EXPLICIT,
}


def scheme_by_id(scheme_id: str | SchemeId) -> SenseScheme:
    try:
        return SCHEMES[SchemeId(scheme_id)]
    except ValueError:
        valid = ", ".join(s.value for s in SchemeId)
        raise DomainError(f"unknown scheme {scheme_id!r} (valid: {valid})") from None


# Rewrites applied before matching a first sense against the 15-label
# inventory. Covers the second/third-level merges the shared task performed
# on the original sense hierarchy; anything left unmatched resolves to
# absent rather than erroring.
CONLL15_SENSE_REWRITES: dict[str, str] = {
    "Comparison.Concession.Contra-expectation": "Comparison.Concession",
    "Comparison.Concession.Expectation": "Comparison.Concession",
    "Comparison.Pragmatic concession": "Comparison.Concession",
    "Comparison.Contrast.Juxtaposition": "Comparison.Contrast",
    "Comparison.Contrast.Opposition": "Comparison.Contrast",
    "Comparison.Pragmatic contrast": "Comparison.Contrast",
    "Contingency.Pragmatic cause": "Contingency.Cause.Reason",
    "Contingency.Pragmatic cause.Justification": "Contingency.Cause.Reason",
    "Contingency.Condition.Hypothetical": "Contingency.Condition",
    "Contingency.Condition.General": "Contingency.Condition",
    "Contingency.Condition.Unreal present": "Contingency.Condition",
    "Contingency.Condition.Unreal past": "Contingency.Condition",
    "Contingency.Condition.Factual present": "Contingency.Condition",
    "Contingency.Condition.Factual past": "Contingency.Condition",
    "Contingency.Pragmatic condition": "Contingency.Condition",
    "Contingency.Pragmatic condition.Relevance": "Contingency.Condition",
    "Contingency.Pragmatic condition.Implicit assertion": "Contingency.Condition",
    "Expansion.Alternative.Conjunctive": "Expansion.Alternative",
    "Expansion.Alternative.Disjunctive": "Expansion.Alternative",
    "Expansion.List": "Expansion.Conjunction",
    "Expansion.Restatement.Specification": "Expansion.Restatement",
    "Expansion.Restatement.Equivalence": "Expansion.Restatement",
    "Expansion.Restatement.Generalization": "Expansion.Restatement",
}


@dataclass(frozen=True)
class RelationInstance:
    """One annotated argument pair.

    ``section`` is the WSJ section (0-24), or -1 when unknown (e.g. the
    Wikinews blind data). ``connective`` is annotator-inserted for implicit
    instances and verbatim for explicit ones.
    """

    doc_id: str
    section: int
    rel_type: RelationType
    arg1: str
    arg2: str
    connective: str | None = None
    senses: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "arg1", normalize_ws(self.arg1))
        object.__setattr__(self, "arg2", normalize_ws(self.arg2))
        object.__setattr__(self, "senses", tuple(self.senses))
        if self.connective is not None:
            conn = normalize_ws(self.connective)
            object.__setattr__(self, "connective", conn or None)
        if not self.arg1:
            raise SchemaError("arg1", "empty after whitespace normalization")
        if not self.arg2:
            raise SchemaError("arg2", "empty after whitespace normalization")
        if not -1 <= self.section <= 24:
            raise SchemaError("section", f"out of range -1..24: {self.section}")
        if self.rel_type in (RelationType.IMPLICIT, RelationType.EXPLICIT, RelationType.ENTREL):
            if not self.senses:
                raise SchemaError("senses", f"must be non-empty for {self.rel_type.value}")
        if self.rel_type is RelationType.ENTREL:
            if self.senses != ("EntRel",):
                raise SchemaError("senses", "EntRel instances must carry exactly ['EntRel']")
            if self.connective is not None:
                raise SchemaError("connective", "EntRel instances carry no connective")


def _iter_lines(stream: str | Iterable[str]) -> Iterator[tuple[int, str]]:
    lines = stream.splitlines() if isinstance(stream, str) else stream
    for line_no, line in enumerate(lines, 1):
        line = line.strip()
        if line:
            yield line_no, line


def _raw_text(value, field_name: str) -> str:
    """Accept either a plain string or a span object with a RawText field."""
    if isinstance(value, str):
        return value
    if isinstance(value, dict):
        raw = value.get("RawText")
        if isinstance(raw, str):
            return raw
    raise SchemaError(field_name, "expected a string or an object with RawText")


def _section_from_doc_id(doc_id: str) -> int:
    match = _WSJ_DOC_RE.match(doc_id)
    return int(match.group(1)) if match else -1


def parse_conll16(stream: str | Iterable[str]) -> list[RelationInstance]:
    """Parse shared-task style JSON-lines into instances, preserving order.

    Unknown extra fields are ignored. Raises ParseError for malformed JSON
    and SchemaError (with the line number) for missing/invalid fields.
    """
    instances = []
    for line_no, line in _iter_lines(stream):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, f"malformed JSON ({exc.msg})") from None
        try:
            instances.append(_conll16_record(record))
        except SchemaError as exc:
            raise SchemaError(exc.field, str(exc.args[0]).split(": ", 1)[-1], line_no) from None
    return instances


def _conll16_record(record: dict) -> RelationInstance:
    for name in ("Arg1", "Arg2", "Sense", "Type", "DocID"):
        if name not in record:
            raise SchemaError(name, "missing required field")
    senses = record["Sense"]
    if not isinstance(senses, list) or not all(isinstance(s, str) for s in senses):
        raise SchemaError("Sense", "expected a list of strings")
    try:
        rel_type = RelationType(record["Type"])
    except ValueError:
        raise SchemaError("Type", f"unknown relation type {record['Type']!r}") from None
    connective = None
    if "Connective" in record and record["Connective"] is not None:
        raw = _raw_text(record["Connective"], "Connective").strip()
        connective = raw or None
    doc_id = record["DocID"]
    if not isinstance(doc_id, str):
        raise SchemaError("DocID", "expected a string")
    return RelationInstance(
        doc_id=doc_id,
        section=_section_from_doc_id(doc_id),
        rel_type=rel_type,
        arg1=_raw_text(record["Arg1"], "Arg1"),
        arg2=_raw_text(record["Arg2"], "Arg2"),
        connective=connective,
        senses=tuple(senses),
    )


_NORMALIZED_REQUIRED = ("doc_id", "section", "rel_type", "arg1", "arg2", "senses")


def parse_normalized(stream: str | Iterable[str]) -> list[RelationInstance]:
    """Parse the toolkit's normalized JSON-lines format."""
    instances = []
    for line_no, line in _iter_lines(stream):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, f"malformed JSON ({exc.msg})") from None
        try:
            instances.append(_normalized_record(record))
        except SchemaError as exc:
            raise SchemaError(exc.field, str(exc.args[0]).split(": ", 1)[-1], line_no) from None
    return instances


def _normalized_record(record: dict) -> RelationInstance:
    for name in _NORMALIZED_REQUIRED:
        if name not in record:
            raise SchemaError(name, "missing required field")
    if not isinstance(record["section"], int) or isinstance(record["section"], bool):
        raise SchemaError("section", "expected an integer")
    try:
        rel_type = RelationType(record["rel_type"])
    except ValueError:
        raise SchemaError("rel_type", f"unknown relation type {record['rel_type']!r}") from None
    senses = record["senses"]
    if not isinstance(senses, list) or not all(isinstance(s, str) for s in senses):
        raise SchemaError("senses", "expected a list of strings")
    connective = record.get("connective")
    if connective is not None and not isinstance(connective, str):
        raise SchemaError("connective", "expected a string or null")
    return RelationInstance(
        doc_id=str(record["doc_id"]),
        section=record["section"],
        rel_type=rel_type,
        arg1=str(record["arg1"]),
        arg2=str(record["arg2"]),
        connective=connective,
        senses=tuple(senses),
    )


def serialize_normalized(instances: Iterable[RelationInstance]) -> str:
    """Serialize instances into the normalized format, one object per line.

    Paired with parse_normalized this round-trips byte-for-byte.
    """
    lines = []
    for inst in instances:
        record = {
            "doc_id": inst.doc_id,
            "section": inst.section,
            "rel_type": inst.rel_type.value,
            "arg1": inst.arg1,
            "arg2": inst.arg2,
            "connective": inst.connective,
            "senses": list(inst.senses),
        }
        lines.append(json.dumps(record, ensure_ascii=False))
    return "\n".join(lines) + ("\n" if lines else "")


def assign_split(instance: RelationInstance, dataset: Dataset) -> Split:
    """Deterministic split from (dataset, section).

    PDTB: sections 2-20 train, 0-1 dev, 21-22 test; 23-24 are not part of
    any split and come back as UNASSIGNED. The shared-task corpus keeps
    section 23 as its test set and the Wikinews texts (section -1) as the
    blind set; its train/dev sections follow the usual 2-21/22 organization.
    """
    dataset = Dataset(dataset)
    section = instance.section
    if dataset is Dataset.PDTB:
        if not 0 <= section <= 24:
            raise DomainError(f"PDTB section out of range 0..24: {section}")
        if 2 <= section <= 20:
            return Split.TRAIN
        if section in (0, 1):
            return Split.DEV
        if section in (21, 22):
            return Split.TEST
        return Split.UNASSIGNED
    if section == -1:
        return Split.BLIND
    if section == 23:
        return Split.TEST
    if section == 22:
        return Split.DEV
    if 2 <= section <= 21:
        return Split.TRAIN
    return Split.UNASSIGNED


def resolve_gold_sense(instance: RelationInstance, scheme: SenseScheme) -> SenseLabel | None:
    """Project the instance's FIRST sense string onto the scheme.

    Absence (None) is a valid outcome meaning the instance is excluded
    from that scheme, not an error.
    """
    if not instance.senses:
        raise SchemaError("senses", "instance has no senses to resolve")
    first = instance.senses[0]
    parts = first.split(".")
    if scheme.scheme_id in (SchemeId.PDTB_TOP4, SchemeId.PDTB_TOP_EXPLICIT):
        return scheme.by_name(parts[0])
    if scheme.scheme_id in (SchemeId.PDTB_SECOND11, SchemeId.PDTB_SECOND_EXPLICIT):
        if len(parts) < 2:
            return None
        return scheme.by_name(f"{parts[0]}.{parts[1]}")
    rewritten = CONLL15_SENSE_REWRITES.get(first, first)
    return scheme.by_name(rewritten)


def implicit_task_instances(
    instances: Iterable[RelationInstance], dataset: Dataset
) -> list[RelationInstance]:
    """Filter to the relation types the implicit task classifies.

    The shared-task setting treats EntRel as a 15th class alongside the
    implicit relations; PDTB uses implicit instances only.
    """
    dataset = Dataset(dataset)
    if dataset is Dataset.CONLL16:
        kept = (RelationType.IMPLICIT, RelationType.ENTREL)
    else:
        kept = (RelationType.IMPLICIT,)
    return [inst for inst in instances if inst.rel_type in kept]


@dataclass
class CorpusStats:
    """Counts of resolvable instances grouped by label and split."""

    scheme: SenseScheme
    counts: dict[str, dict[str, int]]
    excluded: int

    def label_total(self, label_name: str) -> int:
        return sum(self.counts.get(label_name, {}).values())

    def split_total(self, split: Split | str) -> int:
        key = Split(split).value
        return sum(per_split.get(key, 0) for per_split in self.counts.values())

    def grand_total(self) -> int:
        return sum(self.label_total(label.canonical_name) for label in self.scheme.labels)

    def to_tsv(self, splits: tuple[Split, ...] = (Split.TRAIN, Split.DEV, Split.TEST)) -> str:
        header = "label\t" + "\t".join(s.value for s in splits)
        rows = [header]
        for label in self.scheme.labels:
            per_split = self.counts.get(label.canonical_name, {})
            cells = "\t".join(str(per_split.get(s.value, 0)) for s in splits)
            rows.append(f"{label.canonical_name}\t{cells}")
        totals = "\t".join(str(self.split_total(s)) for s in splits)
        rows.append(f"Total\t{totals}")
        return "\n".join(rows) + "\n"


def corpus_stats(
    instances: Iterable[RelationInstance],
    scheme: SenseScheme,
    dataset: Dataset = Dataset.PDTB,
) -> CorpusStats:
    """Count instances per resolved label and split.

    Instances the scheme cannot resolve are excluded from the table
    (and reported via ``excluded``) so second-level totals legitimately
    undercount the top-level ones.
    """
    counts: dict[str, dict[str, int]] = {}
    excluded = 0
    for inst in instances:
        label = resolve_gold_sense(inst, scheme)
        if label is None:
            excluded += 1
            continue
        split = assign_split(inst, dataset)
        per_split = counts.setdefault(label.canonical_name, {})
        per_split[split.value] = per_split.get(split.value, 0) + 1
    return CorpusStats(scheme=scheme, counts=counts, excluded=excluded)
