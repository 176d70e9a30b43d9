"""Cloze templates: argument pairs rendered into prompt text with one mask.

Templates are defined through a small pattern language with the
placeholders ``{arg1}``, ``{arg2}``, ``{conn}``, ``{mask}`` and ``{sep}``.
The mask and segment markers stay abstract until render time, when the
scorer backend supplies its own placeholder strings, so the same template
works against any backend.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable

from .corpus import normalize_ws
from .errors import ContractError, ParseError, PromptError

DEFAULT_MASK_TOKEN = "<mask>"
DEFAULT_SEP_TOKEN = "</s></s>"

LITERAL = "literal"
ARG1 = "arg1"
ARG2 = "arg2"
CONNECTIVE = "conn"
MASK = "mask"
SEP = "sep"

_PLACEHOLDER_RE = re.compile(r"\{(arg1|arg2|conn|mask|sep)\}")


@dataclass(frozen=True)
class Segment:
    kind: str
    text: str = ""


@dataclass(frozen=True)
class Template:
    """An ordered segment list with exactly one mask slot."""

    template_id: str
    segments: tuple[Segment, ...]
    requires_connective: bool = False

    def __post_init__(self):
        kinds = [seg.kind for seg in self.segments]
        for kind, wanted in ((MASK, 1), (ARG1, 1), (ARG2, 1)):
            if kinds.count(kind) != wanted:
                raise PromptError(
                    f"template {self.template_id!r} must contain exactly {wanted} {kind} slot(s)"
                )
        if (kinds.count(CONNECTIVE) == 1) != self.requires_connective:
            raise PromptError(
                f"template {self.template_id!r}: connective slot present iff requires_connective"
            )

    def pattern(self) -> str:
        """Back-convert to the pattern language (used for file export)."""
        out = []
        for seg in self.segments:
            out.append(seg.text if seg.kind == LITERAL else "{%s}" % seg.kind)
        return "".join(out)


@dataclass(frozen=True)
class RenderedPrompt:
    """Prompt text carrying backend-specific mask/segment placeholders."""

    text: str
    template_id: str
    mask_token: str = DEFAULT_MASK_TOKEN
    source: object = field(default=None, compare=False)


def parse_pattern(template_id: str, pattern: str) -> Template:
    """Build a Template from a pattern string like ``"{arg1} {mask} {arg2}."``."""
    segments: list[Segment] = []
    pos = 0
    for match in _PLACEHOLDER_RE.finditer(pattern):
        if match.start() > pos:
            segments.append(Segment(LITERAL, pattern[pos : match.start()]))
        segments.append(Segment(match.group(1)))
        pos = match.end()
    if pos < len(pattern):
        segments.append(Segment(LITERAL, pattern[pos:]))
    requires_connective = any(seg.kind == CONNECTIVE for seg in segments)
    return Template(template_id, tuple(segments), requires_connective)


_BUILTIN_PATTERNS = (
    ("t1", "{arg1} {mask} {arg2}."),
    ("t2", "{arg1}. That's {mask} {arg2}."),
    ("t3", "Arg1: {arg1}. Arg2: {arg2}. The connective between Arg1 and Arg2 is {mask}."),
    ("t4", "Arg1: {arg1}. Arg2: {arg2}. The conjunction between Arg1 and Arg2 is {mask}."),
    ("t5", "Arg1: {arg1}. Arg2: {arg2}.{sep}The connective between Arg1 and Arg2 is {mask}."),
    ("t6", "Arg1: {arg1}. Arg2: {arg2}.{sep}The conjunction between Arg1 and Arg2 is {mask}."),
    ("pidrp", "Arg1: {arg1}. Arg2: {arg2}. The discourse relation between Arg1 and Arg2 is {mask}."),
    (
        "pedrr",
        "Arg1: {arg1}. Arg2: {arg2}. The connective between Arg1 and Arg2 is {conn}. "
        "In summary, the discourse relation between Arg1 and Arg2 is {mask}.",
    ),
)


def builtin_templates() -> dict[str, Template]:
    """The eight built-in templates: the six searched connective-cloze forms
    plus the direct relation-word form (pidrp) and the explicit-connective
    relation form (pedrr)."""
    return {tid: parse_pattern(tid, pattern) for tid, pattern in _BUILTIN_PATTERNS}


def render(
    template: Template,
    arg1: str,
    arg2: str,
    connective: str | None = None,
    mask_token: str = DEFAULT_MASK_TOKEN,
    sep_token: str = DEFAULT_SEP_TOKEN,
    source: object = None,
) -> RenderedPrompt:
    """Concatenate the template segments around the (normalized) inputs.

    Arguments are inserted without added punctuation; the template's own
    literals provide sentence structure.
    """
    arg1 = normalize_ws(arg1)
    arg2 = normalize_ws(arg2)
    if not arg1 or not arg2:
        raise PromptError("arguments must be non-empty")
    if template.requires_connective:
        connective = normalize_ws(connective) if connective is not None else ""
        if not connective:
            raise PromptError(f"template {template.template_id!r} requires a connective")
    elif connective is not None:
        raise PromptError(f"template {template.template_id!r} takes no connective")

    values = {ARG1: arg1, ARG2: arg2, CONNECTIVE: connective, MASK: mask_token, SEP: sep_token}
    parts = []
    for seg in template.segments:
        parts.append(seg.text if seg.kind == LITERAL else values[seg.kind])
    text = "".join(parts)
    if text.count(mask_token) != 1:
        raise PromptError(
            f"rendered prompt must contain exactly one {mask_token!r} "
            "(an argument collides with the mask placeholder)"
        )
    return RenderedPrompt(text=text, template_id=template.template_id,
                          mask_token=mask_token, source=source)


def mask_position(prompt: RenderedPrompt, tokens: Iterable[str]) -> int:
    """Index of the unique mask token in a backend tokenization."""
    hits = [i for i, tok in enumerate(tokens) if tok == prompt.mask_token]
    if len(hits) != 1:
        raise ContractError(
            f"expected exactly one {prompt.mask_token!r} token, found {len(hits)}"
        )
    return hits[0]


def load_template_file(stream: str | Iterable[str]) -> dict[str, Template]:
    """Load templates from a definition file.

    One template per non-comment line: ``id<TAB>pattern``. Patterns use the
    ``{arg1} {arg2} {conn} {mask} {sep}`` placeholders.
    """
    lines = stream.splitlines() if isinstance(stream, str) else stream
    templates: dict[str, Template] = {}
    for line_no, line in enumerate(lines, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "\t" not in stripped:
            raise ParseError(line_no, "expected 'id<TAB>pattern'")
        template_id, pattern = stripped.split("\t", 1)
        template_id = template_id.strip()
        if template_id in templates:
            raise ParseError(line_no, f"duplicate template id {template_id!r}")
        try:
            templates[template_id] = parse_pattern(template_id, pattern)
        except PromptError as exc:
            raise ParseError(line_no, str(exc)) from None
    return templates


def dump_template_file(templates: dict[str, Template]) -> str:
    """Serialize templates in the definition-file format."""
    lines = [f"{tid}\t{tpl.pattern()}" for tid, tpl in templates.items()]
    return "\n".join(lines) + ("\n" if lines else "")
