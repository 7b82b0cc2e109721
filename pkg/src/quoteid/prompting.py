"""Prompt rendering for extractive speaker/addressee identification and
parsing of free-text answers back into predictions.

Templates use ``{name}`` placeholders (``{{``/``}}`` for literal braces) and
can be loaded from a JSON file holding the five template fields.
"""

from __future__ import annotations

import json
import re
import string
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import ConfigError, PredictionParseError, TemplateError

QUESTION_FIELDS = frozenset({"context", "quotation"})
EXEMPLAR_FIELDS = frozenset({"context", "quotation", "speaker", "addressee"})

LIST_DELIMITER = {"zh": "、", "en": ", "}

QUOTE_MARKS = "\"'“”‘’「」『』《》"
_STRIP = QUOTE_MARKS + " \t\r\n　,，;；.。、:：!！?？"

_LABELS = {
    "speaker": ("speaker", "说话人", "说话者"),
    "addressee": ("addressees", "addressee", "听话人", "听话者", "受话人"),
}
_LABEL_RE = re.compile(
    "(" + "|".join(re.escape(l) for ls in _LABELS.values() for l in ls) + r")\s*[:：]",
    re.IGNORECASE,
)
_ROLE_OF = {l: role for role, ls in _LABELS.items() for l in ls}
_QUOTED = re.compile(r"\"([^\"]*)\"|“([^”]*)”|'([^']*)'|‘([^’]*)’|「([^」]*)」|『([^』]*)』")
_SPLIT = {
    "zh": re.compile(r"\s*(?:、|，|,|和)\s*"),
    "en": re.compile(r"\s*,\s*(?:and\s+)?|\s+and\s+|\s*、\s*", re.IGNORECASE),
}


@dataclass(frozen=True)
class PromptTemplate:
    lang: str
    preamble: str
    question_pattern: str
    answer_format_instruction: str
    exemplar_pattern: str

    def __post_init__(self):
        _check_pattern(self.question_pattern, QUESTION_FIELDS, "question_pattern")
        _check_pattern(self.exemplar_pattern, EXEMPLAR_FIELDS, "exemplar_pattern")
        for name in ("preamble", "answer_format_instruction"):
            _check_pattern(getattr(self, name), frozenset(), name)

    @classmethod
    def load(cls, path) -> "PromptTemplate":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls(**obj)
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise TemplateError(f"cannot load template {path}: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), ensure_ascii=False, indent=2), encoding="utf-8")


def _check_pattern(pattern, required, name):
    try:
        used = {f for _, f, _, _ in string.Formatter().parse(pattern) if f is not None}
    except ValueError as exc:
        raise TemplateError(f"{name}: {exc}") from exc
    unknown = used - required
    if unknown:
        raise TemplateError(f"{name} uses unknown placeholders {sorted(unknown)}")
    missing = required - used
    if missing:
        raise TemplateError(f"{name} is missing placeholders {sorted(missing)}")


DEFAULT_TEMPLATES = {
    "en": PromptTemplate(
        lang="en",
        preamble="Read the passage and identify who speaks the quotation and to whom it is addressed. "
        "Answer with names or mentions taken from the passage.",
        question_pattern="Passage: {context}\nWho speaks the quotation {quotation}, and to whom?",
        answer_format_instruction='Answer as Speaker: "..."; Addressee: "..."',
        exemplar_pattern='Passage: {context}\nWho speaks the quotation {quotation}, and to whom?\n'
        'Speaker: "{speaker}", Addressee: "{addressee}"',
    ),
    "zh": PromptTemplate(
        lang="zh",
        preamble="阅读下面的文本，找出引语的说话人和听话人。答案必须是文本中出现的人物。",
        question_pattern="文本：{context}\n引语{quotation}的说话人和听话人分别是谁？",
        answer_format_instruction="请按如下格式回答：说话人：……，听话人：……",
        exemplar_pattern="文本：{context}\n引语{quotation}的说话人和听话人分别是谁？\n"
        "说话人：“{speaker}”，听话人：“{addressee}”",
    ),
}


def default_template(lang: str) -> PromptTemplate:
    try:
        return DEFAULT_TEMPLATES[lang]
    except KeyError:
        raise ConfigError(f"no default template for language {lang!r}") from None


@dataclass(frozen=True)
class Exemplar:
    context: str
    quotation: str
    speaker: str
    addressees: tuple[str, ...] = ()


def _fill(pattern, **values):
    return pattern.format(**values)


def render_zero_shot(template: PromptTemplate, passage, quotation_text: str) -> str:
    context = getattr(passage, "text", passage)
    question = _fill(template.question_pattern, context=context, quotation=quotation_text)
    return "\n".join(p for p in (template.preamble, question, template.answer_format_instruction) if p)


def render_few_shot(template: PromptTemplate, exemplars: Sequence[Exemplar], passage, quotation_text: str) -> str:
    """Exemplars in order, then the query block. Nothing is deduplicated."""
    if not exemplars:
        raise ConfigError("few-shot rendering needs at least one exemplar")
    context = getattr(passage, "text", passage)
    delim = LIST_DELIMITER[template.lang]
    blocks = [template.preamble] if template.preamble else []
    for ex in exemplars:
        blocks.append(_fill(
            template.exemplar_pattern,
            context=getattr(ex.context, "text", ex.context),
            quotation=ex.quotation,
            speaker=ex.speaker,
            addressee=delim.join(ex.addressees),
        ))
    blocks.append(_fill(template.question_pattern, context=context, quotation=quotation_text))
    if template.answer_format_instruction:
        blocks.append(template.answer_format_instruction)
    return "\n\n".join(blocks)


# ---------------------------------------------------------------- answers


@dataclass(frozen=True)
class Prediction:
    speaker: str
    addressees: tuple[str, ...] = ()
    raw_response: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "addressees", tuple(_dedupe(self.addressees)))


def _dedupe(items):
    out = []
    for it in items:
        if it and it not in out:
            out.append(it)
    return out


def format_answer(pred: Prediction, lang: str) -> str:
    """The canonical answer shape the parser and exemplars share."""
    addressees = LIST_DELIMITER[lang].join(pred.addressees)
    if lang == "zh":
        return f"说话人：“{pred.speaker}”，听话人：“{addressees}”"
    return f'Speaker: "{pred.speaker}", Addressee: "{addressees}"'


def _clean(value: str) -> str:
    return value.strip(_STRIP)


def _field_values(raw: str) -> list[str]:
    body = raw.strip()
    if body[:1] in QUOTE_MARKS:
        quoted = [next(g for g in m.groups() if g is not None) for m in _QUOTED.finditer(body)]
        if quoted:
            return quoted
    return [body.split("\n", 1)[0]]


def parse_prediction(response: str, lang: str) -> Prediction:
    """Extract speaker and addressees from a model answer.

    Both English and Chinese labels are recognised whatever ``lang`` is, in
    any order; the first occurrence of each label wins. ``lang`` selects how
    a multi-addressee value is split.
    """
    matches = list(_LABEL_RE.finditer(response))
    found: dict[str, str] = {}
    for i, m in enumerate(matches):
        role = _ROLE_OF[m.group(1).lower()]
        if role in found:
            continue
        end = matches[i + 1].start() if i + 1 < len(matches) else len(response)
        found[role] = response[m.end():end]
    if not found:
        raise PredictionParseError("no speaker or addressee field found", response)
    if "speaker" not in found:
        raise PredictionParseError("no speaker field found", response)

    speaker = _clean(" ".join(_clean(v) for v in _field_values(found["speaker"])))
    if not speaker:
        raise PredictionParseError("empty speaker field", response)
    splitter = _SPLIT.get(lang, _SPLIT["en"])
    addressees = []
    if "addressee" in found:
        for value in _field_values(found["addressee"]):
            addressees.extend(_clean(part) for part in splitter.split(_clean(value)))
    return Prediction(speaker, tuple(addressees), raw_response=response)
