"""Quotation corpus data model, interchange format and corpus-level operations.

The canonical on-disk form is three UTF-8 JSON-lines files in one directory:

``novels.jsonl``
    ``{"novel_id", "title", "author", "text", "lang"?}``
``roster.jsonl``
    ``{"id", "canonical_name", "aliases": [...], "stance"}``
``quotations.jsonl``
    ``{"id", "novel_id", "quote": {surface, start, end},
    "speaker": {surface, start, end, character_id},
    "addressees": [mention, ...], "cue"?: span, "mode"?: span,
    "monologue"?: bool, "candidates"?: [character_id, ...]}``

Offsets are code points into the novel text, ``end`` exclusive.
"""

from __future__ import annotations

import json
import logging
import math
import random
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import (
    ConfigError,
    DanglingReferenceError,
    EmptyInputError,
    IntegrityError,
    ParseError,
)
from .windows import Passage, Sentence, sentence_window, token_window_for_span

log = logging.getLogger(__name__)

NOVELS_FILE = "novels.jsonl"
ROSTER_FILE = "roster.jsonl"
QUOTATIONS_FILE = "quotations.jsonl"

ELEMENTS = ("speaker", "addressee", "cue", "mode")


class Stance(str, Enum):
    PROTAGONIST = "protagonist"
    VILLAIN = "villain"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class CharacterEntity:
    id: str
    canonical_name: str
    aliases: frozenset = frozenset()
    stance: Stance = Stance.UNKNOWN

    def __post_init__(self):
        if not self.canonical_name:
            raise IntegrityError(f"character {self.id!r} has an empty canonical name")
        aliases = frozenset(self.aliases) | {self.canonical_name}
        object.__setattr__(self, "aliases", aliases)
        object.__setattr__(self, "stance", Stance(self.stance))

    def to_json(self):
        return {
            "id": self.id,
            "canonical_name": self.canonical_name,
            "aliases": sorted(self.aliases),
            "stance": self.stance.value,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            id=str(obj["id"]),
            canonical_name=obj["canonical_name"],
            aliases=frozenset(obj.get("aliases", ())),
            stance=Stance(obj.get("stance", "unknown")),
        )


@dataclass(frozen=True)
class Mention:
    """A span of novel text, optionally linked to a roster character."""

    surface: str
    start: int
    end: int
    character_id: str | None = None

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise IntegrityError(f"bad span ({self.start}, {self.end}) for {self.surface!r}")

    def inside(self, other: "Mention") -> bool:
        return other.start <= self.start and self.end <= other.end

    def overlaps(self, other: "Mention") -> bool:
        return self.start < other.end and other.start < self.end

    def to_json(self):
        obj = {"surface": self.surface, "start": self.start, "end": self.end}
        if self.character_id is not None:
            obj["character_id"] = self.character_id
        return obj

    @classmethod
    def from_json(cls, obj):
        cid = obj.get("character_id")
        return cls(obj["surface"], int(obj["start"]), int(obj["end"]), None if cid is None else str(cid))


@dataclass(frozen=True)
class QuotationRecord:
    id: str
    novel_id: str
    quote: Mention
    speaker: Mention
    addressees: tuple[Mention, ...] = ()
    cue: Mention | None = None
    mode: Mention | None = None
    monologue: bool = False
    candidates: tuple[str, ...] | None = None

    @property
    def addressee_ids(self) -> list[str]:
        seen = []
        for m in self.addressees:
            if m.character_id is not None and m.character_id not in seen:
                seen.append(m.character_id)
        return seen

    def spans(self) -> Iterator[tuple[str, Mention]]:
        yield "quote", self.quote
        yield "speaker", self.speaker
        for m in self.addressees:
            yield "addressee", m
        if self.cue is not None:
            yield "cue", self.cue
        if self.mode is not None:
            yield "mode", self.mode

    def to_json(self):
        obj = {
            "id": self.id,
            "novel_id": self.novel_id,
            "quote": self.quote.to_json(),
            "speaker": self.speaker.to_json(),
            "addressees": [m.to_json() for m in self.addressees],
        }
        if self.cue is not None:
            obj["cue"] = self.cue.to_json()
        if self.mode is not None:
            obj["mode"] = self.mode.to_json()
        if self.monologue:
            obj["monologue"] = True
        if self.candidates is not None:
            obj["candidates"] = list(self.candidates)
        return obj

    @classmethod
    def from_json(cls, obj):
        def opt(key):
            return Mention.from_json(obj[key]) if obj.get(key) else None

        cands = obj.get("candidates")
        return cls(
            id=str(obj["id"]),
            novel_id=str(obj["novel_id"]),
            quote=Mention.from_json(obj["quote"]),
            speaker=Mention.from_json(obj["speaker"]),
            addressees=tuple(Mention.from_json(m) for m in obj.get("addressees", ())),
            cue=opt("cue"),
            mode=opt("mode"),
            monologue=bool(obj.get("monologue", False)),
            candidates=None if cands is None else tuple(str(c) for c in cands),
        )


@dataclass(frozen=True)
class Novel:
    novel_id: str
    title: str
    author: str
    text: str
    lang: str = ""

    def __post_init__(self):
        if not self.lang:
            object.__setattr__(self, "lang", guess_lang(self.text))

    def to_json(self):
        return {"novel_id": self.novel_id, "title": self.title, "author": self.author,
                "lang": self.lang, "text": self.text}

    @classmethod
    def from_json(cls, obj):
        return cls(str(obj["novel_id"]), obj.get("title", ""), obj.get("author", ""), obj["text"], obj.get("lang", ""))


def guess_lang(text: str) -> str:
    sample = text[:2000]
    cjk = sum(1 for ch in sample if "一" <= ch <= "鿿")
    letters = sum(1 for ch in sample if ch.isalpha())
    return "zh" if letters and cjk * 2 >= letters else "en"


@dataclass(frozen=True)
class Corpus:
    novels: dict[str, Novel]
    roster: tuple[CharacterEntity, ...]
    quotations: tuple[QuotationRecord, ...]

    @cached_property
    def characters(self) -> dict[str, CharacterEntity]:
        return {c.id: c for c in self.roster}

    @cached_property
    def by_id(self) -> dict[str, QuotationRecord]:
        return {q.id: q for q in self.quotations}

    def text(self, novel_id: str) -> str:
        return self.novels[novel_id].text

    def lang(self, novel_id: str) -> str:
        return self.novels[novel_id].lang

    def with_quotations(self, quotations: Iterable[QuotationRecord]) -> "Corpus":
        return Corpus(self.novels, self.roster, tuple(quotations))

    def check(self) -> None:
        """Raise on any broken type invariant."""
        ids = Counter(c.id for c in self.roster)
        dup = [i for i, n in ids.items() if n > 1]
        if dup:
            raise IntegrityError(f"duplicate character ids: {dup}")
        qids = Counter(q.id for q in self.quotations)
        dup = [i for i, n in qids.items() if n > 1]
        if dup:
            raise IntegrityError(f"duplicate quotation ids: {dup}")
        for q in self.quotations:
            check_record(self, q)


def check_record(corpus: Corpus, q: QuotationRecord) -> None:
    if q.novel_id not in corpus.novels:
        raise DanglingReferenceError(f"record {q.id!r}: unknown novel {q.novel_id!r}")
    text = corpus.novels[q.novel_id].text
    for role, m in q.spans():
        if m.end > len(text):
            raise IntegrityError(f"record {q.id!r}: {role} span ({m.start}, {m.end}) beyond text length {len(text)}")
        if text[m.start:m.end] != m.surface:
            raise IntegrityError(
                f"record {q.id!r}: {role} surface {m.surface!r} != text slice {text[m.start:m.end]!r}"
            )
        if m.character_id is not None and m.character_id not in corpus.characters:
            raise DanglingReferenceError(f"record {q.id!r}: {role} refers to unknown character {m.character_id!r}")
    for cid in q.candidates or ():
        if cid not in corpus.characters:
            raise DanglingReferenceError(f"record {q.id!r}: candidate refers to unknown character {cid!r}")
    if q.speaker.overlaps(q.quote):
        raise IntegrityError(f"record {q.id!r}: speaker span overlaps the quotation span")


# ---------------------------------------------------------------- I/O


def _read_jsonl(path: Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path.name}: invalid JSON ({exc.msg})", line=lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError(f"{path.name}: expected an object", line=lineno)
            yield lineno, obj


def _parse(path: Path, factory):
    out = []
    for lineno, obj in _read_jsonl(path):
        try:
            out.append(factory(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path.name}: malformed record ({exc!r})", line=lineno, record_id=obj.get("id")) from exc
        except IntegrityError as exc:
            raise ParseError(f"{path.name}: {exc}", line=lineno, record_id=obj.get("id")) from exc
    return out


def _canonical_paths(path: Path) -> tuple[Path, Path, Path]:
    if path.is_dir():
        return path / NOVELS_FILE, path / ROSTER_FILE, path / QUOTATIONS_FILE
    return path.parent / NOVELS_FILE, path.parent / ROSTER_FILE, path


def load_canonical(path) -> Corpus:
    novels_p, roster_p, quotes_p = _canonical_paths(Path(path))
    for p in (novels_p, roster_p, quotes_p):
        if not p.exists():
            raise ConfigError(f"missing corpus file {p}")
    novels = {n.novel_id: n for n in _parse(novels_p, Novel.from_json)}
    roster = tuple(_parse(roster_p, CharacterEntity.from_json))
    quotations = tuple(_parse(quotes_p, QuotationRecord.from_json))
    corpus = Corpus(novels, roster, quotations)
    corpus.check()
    return corpus


def load_corpus(path, dialect: str = "canonical", **options) -> Corpus:
    """Load a corpus and verify every span against the novel text.

    ``dialect`` is one of ``canonical``, ``riqua_import`` or ``jyq_import``;
    import options are forwarded to the matching adapter.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"corpus path {path} does not exist")
    if dialect == "canonical":
        return load_canonical(path)
    from . import importers

    if dialect == "riqua_import":
        corpus = importers.load_riqua(path, **options)
    elif dialect == "jyq_import":
        corpus = importers.load_jyq(path, **options)
    else:
        raise ConfigError(f"unknown dialect {dialect!r}")
    corpus.check()
    return corpus


def _write_jsonl(path: Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def save_canonical(corpus: Corpus, directory, quotations_name: str = QUOTATIONS_FILE) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    _write_jsonl(d / NOVELS_FILE, (n.to_json() for n in corpus.novels.values()))
    _write_jsonl(d / ROSTER_FILE, (c.to_json() for c in corpus.roster))
    _write_jsonl(d / quotations_name, (q.to_json() for q in corpus.quotations))
    return d / quotations_name


# ---------------------------------------------------------------- mentions


class AliasMatcher:
    """Leftmost-longest roster alias lookup over raw text."""

    def __init__(self, entities: Sequence[CharacterEntity], lang: str):
        self.owner: dict[str, str] = {}
        for ent in entities:
            for alias in sorted(ent.aliases):
                self.owner.setdefault(alias, ent.id)
        aliases = sorted(self.owner, key=lambda a: (-len(a), a))
        if not aliases:
            self.pattern = None
            return
        body = "|".join(re.escape(a) for a in aliases)
        if lang == "en":
            body = rf"(?<!\w)(?:{body})(?!\w)"
        self.pattern = re.compile(body)

    def find(self, text: str, start: int = 0, end: int | None = None) -> list[Mention]:
        if self.pattern is None:
            return []
        end = len(text) if end is None else end
        return [
            Mention(m.group(), m.start(), m.end(), self.owner[m.group()])
            for m in self.pattern.finditer(text, start, end)
        ]


@lru_cache(maxsize=32)
def alias_matcher(roster: tuple[CharacterEntity, ...], lang: str) -> AliasMatcher:
    return AliasMatcher(roster, lang)


# ---------------------------------------------------------------- segments


@dataclass(frozen=True)
class WindowSpec:
    kind: str = "sent"
    before: int = 5
    after: int = 5

    def __post_init__(self):
        if self.kind not in ("sent", "token"):
            raise ConfigError(f"unknown window kind {self.kind!r}")
        if self.before < 0 or self.after < 0:
            raise ConfigError("window sizes must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "WindowSpec":
        """Parse ``token:150:30`` or ``sent:5:5``."""
        try:
            kind, before, after = text.split(":")
            return cls(kind, int(before), int(after))
        except ValueError as exc:
            raise ConfigError(f"bad window spec {text!r}; expected token:B:A or sent:B:A") from exc

    @classmethod
    def default_for(cls, lang: str) -> "WindowSpec":
        return cls("sent", 5, 5) if lang == "zh" else cls("token", 150, 30)

    def build(self, text: str, span: tuple[int, int], lang: str) -> Passage:
        if self.kind == "sent":
            return sentence_window(text, span, self.before, self.after, lang)
        return token_window_for_span(text, span, lang, self.before, self.after)

    def __str__(self):
        return f"{self.kind}:{self.before}:{self.after}"


@dataclass(frozen=True)
class Segment:
    """A quotation plus its bounded context and candidate characters."""

    quotation: QuotationRecord
    passage: Passage
    candidates: tuple[CharacterEntity, ...]
    lang: str
    pre_context: tuple[Sentence, ...] = field(default=(), compare=False)
    post_context: tuple[Sentence, ...] = field(default=(), compare=False)

    @property
    def id(self) -> str:
        return self.quotation.id

    @property
    def quotation_text(self) -> str:
        return self.passage.quote_text


def _derived_candidates(corpus: Corpus, record: QuotationRecord, passage: Passage, lang: str) -> list[str]:
    """Characters mentioned in the passage: roster alias hits plus annotated mentions inside it."""
    s0, s1 = passage.source_char_range
    hits = [(m.start, m.character_id) for m in alias_matcher(corpus.roster, lang).find(passage.text)]
    for _, m in record.spans():
        if m.character_id is not None and s0 <= m.start and m.end <= s1:
            hits.append((m.start - s0, m.character_id))
    out = []
    for _, cid in sorted(hits):
        if cid not in out:
            out.append(cid)
    return out


def candidate_ids(corpus: Corpus, record: QuotationRecord, passage: Passage) -> list[str]:
    if record.candidates is not None:
        return list(record.candidates)
    return _derived_candidates(corpus, record, passage, corpus.lang(record.novel_id))


def build_segment(corpus: Corpus, record: QuotationRecord, window: WindowSpec | None = None) -> Segment:
    lang = corpus.lang(record.novel_id)
    window = window or WindowSpec.default_for(lang)
    passage = window.build(corpus.text(record.novel_id), (record.quote.start, record.quote.end), lang)
    cands = tuple(corpus.characters[c] for c in candidate_ids(corpus, record, passage))
    return Segment(record, passage, cands, lang, passage.pre_sentences, passage.post_sentences)


def build_segments(corpus: Corpus, window: WindowSpec | None = None) -> list[Segment]:
    return [build_segment(corpus, q, window) for q in corpus.quotations]


# ---------------------------------------------------------------- guidelines

RULE_NOT_CANDIDATE = "a_not_candidate"
RULE_DUPLICATE = "b_duplicate_addressee"
RULE_INTERNAL = "c_quotation_internal"
RULE_MISSING = "d_missing_addressee"


@dataclass(frozen=True)
class Violation:
    record_id: str
    rule_id: str
    message: str


def validate_guidelines(corpus: Corpus, window: WindowSpec | None = None) -> list[Violation]:
    """Check every record against the addressee annotation guidelines.

    Candidates come from the record's own list when present, otherwise from
    the characters mentioned in its context window.
    """
    out = []
    for q in corpus.quotations:
        lang = corpus.lang(q.novel_id)
        seg = build_segment(corpus, q, window)
        cands = {c.id for c in seg.candidates}

        missing = [m.character_id or m.surface for m in q.addressees if m.character_id not in cands]
        if missing:
            out.append(Violation(q.id, RULE_NOT_CANDIDATE, f"addressee not in candidate list: {missing}"))

        keys = Counter(m.character_id or m.surface for m in q.addressees)
        dups = sorted(k for k, n in keys.items() if n > 1)
        if dups:
            out.append(Violation(q.id, RULE_DUPLICATE, f"addressee annotated more than once: {dups}"))

        internal = [m for m in q.addressees if m.inside(q.quote)]
        if internal:
            outside = [m for m in q.addressees if not m.overlaps(q.quote)]
            ctx = _context_mentions(corpus, seg, lang)
            repeated = [m for m in internal if m.character_id is not None and m.character_id in ctx]
            if outside or repeated:
                out.append(Violation(
                    q.id, RULE_INTERNAL,
                    "addressee taken from inside the quotation although the context names one: "
                    + str([m.surface for m in internal]),
                ))

        if not q.addressees and not q.monologue:
            out.append(Violation(q.id, RULE_MISSING, "dialogue quotation has no addressee"))
    return out


def _context_mentions(corpus: Corpus, seg: Segment, lang: str) -> set[str]:
    p = seg.passage
    qs, qe = p.quote_char_range
    found = alias_matcher(corpus.roster, lang).find(p.text)
    return {m.character_id for m in found if m.end <= qs or m.start >= qe}


# ---------------------------------------------------------------- statistics


@dataclass(frozen=True)
class ElementStats:
    total: int
    counts: dict[str, int]

    @property
    def rates(self) -> dict[str, float]:
        return {k: v / self.total for k, v in self.counts.items()}

    def occurrence_rate(self, element: str) -> float:
        return self.counts[element] / self.total

    def table(self) -> str:
        head = "Metrics          " + "".join(f"{e:>12}" for e in ELEMENTS)
        row = "Occurrence Rates " + "".join(f"{self.rates[e] * 100:>11.2f}%" for e in ELEMENTS)
        return f"{head}\n{row}\n(n = {self.total})"

    def to_json(self):
        return {"total": self.total, "counts": dict(self.counts),
                "rates": {k: round(v, 6) for k, v in self.rates.items()}}


def corpus_stats(corpus: Corpus) -> ElementStats:
    qs = corpus.quotations
    if not qs:
        raise EmptyInputError("cannot compute occurrence rates over an empty corpus")
    counts = {
        "speaker": sum(1 for q in qs if q.speaker is not None),
        "addressee": sum(1 for q in qs if q.addressees),
        "cue": sum(1 for q in qs if q.cue is not None),
        "mode": sum(1 for q in qs if q.mode is not None),
    }
    return ElementStats(len(qs), counts)


# ---------------------------------------------------------------- splitting


def split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ConfigError(f"ratios must be three positive numbers, got {tuple(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"ratios must sum to 1, got {sum(ratios)!r}")
    # the epsilon keeps 0.7 * 10 from flooring to 6
    dev = math.floor(n * ratios[1] + 1e-9)
    test = math.floor(n * ratios[2] + 1e-9)
    return n - dev - test, dev, test


def parse_ratios(text: str) -> tuple[float, float, float]:
    """``8:1:1`` or ``0.8,0.1,0.1`` -> normalized triple."""
    try:
        parts = [float(p) for p in re.split(r"[:,]", text)]
    except ValueError as exc:
        raise ConfigError(f"bad ratios {text!r}") from exc
    if len(parts) != 3 or any(p <= 0 for p in parts):
        raise ConfigError(f"ratios must be three positive numbers, got {text!r}")
    total = sum(parts)
    return tuple(p / total for p in parts)


def split_corpus(corpus: Corpus, ratios=(0.8, 0.1, 0.1), seed: int = 0) -> tuple[Corpus, Corpus, Corpus]:
    """Deterministic train/dev/test partition of the quotation ids.

    Dev and test get ``floor(n * ratio)`` records; the remainder goes to
    train. Each part keeps the corpus order of its records.
    """
    n_train, n_dev, n_test = split_sizes(len(corpus.quotations), ratios)
    ids = sorted(q.id for q in corpus.quotations)
    random.Random(seed).shuffle(ids)
    dev_ids = set(ids[:n_dev])
    test_ids = set(ids[n_dev:n_dev + n_test])
    parts = ([], [], [])
    for q in corpus.quotations:
        parts[1 if q.id in dev_ids else 2 if q.id in test_ids else 0].append(q)
    return tuple(corpus.with_quotations(p) for p in parts)


def drop_elements(corpus: Corpus, elements: Iterable[str]) -> Corpus:
    """Strip optional element spans (``cue``/``mode``) from every record."""
    fields = {e: None for e in elements}
    bad = set(fields) - {"cue", "mode"}
    if bad:
        raise ConfigError(f"only cue and mode can be dropped, got {sorted(bad)}")
    return corpus.with_quotations(replace(q, **fields) for q in corpus.quotations)
