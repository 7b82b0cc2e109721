"""Sentence splitting, surface tokenization and bounded context windows.

All offsets are code-point offsets into the source text. A window is always
a contiguous slice of its source; nothing here ever rewrites text.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

from .errors import BoundsError, ConfigError

ZH_TERMINALS = "。！？；…!?"
ZH_SHORT_DELIMITERS = "，：,:"
CLOSING_MARKS = "”’」』）)》\"'"
EN_TERMINALS = ".!?"
EN_ABBREVIATIONS = frozenset(
    "mr mrs ms dr st jr sr prof rev gen col capt lt sgt hon messrs mme mlle "
    "vs etc no vol ch fig e.g i.e".split()
)

_EN_TOKEN = re.compile(r"\w+|[^\w\s]")
_PARA_BREAK = re.compile(r"\n[ \t\r\f\v]*\n")


class Sentence(NamedTuple):
    text: str
    start: int
    end: int


class Token(NamedTuple):
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class Passage:
    text: str
    quote_char_range: tuple[int, int]
    source_char_range: tuple[int, int]
    pre_sentences: tuple[Sentence, ...] = field(default=(), compare=False)
    post_sentences: tuple[Sentence, ...] = field(default=(), compare=False)

    def __post_init__(self):
        qs, qe = self.quote_char_range
        if not 0 <= qs <= qe <= len(self.text):
            raise BoundsError(f"quote range {self.quote_char_range} outside passage of length {len(self.text)}")
        ss, se = self.source_char_range
        if se - ss != len(self.text):
            raise BoundsError("source range length does not match passage text")

    @property
    def quote_text(self) -> str:
        qs, qe = self.quote_char_range
        return self.text[qs:qe]

    @property
    def offset(self) -> int:
        return self.source_char_range[0]

    def to_source(self, pos: int) -> int:
        return pos + self.source_char_range[0]

    def from_source(self, pos: int) -> int:
        return pos - self.source_char_range[0]


def _is_abbreviation(text: str, dot: int) -> bool:
    i = dot
    while i > 0 and (text[i - 1].isalpha() or text[i - 1] == "."):
        i -= 1
    word = text[i:dot].lower()
    if not word:
        return False
    return word in EN_ABBREVIATIONS or word.rstrip(".") in EN_ABBREVIATIONS


@lru_cache(maxsize=64)
def _boundaries(text: str, lang: str, short: bool) -> tuple[int, ...]:
    """End offsets of every sentence except a possibly unterminated tail."""
    n = len(text)
    cuts = []
    i = 0
    if lang == "zh":
        delims = ZH_TERMINALS + (ZH_SHORT_DELIMITERS if short else "")
        while i < n:
            ch = text[i]
            if ch in delims:
                j = i + 1
                while j < n and (text[j] in delims or text[j] in CLOSING_MARKS):
                    j += 1
                while j < n and text[j].isspace():
                    j += 1
                cuts.append(j)
                i = j
            elif ch == "\n":
                j = i + 1
                while j < n and text[j].isspace():
                    j += 1
                cuts.append(j)
                i = j
            else:
                i += 1
    elif lang == "en":
        while i < n:
            ch = text[i]
            if ch in EN_TERMINALS:
                j = i + 1
                while j < n and (text[j] in EN_TERMINALS or text[j] in CLOSING_MARKS):
                    j += 1
                if j < n and not text[j].isspace():
                    i = j
                    continue
                if ch == "." and j == i + 1 and _is_abbreviation(text, i):
                    i = j
                    continue
                while j < n and text[j].isspace():
                    j += 1
                cuts.append(j)
                i = j
            elif ch == "\n":
                m = _PARA_BREAK.match(text, i)
                if m:
                    j = m.end()
                    while j < n and text[j].isspace():
                        j += 1
                    cuts.append(j)
                    i = j
                else:
                    i += 1
            else:
                i += 1
    else:
        raise ConfigError(f"unsupported language {lang!r}")
    return tuple(c for c in cuts if 0 < c < n)


def split_sentences(
    text: str,
    lang: str,
    short: bool = False,
    protect: Sequence[tuple[int, int]] = (),
) -> list[Sentence]:
    """Partition ``text`` into sentences.

    Whitespace following a sentence belongs to that sentence, so the pieces
    concatenate back to ``text``. With ``short=True`` Chinese text is also cut
    after ，and ：. No cut ever falls strictly inside a ``protect`` span.
    """
    if not text:
        return []
    cuts = [c for c in _boundaries(text, lang, short) if not any(s < c < e for s, e in protect)]
    starts = [0] + cuts
    ends = cuts + [len(text)]
    return [Sentence(text[s:e], s, e) for s, e in zip(starts, ends)]


def tokenize(text: str, lang: str) -> list[Token]:
    """Surface tokens: words and single punctuation marks for en, code points for zh."""
    if lang == "en":
        return [Token(m.group(), m.start(), m.end()) for m in _EN_TOKEN.finditer(text)]
    if lang == "zh":
        return [Token(ch, i, i + 1) for i, ch in enumerate(text) if not ch.isspace()]
    raise ConfigError(f"unsupported language {lang!r}")


def span_to_token_range(tokens: Sequence[Token], start: int, end: int, _index=None) -> tuple[int, int]:
    """Indices [i, j) of the tokens overlapping the character span [start, end)."""
    starts, ends = _index or ([t.start for t in tokens], [t.end for t in tokens])
    i = bisect.bisect_right(ends, start)
    j = bisect.bisect_left(starts, end)
    if i >= j:
        raise BoundsError(f"span ({start}, {end}) covers no token")
    return i, j


def _check_counts(before, after):
    if before < 0 or after < 0:
        raise ConfigError(f"window sizes must be non-negative, got before={before} after={after}")


def token_window(
    text: str,
    doc_tokens: Sequence[Token],
    quote_token_range: tuple[int, int],
    before: int = 150,
    after: int = 30,
    lang: str | None = None,
) -> Passage:
    """Passage covering tokens [max(0, q0 - before), min(len, q1 + after))."""
    _check_counts(before, after)
    q0, q1 = quote_token_range
    if not 0 <= q0 < q1 <= len(doc_tokens):
        raise BoundsError(f"quote token range {quote_token_range} invalid for {len(doc_tokens)} tokens")
    lo = max(0, q0 - before)
    hi = min(len(doc_tokens), q1 + after)
    start = doc_tokens[lo].start
    end = doc_tokens[hi - 1].end
    qs, qe = doc_tokens[q0].start, doc_tokens[q1 - 1].end
    return _make_passage(text, start, end, qs, qe, lang)


def token_window_for_span(text, quote_span, lang, before=150, after=30) -> Passage:
    """Token window around a character span; the full span is always kept."""
    qs, qe = _check_span(text, quote_span)
    tokens, starts, ends = _cached_tokens(text, lang)
    q0, q1 = span_to_token_range(tokens, qs, qe, (starts, ends))
    _check_counts(before, after)
    lo = max(0, q0 - before)
    hi = min(len(tokens), q1 + after)
    start = min(tokens[lo].start, qs)
    end = max(tokens[hi - 1].end, qe)
    return _make_passage(text, start, end, qs, qe, lang)


@lru_cache(maxsize=16)
def _cached_tokens(text, lang):
    tokens = tuple(tokenize(text, lang))
    return tokens, [t.start for t in tokens], [t.end for t in tokens]


def _check_span(doc, quote_span):
    qs, qe = quote_span
    if not 0 <= qs < qe <= len(doc):
        raise BoundsError(f"quote span {quote_span} invalid for text of length {len(doc)}")
    return qs, qe


def _make_passage(doc, start, end, qs, qe, lang, pre=None, post=None):
    if lang is not None and (pre is None or post is None):
        pre = [Sentence(s.text, s.start + start, s.end + start) for s in split_sentences(doc[start:qs], lang)]
        post = [Sentence(s.text, s.start + qe, s.end + qe) for s in split_sentences(doc[qe:end], lang)]
    return Passage(
        text=doc[start:end],
        quote_char_range=(qs - start, qe - start),
        source_char_range=(start, end),
        pre_sentences=tuple(pre or ()),
        post_sentences=tuple(post or ()),
    )


def sentence_window(
    doc: str,
    quote_span: tuple[int, int],
    before: int = 5,
    after: int = 5,
    lang: str = "zh",
    short: bool | None = None,
) -> Passage:
    """Up to ``before`` sentences preceding the quotation, the quotation, and up
    to ``after`` sentences following it.

    A partial sentence touching the quotation (an attribution clause such as
    ``黄蓉道：``) counts as one sentence. Chinese defaults to short sentences.
    """
    _check_counts(before, after)
    qs, qe = _check_span(doc, quote_span)
    if short is None:
        short = lang == "zh"
    cuts = _boundaries(doc, lang, short)

    i = bisect.bisect_left(cuts, qs)
    pre_cuts = [0] + list(cuts[:i]) + [qs]
    pre = [Sentence(doc[a:b], a, b) for a, b in zip(pre_cuts, pre_cuts[1:]) if a < b]
    j = bisect.bisect_right(cuts, qe)
    post_cuts = [qe] + list(cuts[j:]) + [len(doc)]
    post = [Sentence(doc[a:b], a, b) for a, b in zip(post_cuts, post_cuts[1:]) if a < b]

    pre = pre[-before:] if before else []
    post = post[:after]
    start = pre[0].start if pre else qs
    end = post[-1].end if post else qe
    return _make_passage(doc, start, end, qs, qe, lang, pre, post)
