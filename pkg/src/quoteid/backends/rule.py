"""Deterministic rule baseline built on the addressee annotation guidelines.

Speaker: a candidate next to a cue verb in the attribution clause touching
the quotation (preceding clause first), else the nearest preceding candidate
mention, else the nearest following one.

Addressee, first hit wins:

0. a quotation addressed to a group ("你们", "all of you") with no vocative
   inside it goes to every other candidate present in the narration;
1. a candidate named immediately after the quotation (next turn / vocative);
2. the speaker of the previous quotation in an alternating exchange;
3. the nearest other candidate in the narration, preceding text first;
4. a candidate named inside the quotation itself;
5. a candidate named inside another quotation.

Ties go to the smaller character distance, then the earlier offset.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..corpus import Mention, Segment, alias_matcher
from ..errors import NoCandidateError
from ..prompting import Prediction
from ..windows import _is_abbreviation

_CLAUSE_PAD = " \t\r\n　:：,，“”「」『』\"'‘’"
_TERMINALS = {"zh": "。！？；…!?\n", "en": ".!?\n"}
_GROUP_MARKERS = {
    "zh": ("你们", "诸位", "各位", "大家", "众位"),
    "en": ("you all", "all of you", "gentlemen", "everyone", "everybody"),
}
_QUOTE_PAIRS = {"zh": [("“", "”"), ("「", "」"), ("『", "』"), ('"', '"')], "en": [("“", "”"), ('"', '"')]}


def load_cue_verbs(path=None) -> dict[str, tuple[str, ...]]:
    if path is None:
        raw = resources.files("quoteid").joinpath("data/cue_verbs.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    return {lang: tuple(words) for lang, words in json.loads(raw).items()}


@lru_cache(maxsize=8)
def _cue_pattern(words: tuple[str, ...], lang: str):
    body = "|".join(re.escape(w) for w in sorted(words, key=len, reverse=True))
    if lang == "en":
        return re.compile(rf"\b(?:{body})\b", re.IGNORECASE)
    return re.compile(body)


def quote_regions(text: str, lang: str) -> list[tuple[int, int]]:
    """Spans of paired quotation marks, marks included."""
    regions = []
    for open_, close in _QUOTE_PAIRS.get(lang, _QUOTE_PAIRS["en"]):
        pattern = re.compile(re.escape(open_) + "[^" + re.escape(open_ + close) + "]*" + re.escape(close))
        regions.extend(m.span() for m in pattern.finditer(text))
    regions.sort()
    out = []
    for s, e in regions:
        if not out or s >= out[-1][1]:
            out.append((s, e))
    return out


@dataclass
class _View:
    text: str
    lang: str
    qs: int
    qe: int
    mentions: list[Mention]
    others: list[tuple[int, int]]
    cue: re.Pattern

    def in_other_quote(self, m):
        return any(s <= m.start and m.end <= e for s, e in self.others)

    def narrative(self):
        return [m for m in self.mentions
                if (m.end <= self.qs or m.start >= self.qe) and not self.in_other_quote(m)]

    def is_boundary(self, i):
        ch = self.text[i]
        if ch not in _TERMINALS[self.lang]:
            return False
        return not (ch == "." and _is_abbreviation(self.text, i))

    def clause_before(self, qs):
        end = qs
        while end > 0 and self.text[end - 1] in _CLAUSE_PAD and not self._closes_quote(end):
            end -= 1
        start = end
        while start > 0 and not self.is_boundary(start - 1) and not self._closes_quote(start):
            start -= 1
        return start, end

    def clause_after(self, qe):
        start = qe
        n = len(self.text)
        while start < n and self.text[start] in _CLAUSE_PAD and not self._opens_quote(start):
            start += 1
        end = start
        while end < n and not self.is_boundary(end) and not self._opens_quote(end):
            end += 1
        # "X道：" leading into another quotation attributes that quotation, not this one
        tail = self.text[start:end].rstrip(" \t\r\n　")
        if tail.endswith(("：", ":")) and self._opens_quote(end):
            return start, start
        return start, end

    def _closes_quote(self, pos):
        return pos == self.qe or any(e == pos for _, e in self.others)

    def _opens_quote(self, pos):
        return pos == self.qs or any(s == pos for s, _ in self.others)


def _gap(a0, a1, b0, b1):
    return max(0, b0 - a1, a0 - b1)


def _clause_speaker(view: _View, clause, anchor):
    cs, ce = clause
    if cs >= ce:
        return None
    cues = [m.span() for m in view.cue.finditer(view.text, cs, ce)]
    if not cues:
        return None
    inside = [m for m in view.mentions if cs <= m.start and m.end <= ce]
    if not inside:
        return None
    return min(inside, key=lambda m: (
        min(_gap(m.start, m.end, s, e) for s, e in cues),
        _gap(m.start, m.end, anchor, anchor),
        m.start,
    ))


def _nearest(mentions, qs, qe, side):
    if side == "before":
        pool = [m for m in mentions if m.end <= qs]
        return min(pool, key=lambda m: (qs - m.end, m.start), default=None)
    pool = [m for m in mentions if m.start >= qe]
    return min(pool, key=lambda m: (m.start - qe, m.start), default=None)


def _attribute(view: _View, qs, qe):
    return (_clause_speaker(view, view.clause_before(qs), qs)
            or _clause_speaker(view, view.clause_after(qe), qe))


def rule_identify(segment: Segment, cue_verbs: dict[str, tuple[str, ...]] | None = None) -> Prediction:
    if not segment.candidates:
        raise NoCandidateError(f"segment {segment.id!r} has no candidate characters")
    lang = segment.lang
    cue_verbs = cue_verbs or load_cue_verbs()
    text = segment.passage.text
    qs, qe = segment.passage.quote_char_range
    others = [(s, e) for s, e in quote_regions(text, lang) if e <= qs or s >= qe]
    view = _View(
        text=text,
        lang=lang,
        qs=qs,
        qe=qe,
        mentions=alias_matcher(tuple(segment.candidates), lang).find(text),
        others=others,
        cue=_cue_pattern(tuple(cue_verbs.get(lang, ())), lang),
    )
    narrative = view.narrative()

    speaker = _attribute(view, qs, qe) or _nearest(narrative, qs, qe, "before") or _nearest(narrative, qs, qe, "after")
    if speaker is None:
        first = segment.candidates[0]
        speaker_id, speaker_text = first.id, first.canonical_name
    else:
        speaker_id, speaker_text = speaker.character_id, speaker.surface

    group = _group(view, narrative, speaker_id)
    if group:
        return Prediction(speaker_text, tuple(m.surface for m in group))
    addressee = _addressee(view, narrative, speaker_id)
    return Prediction(speaker_text, (addressee.surface,) if addressee else ())


def _group(view: _View, narrative, speaker_id):
    """All other characters present, when the quotation speaks to several at once."""
    quote = view.text[view.qs:view.qe]
    if view.lang == "en":
        addressed = any(re.search(rf"\b{w}\b", quote, re.IGNORECASE) for w in _GROUP_MARKERS["en"])
    else:
        addressed = any(w in quote for w in _GROUP_MARKERS.get(view.lang, ()))
    vocative = any(view.qs <= m.start and m.end <= view.qe and m.character_id != speaker_id
                   for m in view.mentions)
    if not addressed or vocative:
        return []
    before = [m for m in narrative if m.end <= view.qs]
    after = [m for m in narrative if m.start >= view.qe]
    seen, out = set(), []
    for m in before + after:
        if m.character_id != speaker_id and m.character_id not in seen:
            seen.add(m.character_id)
            out.append(m)
    return out if len(out) > 1 else []


def _addressee(view: _View, narrative, speaker_id):
    text, qs, qe = view.text, view.qs, view.qe
    others = [m for m in narrative if m.character_id != speaker_id]

    after = _nearest(narrative, qs, qe, "after")
    if after is not None and not any(ch.isalnum() for ch in text[qe:after.start]):
        if after.character_id != speaker_id:
            return after

    previous = [r for r in view.others if r[1] <= qs]
    if previous:
        ps, pe = previous[-1]
        prev_speaker = _attribute(view, ps, pe)
        if prev_speaker is not None and prev_speaker.character_id != speaker_id:
            return prev_speaker

    hit = _nearest(others, qs, qe, "before") or _nearest(others, qs, qe, "after")
    if hit is not None:
        return hit

    internal = [m for m in view.mentions if qs <= m.start and m.end <= qe and m.character_id != speaker_id]
    if internal:
        return internal[0]
    quoted = [m for m in view.mentions if view.in_other_quote(m) and m.character_id != speaker_id]
    if quoted:
        return min(quoted, key=lambda m: (_gap(m.start, m.end, qs, qe), m.start))
    return None


class RuleBackend:
    name = "rule"

    def __init__(self, cue_verbs=None):
        self.cue_verbs = cue_verbs or load_cue_verbs()

    def identify(self, segment: Segment, mode=None) -> Prediction:
        return rule_identify(segment, self.cue_verbs)
