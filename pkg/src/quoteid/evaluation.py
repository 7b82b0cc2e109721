"""Accuracy scoring, inter-annotator agreement and case-level diff reports.

Predictions are strings, so correctness is decided by surface and alias
matching against the gold mentions, never by offsets.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import CharacterEntity, Corpus, Mention, QuotationRecord, build_segment, candidate_ids
from .errors import InputError, ParseError
from .prompting import QUOTE_MARKS

POLICIES = ("subset", "strict")


@dataclass(frozen=True)
class PredictionRecord:
    segment_id: str
    speaker: str
    addressees: tuple[str, ...] = ()
    backend: str = ""
    mode: str = "zero"

    def to_json(self):
        d = asdict(self)
        d["addressees"] = list(self.addressees)
        return d

    @classmethod
    def from_json(cls, obj):
        return cls(str(obj["segment_id"]), obj.get("speaker") or "", tuple(obj.get("addressees") or ()),
                   obj.get("backend", ""), obj.get("mode", "zero"))


def load_predictions(path) -> list[PredictionRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(PredictionRecord.from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(f"bad prediction record ({exc!r})", line=lineno) from exc
    return out


def save_predictions(records: Iterable[PredictionRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json(), ensure_ascii=False) + "\n")


# ---------------------------------------------------------------- matching


def normalize(text: str) -> str:
    return text.strip().strip(QUOTE_MARKS).strip().casefold()


def _characters(roster) -> Mapping[str, CharacterEntity]:
    if roster is None:
        return {}
    if isinstance(roster, Corpus):
        return roster.characters
    if isinstance(roster, Mapping):
        return roster
    return {c.id: c for c in roster}


def match_mention(pred: str, gold: Sequence[Mention], roster=None) -> bool:
    """True iff ``pred`` equals a gold surface or an alias of a gold character."""
    p = normalize(pred)
    if not p:
        return False
    chars = _characters(roster)
    for m in gold:
        if p == normalize(m.surface):
            return True
        ent = chars.get(m.character_id) if m.character_id is not None else None
        if ent is not None and any(p == normalize(a) for a in ent.aliases):
            return True
    return False


def addressee_correct(pred: Sequence[str], gold: Sequence[Mention], roster=None, policy: str = "subset") -> bool:
    """Subset policy: at least one predicted addressee, all of them gold.
    Strict policy additionally requires every gold addressee to be predicted.
    """
    if policy not in POLICIES:
        raise InputError(f"unknown addressee policy {policy!r}")
    pred = [p for p in pred if normalize(p)]
    if not gold:
        return not pred
    if not pred or not all(match_mention(p, gold, roster) for p in pred):
        return False
    if policy == "strict":
        return all(any(match_mention(p, [g], roster) for p in pred) for g in gold)
    return True


# ---------------------------------------------------------------- scoring


@dataclass(frozen=True)
class Score:
    speaker_acc: float
    addressee_acc: float
    both_acc: float
    n: int

    def row(self) -> str:
        return f"{self.speaker_acc * 100:6.2f} {self.addressee_acc * 100:9.2f} {self.both_acc * 100:6.2f} {self.n:6d}"


@dataclass(frozen=True)
class EvalReport:
    speaker_acc: float
    addressee_acc: float
    both_acc: float
    n: int
    per_novel: dict[str, Score] = field(default_factory=dict)

    @property
    def overall(self) -> Score:
        return Score(self.speaker_acc, self.addressee_acc, self.both_acc, self.n)

    def to_json(self):
        def pct(x):
            return round(x * 100, 2)

        return {
            "n": self.n,
            "speaker": pct(self.speaker_acc),
            "addressee": pct(self.addressee_acc),
            "both": pct(self.both_acc),
            "per_novel": {
                k: {"n": s.n, "speaker": pct(s.speaker_acc), "addressee": pct(s.addressee_acc), "both": pct(s.both_acc)}
                for k, s in sorted(self.per_novel.items())
            },
        }

    def table(self) -> str:
        lines = [f"{'':30} {'speaker':>6} {'addressee':>9} {'both':>6} {'n':>6}",
                 f"{'overall':30} {self.overall.row()}"]
        for novel, s in sorted(self.per_novel.items()):
            lines.append(f"{novel[:30]:30} {s.row()}")
        return "\n".join(lines)


def _judge(predictions, golds, roster, policy):
    golds = list(golds)
    gold_ids = {g.id for g in golds}
    by_id = {}
    for p in predictions:
        if p.segment_id in by_id:
            raise InputError(f"duplicate prediction for segment {p.segment_id!r}")
        if p.segment_id not in gold_ids:
            raise InputError(f"prediction for unknown segment {p.segment_id!r}")
        by_id[p.segment_id] = p
    out = []
    for g in golds:
        p = by_id.get(g.id)
        if p is None:
            out.append((g, None, False, False))
            continue
        sp = match_mention(p.speaker, [g.speaker], roster)
        ad = addressee_correct(p.addressees, g.addressees, roster, policy)
        out.append((g, p, sp, ad))
    return out


def _summarize(judged) -> Score:
    n = len(judged)
    if not n:
        return Score(0.0, 0.0, 0.0, 0)
    sp = sum(1 for _, _, s, _ in judged if s)
    ad = sum(1 for _, _, _, a in judged if a)
    both = sum(1 for _, _, s, a in judged if s and a)
    return Score(sp / n, ad / n, both / n, n)


def score(predictions, golds: Iterable[QuotationRecord], roster=None, policy: str = "subset") -> EvalReport:
    """Per-item speaker, addressee and joint accuracy; missing predictions count as wrong."""
    judged = _judge(predictions, golds, roster, policy)
    overall = _summarize(judged)
    groups = defaultdict(list)
    for item in judged:
        groups[item[0].novel_id].append(item)
    per_novel = {k: _summarize(v) for k, v in groups.items()}
    return EvalReport(overall.speaker_acc, overall.addressee_acc, overall.both_acc, overall.n, per_novel)


def per_novel_report(predictions, golds, roster=None, policy: str = "subset") -> dict[str, Score]:
    return score(predictions, golds, roster, policy).per_novel


# ---------------------------------------------------------------- agreement


@dataclass(frozen=True)
class IaaReport:
    f1: float
    kappa: float
    judgment_count: int

    def to_json(self):
        return asdict(self)


def _pairs(ann: Mapping[str, Iterable[str]]) -> set[tuple[str, str]]:
    return {(s, c) for s, cs in ann.items() for c in cs}


def iaa_f1(annotator_a: Mapping[str, Iterable[str]], annotator_b: Mapping[str, Iterable[str]]) -> float:
    """F1 of B's (segment, addressee) assertions against A as reference.

    Swapping the annotators swaps precision and recall; F1 is unchanged.
    """
    if set(annotator_a) != set(annotator_b):
        raise InputError("annotators cover different segment sets")
    ref, hyp = _pairs(annotator_a), _pairs(annotator_b)
    if not ref and not hyp:
        return 1.0
    tp = len(ref & hyp)
    if tp == 0:
        return 0.0
    precision = tp / len(hyp)
    recall = tp / len(ref)
    return 2 * precision * recall / (precision + recall)


def cohens_kappa(annotator_a, annotator_b, candidate_universe: Mapping[str, Iterable[str]]) -> float:
    """Chance-corrected agreement on binary addressee judgments over every
    (segment, candidate) pair. Annotated pairs missing from the universe are
    added to it.
    """
    a, b = _pairs(annotator_a), _pairs(annotator_b)
    universe = _pairs(candidate_universe) | a | b
    n = len(universe)
    if n == 0:
        raise InputError("empty judgment universe")
    both_yes = len(a & b)
    both_no = n - len(a | b)
    p_o = (both_yes + both_no) / n
    pa, pb = len(a) / n, len(b) / n
    p_e = pa * pb + (1 - pa) * (1 - pb)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1 - p_e)


def addressee_annotations(corpus: Corpus) -> dict[str, set[str]]:
    return {q.id: set(q.addressee_ids) for q in corpus.quotations}


def candidate_universe(corpus: Corpus, window=None) -> dict[str, set[str]]:
    out = {}
    for q in corpus.quotations:
        if q.candidates is not None:
            out[q.id] = set(q.candidates)
        else:
            out[q.id] = set(candidate_ids(corpus, q, build_segment(corpus, q, window).passage))
    return out


def iaa(annotator_a, annotator_b, universe) -> IaaReport:
    n = len(_pairs(universe) | _pairs(annotator_a) | _pairs(annotator_b))
    return IaaReport(iaa_f1(annotator_a, annotator_b), cohens_kappa(annotator_a, annotator_b, universe), n)


# ---------------------------------------------------------------- case reports


def diff_report(predictions, golds: Iterable[QuotationRecord], context: Mapping[str, str] | None = None,
                roster=None, policy: str = "subset") -> list[dict]:
    """One record per gold quotation, ordered by segment id.

    ``predictions`` is a flat list of :class:`PredictionRecord` (grouped by
    their ``backend`` field) or a mapping backend -> records.
    """
    if isinstance(predictions, Mapping):
        by_backend = {k: list(v) for k, v in predictions.items()}
    else:
        by_backend = defaultdict(list)
        for p in predictions:
            by_backend[p.backend].append(p)
    judged = {}
    for backend, preds in by_backend.items():
        for g, p, sp, ad in _judge(preds, golds, roster, policy):
            judged[(backend, g.id)] = (p, sp, ad)

    records = []
    for g in sorted(golds, key=lambda q: q.id):
        row = {
            "segment_id": g.id,
            "novel_id": g.novel_id,
            "quotation": g.quote.surface,
            "context": (context or {}).get(g.id, ""),
            "gold": {"speaker": g.speaker.surface, "addressees": [m.surface for m in g.addressees]},
            "predictions": {},
        }
        for backend in sorted(by_backend):
            p, sp, ad = judged[(backend, g.id)]
            row["predictions"][backend] = {
                "speaker": p.speaker if p else None,
                "addressees": list(p.addressees) if p else [],
                "missing": p is None,
                "speaker_correct": sp,
                "addressee_correct": ad,
                "both_correct": sp and ad,
            }
        row["missing"] = not any(not v["missing"] for v in row["predictions"].values())
        records.append(row)
    return records


def render_cases(records: Sequence[dict]) -> str:
    """Plain-text comparison table: context, gold answer, then one line per backend."""
    out = []
    for r in records:
        out.append(f"[{r['segment_id']}] {r['context'] or r['quotation']}")
        gold = r["gold"]
        out.append(f"  {'Ground Truth':22} Speaker: \"{gold['speaker']}\", Addressee: \"{'、'.join(gold['addressees'])}\"")
        for backend, p in r["predictions"].items():
            if p["missing"]:
                out.append(f"  {backend:22} (missing)")
                continue
            sp = p["speaker"] if p["speaker_correct"] else f"*{p['speaker']}*"
            ad = "、".join(p["addressees"])
            ad = ad if p["addressee_correct"] else f"*{ad}*"
            out.append(f"  {backend:22} Speaker: \"{sp}\", Addressee: \"{ad}\"")
        out.append("")
    return "\n".join(out)


def write_report(report: EvalReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")
