"""Thin adapters mapping external quotation corpora onto the canonical model.

riqua_import
    A directory of brat-style standoff pairs ``<novel>.txt`` / ``<novel>.ann``.
    ``T`` lines carry spans typed ``Quote``, ``Speaker``, ``Addressee``, ``Cue``
    or ``Mode``; ``R`` lines link a quote (``Arg1``) to its elements (``Arg2``)
    with relation types of the same names; ``AnnotatorNotes`` on an element
    give the character it refers to (the surface is used otherwise).

jyq_import
    One JSON object per line, one annotated segment per object::

        {"id", "novel_id", "title"?, "author"?, "context",
         "quote": {"start", "end"},
         "speaker": {"name", "start", "end"},
         "addressees": [{"name", "start", "end"}, ...],
         "cue"?: {"start", "end"}, "mode"?: {"start", "end"},
         "candidates"?: [name, ...], "monologue"?: bool,
         "aliases"?: {name: [alias, ...]}, "stances"?: {name: stance}}

    Offsets are relative to ``context``. Segments of one novel are joined with
    newlines to form the novel text.
"""

from __future__ import annotations

import json
import re
from collections import defaultdict
from pathlib import Path

from .corpus import CharacterEntity, Corpus, Mention, Novel, QuotationRecord, Stance
from .errors import ConfigError, IntegrityError, ParseError

_ID_SAFE = re.compile(r"\s+")


def character_key(name: str) -> str:
    return _ID_SAFE.sub("_", name.strip())


class _Roster:
    def __init__(self):
        self.entities: dict[str, dict] = {}

    def add(self, name, aliases=(), stance=None):
        key = character_key(name)
        ent = self.entities.setdefault(key, {"name": name.strip(), "aliases": set(), "stance": "unknown"})
        ent["aliases"].update(a for a in aliases if a)
        if stance:
            ent["stance"] = stance
        return key

    def build(self):
        return tuple(
            CharacterEntity(k, v["name"], frozenset(v["aliases"]), Stance(v["stance"]))
            for k, v in sorted(self.entities.items())
        )


# ---------------------------------------------------------------- RiQuA-style


def _parse_ann(path: Path):
    spans, rels, notes = {}, [], {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            try:
                tag, rest = line.split("\t", 1)
                if tag.startswith("T"):
                    head, surface = rest.split("\t", 1) if "\t" in rest else (rest, "")
                    etype, offsets = head.split(" ", 1)
                    pieces = [tuple(int(x) for x in p.split()) for p in offsets.split(";")]
                    spans[tag] = (etype, pieces[0][0], pieces[-1][1], surface)
                elif tag.startswith("R"):
                    rtype, a1, a2 = rest.split()[:3]
                    rels.append((rtype, a1.split(":", 1)[1], a2.split(":", 1)[1]))
                elif tag.startswith("#"):
                    head, note = rest.split("\t", 1)
                    kind, target = head.split()
                    if kind == "AnnotatorNotes":
                        notes[target] = note.strip()
            except ValueError as exc:
                raise ParseError(f"{path.name}: malformed standoff line {line!r}", line=lineno) from exc
    return spans, rels, notes


def load_riqua(path, keep_unaddressed: bool = False, drop=()) -> Corpus:
    """Import a standoff directory.

    Quotations without an addressee are dropped unless ``keep_unaddressed``;
    ``drop`` names optional elements (``cue``, ``mode``) to discard.
    """
    root = Path(path)
    if not root.is_dir():
        raise ConfigError(f"riqua_import expects a directory, got {root}")
    roster = _Roster()
    novels, quotations = {}, []
    for txt in sorted(root.glob("*.txt")):
        ann = txt.with_suffix(".ann")
        if not ann.exists():
            continue
        novel_id = txt.stem
        text = txt.read_text(encoding="utf-8")
        novels[novel_id] = Novel(novel_id, novel_id, "", text, "en")
        spans, rels, notes = _parse_ann(ann)
        linked = defaultdict(lambda: defaultdict(list))
        for rtype, quote_tag, elem_tag in rels:
            linked[quote_tag][rtype.lower()].append(elem_tag)

        def mention(tag, with_character):
            etype, s, e, _ = spans[tag]
            cid = None
            if with_character:
                name = notes.get(tag) or text[s:e]
                cid = roster.add(name)
            return Mention(text[s:e], s, e, cid)

        for tag, (etype, s, e, _) in spans.items():
            if etype.lower() not in ("quote", "quotation"):
                continue
            rid = f"{novel_id}:{tag}"
            elems = linked.get(tag, {})
            try:
                speakers = [mention(t, True) for t in elems.get("speaker", ())]
                addressees = [mention(t, True) for t in elems.get("addressee", ())]
                cue = [mention(t, False) for t in elems.get("cue", ())]
                mode = [mention(t, False) for t in elems.get("mode", ())]
            except KeyError as exc:
                raise ParseError(f"relation points at unknown span {exc}", record_id=rid) from exc
            except IntegrityError as exc:
                raise ParseError(str(exc), record_id=rid) from exc
            if not speakers:
                continue
            if not addressees and not keep_unaddressed:
                continue
            quotations.append(QuotationRecord(
                id=rid,
                novel_id=novel_id,
                quote=Mention(text[s:e], s, e),
                speaker=speakers[0],
                addressees=tuple(addressees),
                cue=None if "cue" in drop or not cue else cue[0],
                mode=None if "mode" in drop or not mode else mode[0],
            ))
    return Corpus(novels, roster.build(), tuple(quotations))


# ---------------------------------------------------------------- JY-style


def load_jyq(path, keep_unaddressed: bool = True, drop=()) -> Corpus:
    roster = _Roster()
    texts = defaultdict(list)
    lengths = defaultdict(int)
    meta = {}
    quotations = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rid = str(obj["id"])
                nid = str(obj.get("novel_id", "novel"))
                context = obj["context"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"malformed segment ({exc!r})", line=lineno) from exc
            meta.setdefault(nid, (obj.get("title", nid), obj.get("author", "")))
            base = lengths[nid]
            texts[nid].append(context)
            lengths[nid] += len(context) + 1
            aliases = obj.get("aliases", {})
            stances = obj.get("stances", {})

            def person(name):
                return roster.add(name, aliases.get(name, ()), stances.get(name))

            def span(o, named):
                s, e = int(o["start"]), int(o["end"])
                cid = person(o["name"]) if named else None
                return Mention(context[s:e], base + s, base + e, cid)

            try:
                q = QuotationRecord(
                    id=rid,
                    novel_id=nid,
                    quote=span(obj["quote"], False),
                    speaker=span(obj["speaker"], True),
                    addressees=tuple(span(a, True) for a in obj.get("addressees", ())),
                    cue=span(obj["cue"], False) if obj.get("cue") and "cue" not in drop else None,
                    mode=span(obj["mode"], False) if obj.get("mode") and "mode" not in drop else None,
                    monologue=bool(obj.get("monologue", False)),
                    candidates=tuple(person(n) for n in obj["candidates"]) if "candidates" in obj else None,
                )
            except (KeyError, TypeError, ValueError, IntegrityError) as exc:
                raise ParseError(f"malformed segment ({exc!r})", line=lineno, record_id=rid) from exc
            if not q.addressees and not keep_unaddressed:
                continue
            quotations.append(q)
    novels = {
        nid: Novel(nid, meta[nid][0], meta[nid][1], "\n".join(parts), "zh")
        for nid, parts in texts.items()
    }
    return Corpus(novels, roster.build(), tuple(quotations))
