"""Identification backends sharing one contract: ``identify(segment, mode)``.

``mode`` is ``None`` (zero-shot) or a :class:`FewShot` carrying exemplars.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

from ..corpus import Segment
from ..errors import IdentificationError, QuoteIdError
from ..prompting import Exemplar, Prediction, PromptTemplate, render_few_shot, render_zero_shot


@dataclass(frozen=True)
class FewShot:
    exemplars: tuple[Exemplar, ...]

    @property
    def label(self) -> str:
        return f"few:{len(self.exemplars)}"


ZERO_SHOT = None


def mode_label(mode) -> str:
    return "zero" if mode is None else mode.label


class Backend(Protocol):
    name: str

    def identify(self, segment: Segment, mode=None) -> Prediction: ...


def render_prompt(template: PromptTemplate, segment: Segment, mode=None) -> str:
    if mode is None:
        return render_zero_shot(template, segment.passage, segment.quotation_text)
    return render_few_shot(template, mode.exemplars, segment.passage, segment.quotation_text)


def exemplar_from(segment: Segment) -> Exemplar:
    q = segment.quotation
    return Exemplar(
        context=segment.passage.text,
        quotation=segment.quotation_text,
        speaker=q.speaker.surface,
        addressees=tuple(m.surface for m in q.addressees),
    )


def select_exemplars(train_segments: Sequence[Segment], k: int = 2) -> FewShot:
    """The first ``k`` training segments by id."""
    chosen = sorted(train_segments, key=lambda s: s.id)[:k]
    return FewShot(tuple(exemplar_from(s) for s in chosen))


def identify(backend: Backend, segment: Segment, mode=None) -> Prediction:
    """Run a backend, attaching the segment id to any failure."""
    try:
        return backend.identify(segment, mode)
    except QuoteIdError as exc:
        raise IdentificationError(segment.id, exc) from exc
