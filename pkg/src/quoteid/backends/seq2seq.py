"""Adapter boundary for a fine-tuned sequence-to-sequence model.

Training happens outside this package: :func:`export_training_pairs` writes
the (prompt, target) pairs it consumes, and :class:`TrainConfig` records the
hyperparameters. At prediction time any object with ``generate(prompt) -> str``
can sit behind :class:`Seq2SeqAdapter`; ``transformers`` is only imported when
a Hugging Face model directory is loaded.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Protocol

from ..errors import ConfigError, LoadError
from ..prompting import Prediction, PromptTemplate, format_answer, parse_prediction
from ..windows import tokenize
from . import render_prompt


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int
    epochs: int
    learning_rate: float
    max_text_length: int = 512

    def __post_init__(self):
        for name in ("batch_size", "epochs", "learning_rate", "max_text_length"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    def to_json(self):
        return asdict(self)

    def overlong(self, lengths: Iterable[int]) -> int:
        """How many prompts of the given token lengths would be truncated."""
        return sum(1 for n in lengths if n > self.max_text_length)


RIQUA_T5 = TrainConfig(batch_size=2, epochs=32, learning_rate=7e-5, max_text_length=512)
JYQ_PROMPTCLUE = TrainConfig(batch_size=4, epochs=12, learning_rate=8e-5, max_text_length=512)


class TextModel(Protocol):
    def generate(self, prompt: str) -> str: ...


class EchoModel:
    """Returns a fixed string; a harness stand-in for a trained model."""

    def __init__(self, output: str):
        self.output = output

    def generate(self, prompt: str) -> str:
        return self.output


class ReplayModel:
    """Replays recorded responses keyed by prompt."""

    def __init__(self, responses: dict[str, str], default: str | None = None):
        self.responses = dict(responses)
        self.default = default

    @classmethod
    def from_file(cls, path) -> "ReplayModel":
        responses = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    row = json.loads(line)
                    responses[row["prompt"]] = row["response"]
        return cls(responses)

    def generate(self, prompt: str) -> str:
        if prompt in self.responses:
            return self.responses[prompt]
        if self.default is not None:
            return self.default
        raise LoadError("no recorded response for prompt " + hashlib.sha256(prompt.encode()).hexdigest()[:12])


class HFModel:
    def __init__(self, model_dir):
        try:
            from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
        except ImportError as exc:
            raise LoadError("loading a model directory needs the 'transformers' package") from exc
        self.tokenizer = AutoTokenizer.from_pretrained(model_dir)
        self.model = AutoModelForSeq2SeqLM.from_pretrained(model_dir)
        self.model.eval()

    def count_tokens(self, prompt: str) -> int:
        return len(self.tokenizer(prompt)["input_ids"])

    def truncate(self, prompt: str, max_len: int) -> str:
        ids = self.tokenizer(prompt, truncation=True, max_length=max_len)["input_ids"]
        return self.tokenizer.decode(ids, skip_special_tokens=True)

    def generate(self, prompt: str, max_new_tokens: int = 64) -> str:
        enc = self.tokenizer(prompt, return_tensors="pt")
        out = self.model.generate(**enc, do_sample=False, num_beams=1, max_new_tokens=max_new_tokens)
        return self.tokenizer.decode(out[0], skip_special_tokens=True)


def _lang_of(text):
    return "zh" if any("一" <= ch <= "鿿" for ch in text[:200]) else "en"


class Seq2SeqAdapter:
    """Serializes calls to the wrapped model and truncates overlong input."""

    def __init__(self, model: TextModel):
        self.model = model
        self._lock = threading.Lock()
        self.truncations: list[dict] = []
        self.last_truncated = False

    def count_tokens(self, prompt: str) -> int:
        if hasattr(self.model, "count_tokens"):
            return self.model.count_tokens(prompt)
        return len(tokenize(prompt, _lang_of(prompt)))

    def truncate(self, prompt: str, max_len: int) -> str:
        if hasattr(self.model, "truncate"):
            return self.model.truncate(prompt, max_len)
        tokens = tokenize(prompt, _lang_of(prompt))
        return prompt[: tokens[max_len - 1].end] if max_len else ""

    def predict(self, prompt: str, max_text_length: int = 512) -> str:
        n = self.count_tokens(prompt)
        truncated = n > max_text_length
        if truncated:
            prompt = self.truncate(prompt, max_text_length)
        with self._lock:
            self.last_truncated = truncated
            if truncated:
                self.truncations.append({"tokens": n, "max_text_length": max_text_length})
            return self.model.generate(prompt)


def load_adapter(path) -> Seq2SeqAdapter:
    """A ``.jsonl`` file of {prompt, response} rows or a model directory."""
    p = Path(path)
    if not p.exists():
        raise LoadError(f"model artifact {p} does not exist")
    if p.is_file() and p.suffix == ".jsonl":
        return Seq2SeqAdapter(ReplayModel.from_file(p))
    if p.is_dir() and (p / "config.json").exists():
        return Seq2SeqAdapter(HFModel(p))
    raise LoadError(f"unrecognised model artifact {p}")


def seq2seq_predict(adapter: Seq2SeqAdapter, prompt: str, max_text_length: int = 512) -> str:
    return adapter.predict(prompt, max_text_length)


class Seq2SeqBackend:
    name = "seq2seq"

    def __init__(self, adapter: Seq2SeqAdapter, template: PromptTemplate, max_text_length: int = 512):
        self.adapter = adapter
        self.template = template
        self.max_text_length = max_text_length

    def identify(self, segment, mode=None) -> Prediction:
        raw = seq2seq_predict(self.adapter, render_prompt(self.template, segment, mode), self.max_text_length)
        return parse_prediction(raw, segment.lang)


def gold_answer(segment) -> str:
    q = segment.quotation
    return format_answer(Prediction(q.speaker.surface, tuple(m.surface for m in q.addressees)), segment.lang)


def export_training_pairs(segments, template: PromptTemplate, path) -> int:
    """Write one {"id", "prompt", "target"} object per line; returns the count."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for seg in segments:
            row = {"id": seg.id, "prompt": render_prompt(template, seg), "target": gold_answer(seg)}
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            n += 1
    return n
