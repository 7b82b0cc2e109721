import json

import pytest

from conftest import en_corpus, zh_corpus
from quoteid.backends import render_prompt
from quoteid.backends.seq2seq import (
    JYQ_PROMPTCLUE,
    RIQUA_T5,
    EchoModel,
    ReplayModel,
    Seq2SeqAdapter,
    Seq2SeqBackend,
    TrainConfig,
    export_training_pairs,
    gold_answer,
    load_adapter,
    seq2seq_predict,
)
from quoteid.corpus import build_segments
from quoteid.errors import ConfigError, LoadError
from quoteid.prompting import default_template


class Recorder:
    def __init__(self):
        self.seen = []

    def generate(self, prompt):
        self.seen.append(prompt)
        return f"len={len(prompt)}"


def test_presets():
    assert (RIQUA_T5.batch_size, RIQUA_T5.epochs, RIQUA_T5.learning_rate) == (2, 32, 7e-5)
    assert (JYQ_PROMPTCLUE.batch_size, JYQ_PROMPTCLUE.epochs, JYQ_PROMPTCLUE.learning_rate) == (4, 12, 8e-5)
    assert RIQUA_T5.max_text_length == JYQ_PROMPTCLUE.max_text_length == 512
    assert RIQUA_T5.overlong([10, 512, 513]) == 1
    with pytest.raises(ConfigError):
        TrainConfig(0, 1, 1e-5)


def test_long_prompt_is_truncated():
    rec = Recorder()
    adapter = Seq2SeqAdapter(rec)
    prompt = " ".join(f"w{i}" for i in range(800))
    seq2seq_predict(adapter, prompt, 512)
    assert adapter.last_truncated
    assert adapter.truncations == [{"tokens": 800, "max_text_length": 512}]
    assert rec.seen[0].split() == [f"w{i}" for i in range(512)]
    seq2seq_predict(adapter, "short prompt", 512)
    assert not adapter.last_truncated and len(adapter.truncations) == 1


def test_zh_truncation_counts_code_points():
    rec = Recorder()
    adapter = Seq2SeqAdapter(rec)
    adapter.predict("文" * 600, 512)
    assert rec.seen[0] == "文" * 512


def test_deterministic():
    adapter = Seq2SeqAdapter(Recorder())
    assert seq2seq_predict(adapter, "same", 512) == seq2seq_predict(adapter, "same", 512)


def test_echo_stub():
    assert seq2seq_predict(Seq2SeqAdapter(EchoModel("fixed")), "anything") == "fixed"


def test_load_errors(tmp_path):
    with pytest.raises(LoadError):
        load_adapter(tmp_path / "missing")
    (tmp_path / "x.bin").write_bytes(b"")
    with pytest.raises(LoadError):
        load_adapter(tmp_path / "x.bin")
    with pytest.raises(LoadError):
        load_adapter(tmp_path)


def test_replay_file(tmp_path):
    f = tmp_path / "r.jsonl"
    f.write_text(json.dumps({"prompt": "p", "response": "r"}) + "\n", encoding="utf-8")
    adapter = load_adapter(f)
    assert adapter.predict("p") == "r"
    with pytest.raises(LoadError):
        adapter.predict("unknown")


def test_backend_on_english_case_one():
    corpus = en_corpus()
    seg = build_segments(corpus)[0]
    template = default_template("en")
    model = ReplayModel({render_prompt(template, seg): 'Speaker: "he", Addressee: "Kuzmitchov"'})
    p = Seq2SeqBackend(Seq2SeqAdapter(model), template).identify(seg)
    assert (p.speaker, p.addressees) == ("he", ("Kuzmitchov",))


def test_export_training_pairs(tmp_path):
    segs = build_segments(zh_corpus())
    template = default_template("zh")
    n = export_training_pairs(segs, template, tmp_path / "pairs.jsonl")
    rows = [json.loads(l) for l in (tmp_path / "pairs.jsonl").read_text("utf-8").splitlines()]
    assert n == len(rows) == 5
    assert rows[3]["target"] == "说话人：“洪七公”，听话人：“郭靖、黄蓉”"
    assert rows[0]["prompt"] == render_prompt(template, segs[0])
    assert gold_answer(segs[0]) == rows[0]["target"]
