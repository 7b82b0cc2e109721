import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quoteid.errors import ConfigError, PredictionParseError, TemplateError
from quoteid.prompting import (
    DEFAULT_TEMPLATES,
    Exemplar,
    Prediction,
    PromptTemplate,
    default_template,
    format_answer,
    parse_prediction,
    render_few_shot,
    render_zero_shot,
)
from quoteid.windows import sentence_window

EN = DEFAULT_TEMPLATES["en"]
ZH = DEFAULT_TEMPLATES["zh"]


# -- rendering

def test_zero_shot_contains_passage_quote_instruction():
    out = render_zero_shot(EN, "PASSAGE-TEXT", "QUOTE-TEXT")
    assert out.count("PASSAGE-TEXT") == 1 and out.count("QUOTE-TEXT") == 1
    assert EN.answer_format_instruction in out
    assert out.index("PASSAGE-TEXT") < out.index(EN.answer_format_instruction)


def test_zero_shot_accepts_passage_objects():
    doc = "甲。他道：“好。”乙。"
    p = sentence_window(doc, (doc.index("“"), doc.index("”") + 1))
    out = render_zero_shot(ZH, p, p.quote_text)
    assert p.text in out


def test_zero_shot_empty_passage():
    out = render_zero_shot(EN, "", "Q")
    assert "Passage: \n" in out


def test_rendering_is_pure():
    assert render_zero_shot(ZH, "上下文", "“引语”") == render_zero_shot(ZH, "上下文", "“引语”")


def test_missing_placeholder_is_template_error():
    with pytest.raises(TemplateError):
        PromptTemplate("en", "", "Passage: {context}", "", EN.exemplar_pattern)
    with pytest.raises(TemplateError):
        PromptTemplate("en", "", "{context} {quotation} {extra}", "", EN.exemplar_pattern)
    with pytest.raises(TemplateError):
        PromptTemplate("en", "{context}", EN.question_pattern, "", EN.exemplar_pattern)


def test_template_save_load(tmp_path):
    ZH.save(tmp_path / "t.json")
    assert PromptTemplate.load(tmp_path / "t.json") == ZH
    (tmp_path / "bad.json").write_text("{}", encoding="utf-8")
    with pytest.raises(TemplateError):
        PromptTemplate.load(tmp_path / "bad.json")


def test_default_template_unknown_lang():
    with pytest.raises(ConfigError):
        default_template("fr")


def test_few_shot_order():
    exs = [Exemplar("CTX-ONE", "Q1", "Alice", ("Bob",)), Exemplar("CTX-TWO", "Q2", "Carol", ("Dan",))]
    out = render_few_shot(EN, exs, "QUERY-CTX", "Q3")
    a1 = out.index('Speaker: "Alice", Addressee: "Bob"')
    a2 = out.index('Speaker: "Carol", Addressee: "Dan"')
    assert a1 < a2 < out.index("QUERY-CTX")


def test_few_shot_identical_exemplar_not_deduplicated():
    out = render_few_shot(EN, [Exemplar("SAME", "Q", "A", ("B",))], "SAME", "Q")
    assert out.count("SAME") == 2


def test_few_shot_multi_addressee_delimiters():
    out = render_few_shot(ZH, [Exemplar("c", "q", "洪七公", ("郭靖", "黄蓉"))], "c2", "q2")
    assert "“郭靖、黄蓉”" in out
    out = render_few_shot(EN, [Exemplar("c", "q", "Holmes", ("Watson", "Lestrade"))], "c2", "q2")
    assert '"Watson, Lestrade"' in out


def test_few_shot_needs_exemplars():
    with pytest.raises(ConfigError):
        render_few_shot(EN, [], "c", "q")


# -- parsing

@pytest.mark.parametrize("raw,lang,speaker,addressees", [
    ('Speaker: "he", Addressee: "Kuzmitchov"', "en", "he", ("Kuzmitchov",)),
    ("说话人：黄蓉 听话人：陆庄主", "zh", "黄蓉", ("陆庄主",)),
    ("Addressee: 黄蓉、江南六怪、朱聪 说话人: 裘千仞", "zh", "裘千仞", ("黄蓉", "江南六怪", "朱聪")),
    ('Speaker: "黄蓉" ,  Addressee： "陆庄主"', "zh", "黄蓉", ("陆庄主",)),
    ('Speaker: "Moisey Moisevitch",  Addressee: "Yegorushka"', "en", "Moisey Moisevitch", ("Yegorushka",)),
    ("The answer is\nSpeaker: Holmes\nAddressee: Watson and Lestrade\nHope that helps.", "en",
     "Holmes", ("Watson", "Lestrade")),
    ("说话人：“洪七公”，听话人：“郭靖和黄蓉”", "zh", "洪七公", ("郭靖", "黄蓉")),
    ("speaker: A; addressee: A, B, B", "en", "A", ("A", "B")),
    ('Speaker: "X"', "en", "X", ()),
])
def test_parse_examples(raw, lang, speaker, addressees):
    p = parse_prediction(raw, lang)
    assert (p.speaker, p.addressees) == (speaker, addressees)
    assert p.raw_response == raw


def test_first_label_wins():
    p = parse_prediction('Speaker: "A", Addressee: "B". Speaker: "C"', "en")
    assert p.speaker == "A"


@pytest.mark.parametrize("raw", ["I don't know.", "Addressee: Watson", "Speaker: , Addressee: B", ""])
def test_parse_errors_carry_raw(raw):
    with pytest.raises(PredictionParseError) as info:
        parse_prediction(raw, "en")
    assert info.value.raw_response == raw


# -- round trip

ZH_NAME = st.text(alphabet="郭靖黄蓉洪七公欧阳锋梅超风裘千仞陆庄主朱聪", min_size=1, max_size=4)
EN_NAME = st.lists(st.sampled_from(["Moisey", "Holmes", "Watson", "Father", "Olga", "he", "she", "Mr"]),
                   min_size=1, max_size=3).map(" ".join)


def _pred(name):
    return st.builds(lambda s, a: Prediction(s, tuple(a)), name, st.lists(name, max_size=4))


def _reordered(pred, lang, fullwidth):
    delim = "、" if lang == "zh" else ", "
    colon = "：" if fullwidth else ":"
    if lang == "zh":
        return f"听话人{colon}“{delim.join(pred.addressees)}”，说话人{colon}“{pred.speaker}”"
    return f'Addressee{colon} "{delim.join(pred.addressees)}"; Speaker{colon} "{pred.speaker}"'


@settings(max_examples=300, deadline=None)
@given(st.one_of(_pred(ZH_NAME).map(lambda p: (p, "zh")), _pred(EN_NAME).map(lambda p: (p, "en"))),
       st.booleans())
def test_roundtrip(case, fullwidth):
    pred, lang = case
    assert parse_prediction(format_answer(pred, lang), lang) == pred
    assert parse_prediction(_reordered(pred, lang, fullwidth), lang) == pred
    assert parse_prediction("  " + format_answer(pred, lang) + "\n", lang) == pred


def test_prediction_dedupes_preserving_order():
    assert Prediction("a", ("b", "c", "b")).addressees == ("b", "c")
