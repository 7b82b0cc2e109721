import pytest

from quoteid.corpus import CharacterEntity, Corpus, Mention, Novel, QuotationRecord, Stance


def span(text, surface, cid=None, nth=0, after=0):
    """Mention for the ``nth`` occurrence of ``surface`` at or after ``after``."""
    pos = after - 1
    for _ in range(nth + 1):
        pos = text.index(surface, pos + 1)
    return Mention(surface, pos, pos + len(surface), cid)


ZH_TEXT = (
    "郭靖道：“蓉儿，你来了。”黄蓉笑道：“靖哥哥，我等你好久了。”郭靖挠头道：“我去找师父了。”"
    "洪七公从树上跳下来，说道：“你们两个小娃娃在这里做什么？”黄蓉道：“七公，我们在等你呢。”"
    "众人说笑了一阵。天色渐渐暗了下来。山风吹过树林。远处传来一阵马蹄声。又过了一会儿。远处欧阳锋冷笑一声。"
)

ZH_ROSTER = (
    CharacterEntity("guojing", "郭靖", frozenset({"靖哥哥"}), Stance.PROTAGONIST),
    CharacterEntity("huangrong", "黄蓉", frozenset({"蓉儿"}), Stance.PROTAGONIST),
    CharacterEntity("hong", "洪七公", frozenset({"七公"}), Stance.PROTAGONIST),
    CharacterEntity("ouyang", "欧阳锋", frozenset(), Stance.VILLAIN),
)


def zh_records(text=ZH_TEXT):
    q1 = span(text, "“蓉儿，你来了。”")
    q2 = span(text, "“靖哥哥，我等你好久了。”")
    q3 = span(text, "“我去找师父了。”")
    q4 = span(text, "“你们两个小娃娃在这里做什么？”")
    q5 = span(text, "“七公，我们在等你呢。”")
    return [
        QuotationRecord("q1", "sd", q1, span(text, "郭靖", "guojing"),
                        (span(text, "黄蓉", "huangrong"),), cue=span(text, "道")),
        QuotationRecord("q2", "sd", q2, span(text, "黄蓉", "huangrong"),
                        (span(text, "郭靖", "guojing", nth=1),), cue=span(text, "笑道"), mode=span(text, "笑")),
        QuotationRecord("q3", "sd", q3, span(text, "郭靖", "guojing", nth=1),
                        (span(text, "黄蓉", "huangrong"),), cue=span(text, "挠头道")),
        QuotationRecord("q4", "sd", q4, span(text, "洪七公", "hong"),
                        (span(text, "郭靖", "guojing", nth=1), span(text, "黄蓉", "huangrong", nth=1)),
                        cue=span(text, "说道")),
        QuotationRecord("q5", "sd", q5, span(text, "黄蓉", "huangrong", nth=1),
                        (span(text, "洪七公", "hong"),), cue=span(text, "道", after=q5.start - 2)),
    ]


def zh_corpus(records=None):
    novel = Novel("sd", "射雕英雄传", "金庸", ZH_TEXT, "zh")
    return Corpus({"sd": novel}, ZH_ROSTER, tuple(records if records is not None else zh_records()))


EN_TEXT = (
    "Moisey Moisevitch brought a footstool from the other room and sat down a little way from the table. "
    '"I wish you a good appetite! Tea and sugar!" he began, trying to entertain his visitors. '
    '"I hope you will enjoy it. Such rare guests, such rare ones; it is years since I last saw Father Christopher. '
    'And will no one tell me who is this nice little gentleman?" he asked, looking tenderly at Yegorushka. '
    '"He is the son of my sister, Olga Ivanovna," answered Kuzmitchov. '
    '"And where is he going?" "To school. We are taking him to a high school." '
    "In his politeness, Moisey Moisevitch put on a look of wonder and wagged his head expressively. "
    '"Ah, that is a fine thing," he said, shaking his finger at the samovar.'
)

EN_ROSTER = (
    CharacterEntity("moisey", "Moisey Moisevitch"),
    CharacterEntity("kuzmitchov", "Kuzmitchov"),
    CharacterEntity("yegorushka", "Yegorushka"),
    CharacterEntity("christopher", "Father Christopher"),
    CharacterEntity("olga", "Olga Ivanovna"),
)


def en_corpus():
    t = EN_TEXT
    quote = span(t, '"Ah, that is a fine thing,"')
    he = span(t, "he", "moisey", after=quote.end)
    rec = QuotationRecord("steppe-1", "steppe", quote, he, (span(t, "Kuzmitchov", "kuzmitchov"),),
                          cue=span(t, "said", after=quote.end))
    return Corpus({"steppe": Novel("steppe", "The Steppe", "Anton Chekhov", t, "en")}, EN_ROSTER, (rec,))


@pytest.fixture
def zh():
    return zh_corpus()


@pytest.fixture
def en():
    return en_corpus()
