"""Speaker and addressee identification for quotations in novels."""

from .corpus import (
    CharacterEntity,
    Corpus,
    ElementStats,
    Mention,
    Novel,
    QuotationRecord,
    Segment,
    WindowSpec,
    build_segment,
    build_segments,
    corpus_stats,
    load_corpus,
    save_canonical,
    split_corpus,
    validate_guidelines,
)
from .evaluation import EvalReport, cohens_kappa, iaa_f1, match_mention, score
from .network import build_network, export_network, smooth
from .prompting import Prediction, PromptTemplate, format_answer, parse_prediction, render_few_shot, render_zero_shot
from .windows import Passage, sentence_window, split_sentences, token_window

__version__ = "0.1.0"
