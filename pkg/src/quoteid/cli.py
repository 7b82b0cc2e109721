"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 transport
error after retries, 5 partial prediction failure (per-segment errors were
written to ``errors.jsonl``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import corpus as cm
from .backends import identify, mode_label, select_exemplars
from .errors import ConfigError, IdentificationError, QuoteIdError, TransportError
from .evaluation import (
    PredictionRecord,
    addressee_annotations,
    candidate_universe,
    diff_report,
    iaa,
    load_predictions,
    render_cases,
    save_predictions,
    score,
    write_report,
)
from .network import build_network, export_network
from .prompting import PromptTemplate, default_template, parse_prediction

log = logging.getLogger("quoteid")

EXIT_PARTIAL = 5
PARTS = ("all", "train", "dev", "test")


@dataclass
class RunConfig:
    corpus: Path
    dialect: str = "canonical"
    window: cm.WindowSpec | None = None
    template: Path | None = None
    backend: str = "rule"
    backend_config: Path | None = None
    few_shot: int = 0
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    out: Path = Path("out")
    part: str = "all"

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        cfg = cls(
            corpus=Path(args.corpus),
            dialect=args.dialect,
            window=cm.WindowSpec.parse(args.window) if getattr(args, "window", None) else None,
            template=Path(args.template) if getattr(args, "template", None) else None,
            backend=getattr(args, "backend", "rule"),
            backend_config=Path(args.backend_config) if getattr(args, "backend_config", None) else None,
            few_shot=_parse_mode(getattr(args, "mode", "zero")),
            ratios=cm.parse_ratios(args.ratios),
            seed=args.seed,
            out=Path(args.out),
            part=getattr(args, "part", "all"),
        )
        cfg.validate()
        return cfg

    def validate(self):
        for p in (self.corpus, self.template, self.backend_config):
            if p is not None and not p.exists():
                raise ConfigError(f"path {p} does not exist")
        if self.backend not in ("rule", "llm", "seq2seq"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.backend != "rule" and self.backend_config is None:
            raise ConfigError(f"--backend {self.backend} needs --backend-config")
        if self.part not in PARTS:
            raise ConfigError(f"--part must be one of {PARTS}")


def _parse_mode(text: str) -> int:
    if text in ("zero", "zero_shot"):
        return 0
    if text.startswith("few"):
        try:
            k = int(text.split(":", 1)[1]) if ":" in text else 2
        except ValueError:
            raise ConfigError(f"bad mode {text!r}; expected zero or few:K") from None
        if k < 1:
            raise ConfigError("few-shot needs K >= 1")
        return k
    raise ConfigError(f"bad mode {text!r}; expected zero or few:K")


def _load(cfg: RunConfig, **options) -> cm.Corpus:
    return cm.load_corpus(cfg.corpus, cfg.dialect, **options)


def _parts(cfg: RunConfig, corpus: cm.Corpus):
    train, dev, test = cm.split_corpus(corpus, cfg.ratios, cfg.seed)
    return {"all": corpus, "train": train, "dev": dev, "test": test}


def _out(cfg: RunConfig) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg.out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- commands


def cmd_import(cfg: RunConfig, args) -> int:
    options = {}
    if args.keep_unaddressed is not None:
        options["keep_unaddressed"] = args.keep_unaddressed
    if args.drop:
        options["drop"] = tuple(args.drop)
    corpus = _load(cfg, **options)
    path = cm.save_canonical(corpus, _out(cfg))
    print(f"imported {len(corpus.quotations)} quotations, {len(corpus.roster)} characters -> {path.parent}")
    return 0


def cmd_validate(cfg: RunConfig, args) -> int:
    corpus = _load(cfg)
    violations = cm.validate_guidelines(corpus, cfg.window)
    with open(_out(cfg) / "violations.jsonl", "w", encoding="utf-8") as fh:
        for v in violations:
            fh.write(json.dumps(v.__dict__, ensure_ascii=False) + "\n")
    counts = {}
    for v in violations:
        counts[v.rule_id] = counts.get(v.rule_id, 0) + 1
    print(f"{len(violations)} violations over {len(corpus.quotations)} quotations")
    for rule, n in sorted(counts.items()):
        print(f"  {rule}: {n}")
    return 0


def cmd_stats(cfg: RunConfig, args) -> int:
    stats = cm.corpus_stats(_load(cfg))
    _write_json(_out(cfg) / "stats.json", stats.to_json())
    print(stats.table())
    return 0


def cmd_split(cfg: RunConfig, args) -> int:
    corpus = _load(cfg)
    out = _out(cfg)
    parts = _parts(cfg, corpus)
    for name in ("train", "dev", "test"):
        cm.save_canonical(parts[name], out, quotations_name=f"{name}.jsonl")
        print(f"{name}: {len(parts[name].quotations)}")
    return 0


def _template_for(cfg: RunConfig, lang: str) -> PromptTemplate:
    return PromptTemplate.load(cfg.template) if cfg.template else default_template(lang)


def _make_backend(cfg: RunConfig, lang: str):
    if cfg.backend == "rule":
        from .backends.rule import RuleBackend

        return RuleBackend()
    conf = json.loads(cfg.backend_config.read_text(encoding="utf-8"))
    template = _template_for(cfg, lang)
    if cfg.backend == "llm":
        from .backends.llm import LlmBackend, LlmClient, LlmClientConfig, ResponseCache

        client = LlmClient(LlmClientConfig.load(cfg.backend_config),
                           cache=ResponseCache(_out(cfg) / "cache" / "llm_responses.jsonl"))
        return LlmBackend(client, template)
    from .backends.seq2seq import Seq2SeqBackend, load_adapter

    model = conf.get("model")
    if not model:
        raise ConfigError("seq2seq backend config needs a 'model' path")
    model_path = Path(model)
    if not model_path.is_absolute():
        model_path = cfg.backend_config.parent / model_path
    return Seq2SeqBackend(load_adapter(model_path), template, int(conf.get("max_text_length", 512)))


def predict_segments(backend, segments, mode=None):
    """Returns (predictions, errors); each error is (segment id, exception)."""
    preds, errors = [], []
    label = mode_label(mode)
    name = getattr(backend, "name", type(backend).__name__)
    if name == "llm":
        prompts = [backend.prompt(s, mode) for s in segments]
        raws = backend.client.complete_many(prompts)
        for seg, raw in zip(segments, raws):
            if isinstance(raw, Exception):
                errors.append((seg.id, raw))
                continue
            try:
                p = parse_prediction(raw, seg.lang)
            except QuoteIdError as exc:
                errors.append((seg.id, exc))
                continue
            preds.append(PredictionRecord(seg.id, p.speaker, p.addressees, name, label))
        return preds, errors
    for seg in segments:
        try:
            p = identify(backend, seg, mode)
        except IdentificationError as exc:
            errors.append((seg.id, exc.cause))
            continue
        preds.append(PredictionRecord(seg.id, p.speaker, p.addressees, name, label))
    return preds, errors


def cmd_predict(cfg: RunConfig, args) -> int:
    corpus = _load(cfg)
    parts = _parts(cfg, corpus)
    target = parts[cfg.part]
    segments = cm.build_segments(target, cfg.window)
    mode = None
    if cfg.few_shot:
        mode = select_exemplars(cm.build_segments(parts["train"], cfg.window), cfg.few_shot)
    langs = {s.lang for s in segments} or {"en"}
    preds, errors = [], []
    for lang in sorted(langs):
        backend = _make_backend(cfg, lang)
        p, e = predict_segments(backend, [s for s in segments if s.lang == lang], mode)
        preds.extend(p)
        errors.extend(e)
    out = _out(cfg)
    save_predictions(preds, out / "predictions.jsonl")
    with open(out / "errors.jsonl", "w", encoding="utf-8") as fh:
        for sid, exc in errors:
            fh.write(json.dumps({"segment_id": sid, "error": type(exc).__name__, "message": str(exc)},
                                ensure_ascii=False) + "\n")
    print(f"{len(preds)} predictions, {len(errors)} errors -> {out / 'predictions.jsonl'}")
    if errors:
        if not preds and all(isinstance(e, TransportError) for _, e in errors):
            return TransportError.exit_code
        return EXIT_PARTIAL
    return 0


def cmd_export(cfg: RunConfig, args) -> int:
    from .backends.seq2seq import JYQ_PROMPTCLUE, RIQUA_T5, export_training_pairs

    corpus = _load(cfg)
    parts = _parts(cfg, corpus)
    out = _out(cfg)
    langs = {n.lang for n in corpus.novels.values()}
    for name in ("train", "dev", "test"):
        segments = cm.build_segments(parts[name], cfg.window)
        template = _template_for(cfg, next(iter(langs)) if len(langs) == 1 else "en")
        n = export_training_pairs(segments, template, out / f"{name}.pairs.jsonl")
        print(f"{name}: {n} pairs")
    preset = JYQ_PROMPTCLUE if langs == {"zh"} else RIQUA_T5
    _write_json(out / "train_config.json", preset.to_json())
    return 0


def cmd_eval(cfg: RunConfig, args) -> int:
    corpus = _load(cfg)
    golds = _parts(cfg, corpus)[cfg.part].quotations
    preds = []
    for path in args.predictions:
        preds.extend(load_predictions(path))
    report = score(preds, golds, corpus, args.policy)
    write_report(report, _out(cfg) / "report.json")
    print(report.table())
    return 0


def cmd_iaa(cfg: RunConfig, args) -> int:
    corpus_a = _load(cfg)
    corpus_b = cm.load_corpus(args.other, cfg.dialect)
    a = addressee_annotations(corpus_a)
    b = addressee_annotations(corpus_b)
    universe = candidate_universe(corpus_a, cfg.window)
    for cid, ids in candidate_universe(corpus_b, cfg.window).items():
        universe.setdefault(cid, set()).update(ids)
    result = iaa(a, b, universe)
    _write_json(_out(cfg) / "iaa.json", result.to_json())
    print(f"F1 {result.f1 * 100:.2f}%  kappa {result.kappa:.4f}  judgments {result.judgment_count}")
    return 0


def cmd_network(cfg: RunConfig, args) -> int:
    net = build_network(_load(cfg), None if args.top_k <= 0 else args.top_k, args.smoothing)
    out = _out(cfg)
    for fmt in args.format or ["dot", "json"]:
        path = export_network(net, fmt, out / f"network.{fmt}")
        print(f"wrote {path}")
    return 0


def cmd_report(cfg: RunConfig, args) -> int:
    corpus = _load(cfg)
    golds = _parts(cfg, corpus)[cfg.part].quotations
    preds = []
    for path in args.predictions:
        preds.extend(load_predictions(path))
    segments = {s.id: s.passage.text for s in cm.build_segments(corpus.with_quotations(golds), cfg.window)}
    records = diff_report(preds, golds, segments, corpus, args.policy)
    out = _out(cfg)
    with open(out / "cases.jsonl", "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")
    (out / "cases.txt").write_text(render_cases(records), encoding="utf-8")
    print(f"{len(records)} cases -> {out / 'cases.jsonl'}")
    return 0


COMMANDS = {
    "import": cmd_import,
    "validate": cmd_validate,
    "stats": cmd_stats,
    "split": cmd_split,
    "predict": cmd_predict,
    "export": cmd_export,
    "eval": cmd_eval,
    "iaa": cmd_iaa,
    "network": cmd_network,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--corpus", required=True, help="corpus directory or quotations file")
    common.add_argument("--dialect", default="canonical", choices=["canonical", "riqua_import", "jyq_import"])
    common.add_argument("--window", help="token:150:30 or sent:5:5 (default per language)")
    common.add_argument("--ratios", default="8:1:1")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="out")
    common.add_argument("--part", default="all", choices=PARTS, help="which split part to operate on")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="quoteid", description="Speaker and addressee identification toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", parents=[common], help="convert an external corpus to canonical form")
    p.add_argument("--keep-unaddressed", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--drop", action="append", choices=["cue", "mode"])

    sub.add_parser("validate", parents=[common], help="check annotation guidelines")
    sub.add_parser("stats", parents=[common], help="element occurrence rates")
    sub.add_parser("split", parents=[common], help="train/dev/test split")

    p = sub.add_parser("predict", parents=[common], help="run a backend over segments")
    p.add_argument("--backend", default="rule", choices=["rule", "llm", "seq2seq"])
    p.add_argument("--backend-config")
    p.add_argument("--template")
    p.add_argument("--mode", default="zero", help="zero or few:K")

    p = sub.add_parser("export", parents=[common], help="write (prompt, target) training pairs")
    p.add_argument("--template")

    for name in ("eval", "report"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--predictions", action="append", required=True)
        p.add_argument("--policy", default="subset", choices=["subset", "strict"])

    p = sub.add_parser("iaa", parents=[common], help="agreement between two annotations")
    p.add_argument("--other", required=True, help="second annotator's corpus")

    p = sub.add_parser("network", parents=[common], help="dialogue network export")
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--smoothing", default="log1p", choices=["log1p", "sqrt", "identity"])
    p.add_argument("--format", action="append", choices=["dot", "graphml", "json"])
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.from_args(args)
        return COMMANDS[args.command](cfg, args)
    except QuoteIdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
