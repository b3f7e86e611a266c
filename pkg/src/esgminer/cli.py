"""Command-line entry point: one binary, five subcommands.

    esgminer build-corpus   posts + tags + mapping -> labeled corpus
    esgminer train          corpus -> cross-validated model files
    esgminer eval           corpus + model -> metrics report
    esgminer run            headlines + models -> results + scores
    esgminer serve          long-running HTTP service

Exit codes are a stable contract: 0 success, 2 usage or configuration
error, 3 domain error (bad data, unknown company, class too small),
4 unexpected internal error. All randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import signal
import sys
import threading
from collections import Counter
from pathlib import Path

from .classifiers import TrainConfig, TrainingError, train_logistic, train_nb
from .corpus import (
    DOMAINS,
    EXCLUDED,
    IngestError,
    LabeledHeadline,
    build_corpus,
    default_tag_mapping,
    filter_headline_posts,
    load_tag_mapping,
    map_tags_to_domain,
    mask_corpus,
    read_article_tags,
    read_corpus,
    read_posts,
    write_corpus,
)
from .detection import DEFAULT_THRESHOLD, Gazetteer, GazetteerError, nearest_names
from .evaluation import (
    EvaluationError,
    compute_metrics,
    random_undersample,
    stratified_kfold,
    subset,
)
from .features import fit_tfidf, tokenize, transform
from .httpd import make_server
from .pipeline import (
    SENTIMENTS,
    PipelineError,
    TextClassifier,
    compute_score,
    load_stage_classifier,
    result_to_record,
    run_pipeline,
    save_stage_classifier,
)
from .service import MinerService, ServiceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_INTERNAL = 4

STAGE_CLASSES = {
    "relevance": ("relevant", "irrelevant"),
    "domain": DOMAINS,
    "sentiment": SENTIMENTS,
}


class ConfigError(Exception):
    pass


def _require_file(path: str | None, flag: str) -> Path:
    if not path:
        raise ConfigError(f"{flag} is required")
    resolved = Path(path)
    if not resolved.exists():
        raise ConfigError(f"{flag}: no such file: {resolved}")
    return resolved


def cmd_build_corpus(args: argparse.Namespace) -> int:
    posts = read_posts(_require_file(args.input, "--input"))
    tags = read_article_tags(_require_file(args.tags, "--tags")) if args.tags else {}
    if args.mapping:
        mapping = load_tag_mapping(_require_file(args.mapping, "--mapping"))
    else:
        mapping = default_tag_mapping()
    kept = filter_headline_posts(posts)
    rows = build_corpus(kept, tags, mapping)
    if args.gazetteer:
        gazetteer = Gazetteer.from_file(_require_file(args.gazetteer, "--gazetteer"))
        rows = mask_corpus(rows, gazetteer, args.threshold)
    write_corpus(rows, args.output)

    dispositions = Counter(
        map_tags_to_domain(tags.get(post.id, set()), mapping) for post in kept
    )
    row_labels = Counter(row.gold_label for row in rows)
    print(f"posts read:     {len(posts)}")
    print(f"with link:      {len(kept)}  (filtered out {len(posts) - len(kept)})")
    print(f"rows written:   {len(rows)}  (duplicates merged: {len(kept) - len(rows)})")
    for label in (*DOMAINS, "Irrelevant", EXCLUDED):
        print(f"  {label:<14} {row_labels.get(label, 0)}")
    tagged = dispositions[EXCLUDED] + sum(dispositions[d] for d in DOMAINS)
    if tagged:
        fraction = dispositions[EXCLUDED] / tagged
        print(f"excluded fraction of ESG-tagged posts: {fraction:.1%}")
    print(f"corpus: {args.output}")
    return EXIT_OK


def _stage_training_data(
    rows: list[LabeledHeadline], stage: str
) -> tuple[list[str], list[str]]:
    texts: list[str] = []
    labels: list[str] = []
    for row in rows:
        if row.gold_label == EXCLUDED:
            continue
        text = row.masked_text if row.masked_text is not None else row.text
        if stage == "relevance":
            if row.gold_label in DOMAINS:
                labels.append("relevant")
            elif row.gold_label == "Irrelevant":
                labels.append("irrelevant")
            else:
                continue
        elif stage == "domain":
            if row.gold_label not in DOMAINS:
                continue
            labels.append(row.gold_label)
        else:  # sentiment: the corpus rows carry sentiment gold labels
            if row.gold_label not in SENTIMENTS:
                continue
            labels.append(row.gold_label)
        texts.append(text)
    if not texts:
        raise IngestError(f"corpus contains no usable rows for stage {stage!r}")
    return texts, labels


def _fit(texts: list[str], labels: list[str], classes, args) -> TextClassifier:
    docs = [tokenize(t) for t in texts]
    vocab = fit_tfidf(docs)
    data = [(transform(vocab, doc), label) for doc, label in zip(docs, labels)]
    if args.model == "nb":
        model = train_nb(data, classes, alpha=args.alpha)
    else:
        config = TrainConfig(
            learning_rate=args.learning_rate,
            epochs=args.epochs,
            l2=args.l2,
            seed=args.seed,
        )
        model = train_logistic(data, classes, config)
    return TextClassifier(vocab, model)


def cmd_train(args: argparse.Namespace) -> int:
    rows = read_corpus(_require_file(args.corpus, "--corpus"))
    classes = STAGE_CLASSES[args.stage]
    texts, labels = _stage_training_data(rows, args.stage)
    if args.rus:
        keep = random_undersample(labels, seed=args.seed)
        texts, labels = subset(texts, keep), subset(labels, keep)
        print(f"balanced set: {len(texts)} rows ({len(texts) // len(classes)} per class)")

    fold_scores = []
    for fold, (train_idx, test_idx) in enumerate(
        stratified_kfold(labels, k=args.k, seed=args.seed), start=1
    ):
        clf = _fit(subset(texts, train_idx), subset(labels, train_idx), classes, args)
        predicted = [clf.classify(texts[i]).label for i in test_idx]
        report = compute_metrics(subset(labels, test_idx), predicted, classes)
        fold_scores.append(report.macro_f1)
        print(f"fold {fold:>2}: macro-F1 {report.macro_f1:.3f}")
    mean = sum(fold_scores) / len(fold_scores)
    print(f"mean macro-F1 over {args.k} folds: {mean:.3f}")

    clf = _fit(texts, labels, classes, args)
    save_stage_classifier(clf, args.model_dir, args.stage)
    print(f"saved {args.stage} model ({args.model}) to {args.model_dir}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    rows = read_corpus(_require_file(args.corpus, "--corpus"))
    classes = STAGE_CLASSES[args.stage]
    texts, labels = _stage_training_data(rows, args.stage)
    clf = load_stage_classifier(_require_file(args.model_dir, "--model-dir"), args.stage)
    predicted = [clf.classify(text).label for text in texts]
    report = compute_metrics(labels, predicted, classes)
    print(report.as_table())
    print(json.dumps(report.as_dict(), sort_keys=True))
    return EXIT_OK


def _read_run_input(path: Path) -> list[LabeledHeadline]:
    headlines = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                headlines.append(
                    LabeledHeadline(
                        id=str(record["id"]),
                        text=str(record["text"]),
                        tags=frozenset(record.get("tags", ())),
                        gold_label=record.get("gold_label", "Irrelevant"),
                        masked_text=record.get("masked_text"),
                    )
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise IngestError(f"line {line_no}: bad headline record: {exc}") from exc
    return headlines


def cmd_run(args: argparse.Namespace) -> int:
    gazetteer = Gazetteer.from_file(_require_file(args.gazetteer, "--gazetteer"))
    if args.company not in gazetteer.canonical_names():
        suggestions = ", ".join(nearest_names(gazetteer, args.company))
        raise PipelineError(
            f"company {args.company!r} is not in the gazetteer; "
            f"nearest names: {suggestions}"
        )
    model_dir = _require_file(args.model_dir, "--model-dir")
    relevance = load_stage_classifier(model_dir, "relevance")
    domain = load_stage_classifier(model_dir, "domain")
    sentiment = load_stage_classifier(model_dir, "sentiment")
    headlines = _read_run_input(_require_file(args.input, "--input"))
    results = run_pipeline(
        headlines,
        args.company,
        gazetteer,
        relevance,
        domain,
        sentiment,
        threshold=args.threshold,
    )
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            for result in results:
                handle.write(json.dumps(result_to_record(result), sort_keys=True) + "\n")
    score = compute_score(results)
    kinds = Counter(r.terminal.kind for r in results)
    print(f"headlines processed: {len(results)}")
    print(
        f"dispositions: NoCompany {kinds.get('NoCompany', 0)}, "
        f"Irrelevant {kinds.get('Irrelevant', 0)}, Scored {kinds.get('Scored', 0)}"
    )
    assert sum(kinds.values()) == len(results)
    for name in sorted(score.domains):
        ds = score.domains[name]
        print(
            f"  {name:<14} score {ds.score:+.3f} "
            f"({ds.n_negative} neg / {ds.n_neutral} neu / {ds.n_positive} pos)"
        )
    if not score.domains:
        print("  no scored headlines in any domain")
    if args.output:
        print(f"results: {args.output}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    store_dir = os.environ.get("ESGMINER_STORE") or args.store_dir
    if not store_dir:
        raise ConfigError("--store-dir (or ESGMINER_STORE) is required")
    gazetteer = Gazetteer.from_file(_require_file(args.gazetteer, "--gazetteer"))
    model_dir = _require_file(args.model_dir, "--model-dir")
    service = MinerService(
        store_dir,
        gazetteer,
        load_stage_classifier(model_dir, "relevance"),
        load_stage_classifier(model_dir, "domain"),
        load_stage_classifier(model_dir, "sentiment"),
        threshold=args.threshold,
    )
    host, _, port = args.listen.rpartition(":")
    server = make_server(service, host or "127.0.0.1", int(port))
    actual_host, actual_port = server.server_address[:2]
    print(f"listening on http://{actual_host}:{actual_port}/v1", flush=True)

    stop = threading.Event()

    def _handle_signal(signum, frame):
        stop.set()

    signal.signal(signal.SIGTERM, _handle_signal)
    signal.signal(signal.SIGINT, _handle_signal)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        while not stop.wait(timeout=0.2):
            pass
    finally:
        server.shutdown()
        thread.join(timeout=5)
        service.flush()
    print("store flushed, shutting down", flush=True)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="esgminer",
        description="Mine news headlines for per-company ESG sentiment scores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build-corpus", help="label and dedup raw posts")
    build.add_argument("--input", required=True, help="posts as line-delimited JSON")
    build.add_argument("--tags", help="article tag file (id,tag rows)")
    build.add_argument("--mapping", help="tag-to-domain file; default: shipped table")
    build.add_argument("--gazetteer", help="company file; enables masking")
    build.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    build.add_argument("--output", required=True, help="corpus output path")
    build.set_defaults(func=cmd_build_corpus)

    train = sub.add_parser("train", help="cross-validate and fit one stage")
    train.add_argument("--corpus", required=True)
    train.add_argument("--stage", required=True, choices=sorted(STAGE_CLASSES))
    train.add_argument("--model", default="lr", choices=("nb", "lr"))
    train.add_argument("--model-dir", required=True)
    train.add_argument("--seed", type=int, default=42)
    train.add_argument("--k", type=int, default=10, help="cross-validation folds")
    train.add_argument("--no-rus", dest="rus", action="store_false",
                       help="skip random under-sampling")
    train.add_argument("--epochs", type=int, default=500)
    train.add_argument("--learning-rate", type=float, default=0.1)
    train.add_argument("--l2", type=float, default=1e-4)
    train.add_argument("--alpha", type=float, default=1.0)
    train.set_defaults(func=cmd_train)

    evaluate = sub.add_parser("eval", help="score a trained stage on a corpus")
    evaluate.add_argument("--corpus", required=True)
    evaluate.add_argument("--stage", required=True, choices=sorted(STAGE_CLASSES))
    evaluate.add_argument("--model-dir", required=True)
    evaluate.set_defaults(func=cmd_eval)

    run = sub.add_parser("run", help="run the full pipeline for one company")
    run.add_argument("--company", required=True)
    run.add_argument("--input", required=True, help="headline records to process")
    run.add_argument("--gazetteer", required=True)
    run.add_argument("--model-dir", required=True)
    run.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    run.add_argument("--output", help="write per-headline results here")
    run.set_defaults(func=cmd_run)

    serve = sub.add_parser("serve", help="run the HTTP review service")
    serve.add_argument("--store-dir", help="durable store (ESGMINER_STORE overrides)")
    serve.add_argument("--gazetteer", required=True)
    serve.add_argument("--model-dir", required=True)
    serve.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    serve.add_argument("--listen", default="127.0.0.1:8080", help="host:port")
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        IngestError,
        EvaluationError,
        TrainingError,
        PipelineError,
        GazetteerError,
        ServiceError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except KeyboardInterrupt:
        return EXIT_OK
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
