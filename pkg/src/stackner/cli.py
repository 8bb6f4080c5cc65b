"""Umbrella command-line interface wiring the pipeline together.

Subcommands: convert, export-brat, split, train-embed, learn-bpe,
segment, train-lm, train, tag, eval, hpo. Exit codes: 0 on success, 2
for usage errors (unknown subcommand, missing/invalid flags, courtesy of
argparse), 1 for runtime failures, which print one machine-readable
line ``ERROR type=<ExceptionName> msg=<message>`` on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, corpus, evaluation
from ._kernels import BACKEND
from .embeddings import bpe as bpe_mod
from .embeddings import charlm as lm_mod
from .embeddings import static as static_mod
from .embeddings.stack import (BpeEmbedder, CseEmbedder, EmbeddingStack,
                               PceEmbedder, StaticEmbedder)
from .errors import StacknerError
from .hpo import SearchSpace, hpo
from .sentences import EosConfig, EosModel, rule_split, split_sentences, train_eos
from .tagger import (ModelBundle, TaggerParams, TrainConfig, tag_inventory,
                     train_tagger)

VERSION_LINE = f"stackner {__version__} (kernels={BACKEND})"


def _read(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write(path, content: str) -> None:
    Path(path).write_text(content, encoding="utf-8")


def _read_token_lines(path) -> list[list[str]]:
    return [line.split() for line in _read(path).splitlines() if line.strip()]


def _splitter(args):
    if getattr(args, "eos_model", None):
        model = EosModel.load(args.eos_model)
        return lambda text: split_sentences(text, model)
    return rule_split


def cmd_convert(args) -> int:
    txt_dir, ann_dir, out_dir = Path(args.txt_dir), Path(args.ann_dir), Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    splitter = _splitter(args)
    n_docs = n_entities = n_warnings = 0
    for txt_path in sorted(txt_dir.glob("*.txt")):
        doc_id = txt_path.stem
        ann_path = ann_dir / f"{doc_id}.ann"
        ann = _read(ann_path) if ann_path.exists() else ""
        doc = corpus.parse_brat(_read(txt_path), ann, doc_id)
        token_sents = corpus.tokenize_spans(doc.doc.text, splitter(doc.doc.text))
        sentences, warnings = corpus.align_bio(doc, token_sents,
                                               keep_longest=args.keep_longest)
        _write(out_dir / f"{doc_id}.conll", corpus.write_conll(sentences))
        _write(out_dir / f"{doc_id}.offsets", corpus.write_offsets(sentences))
        for w in warnings:
            print(f"WARN alignment doc={w.doc_id} ann={w.ann_id} "
                  f"entity=({w.entity_start},{w.entity_end}) "
                  f"token=({w.token_start},{w.token_end})", file=sys.stderr)
        n_docs += 1
        n_entities += len(doc.entities)
        n_warnings += len(warnings)
    print(f"converted {n_docs} documents, {n_entities} entities, "
          f"{n_warnings} alignment warnings")
    return 0


def cmd_export_brat(args) -> int:
    sentences = corpus.read_conll(_read(args.conll), _read(args.offsets))
    mentions = corpus.document_mentions(sentences, Path(args.conll).stem)
    text = _read(args.txt) if args.txt else None
    _write(args.out_ann, corpus.write_ann(mentions, text=text, sentences=sentences))
    print(f"wrote {len(mentions)} mentions to {args.out_ann}")
    return 0


def cmd_split(args) -> int:
    if args.train:
        sentences = [line for line in _read(args.train).splitlines() if line.strip()]
        config = EosConfig(window=args.window, epochs=args.epochs, seed=args.seed)
        model = train_eos(sentences, config)
        if not args.save_model:
            raise StacknerError("--train needs --save-model")
        model.save(args.save_model)
        print(f"trained EOS model on {len(sentences)} sentences, "
              f"held-out accuracy {model.held_out_accuracy:.4f}")
        return 0
    text = _read(args.infile)
    if args.model:
        model = EosModel.load(args.model)
        spans = split_sentences(text, model)
    else:
        spans = rule_split(text)
    out = "".join(text[s:e].replace("\n", " ") + "\n" for s, e in spans)
    if args.out:
        _write(args.out, out)
    else:
        sys.stdout.write(out)
    return 0


def cmd_train_embed(args) -> int:
    sentences = _read_token_lines(args.corpus)
    config = static_mod.SkipGramConfig(
        dim=args.dim, window=args.window, negatives=args.negatives,
        epochs=args.epochs, lr=args.lr, min_count=args.min_count,
        subsample_t=args.subsample, seed=args.seed)
    if args.variant == "subword":
        table, index = static_mod.train_subword_skipgram(sentences, config)
        static_mod.save_ngram_index(index, args.out + ".ngrams")
    elif args.variant == "structured":
        table = static_mod.train_structured_skipgram(sentences, config)
    else:
        table = static_mod.train_skipgram(sentences, config)
    static_mod.save_word2vec_text(table, args.out + ".vec")
    static_mod.save_table(table, args.out + ".model")
    losses = ", ".join(f"{x:.4f}" for x in table.metadata["epoch_losses"])
    print(f"trained {args.variant} embeddings: |V|={len(table.vocab)} dim={table.dim}")
    print(f"per-epoch mean loss: {losses}")
    return 0


def cmd_learn_bpe(args) -> int:
    freqs: dict[str, int] = {}
    for tokens in _read_token_lines(args.corpus):
        for tok in tokens:
            freqs[tok] = freqs.get(tok, 0) + 1
    table = bpe_mod.learn_bpe(freqs, args.vocab_size)
    bpe_mod.save_merges(table, args.out)
    print(f"learned {len(table.merges)} merges from {len(freqs)} distinct words")
    return 0


def cmd_segment(args) -> int:
    table = bpe_mod.load_merges(args.merges)
    lines = []
    for line in _read(args.infile).splitlines():
        pieces = []
        for word in line.split():
            pieces.extend(bpe_mod.segment(word, table))
        lines.append(" ".join(pieces))
    out = "\n".join(lines) + "\n"
    if args.out:
        _write(args.out, out)
    else:
        sys.stdout.write(out)
    return 0


def cmd_train_lm(args) -> int:
    direction = {"fwd": "forward", "bwd": "backward"}[args.direction]
    config = lm_mod.CharLMConfig(
        hidden=args.hidden, char_dim=args.char_dim, seq_len=args.seq_len,
        lr=args.lr, epochs=args.epochs, seed=args.seed)
    model = lm_mod.train_char_lm(_read(args.corpus), config, direction)
    model.save(args.out)
    print(f"trained {direction} char LM: |V|={len(model.chars)} h={config.hidden} "
          f"perplexity={model.final_perplexity:.3f}")
    return 0


def parse_stack_spec(spec: str) -> EmbeddingStack:
    """Build an embedding stack from "kind:path[:path2[:opt]]" items.

    Kinds: cse:FWD:BWD, pce:FWD:BWD[:pool], static:TABLE (container or
    word2vec text), bpe:MODEL or bpe:MERGES:PIECES_VEC.
    """
    comps = []
    for item in spec.split(","):
        parts = item.strip().split(":")
        kind = parts[0]
        if kind in ("cse", "pce"):
            if len(parts) < 3:
                raise StacknerError(f"{kind} needs forward and backward LM paths")
            fwd = lm_mod.CharLM.load(parts[1])
            bwd = lm_mod.CharLM.load(parts[2])
            if kind == "cse":
                comps.append(CseEmbedder(fwd, bwd))
            else:
                comps.append(PceEmbedder(fwd, bwd, parts[3] if len(parts) > 3 else "mean"))
        elif kind == "static":
            if len(parts) != 2:
                raise StacknerError("static needs one table path")
            try:
                table = static_mod.load_table(parts[1])
            except Exception:
                table = static_mod.load_word2vec_text(parts[1])
            comps.append(StaticEmbedder(table))
        elif kind == "bpe":
            if len(parts) == 2:
                merges, pieces = bpe_mod.load_bpe_model(parts[1])
            elif len(parts) == 3:
                merges = bpe_mod.load_merges(parts[1])
                vec = static_mod.load_word2vec_text(parts[2])
                pieces = bpe_mod.PieceEmbeddingTable(
                    vec.vocab.words, dict(vec.vocab.index), vec.vectors)
            else:
                raise StacknerError("bpe needs MODEL or MERGES:PIECES_VEC")
            comps.append(BpeEmbedder(merges, pieces))
        else:
            raise StacknerError(f"unknown stack component kind {kind!r}")
    if not comps:
        raise StacknerError("empty stack spec")
    return EmbeddingStack(comps)


def _load_conll(path) -> list[corpus.TaggedSentence]:
    offsets_path = Path(path).with_suffix(".offsets")
    offsets = _read(offsets_path) if offsets_path.exists() else None
    return corpus.read_conll(_read(path), offsets)


def cmd_train(args) -> int:
    train_sents = _load_conll(args.train)
    dev_sents = _load_conll(args.dev)
    stack = parse_stack_spec(args.stack)
    params = TaggerParams(
        stack.total_dim, tag_inventory(train_sents), hidden=args.hidden,
        layers=args.layers, dropout=args.dropout,
        use_projection=not args.no_projection, seed=args.seed)
    config = TrainConfig(
        lr=args.lr, batch=args.batch, anneal_factor=args.anneal_factor,
        patience=args.patience, max_epochs=args.max_epochs, min_lr=args.min_lr,
        seed=args.seed)
    history = train_tagger(train_sents, dev_sents, stack, params, config)
    ModelBundle(stack, params).save(args.out)
    for rec in history.records:
        print(f"epoch={rec.epoch} lr={rec.lr_used:g} loss={rec.train_loss:.4f} "
              f"dev_f1={rec.dev_f1:.2f}{' *' if rec.improved else ''}")
    print(f"best epoch {history.best_epoch}: dev F1 {history.best_f1:.2f}; "
          f"saved {args.out}")
    return 0


def cmd_tag(args) -> int:
    bundle = ModelBundle.load(args.model)
    text = _read(args.infile)
    doc_id = args.doc_id or Path(args.infile).stem
    _, mentions = bundle.tag_text(text, doc_id=doc_id)
    _write(args.out_ann, corpus.write_ann(mentions, text=text))
    print(f"tagged {doc_id}: {len(mentions)} mentions")
    return 0


def _mentions_from_path(path) -> list[evaluation.EntityMention]:
    p = Path(path)
    mentions: list[evaluation.EntityMention] = []
    if p.is_dir():
        for ann in sorted(p.glob("*.ann")):
            mentions.extend(corpus.parse_ann_mentions(_read(ann), ann.stem))
        return mentions
    sentences = _load_conll(p)
    return corpus.document_mentions(sentences, p.stem)


def cmd_eval(args) -> int:
    gold = _mentions_from_path(args.gold)
    pred = _mentions_from_path(args.pred)
    fn = evaluation.evaluate_relaxed if args.relaxed else evaluation.evaluate
    report = fn(gold, pred)
    print(evaluation.report_table([(args.name, report)]), end="")
    print(f"F1 / Precision / Recall: {evaluation.format_prf(report)}")
    if args.summary_out:
        _write(args.summary_out, evaluation.summary_lines(report))
    return 0


def cmd_hpo(args) -> int:
    spec = json.loads(_read(args.space))
    space = SearchSpace(
        lr_choices=tuple(spec.get("lr_choices", (0.1,))),
        batch_choices=tuple(spec.get("batch_choices", (32,))),
        hidden_choices=tuple(spec.get("hidden_choices", (256,))),
        layer_choices=tuple(spec.get("layer_choices", (1,))),
        dropout_range=tuple(spec.get("dropout_range", (0.0, 0.0))),
        mode=spec.get("mode", "grid"),
        budget=args.budget,
        seed=args.seed)
    train_sents = _load_conll(args.train)
    dev_sents = _load_conll(args.dev)
    stack = parse_stack_spec(args.stack)
    result = hpo(space, train_sents, dev_sents, stack, trial_epochs=args.trial_epochs)
    for i, trial in enumerate(result.trials):
        print(f"trial={i} config={json.dumps(trial.config, sort_keys=True)} "
              f"dev_f1={trial.dev_f1:.2f}")
    print(f"best config: {json.dumps(result.best_config, sort_keys=True)} "
          f"dev F1 {result.best_f1:.2f}")
    if args.out:
        _write(args.out, json.dumps(
            {"best": result.best_config, "best_f1": result.best_f1,
             "trials": [{"config": t.config, "dev_f1": t.dev_f1} for t in result.trials]},
            indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stackner",
        description="Spanish clinical NER pipeline: corpus conversion, embedding "
                    "training, BiLSTM-CRF tagging and strict evaluation.")
    parser.add_argument("--version", action="version", version=VERSION_LINE)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="brat directory to CoNLL + offsets sidecars")
    p.add_argument("--txt-dir", required=True)
    p.add_argument("--ann-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--keep-longest", action="store_true",
                   help="drop the shorter of two overlapping entities instead of failing")
    p.add_argument("--eos-model", help="trained sentence boundary model (default: rule split)")
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("export-brat", help="CoNLL + offsets back to a brat .ann file")
    p.add_argument("--conll", required=True)
    p.add_argument("--offsets", required=True)
    p.add_argument("--out-ann", required=True)
    p.add_argument("--txt", help="original text for exact surface slices")
    p.set_defaults(fn=cmd_export_brat)

    p = sub.add_parser("split", help="sentence splitting (and EOS model training)")
    p.add_argument("--model", help="trained EOS model")
    p.add_argument("--in", dest="infile", help="text file to split, one sentence per output line")
    p.add_argument("--out")
    p.add_argument("--train", help="train an EOS model on this file (one sentence per line)")
    p.add_argument("--save-model")
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--epochs", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("train-embed", help="train static token embeddings")
    p.add_argument("--variant", choices=("plain", "structured", "subword"), required=True)
    p.add_argument("--corpus", required=True, help="one sentence per line, whitespace tokens")
    p.add_argument("--out", required=True, help="output prefix (.vec/.model[/.ngrams])")
    p.add_argument("--dim", type=int, default=300)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--subsample", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(fn=cmd_train_embed)

    p = sub.add_parser("learn-bpe", help="learn byte-pair merges from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_learn_bpe)

    p = sub.add_parser("segment", help="apply learned merges to text")
    p.add_argument("--merges", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_segment)

    p = sub.add_parser("train-lm", help="train a character language model")
    p.add_argument("--direction", choices=("fwd", "bwd"), required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--char-dim", type=int, default=24)
    p.add_argument("--seq-len", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.2)
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train_lm)

    p = sub.add_parser("train", help="train the BiLSTM-CRF tagger")
    p.add_argument("--train", required=True, help="CoNLL file (sibling .offsets used if present)")
    p.add_argument("--dev", required=True)
    p.add_argument("--stack", required=True,
                   help="e.g. pce:fwd.lm:bwd.lm:mean,static:w2v.model,bpe:pieces.bpe")
    p.add_argument("--out", required=True)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--anneal-factor", type=float, default=0.5)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--max-epochs", type=int, default=150)
    p.add_argument("--min-lr", type=float, default=1e-4)
    p.add_argument("--hidden", type=int, default=256)
    p.add_argument("--layers", type=int, default=1)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--no-projection", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("tag", help="tag raw text and emit a brat .ann file")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out-ann", required=True)
    p.add_argument("--doc-id")
    p.set_defaults(fn=cmd_tag)

    p = sub.add_parser("eval", help="strict entity-level evaluation")
    p.add_argument("--gold", required=True, help=".ann directory or CoNLL file")
    p.add_argument("--pred", required=True)
    p.add_argument("--summary-out", help="write key=value summary here")
    p.add_argument("--relaxed", action="store_true",
                   help="overlap matching (diagnostics only)")
    p.add_argument("--name", default="run")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("hpo", help="hyperparameter search")
    p.add_argument("--space", required=True, help="JSON search space file")
    p.add_argument("--budget", type=int)
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--stack", required=True)
    p.add_argument("--trial-epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="JSON trial log")
    p.set_defaults(fn=cmd_hpo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except StacknerError as exc:
        print(f"ERROR type={type(exc).__name__} msg={exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"ERROR type={type(exc).__name__} msg={exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
