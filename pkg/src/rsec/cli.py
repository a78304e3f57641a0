"""Command-line pipeline: extract, prepare, train, evaluate, predict, params.

One master --seed drives everything; each stage derives its own sub-seed
by hashing a fixed label, so rerunning any stage with the same inputs
reproduces its artifacts byte for byte.  All outputs land in the --out
directory next to a manifest.json that accumulates per-command stats.

Exit codes: 0 success, 2 input or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

from .abstraction import AbstractionConfig, LIST_MODES, abstract_content, abstract_text
from .dataset import (
    LABELS,
    LabeledSection,
    SplitSpec,
    label_counts,
    load_gold,
    oversample,
    stratified_split,
)
from .metrics import format_table, report
from .model import (
    CheckpointError,
    EncoderConfig,
    LoraConfig,
    TrainingConfig,
    TrainingDivergedError,
    apply_lora,
    count_trainable,
    encode_dataset,
    full_param_count,
    init_model,
    load_checkpoint,
    lora_param_count,
    predict,
    predict_scores,
    decide,
    save_checkpoint,
    train,
)
from .normalize import build_vocab, load_vocab, save_vocab, tokenize_normalize
from .parser import iter_markdown_files, parse_file
from .utils import read_json, read_jsonl, write_json, write_jsonl

DEFAULTS: dict = {
    "seed": 0,
    "mode": "full",
    "list_mode": "marker",
    "threshold": 0.5,
    "val_fraction": 0.1,
    "oversample": True,
    "encoder": {
        "vocab_size": 5000,  # used by `params` only; training reads the real vocab
        "d": 64,
        "layers": 2,
        "heads": 4,
        "ff_dim": 128,
        "max_len": 512,
        "dropout_p": 0.1,
        "num_labels": 7,
    },
    "lora": {"rank": 8, "alpha": None, "targets": ["query", "value"]},
    "training": {"learning_rate": 3e-3, "epochs": 50, "batch_size": 16, "patience": 5},
    "split": {"train_fraction": 0.7, "k": 5},
    "vocab": {"min_freq": 1, "max_size": 50000},
}

REFERENCE_LARGE = EncoderConfig(
    vocab_size=30522, d=768, layers=12, heads=12, ff_dim=3072, max_len=512
)


def _merge(base: dict, override: dict, prefix: str = "") -> dict:
    out = dict(base)
    for key, value in override.items():
        if key not in base:
            raise ValueError(f"unknown config key {prefix + key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ValueError(f"config key {prefix + key!r} must be an object")
            out[key] = _merge(base[key], value, prefix=f"{prefix}{key}.")
        else:
            out[key] = value
    return out


def load_run_config(args: argparse.Namespace) -> dict:
    rc = copy.deepcopy(DEFAULTS)
    if args.config is not None:
        rc = _merge(rc, read_json(args.config))
    if args.seed is not None:
        rc["seed"] = args.seed
    if args.mode is not None:
        rc["mode"] = args.mode
    if args.rank is not None:
        rc["lora"]["rank"] = args.rank
    if args.alpha is not None:
        rc["lora"]["alpha"] = args.alpha
    if args.threshold is not None:
        rc["threshold"] = args.threshold
    if args.list_mode is not None:
        rc["list_mode"] = args.list_mode
    if not 0.0 <= rc["val_fraction"] < 1.0:
        raise ValueError(f"val_fraction must be in [0,1), got {rc['val_fraction']}")
    # materialize the typed configs so every validator runs up front
    _encoder_config(rc, vocab_size=rc["encoder"]["vocab_size"])
    _lora_config(rc)
    _training_config(rc)
    _split_spec(rc)
    AbstractionConfig(list_mode=rc["list_mode"])
    return rc


def _encoder_config(rc: dict, vocab_size: int) -> EncoderConfig:
    e = rc["encoder"]
    return EncoderConfig(
        vocab_size=vocab_size,
        d=e["d"],
        layers=e["layers"],
        heads=e["heads"],
        ff_dim=e["ff_dim"],
        max_len=e["max_len"],
        dropout_p=e["dropout_p"],
        num_labels=e["num_labels"],
    )


def _lora_config(rc: dict) -> LoraConfig:
    l = rc["lora"]
    alpha = l["alpha"]
    return LoraConfig(
        rank=l["rank"],
        alpha=None if alpha is None else float(alpha),
        targets=tuple(l["targets"]),
    )


def _training_config(rc: dict) -> TrainingConfig:
    t = rc["training"]
    return TrainingConfig(
        learning_rate=t["learning_rate"],
        epochs=t["epochs"],
        batch_size=t["batch_size"],
        patience=t["patience"],
        seed=rc["seed"],
        threshold=rc["threshold"],
    )


def _split_spec(rc: dict) -> SplitSpec:
    return SplitSpec(
        train_fraction=rc["split"]["train_fraction"], seed=rc["seed"], k=rc["split"]["k"]
    )


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _update_manifest(out: Path, section: str, payload: dict) -> None:
    path = out / "manifest.json"
    manifest = read_json(path) if path.exists() else {}
    manifest[section] = payload
    write_json(manifest, path)


def _echo_config(out: Path, rc: dict) -> None:
    write_json(rc, out / "config.json")


def cmd_extract(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    records = []
    docs = 0
    for doc_id, path in iter_markdown_files(args.input):
        sections = parse_file(path, doc_id=doc_id)
        records.extend(s.to_record() for s in sections)
        print(f"{doc_id}: {len(sections)} sections")
        docs += 1
    if not docs:
        raise ValueError(f"no markdown files under {args.input}")
    out_path = out / "sections.jsonl"
    write_jsonl(records, out_path)
    _update_manifest(out, "extract", {"documents": docs, "sections": len(records)})
    print(f"wrote {len(records)} sections to {out_path}")
    return 0


def _normalized_gold(gold, acfg: AbstractionConfig) -> tuple[list[LabeledSection], int]:
    """Abstract and normalize gold rows; drop rows whose text normalizes away."""
    kept = []
    dropped = 0
    for ex in gold:
        raw = f"{ex.heading}\n{ex.text}" if ex.heading else ex.text
        text, _ = abstract_text(raw, acfg)
        tokens = tokenize_normalize(text)
        if not tokens:
            dropped += 1
            continue
        kept.append(
            LabeledSection(ex.doc_id, ex.ordinal, ex.heading, " ".join(tokens), ex.labels)
        )
    return kept, dropped


def cmd_prepare(args: argparse.Namespace) -> int:
    rc = load_run_config(args)
    out = _out_dir(args)
    acfg = AbstractionConfig(list_mode=rc["list_mode"])

    gold = load_gold(args.gold)
    normed, dropped = _normalized_gold(gold, acfg)
    train_set, test_set = stratified_split(normed, _split_spec(rc))
    vocab = build_vocab(
        (ex.text.split() for ex in train_set),
        min_freq=rc["vocab"]["min_freq"],
        max_size=rc["vocab"]["max_size"],
    )
    before = label_counts(train_set)
    train_out = oversample(train_set, seed=rc["seed"]) if rc["oversample"] else train_set

    write_jsonl(({**ex.to_record(), "split": "train"} for ex in train_out), out / "train.jsonl")
    write_jsonl(({**ex.to_record(), "split": "test"} for ex in test_set), out / "test.jsonl")
    save_vocab(vocab, out / "vocab.txt")
    _echo_config(out, rc)
    _update_manifest(
        out,
        "prepare",
        {
            "total_rows": len(gold),
            "dropped_empty": dropped,
            "train_rows": len(train_out),
            "train_rows_before_oversample": len(train_set),
            "test_rows": len(test_set),
            "vocab_size": len(vocab),
            "vocab_sha256": vocab.content_hash(),
            "label_counts": {
                "train_before_oversample": dict(zip(LABELS, before)),
                "train": dict(zip(LABELS, label_counts(train_out))),
                "test": dict(zip(LABELS, label_counts(test_set))),
            },
            "seed": rc["seed"],
        },
    )
    print(
        f"prepared {len(gold)} rows -> train {len(train_out)} "
        f"(from {len(train_set)}), test {len(test_set)}, vocab {len(vocab)}"
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    rc = load_run_config(args)
    out = _out_dir(args)
    prepared = Path(args.prepared)

    train_recs = [LabeledSection.from_record(r) for r in read_jsonl(prepared / "train.jsonl")]
    vocab = load_vocab(prepared / "vocab.txt")
    tcfg = _training_config(rc)
    ecfg = _encoder_config(rc, vocab_size=len(vocab))

    if rc["val_fraction"] > 0:
        tr, val = stratified_split(
            train_recs, SplitSpec(train_fraction=1.0 - rc["val_fraction"], seed=rc["seed"])
        )
    else:
        tr = val = train_recs
    train_arrays = encode_dataset(tr, vocab, ecfg.max_len)
    val_arrays = encode_dataset(val, vocab, ecfg.max_len)

    params = init_model(ecfg, seed=rc["seed"])
    if rc["mode"] == "lora":
        params = apply_lora(params, _lora_config(rc), seed=rc["seed"])

    best, history = train(params, train_arrays, val_arrays, tcfg)
    best.meta = {
        "vocab_sha256": vocab.content_hash(),
        "threshold": rc["threshold"],
        "mode": rc["mode"],
        "labels": list(LABELS),
    }
    save_checkpoint(best, out / "model.rsec")
    write_json(history, out / "history.json")
    _echo_config(out, rc)
    _update_manifest(
        out,
        "train",
        {
            "mode": rc["mode"],
            "trainable": count_trainable(best),
            "full_trainable": full_param_count(ecfg),
            "epochs_run": len(history),
            "best_val_f1": max(h["val_f1"] for h in history),
            "train_examples": len(tr),
            "val_examples": len(val),
            "checkpoint": "model.rsec",
        },
    )
    print(
        f"trained {rc['mode']} model: {len(history)} epochs, "
        f"best val F1 {max(h['val_f1'] for h in history):.4f}, "
        f"trainable params {count_trainable(best):,}"
    )
    return 0


def _resolve_vocab(args: argparse.Namespace, *candidates: Path):
    if args.vocab is not None:
        return load_vocab(args.vocab)
    for cand in candidates:
        if cand.is_file():
            return load_vocab(cand)
    raise ValueError("no vocabulary file found; pass --vocab")


def _check_vocab(params, vocab) -> None:
    expected = params.meta.get("vocab_sha256")
    if expected and expected != vocab.content_hash():
        raise ValueError(
            "vocab mismatch: checkpoint was trained with a different vocabulary"
        )
    if len(vocab) != params.config.vocab_size:
        raise ValueError(
            f"vocab size {len(vocab)} != model vocab_size {params.config.vocab_size}"
        )


def cmd_evaluate(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    params = load_checkpoint(args.checkpoint)
    test_path = Path(args.test)
    vocab = _resolve_vocab(
        args, test_path.parent / "vocab.txt", Path(args.checkpoint).parent / "vocab.txt"
    )
    _check_vocab(params, vocab)

    recs = [LabeledSection.from_record(r) for r in read_jsonl(test_path)]
    if not recs:
        raise ValueError(f"no records in {test_path}")
    ids, mask, y = encode_dataset(recs, vocab, params.config.max_len)
    scores = predict_scores(params, ids, mask)
    threshold = (
        args.threshold
        if args.threshold is not None
        else params.meta.get("threshold", DEFAULTS["threshold"])
    )
    rep = report(scores, decide(scores, threshold), y.astype(int))
    print(format_table(rep, row_name=params.meta.get("mode", "model")))
    write_json(rep.to_dict(), out / "metrics.json")
    _update_manifest(
        out,
        "evaluate",
        {
            "test_rows": len(recs),
            "threshold": threshold,
            "weighted_f1": rep.weighted_f1,
            "roc_auc": rep.roc_auc,
            "mcc": rep.mcc,
            "kappa": rep.kappa,
        },
    )
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    rc = load_run_config(args)
    params = load_checkpoint(args.checkpoint)
    vocab = _resolve_vocab(args, Path(args.checkpoint).parent / "vocab.txt")
    _check_vocab(params, vocab)
    threshold = (
        args.threshold
        if args.threshold is not None
        else params.meta.get("threshold", DEFAULTS["threshold"])
    )

    acfg = AbstractionConfig(list_mode=rc["list_mode"])
    sections = parse_file(args.readme)
    texts = [
        " ".join(tokenize_normalize(abstract_content(s, acfg).text)) for s in sections
    ]
    bits, scores = predict(params, texts, vocab, threshold)

    payload = []
    for section, b, s in zip(sections, bits, scores):
        payload.append(
            {
                "doc_id": section.doc_id,
                "ordinal": section.ordinal,
                "heading": section.heading,
                "labels": [name for name, bit in zip(LABELS, b) if bit],
                "scores": {name: float(v) for name, v in zip(LABELS, s)},
            }
        )
    print(json.dumps(payload, indent=2, ensure_ascii=False))
    return 0


def cmd_params(args: argparse.Namespace) -> int:
    rc = load_run_config(args)
    lcfg = _lora_config(rc)
    configured = _encoder_config(rc, vocab_size=rc["encoder"]["vocab_size"])

    rows = []
    for name, cfg in (("configured", configured), ("reference-large", REFERENCE_LARGE)):
        rows.append((name, full_param_count(cfg), lora_param_count(cfg, lcfg)))

    name_w = max(len("model"), max(len(r[0]) for r in rows))
    full_w = max(len("full"), max(len(f"{r[1]:,}") for r in rows))
    lora_label = f"lora(r={lcfg.rank})"
    lora_w = max(len(lora_label), max(len(f"{r[2]:,}") for r in rows))
    print(f"{'model'.ljust(name_w)}  {'full'.rjust(full_w)}  {lora_label.rjust(lora_w)}")
    for name, full_n, lora_n in rows:
        print(f"{name.ljust(name_w)}  {f'{full_n:,}'.rjust(full_w)}  {f'{lora_n:,}'.rjust(lora_w)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--out", type=Path, default=Path("rsec-out"), help="artifact directory")
    common.add_argument("--mode", choices=["full", "lora"], help="fine-tuning mode")
    common.add_argument("--rank", type=int, help="adapter rank")
    common.add_argument("--alpha", type=float, help="adapter scaling numerator")
    common.add_argument("--threshold", type=float, help="decision threshold")
    common.add_argument("--list-mode", choices=list(LIST_MODES), dest="list_mode")

    parser = argparse.ArgumentParser(
        prog="rsec", description="Classify GitHub README sections by content category."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", parents=[common], help="parse markdown into section records")
    p.add_argument("input", type=Path, help="markdown file or directory")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("prepare", parents=[common], help="gold CSV -> split/balanced JSONL + vocab")
    p.add_argument("gold", type=Path, help="labeled sections CSV")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", parents=[common], help="train a classifier on prepared data")
    p.add_argument("prepared", type=Path, help="directory produced by prepare")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="score a checkpoint on a test JSONL")
    p.add_argument("checkpoint", type=Path)
    p.add_argument("test", type=Path)
    p.add_argument("--vocab", type=Path, help="vocabulary file (default: next to test/checkpoint)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", parents=[common], help="label the sections of a README")
    p.add_argument("checkpoint", type=Path)
    p.add_argument("readme", type=Path)
    p.add_argument("--vocab", type=Path, help="vocabulary file (default: next to checkpoint)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("params", parents=[common], help="full vs adapter trainable-parameter table")
    p.set_defaults(func=cmd_params)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrainingDivergedError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (ValueError, OSError, CheckpointError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
