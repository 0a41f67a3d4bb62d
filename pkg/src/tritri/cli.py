"""Batch command-line interface.

Commands: train, translate, evaluate, ablate, mix-stats, build-index,
export-attention. Every command writes its outputs plus a ``manifest.json``
(resolved config, seed, input digests, timestamps, output paths) into the
``--out`` directory, so a run can be reproduced from its manifest alone.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric abort.
The environment variable ``TRITRI_SEED`` supplies the seed when neither
the config file nor the flags do.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import sys
from datetime import datetime, timezone

from . import __version__
from .data import (
    load_corpus,
    load_stopwords,
    rates_from_probabilities,
    read_features,
    temperature_probabilities,
)
from .data.tasks import ExampleBuilder
from .errors import (
    ConfigError,
    InputError,
    NumericError,
    ParseError,
    ResolutionError,
    TriTriError,
)
from .evaluation import (
    ablation_battery,
    bootstrap_significance,
    corpus_bleu,
    export_attention,
    load_glossary,
    word_accuracy,
)
from .evaluation.report import EvalReport
from .model import ModelConfig, load_checkpoint, translate
from .numerics import Rng
from .prompter import KeywordIndex, build_index
from .tokenizer import Vocab, load_vocab, train_bpe
from .train import TrainConfig, run_training


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------

def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    def __init__(self, command: str, out_dir: str):
        self.data = {
            "command": command,
            "version": __version__,
            "start": datetime.now(timezone.utc).isoformat(),
            "config": {},
            "seed": None,
            "inputs": {},
            "outputs": [],
        }
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)

    def add_input(self, path: str):
        if path and os.path.exists(path):
            self.data["inputs"][path] = _sha256(path)

    def add_output(self, path: str):
        self.data["outputs"].append(path)

    def write(self):
        self.data["end"] = datetime.now(timezone.utc).isoformat()
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.data, f, indent=2, ensure_ascii=False)


def _resolve_seed(explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get("TRITRI_SEED")
    return int(env) if env else 0


def _read_config(path: str | None, overrides: list[str]) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        cp.read(path)
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        section, _, name = key.partition(".")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, name, value)
    return cp


def _section(cp: configparser.ConfigParser, name: str) -> dict[str, str]:
    return dict(cp[name]) if cp.has_section(name) else {}


def _typed(cls, raw: dict[str, str], **extra):
    fields = cls.__dataclass_fields__
    unknown = [k for k in raw if k not in fields]
    if unknown:
        raise ConfigError(f"unknown option(s) for {cls.__name__}: {', '.join(unknown)}")
    kwargs = {}
    for k, v in raw.items():
        target = fields[k].type
        if "float" in str(target):
            kwargs[k] = float(v)
        elif "int" in str(target):
            kwargs[k] = int(v)
        else:
            kwargs[k] = v
    kwargs.update(extra)
    return cls(**kwargs)


def _load_streams(data_cfg: dict[str, str]):
    corpora = {}
    for kind in ("triplet", "parallel", "caption"):
        if data_cfg.get(kind):
            corpora[kind] = load_corpus(data_cfg[kind], kind)
    if not corpora:
        raise ConfigError("no corpus streams configured under [data]")
    features = read_features(data_cfg["features"]) if data_cfg.get("features") else {}
    dev = load_corpus(data_cfg["dev"]) if data_cfg.get("dev") else None
    return corpora, features, dev


def _vocab_from_config(data_cfg: dict[str, str], corpora) -> Vocab:
    if data_cfg.get("vocab"):
        return load_vocab(data_cfg["vocab"])
    merges = int(data_cfg.get("bpe_merges", 11000))
    sentences = []
    for stream in corpora.values():
        for s in stream:
            if s.source:
                sentences.append(s.source)
            sentences.append(s.target)
    return train_bpe(sentences, merges)


def _model_from_checkpoint(path: str):
    model, extra = load_checkpoint(path)
    if "vocab" not in extra:
        raise ConfigError(f"checkpoint {path} carries no vocabulary")
    return model, Vocab.from_json(extra["vocab"]), extra.get("mode", "text-only")


def _mode_allows(mode: str, use_image: bool, use_prompt: bool):
    if use_image and mode not in ("fusion", "fusion+prompt"):
        raise ConfigError(f"--use-image is incompatible with a {mode!r} checkpoint")
    if use_prompt and mode not in ("prompt", "fusion+prompt"):
        raise ConfigError(f"--use-prompt is incompatible with a {mode!r} checkpoint")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    cp = _read_config(args.config, args.set)
    manifest = Manifest("train", args.out)
    manifest.add_input(args.config)
    data_cfg = _section(cp, "data")
    corpora, features, dev = _load_streams(data_cfg)
    for key in ("triplet", "parallel", "caption", "features", "dev", "vocab"):
        if data_cfg.get(key):
            manifest.add_input(data_cfg[key])

    vocab = _vocab_from_config(data_cfg, corpora)
    seed = _resolve_seed(int(cp["train"]["seed"]) if cp.has_option("train", "seed") else None)
    train_section = _section(cp, "train")
    train_section["seed"] = str(seed)
    train_cfg = _typed(TrainConfig, train_section)
    model_cfg = _typed(ModelConfig, _section(cp, "model"), vocab_size=len(vocab))
    stopwords = (load_stopwords(data_cfg["stopwords"])
                 if data_cfg.get("stopwords") else None)

    manifest.data["seed"] = seed
    manifest.data["config"] = {"model": model_cfg.to_dict(), "train": train_cfg.to_dict()}

    kwargs = {}
    if stopwords is not None:
        kwargs["stopwords"] = stopwords
    result = run_training(train_cfg, model_cfg, vocab, corpora, features,
                          dev=dev, out_dir=args.out, **kwargs)
    vocab_path = os.path.join(args.out, "vocab.txt")
    vocab.save(vocab_path)
    manifest.add_output(vocab_path)
    for path in result.checkpoint_paths.values():
        manifest.add_output(path)
    manifest.write()
    last = result.log.entries[-1] if result.log.entries else {}
    print(json.dumps({"steps": last.get("step", 0), "final_loss": last.get("loss"),
                      "best_dev_bleu": result.best_dev_bleu,
                      "outputs": result.checkpoint_paths}))
    return 0


def cmd_translate(args) -> int:
    manifest = Manifest("translate", args.out)
    for p in (args.checkpoint, args.input, args.features,
              args.index_features, args.index_keywords):
        if p:
            manifest.add_input(p)
    model, vocab, mode = _model_from_checkpoint(args.checkpoint)
    _mode_allows(mode, args.use_image, args.use_prompt)
    features = read_features(args.features) if args.features else {}
    index = None
    if args.use_prompt and args.index_features:
        index = KeywordIndex.load(args.index_features, args.index_keywords)

    out_path = os.path.join(args.out, "hypotheses.jsonl")
    manifest.data["seed"] = _resolve_seed(None)
    manifest.data["config"] = {"beam": args.beam, "use_image": args.use_image,
                               "use_prompt": args.use_prompt, "mode": mode}
    with open(args.input, encoding="utf-8") as fin, \
            open(out_path, "w", encoding="utf-8") as fout:
        for n, line in enumerate(fin, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if "src" not in obj:
                raise ParseError("missing 'src' field", args.input, n)
            src = vocab.encode(obj["src"])
            feature = None
            prompt_words: list[str] = []
            img_id = obj.get("img")
            if args.use_image:
                if img_id and img_id in features:
                    feature = features[img_id]
                else:
                    print(f"warning: line {n} has no usable image; "
                          "decoding without one", file=sys.stderr)
            if args.use_prompt:
                if obj.get("prompt"):
                    prompt_words = str(obj["prompt"]).split()
                elif index is not None and img_id and img_id in features:
                    prompt_words = index.predict(features[img_id], args.keywords)
            prompt_ids = vocab.encode(" ".join(prompt_words)) if prompt_words else None
            hyp = translate(model, src, image=feature, prompt=prompt_ids,
                            beam=args.beam, max_len=args.max_len)
            fout.write(json.dumps({
                "hyp": vocab.decode(hyp.tokens), "score": hyp.score,
                "prompt_used": " ".join(prompt_words)}, ensure_ascii=False) + "\n")
    manifest.add_output(out_path)
    manifest.write()
    print(json.dumps({"output": out_path}))
    return 0


def _read_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def cmd_evaluate(args) -> int:
    manifest = Manifest("evaluate", args.out)
    for p in (args.hyp, args.ref, args.src, args.glossary, args.baseline):
        if p:
            manifest.add_input(p)
    hyps = _read_lines(args.hyp)
    refs = _read_lines(args.ref)
    if len(hyps) != len(refs):
        raise InputError(f"{len(hyps)} hypotheses vs {len(refs)} references")
    report = EvalReport(bleu=corpus_bleu(hyps, refs, smooth=args.smooth))
    if args.glossary:
        if not args.src:
            raise ConfigError("--glossary needs --src for the source sentences")
        sources = _read_lines(args.src)
        report.word_accuracy = word_accuracy(sources, hyps, refs,
                                             load_glossary(args.glossary))
    if args.baseline:
        baseline = _read_lines(args.baseline)
        seed = _resolve_seed(args.seed)
        manifest.data["seed"] = seed
        report.significance = bootstrap_significance(
            hyps, baseline, refs, resamples=args.resamples, seed=seed)
    out_path = os.path.join(args.out, "report.json")
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(report.to_json())
    manifest.add_output(out_path)
    manifest.write()
    print(report.to_json())
    return 0


def cmd_ablate(args) -> int:
    manifest = Manifest("ablate", args.out)
    for p in (args.checkpoint, args.testset, args.features, args.glossary,
              args.index_features, args.index_keywords):
        if p:
            manifest.add_input(p)
    model, vocab, mode = _model_from_checkpoint(args.checkpoint)
    testset = load_corpus(args.testset)
    features = read_features(args.features) if args.features else {}
    glossary = load_glossary(args.glossary) if args.glossary else None
    seed = _resolve_seed(args.seed)
    manifest.data["seed"] = seed

    index = None
    if mode in ("prompt", "fusion+prompt"):
        if not args.index_features:
            raise ConfigError(f"a {mode!r} checkpoint needs --index-features/"
                              "--index-keywords to regenerate prompts")
        index = KeywordIndex.load(args.index_features, args.index_keywords)
    builder = ExampleBuilder(vocab, features, mode, Rng(seed).child("ablate"),
                             keyword_index=index, prompt_keywords=args.keywords)
    modes = tuple(m.strip() for m in args.modes.split(",") if m.strip())
    report, results = ablation_battery(
        model, builder, testset, vocab, glossary,
        rng=Rng(seed).child("shuffle"), beam=args.beam, modes=modes)
    payload = report.to_dict()
    payload["per_mode"] = {
        m: {"bleu": r["bleu"],
            "word_accuracy": r["word_accuracy"].to_dict() if r["word_accuracy"] else None}
        for m, r in results.items()}
    out_path = os.path.join(args.out, "report.json")
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, ensure_ascii=False)
    manifest.add_output(out_path)
    manifest.write()
    print(json.dumps(payload, ensure_ascii=False, indent=2))
    return 0


def cmd_mix_stats(args) -> int:
    manifest = Manifest("mix-stats", args.out)
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    probs = temperature_probabilities(sizes, args.temperature)
    rates = rates_from_probabilities(sizes, probs)
    payload = {
        "sizes": sizes,
        "temperature": args.temperature,
        "probabilities": [round(float(p), 6) for p in probs],
        "rates": rates.rates,
        "implied_temperature": round(rates.implied_temperature, 4),
    }
    manifest.data["config"] = payload
    out_path = os.path.join(args.out, "mix_stats.json")
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
    manifest.add_output(out_path)
    manifest.write()
    print(json.dumps(payload, indent=2))
    return 0


def cmd_build_index(args) -> int:
    manifest = Manifest("build-index", args.out)
    for p in args.corpus + [args.features]:
        manifest.add_input(p)
    features = read_features(args.features)
    pairs = []
    for path in args.corpus:
        for s in load_corpus(path):
            if s.image_id is not None:
                if s.image_id not in features:
                    raise ResolutionError(
                        f"image id {s.image_id!r} missing from {args.features}",
                        [s.image_id])
                pairs.append((features[s.image_id], s.target))
    if not pairs:
        raise InputError("no image-bearing samples in the given corpora")
    index = build_index(pairs, args.keywords)
    feat_path = os.path.join(args.out, "index_features.bin")
    kw_path = os.path.join(args.out, "index_keywords.jsonl")
    index.save(feat_path, kw_path)
    manifest.add_output(feat_path)
    manifest.add_output(kw_path)
    manifest.write()
    print(json.dumps({"entries": len(index), "features": feat_path,
                      "keywords": kw_path}))
    return 0


def cmd_export_attention(args) -> int:
    manifest = Manifest("export-attention", args.out)
    for p in (args.checkpoint, args.features):
        if p:
            manifest.add_input(p)
    model, vocab, mode = _model_from_checkpoint(args.checkpoint)
    src = vocab.encode(args.src)
    if args.prompt:
        from .data.tasks import make_prompted_source
        src = make_prompted_source(src, vocab.encode(args.prompt))
    tgt = vocab.encode(args.tgt)
    feature = None
    if args.image_id:
        if not args.features:
            raise ConfigError("--image-id needs --features")
        feats = read_features(args.features)
        if args.image_id not in feats:
            raise ResolutionError(f"image id {args.image_id!r} not found",
                                  [args.image_id])
        feature = feats[args.image_id]
    paths = export_attention(model, vocab, src, tgt, args.out, feature)
    for p in paths:
        manifest.add_output(p)
    manifest.write()
    print(json.dumps({"files": len(paths), "out": args.out}))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tritri",
        description="Multimodal translation trainer and analysis toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--set", action="append", default=[],
                   metavar="SECTION.KEY=VALUE", help="override a config value")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("translate", help="decode a JSONL input file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--beam", type=int, default=1)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--use-image", action="store_true")
    p.add_argument("--use-prompt", action="store_true")
    p.add_argument("--features")
    p.add_argument("--index-features")
    p.add_argument("--index-keywords")
    p.add_argument("--keywords", type=int, default=3)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("evaluate", help="score hypotheses against references")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--src")
    p.add_argument("--glossary")
    p.add_argument("--baseline", help="second system for the significance test")
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--smooth", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="normal/absent/adversarial comparison")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--testset", required=True)
    p.add_argument("--features")
    p.add_argument("--glossary")
    p.add_argument("--index-features")
    p.add_argument("--index-keywords")
    p.add_argument("--keywords", type=int, default=3)
    p.add_argument("--modes", default="normal,absent,adversarial")
    p.add_argument("--beam", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("mix-stats", help="temperature mixing probabilities and rates")
    p.add_argument("--sizes", required=True, help="comma-separated stream sizes")
    p.add_argument("--temperature", type=float, default=5.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mix_stats)

    p = sub.add_parser("build-index", help="build the image-to-keyword index")
    p.add_argument("--corpus", action="append", required=True,
                   help="JSONL corpus (repeatable); image-bearing lines are indexed")
    p.add_argument("--features", required=True)
    p.add_argument("--keywords", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("export-attention", help="write attention CSV matrices")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--prompt")
    p.add_argument("--image-id")
    p.add_argument("--features")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_attention)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (ParseError, ResolutionError, InputError, FileNotFoundError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericError as e:
        print(f"numeric abort: {e}", file=sys.stderr)
        return 4
    except TriTriError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
