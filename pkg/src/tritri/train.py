"""Mixed-task training loop: optimizer, schedule, checkpointing, logging.

One run fixes a mode (fusion / prompt / fusion+prompt / text-only), builds
the epoch stream for that mode, and optimizes the shared network with Adam
under an inverse-sqrt warmup schedule. Dev BLEU and the modality ratio are
logged at a fixed interval; checkpoints are written periodically and the
best-dev one is tagged. Runs are bit-reproducible from the seed.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .data import (
    DEFAULT_STOPWORDS,
    ExampleBuilder,
    MixPlan,
    Sample,
    build_mixed_stream,
)
from .errors import ConfigError, InputError, NumericError
from .evaluation.bleu import corpus_bleu
from .model import (
    Batch,
    ModelConfig,
    TranslationModel,
    batches_from_stream,
    save_checkpoint,
    translate,
)
from .numerics import Rng, Tensor, backward, cross_entropy, no_grad
from .prompter import KeywordIndex, build_index
from .tokenizer import Vocab

MODES = ("fusion", "prompt", "fusion+prompt", "text-only")


@dataclass
class TrainConfig:
    mode: str = "fusion"
    seed: int = 0
    learning_rate: float = 2.0       # multiplies the d_model**-0.5 schedule
    warmup_steps: int = 400
    beta1: float = 0.9
    beta2: float = 0.98
    epsilon: float = 1e-9
    batch_tokens: int = 512
    max_steps: int = 2000
    label_smoothing: float = 0.1
    temperature: float = 5.0
    drop_ratio: float = 0.3
    mask_ratio: float = 0.3
    prompt_keywords: int = 3
    min_k: int = 1
    max_k: int = 3
    eval_interval: int = 200
    checkpoint_interval: int = 0     # 0 = only final/best
    patience: int = 0                # evals without dev-BLEU gain; 0 = off

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainLog:
    """Per-step losses and periodic dev metrics; steps strictly increase."""

    entries: list[dict] = field(default_factory=list)

    def record(self, step: int, **values):
        if self.entries and step <= self.entries[-1]["step"]:
            raise InputError(f"log steps must increase, got {step} after "
                             f"{self.entries[-1]['step']}")
        self.entries.append({"step": step, **values})

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            for e in self.entries:
                f.write(json.dumps(e, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path: str) -> "TrainLog":
        log = cls()
        with open(path, encoding="utf-8") as f:
            log.entries = [json.loads(line) for line in f if line.strip()]
        return log


def loss(logits: Tensor, batch: Batch, label_smoothing: float = 0.0) -> Tensor:
    """Mean label-smoothed cross-entropy over non-PAD target tokens."""
    if batch.tgt_mask.sum() == 0:
        raise InputError("loss: batch target is entirely padding")
    return cross_entropy(logits, batch.tgt_out, batch.tgt_mask, label_smoothing)


def lr_at(step: int, config: TrainConfig, d_model: int) -> float:
    """Inverse-sqrt schedule with linear warmup (transformer recipe)."""
    s = max(step, 1)
    return (config.learning_rate * d_model ** -0.5
            * min(s ** -0.5, s * config.warmup_steps ** -1.5))


class Adam:
    """Adam with bias correction over the model's parameter dict."""

    def __init__(self, model: TranslationModel, config: TrainConfig):
        self.model = model
        self.config = config
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in model.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in model.params.items()}

    def step(self):
        c = self.config
        self.step_count += 1
        lr = lr_at(self.step_count, c, self.model.config.d_model)
        t = self.step_count
        for name, p in self.model.params.items():
            if p.grad is None:
                continue
            g = p.grad
            m = self.m[name]
            v = self.v[name]
            m *= c.beta1
            m += (1 - c.beta1) * g
            v *= c.beta2
            v += (1 - c.beta2) * (g * g)
            m_hat = m / (1 - c.beta1 ** t)
            v_hat = v / (1 - c.beta2 ** t)
            p.data -= lr * m_hat / (np.sqrt(v_hat) + c.epsilon)


def train_step(model: TranslationModel, batch: Batch, optimizer: Adam,
               config: TrainConfig, dropout_rng) -> float:
    """One forward/backward/update; returns the batch loss."""
    model.zero_grad()
    try:
        logits = model.forward(batch, train=True, rng=dropout_rng)
        step_loss = loss(logits, batch, config.label_smoothing)
    except NumericError as e:
        raise NumericError(
            f"aborted at step {optimizer.step_count + 1} on a "
            f"{batch.task_tag!r} batch of {len(batch)}: {e}") from e
    backward(step_loss)
    optimizer.step()
    return step_loss.item()


def dev_inputs(builder: ExampleBuilder, dev: list[Sample]):
    """(encoder tokens, feature, reference string) triples for dev decoding."""
    out = []
    for s in dev:
        src, feature = builder.build_eval_input(s, "normal")
        out.append((src, feature, s.target))
    return out


def evaluate_dev(model: TranslationModel, vocab: Vocab, prepared,
                 beam: int = 1) -> float:
    hyps, refs = [], []
    for src, feature, ref in prepared:
        hyp = translate(model, src, image=feature, beam=beam)
        hyps.append(vocab.decode(hyp.tokens))
        refs.append(ref)
    return corpus_bleu(hyps, refs, smooth=True)


def dev_modality_ratio(model: TranslationModel, builder: ExampleBuilder,
                       prepared) -> float:
    from .evaluation.ablation import modality_ratio
    return modality_ratio(model, [(src, feat) for src, feat, _ in prepared])


def corpus_loss(model: TranslationModel, builder: ExampleBuilder,
                samples: list[Sample], label_smoothing: float = 0.0,
                batch_tokens: int = 1024) -> float:
    """Mean teacher-forced loss over a held-out set (no dropout).

    Each sample is preprocessed for the builder's mode with its image
    kept, so fusion/prompt models are scored on the inputs they would see
    at inference time.
    """
    examples = [builder.build(s, use_image=True) for s in samples]
    total = 0.0
    tokens = 0
    with no_grad():
        for batch in batches_from_stream(iter(examples), batch_tokens,
                                         model.config.img_feat_dim):
            value = loss(model.forward(batch), batch, label_smoothing).item()
            total += value * batch.target_tokens
            tokens += batch.target_tokens
    return total / tokens


@dataclass
class RunResult:
    model: TranslationModel
    log: TrainLog
    checkpoint_paths: dict[str, str]
    best_dev_bleu: float | None


def run_training(config: TrainConfig, model_config: ModelConfig, vocab: Vocab,
                 corpora: dict[str, list[Sample]],
                 features: dict[str, np.ndarray],
                 dev: list[Sample] | None = None,
                 out_dir: str | None = None,
                 stopwords: frozenset[str] = DEFAULT_STOPWORDS,
                 keyword_index: KeywordIndex | None = None) -> RunResult:
    """Train one model in the configured mode over the mixed stream.

    ``corpora`` maps stream kind to samples (missing/empty kinds are
    skipped). In prompt modes a keyword index is built from the image-
    bearing streams unless one is supplied.
    """
    rng = Rng(config.seed)
    model = TranslationModel(model_config, seed=config.seed)
    optimizer = Adam(model, config)
    dropout_rng = rng.child("dropout")

    if keyword_index is None and config.mode in ("prompt", "fusion+prompt"):
        pairs = [(features[s.image_id], s.target)
                 for kind in ("triplet", "caption")
                 for s in corpora.get(kind, ()) if s.image_id is not None]
        if not pairs:
            raise ConfigError(f"mode {config.mode!r} needs image-bearing data "
                              "to build the keyword index")
        keyword_index = build_index(pairs, config.prompt_keywords, stopwords)

    builder = ExampleBuilder(
        vocab, features, config.mode, rng.child("data"), keyword_index,
        mask_ratio=config.mask_ratio, prompt_keywords=config.prompt_keywords,
        min_k=config.min_k, max_k=config.max_k, stopwords=stopwords)
    plan = MixPlan.from_corpora(corpora, config.temperature, config.drop_ratio)

    prepared_dev = dev_inputs(builder, dev) if dev else None
    log = TrainLog()
    paths: dict[str, str] = {}
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)

    def checkpoint(tag: str):
        if not out_dir:
            return
        path = os.path.join(out_dir, f"{tag}.ckpt")
        save_checkpoint(path, model, {
            "mode": config.mode, "vocab": vocab.to_json(),
            "train_seed": str(config.seed)})
        paths[tag] = path

    best_bleu: float | None = None
    evals_since_best = 0
    step = 0
    epoch = 0
    stop = False
    while not stop:
        stream = build_mixed_stream(corpora, plan, rng.child(f"epoch{epoch}"), builder)
        for batch in batches_from_stream(stream, config.batch_tokens,
                                         model_config.img_feat_dim):
            step += 1
            value = train_step(model, batch, optimizer, config, dropout_rng)
            entry: dict = {"loss": round(value, 10)}
            if prepared_dev and step % config.eval_interval == 0:
                with no_grad():
                    bleu = evaluate_dev(model, vocab, prepared_dev)
                    entry["dev_bleu"] = round(bleu, 4)
                    if builder.uses_fusion:
                        entry["modality_ratio"] = round(
                            dev_modality_ratio(model, builder, prepared_dev), 6)
                if best_bleu is None or bleu > best_bleu:
                    best_bleu = bleu
                    evals_since_best = 0
                    checkpoint("best")
                else:
                    evals_since_best += 1
                    if config.patience and evals_since_best >= config.patience:
                        stop = True
            if (config.checkpoint_interval
                    and step % config.checkpoint_interval == 0):
                checkpoint(f"step{step}")
            log.record(step, **entry)
            if step >= config.max_steps or stop:
                stop = True
                break
        epoch += 1

    checkpoint("final")
    if out_dir:
        log_path = os.path.join(out_dir, "train_log.jsonl")
        log.save(log_path)
        paths["log"] = log_path
    return RunResult(model, log, paths, best_bleu)
