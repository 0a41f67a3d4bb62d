"""Encoder-decoder transformer with a tanh-gated visual fusion stage.

The text path is a standard pre-norm transformer over the joint
vocabulary. When an example carries an image, the stored feature vector is
adapted to ``img_dim``, broadcast along the token axis, and blended into
the final encoder states through three steps:

    fused   = [states ; image]                 (concatenation per position)
    gate    = tanh(affine([states ; fused]))   (per-coordinate, in (-1, 1))
    blended = states + indicator * gate * proj(fused)

``proj`` maps the widened ``fused`` rows back to ``d_model`` so the gated
term is shape-compatible with the residual add. The indicator is 1 only
when an image is present; without one the encoder states pass through
untouched, and a zeroed gate affine likewise leaves them untouched because
tanh(0) = 0. The same network therefore trains on image-bearing triplets,
plain bilingual text, and masked caption reconstruction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from ..numerics import Rng, Tensor
from ..numerics import tensor as T
from .config import ModelConfig

NEG_BIAS = -1e9  # additive attention mask; large but finite


def sinusoidal_positions(max_len: int, d_model: int) -> np.ndarray:
    pos = np.arange(max_len)[:, None].astype(np.float64)
    dims = np.arange(d_model)[None, :]
    angle = pos / np.power(10000.0, (2 * (dims // 2)) / d_model)
    return np.where(dims % 2 == 0, np.sin(angle), np.cos(angle))


@dataclass
class EncoderState:
    """Encoder output before and after visual blending."""

    h_text: Tensor            # (B, T, d_model)
    h_fused: Tensor | None    # (B, T, d_model + img_dim)
    gate: Tensor | None       # (B, T, d_model), inside (-1, 1)
    h_out: Tensor             # (B, T, d_model)
    indicator: np.ndarray     # (B,) of {0, 1}


class TranslationModel:
    """One network for all three data kinds, with optional visual fusion."""

    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        self.params: dict[str, Tensor] = {}
        self._pe = sinusoidal_positions(config.max_len, config.d_model)
        rng = Rng(seed).child("init")
        c = config

        def p(name: str, shape: tuple[int, ...], kind: str = "linear"):
            if kind == "zeros":
                data = np.zeros(shape)
            elif kind == "ones":
                data = np.ones(shape)
            elif kind == "embed":
                data = rng.normal(0.0, c.d_model ** -0.5, shape)
            else:
                fan_in, fan_out = shape[0], shape[-1]
                bound = np.sqrt(6.0 / (fan_in + fan_out))
                data = rng.gen.uniform(-bound, bound, shape)
            t = Tensor(data, requires_grad=True, name=name)
            self.params[name] = t
            return t

        p("embed", (c.vocab_size, c.d_model), "embed")
        for side, layers in (("enc", c.enc_layers), ("dec", c.dec_layers)):
            for i in range(layers):
                pre = f"{side}{i}."
                blocks = ["self"] if side == "enc" else ["self", "cross"]
                for blk in blocks:
                    p(pre + blk + ".ln_g", (c.d_model,), "ones")
                    p(pre + blk + ".ln_b", (c.d_model,), "zeros")
                    for m in ("wq", "wk", "wv", "wo"):
                        p(pre + blk + "." + m, (c.d_model, c.d_model))
                    p(pre + blk + ".bo", (c.d_model,), "zeros")
                p(pre + "ffn.ln_g", (c.d_model,), "ones")
                p(pre + "ffn.ln_b", (c.d_model,), "zeros")
                p(pre + "ffn.w1", (c.d_model, c.d_ff))
                p(pre + "ffn.b1", (c.d_ff,), "zeros")
                p(pre + "ffn.w2", (c.d_ff, c.d_model))
                p(pre + "ffn.b2", (c.d_model,), "zeros")
            p(f"{side}_final.ln_g", (c.d_model,), "ones")
            p(f"{side}_final.ln_b", (c.d_model,), "zeros")
        p("img_adapter.w", (c.img_feat_dim, c.img_dim))
        p("img_adapter.b", (c.img_dim,), "zeros")
        p("gate.w", (2 * c.d_model + c.img_dim, c.d_model))
        p("gate.b", (c.d_model,), "zeros")
        p("proj.w", (c.d_model + c.img_dim, c.d_model))
        p("out.w", (c.d_model, c.vocab_size))
        p("out.b", (c.vocab_size,), "zeros")

    # -- plumbing ------------------------------------------------------------

    def zero_grad(self):
        for t in self.params.values():
            t.zero_grad()

    def _maybe_dropout(self, x: Tensor, train: bool, rng) -> Tensor:
        if train and self.config.dropout > 0.0:
            return T.dropout(x, self.config.dropout, rng)
        return x

    def _attention(self, q_in: Tensor, kv_in: Tensor, prefix: str,
                   bias: np.ndarray, collect: list | None) -> Tensor:
        c = self.config
        dh = c.d_model // c.heads
        B, Tq = q_in.shape[0], q_in.shape[1]
        Tk = kv_in.shape[1]

        def split(x: Tensor, L: int) -> Tensor:
            return T.transpose(T.reshape(x, (B, L, c.heads, dh)), (0, 2, 1, 3))

        q = split(T.matmul(q_in, self.params[prefix + "wq"]), Tq)
        k = split(T.matmul(kv_in, self.params[prefix + "wk"]), Tk)
        v = split(T.matmul(kv_in, self.params[prefix + "wv"]), Tk)
        scores = T.scale(T.matmul(q, T.transpose(k, (0, 1, 3, 2))), dh ** -0.5)
        scores = T.add(scores, Tensor(bias))
        att = T.softmax(scores, axis=-1)
        if collect is not None:
            collect.append(att.data.copy())
        out = T.transpose(T.matmul(att, v), (0, 2, 1, 3))
        out = T.reshape(out, (B, Tq, c.d_model))
        return T.add(T.matmul(out, self.params[prefix + "wo"]),
                     self.params[prefix + "bo"])

    def _ffn(self, x: Tensor, prefix: str) -> Tensor:
        h = T.relu(T.add(T.matmul(x, self.params[prefix + "w1"]),
                         self.params[prefix + "b1"]))
        return T.add(T.matmul(h, self.params[prefix + "w2"]),
                     self.params[prefix + "b2"])

    def _ln(self, x: Tensor, prefix: str) -> Tensor:
        return T.layer_norm(x, self.params[prefix + "ln_g"], self.params[prefix + "ln_b"])

    def _embed(self, ids: np.ndarray, train: bool, rng) -> Tensor:
        if ids.shape[-1] > self.config.max_len:
            raise InputError(
                f"sequence length {ids.shape[-1]} exceeds max positions "
                f"{self.config.max_len}")
        x = T.scale(T.embedding(self.params["embed"], ids), self.config.d_model ** 0.5)
        x = T.add(x, Tensor(self._pe[: ids.shape[-1]]))
        return self._maybe_dropout(x, train, rng)

    # -- encoder -------------------------------------------------------------

    def encode_text(self, src: np.ndarray, src_mask: np.ndarray | None = None,
                    train: bool = False, rng=None,
                    collect: dict | None = None) -> Tensor:
        """Token states (B, T, d_model) from the text encoder."""
        src = np.atleast_2d(np.asarray(src, dtype=np.int64))
        if src.shape[1] == 0:
            raise InputError("encode_text: empty token sequence")
        if src_mask is None:
            src_mask = np.ones(src.shape)
        bias = (1.0 - src_mask[:, None, None, :]) * NEG_BIAS
        x = self._embed(src, train, rng)
        for i in range(self.config.enc_layers):
            pre = f"enc{i}."
            sink = None
            if collect is not None:
                sink = collect.setdefault("encoder_self", [])
            normed = self._ln(x, pre + "self.")
            h = self._attention(normed, normed, pre + "self.", bias, sink)
            x = T.add(x, self._maybe_dropout(h, train, rng))
            h = self._ffn(self._ln(x, pre + "ffn."), pre + "ffn.")
            x = T.add(x, self._maybe_dropout(h, train, rng))
        return self._ln(x, "enc_final.")

    def fuse(self, h_text: Tensor, features=None,
             indicator: np.ndarray | None = None) -> EncoderState:
        """Blend adapted image features into encoder states.

        ``features`` is (B, img_feat_dim) raw vectors (or None for a batch
        with no images at all); ``indicator`` marks which rows actually
        carry an image. Rows with indicator 0 pass through unchanged, and
        a batch with no images skips the fusion computation entirely so
        the output is the input, bit for bit.
        """
        B, L = h_text.shape[0], h_text.shape[1]
        if features is None:
            return EncoderState(h_text, None, None, h_text, np.zeros(B))
        feats = features if isinstance(features, Tensor) else Tensor(features)
        if feats.shape != (B, self.config.img_feat_dim):
            raise InputError(
                f"image features {feats.shape} do not match "
                f"(batch, img_feat_dim) = ({B}, {self.config.img_feat_dim})")
        if indicator is None:
            indicator = np.ones(B)
        indicator = np.asarray(indicator, dtype=np.float64)
        if not np.all((indicator == 0) | (indicator == 1)):
            raise InputError("indicator entries must be 0 or 1")
        if not indicator.any():
            return EncoderState(h_text, None, None, h_text, indicator)

        h_img = T.add(T.matmul(feats, self.params["img_adapter.w"]),
                      self.params["img_adapter.b"])
        # broadcast the per-example image vector to every token position
        h_img = T.add(Tensor(np.zeros((B, L, self.config.img_dim))),
                      T.reshape(h_img, (B, 1, self.config.img_dim)))
        h_fused = T.concat([h_text, h_img], axis=-1)
        gate = T.tanh(T.add(T.matmul(T.concat([h_text, h_fused], axis=-1),
                                     self.params["gate.w"]),
                            self.params["gate.b"]))
        blended = T.mul(gate, T.matmul(h_fused, self.params["proj.w"]))
        gated = T.mul(blended, Tensor(indicator[:, None, None]))
        return EncoderState(h_text, h_fused, gate, T.add(h_text, gated), indicator)

    # -- decoder and full pass -------------------------------------------------

    def decode(self, memory: Tensor, src_mask: np.ndarray, tgt_in: np.ndarray,
               tgt_mask: np.ndarray | None = None, train: bool = False,
               rng=None, collect: dict | None = None) -> Tensor:
        """Logits (B, T_tgt, vocab) given encoder memory and shifted targets."""
        tgt_in = np.atleast_2d(np.asarray(tgt_in, dtype=np.int64))
        B, L = tgt_in.shape
        if tgt_mask is None:
            tgt_mask = np.ones(tgt_in.shape)
        causal = np.triu(np.full((L, L), NEG_BIAS), k=1)[None, None]
        self_bias = causal + (1.0 - tgt_mask[:, None, None, :]) * NEG_BIAS
        cross_bias = (1.0 - src_mask[:, None, None, :]) * NEG_BIAS
        x = self._embed(tgt_in, train, rng)
        for i in range(self.config.dec_layers):
            pre = f"dec{i}."
            normed = self._ln(x, pre + "self.")
            h = self._attention(normed, normed, pre + "self.", self_bias, None)
            x = T.add(x, self._maybe_dropout(h, train, rng))
            sink = None
            if collect is not None:
                sink = collect.setdefault("decoder_cross", [])
            h = self._attention(self._ln(x, pre + "cross."), memory,
                                pre + "cross.", cross_bias, sink)
            x = T.add(x, self._maybe_dropout(h, train, rng))
            h = self._ffn(self._ln(x, pre + "ffn."), pre + "ffn.")
            x = T.add(x, self._maybe_dropout(h, train, rng))
        x = self._ln(x, "dec_final.")
        return T.add(T.matmul(x, self.params["out.w"]), self.params["out.b"])

    def forward(self, batch, train: bool = False, rng=None,
                collect: dict | None = None) -> Tensor:
        """Logits for a padded batch (see :class:`Batch`)."""
        h_text = self.encode_text(batch.src, batch.src_mask, train, rng, collect)
        state = self.fuse(h_text, batch.features, batch.indicator)
        return self.decode(state.h_out, batch.src_mask, batch.tgt_in,
                           batch.tgt_mask, train, rng, collect)

    def attention_weights(self, batch) -> dict:
        """Per-layer, per-head attention maps for one forward pass.

        Returns ``{"encoder_self": [layer][B, head, Tq, Tk],
        "decoder_cross": [...]}`` as plain arrays; every row sums to 1.
        """
        collect: dict = {}
        with T.no_grad():
            self.forward(batch, collect=collect)
        return collect
