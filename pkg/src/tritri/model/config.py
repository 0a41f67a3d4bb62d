"""Model hyperparameters."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..errors import ConfigError


@dataclass
class ModelConfig:
    """Encoder-decoder dimensions plus the visual-fusion widths.

    ``img_feat_dim`` is the dimension of raw stored image vectors; a
    learned affine adapter maps them to ``img_dim`` before fusion, so the
    model is independent of whichever vision backbone produced the
    features. Defaults are desk-scale; the full-size recipe
    (6/6 layers, 8 heads, 256/512) is accepted unchanged.
    """

    vocab_size: int
    enc_layers: int = 2
    dec_layers: int = 2
    heads: int = 4
    d_model: int = 64
    d_ff: int = 128
    img_dim: int = 16
    img_feat_dim: int | None = None
    dropout: float = 0.0
    label_smoothing: float = 0.1
    max_len: int = 256
    length_norm_alpha: float = 0.7

    def __post_init__(self):
        if self.img_feat_dim is None:
            self.img_feat_dim = self.img_dim
        dims = {
            "vocab_size": self.vocab_size, "enc_layers": self.enc_layers,
            "dec_layers": self.dec_layers, "heads": self.heads,
            "d_model": self.d_model, "d_ff": self.d_ff,
            "img_dim": self.img_dim, "img_feat_dim": self.img_feat_dim,
            "max_len": self.max_len,
        }
        for name, v in dims.items():
            if int(v) < 1:
                raise ConfigError(f"{name} must be >= 1, got {v}")
        if self.d_model % self.heads != 0:
            raise ConfigError(
                f"d_model ({self.d_model}) must be divisible by heads ({self.heads})")
        for name, v in (("dropout", self.dropout),
                        ("label_smoothing", self.label_smoothing)):
            if not 0.0 <= float(v) < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {v}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        fields = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        for k in ("dropout", "label_smoothing", "length_norm_alpha"):
            if k in fields:
                fields[k] = float(fields[k])
        for k in fields:
            if k not in ("dropout", "label_smoothing", "length_norm_alpha"):
                fields[k] = int(fields[k])
        return cls(**fields)
