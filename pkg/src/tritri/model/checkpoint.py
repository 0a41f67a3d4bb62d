"""Binary model checkpoints.

Layout (little-endian): magic ``23TCKPT1``; u32 count of config lines,
each line u32-length-prefixed UTF-8 ``key=value``; u32 parameter count;
per parameter u32 name length, name bytes, u32 rank, u32 per dimension,
then the float64 values. Writing is order-stable, so two identical models
produce identical bytes.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import ParseError
from .config import ModelConfig
from .transformer import TranslationModel

MAGIC = b"23TCKPT1"


def save_checkpoint(path: str, model: TranslationModel,
                    extra: dict[str, str] | None = None) -> None:
    lines = [f"{k}={v}" for k, v in model.config.to_dict().items()]
    for k in sorted(extra or {}):
        lines.append(f"{k}={(extra or {})[k]}")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(lines)))
        for line in lines:
            raw = line.encode("utf-8")
            if b"\n" in raw:
                raise ParseError(f"config value for line {line.split('=')[0]!r} contains a newline")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
        f.write(struct.pack("<I", len(model.params)))
        for name, tensor in model.params.items():
            raw = name.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<I", tensor.data.ndim))
            for d in tensor.data.shape:
                f.write(struct.pack("<I", d))
            f.write(np.ascontiguousarray(tensor.data, dtype="<f8").tobytes())


def load_checkpoint(path: str) -> tuple[TranslationModel, dict[str, str]]:
    """Rebuild the model and return it with the non-config metadata."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:8] != MAGIC:
        raise ParseError("bad magic, not a checkpoint file", path, 0)
    offset = 8

    def u32():
        nonlocal offset
        (v,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        return v

    config_map: dict[str, str] = {}
    for _ in range(u32()):
        n = u32()
        line = blob[offset:offset + n].decode("utf-8")
        offset += n
        key, _, value = line.partition("=")
        config_map[key] = value

    known = set(ModelConfig.__dataclass_fields__)
    config = ModelConfig.from_dict({k: v for k, v in config_map.items() if k in known})
    extra = {k: v for k, v in config_map.items() if k not in known}
    model = TranslationModel(config, seed=0)

    for _ in range(u32()):
        n = u32()
        name = blob[offset:offset + n].decode("utf-8")
        offset += n
        rank = u32()
        shape = tuple(u32() for _ in range(rank))
        count = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        offset += 8 * count
        if name not in model.params:
            raise ParseError(f"unknown parameter {name!r} in checkpoint", path, 0)
        if model.params[name].data.shape != shape:
            raise ParseError(
                f"parameter {name!r} has shape {shape}, expected "
                f"{model.params[name].data.shape}", path, 0)
        model.params[name].data = data.reshape(shape).astype(np.float64)
    return model, extra
