"""CSV export of attention maps for external plotting.

One file per (block, layer, head): rows are query tokens, columns key
tokens, both labeled with their vocabulary strings. Encoder self-attention
keys/queries are the (possibly prompted) source; decoder cross-attention
rows are labeled with the token being emitted at that position.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from ..model.batching import make_batch
from ..model.transformer import TranslationModel
from ..data.tasks import TrainingExample
from ..tokenizer import EOS, Vocab


def export_attention(model: TranslationModel, vocab: Vocab,
                     source_ids: list[int], target_ids: list[int],
                     out_dir: str, feature: np.ndarray | None = None,
                     prefix: str = "attention") -> list[str]:
    """Run one teacher-forced pass and write every attention matrix."""
    os.makedirs(out_dir, exist_ok=True)
    ex = TrainingExample(list(source_ids), list(target_ids), feature,
                         "translate", "triplet" if feature is not None else "parallel")
    batch = make_batch([ex], model.config.img_feat_dim)
    maps = model.attention_weights(batch)

    src_labels = [vocab.id_to_token[t] for t in list(source_ids) + [EOS]]
    out_labels = [vocab.id_to_token[t] for t in list(target_ids) + [EOS]]
    paths: list[str] = []
    for block, query_labels in (("enc_self", src_labels), ("dec_cross", out_labels)):
        key = "encoder_self" if block == "enc_self" else "decoder_cross"
        for layer, att in enumerate(maps.get(key, [])):
            for head in range(att.shape[1]):
                path = os.path.join(out_dir, f"{prefix}_{block}_l{layer}_h{head}.csv")
                with open(path, "w", encoding="utf-8", newline="") as f:
                    writer = csv.writer(f)
                    writer.writerow([""] + src_labels)
                    for row_label, row in zip(query_labels, att[0, head]):
                        writer.writerow([row_label] + [f"{v:.8f}" for v in row])
                paths.append(path)
    return paths
