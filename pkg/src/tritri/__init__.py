"""tritri: multimodal machine translation from balanced thirds of data.

One encoder-decoder network trains jointly on image-text-text triplets,
plain bilingual text, and monolingual image captions, consuming images
either through a tanh-gated feature fusion in the encoder or through
target-language keyword prompts appended to the source, or both. The
package also ships the surrounding experiment kit: a BPE tokenizer,
deterministic data mixing, translation metrics, visual ablations, and
significance testing.
"""

__version__ = "0.1.0"
