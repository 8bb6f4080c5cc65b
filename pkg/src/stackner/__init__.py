"""Spanish clinical NER toolkit.

Corpus conversion between brat standoff and CoNLL, trainable embedding
families (skip-gram variants, subword n-grams, byte-pair pieces,
character-LM string embeddings), and a stacked-embedding BiLSTM-CRF
sequence tagger with strict entity-level evaluation.
"""
from ._kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
