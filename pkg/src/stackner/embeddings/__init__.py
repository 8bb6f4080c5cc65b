"""Embedding families: static token tables, BPE pieces, character-LM
string embeddings with pooling."""
