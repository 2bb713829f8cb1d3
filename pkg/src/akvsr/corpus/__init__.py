"""Synthetic paired audio/visual corpus generation."""

from akvsr.corpus.grammar import BigramGrammar, build_grammar, sample_utterance
from akvsr.corpus.inventory import make_inventory, orthonormal_rows
from akvsr.corpus.io import (
    Corpus,
    build_corpus,
    generate_corpus,
    inventory_for,
    load_corpus,
    read_split,
    write_split,
)
from akvsr.corpus.render import render

__all__ = [
    "BigramGrammar",
    "Corpus",
    "build_corpus",
    "build_grammar",
    "generate_corpus",
    "inventory_for",
    "load_corpus",
    "make_inventory",
    "orthonormal_rows",
    "read_split",
    "render",
    "sample_utterance",
    "write_split",
]
