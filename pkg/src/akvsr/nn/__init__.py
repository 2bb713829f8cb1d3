"""Trainable building blocks: memory, transformer stacks and audio bridging."""

from akvsr.nn.abm import AbmLayer, AbmStack
from akvsr.nn.memory import CompactAudioMemory, init_memory
from akvsr.nn.module import LayerNormParams, Linear, Module, ModuleList
from akvsr.nn.seqnet import (
    DecoderStack,
    EncoderStack,
    MultiHeadAttention,
    Vocab,
    causal_mask,
    sinusoidal_positions,
)

__all__ = [
    "AbmLayer",
    "AbmStack",
    "CompactAudioMemory",
    "DecoderStack",
    "EncoderStack",
    "LayerNormParams",
    "Linear",
    "Module",
    "ModuleList",
    "MultiHeadAttention",
    "Vocab",
    "causal_mask",
    "init_memory",
    "sinusoidal_positions",
]
