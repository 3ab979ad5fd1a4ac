"""Transformer masked-LM backend for the phrasemeter probe protocol."""

from .provider import NeuralProvider

__all__ = ["NeuralProvider"]
__version__ = "0.1.0"
