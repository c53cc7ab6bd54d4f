"""Attention weights vs. transformation norms in RoBERTa-style code models."""

__version__ = "0.1.0"
