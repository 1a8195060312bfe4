"""Phrase localization from detector dumps and word embeddings."""

__version__ = "0.1.0"
