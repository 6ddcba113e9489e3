"""Transformer embedding exporter: EMBV store files and an HTTP service."""

__version__ = "0.1.0"
