"""Batch exporter: run frozen NLI checkpoints over windowed
premise-hypothesis pairs and write `#halt-nli-v1` score files."""

from .export import ExportJob, export_scores

__version__ = "0.1.0"
