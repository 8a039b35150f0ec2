"""
Parsers for configuration, images, landmarks, auxiliary data and run
artifacts.
"""

from .ad_parser import ADParser
from .artifact_parser import (
    read_ad_ledger,
    read_embeddings,
    read_pseudonym_index,
    read_report,
    read_scores,
    read_trace,
    read_traces,
    read_transcripts,
    score_fingerprint,
)
from .config_parser import CONFIG_SCHEMA, ConfigParser, ExperimentConfig
from .image_parser import ImageParser
from .landmark_parser import LandmarkParser

__all__ = [
    "ADParser",
    "CONFIG_SCHEMA",
    "ConfigParser",
    "ExperimentConfig",
    "ImageParser",
    "LandmarkParser",
    "read_ad_ledger",
    "read_embeddings",
    "read_pseudonym_index",
    "read_report",
    "read_scores",
    "read_trace",
    "read_traces",
    "read_transcripts",
    "score_fingerprint",
]
