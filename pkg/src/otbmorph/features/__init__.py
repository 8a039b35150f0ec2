"""
Embedding space, extractors and the synthetic biometric world.

Main exports:
- Embedding, DissimilarityScore, dissimilarity
- Extractor, ExtractorRegistry, SyntheticExtractor, extract_features
- SyntheticWorldConfig, SyntheticWorld, SubjectModel, Presentation
- synth_subject, sample_presentation, build_world
"""

from .embedding import DissimilarityScore, Embedding, dissimilarity
from .extractors import Extractor, ExtractorRegistry, SyntheticExtractor, extract_features
from .world import (
    Presentation,
    SubjectModel,
    SyntheticWorld,
    SyntheticWorldConfig,
    build_world,
    sample_presentation,
    synth_subject,
)

__all__ = [
    "DissimilarityScore",
    "Embedding",
    "Extractor",
    "ExtractorRegistry",
    "Presentation",
    "SubjectModel",
    "SyntheticExtractor",
    "SyntheticWorld",
    "SyntheticWorldConfig",
    "build_world",
    "dissimilarity",
    "extract_features",
    "sample_presentation",
    "synth_subject",
]
