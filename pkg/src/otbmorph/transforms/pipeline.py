"""
Per-scenario key issuance and protection dispatch.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from otbmorph.errors import ConfigurationError
from otbmorph.features.embedding import Embedding
from otbmorph.features.extractors import Extractor, extract_features
from otbmorph.features.world import Presentation, SyntheticWorld
from otbmorph.morph.engine import MorphParams
from otbmorph.tools.types import ADKind, Scenario

from .auxiliary import ADLedger, AuxiliaryData, new_ad_id
from .protect import ProtectedTemplate, protect_gaussian, protect_implode, protect_none, protect_otb

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransformParams:
    """
    Key-independent transform settings.

    Attributes:
        sigma: Gaussian noise scale for scenario ii
        strength: Implode strength for scenario iii
    """

    sigma: float = 0.3
    strength: float = 0.5

    def validate(self) -> list[str]:
        errors = []
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            errors.append(f"transforms.sigma: must be >= 0, got {self.sigma!r}")
        if not (math.isfinite(self.strength) and 0.0 <= self.strength < 1.0):
            errors.append(f"transforms.strength: must be in [0, 1), got {self.strength!r}")
        return errors


class KeyIssuer:
    """
    Issues auxiliary data for a scenario and records every id in the ledger.

    Random faces are drawn from the world's population with the caller's rng,
    so they never coincide with an enrolled subject.
    """

    def __init__(self, world: SyntheticWorld, ledger: ADLedger, params: Optional[TransformParams] = None):
        self.world = world
        self.ledger = ledger
        self.params = params or TransformParams()

    def issue(self, scenario: Scenario, rng: np.random.Generator) -> AuxiliaryData:
        scenario = Scenario.parse(scenario)
        if scenario is Scenario.UNPROTECTED:
            return AuxiliaryData.none()
        ad_id = new_ad_id(rng)
        if scenario is Scenario.GAUSSIAN:
            ad = AuxiliaryData.noise_key(ad_id, int(rng.integers(0, 2**63 - 1)))
        elif scenario is Scenario.IMPLODE:
            ad = AuxiliaryData.implode_key(ad_id, self.params.strength)
        else:
            ad = AuxiliaryData.random_face(ad_id, self.world.random_face(rng))
        self.ledger.issue(ad_id)
        return ad


@dataclass
class ProtectionPipeline:
    """
    Client-side protection for one scenario.

    ``protect`` turns a presentation into the template the client submits;
    ``capture_key`` picks the key a capture uses given the client's stored
    key (scenario ii draws a fresh noise key for every capture).
    """

    scenario: Scenario
    extractor: Extractor
    transform_params: TransformParams = field(default_factory=TransformParams)
    morph_params: MorphParams = field(default_factory=MorphParams)
    ledger: Optional[ADLedger] = None

    def __post_init__(self) -> None:
        self.scenario = Scenario.parse(self.scenario)
        errors = self.transform_params.validate()
        if errors:
            raise ConfigurationError("Invalid transform parameters", errors)

    def embed(self, presentation: Presentation) -> Embedding:
        return extract_features(presentation.image, self.extractor)

    def capture_key(
        self, stored: AuxiliaryData, issuer: KeyIssuer, rng: np.random.Generator
    ) -> AuxiliaryData:
        if self.scenario is Scenario.GAUSSIAN:
            return issuer.issue(Scenario.GAUSSIAN, rng)
        return stored

    def protect(self, presentation: Presentation, ad: AuxiliaryData) -> ProtectedTemplate:
        if not self.scenario.image_domain:
            return self.protect_embedding(self.embed(presentation), ad)
        image, landmarks = presentation
        if self.scenario is Scenario.IMPLODE:
            strength = ad.strength if ad.kind is ADKind.IMPLODE_KEY else self.transform_params.strength
            assert strength is not None
            ad_id = ad.ad_id if ad.kind is ADKind.IMPLODE_KEY else None
            return protect_implode(image, landmarks, strength, self.extractor, ad_id)
        return protect_otb(image, landmarks, ad, self.morph_params, self.extractor, self.ledger)

    def protect_embedding(self, probe: Embedding, ad: AuxiliaryData) -> ProtectedTemplate:
        """Protect an already extracted embedding (scenarios i and ii only)."""
        if self.scenario is Scenario.UNPROTECTED:
            return protect_none(probe)
        if self.scenario is Scenario.GAUSSIAN:
            return protect_gaussian(probe, ad, self.transform_params.sigma)
        raise ConfigurationError(
            "Image-domain scenario", [f"scenario: {self.scenario.value} transforms images, not embeddings"]
        )
