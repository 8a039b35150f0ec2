"""
Trusted third party: pseudonym issuance and replenishment.

Pseudonyms are opaque random tokens; each carries a random face the AD
ledger has never seen.
"""

from __future__ import annotations

import logging

import numpy as np

from otbmorph.errors import ConfigurationError
from otbmorph.tools.types import Scenario
from otbmorph.transforms.pipeline import KeyIssuer

from .state import PseudonymSet, SecureElementState

logger = logging.getLogger(__name__)


def ttp_issue(
    client_id: str, n: int, rng: np.random.Generator, issuer: KeyIssuer
) -> list[PseudonymSet]:
    """
    Issue ``n`` fresh pseudonym sets to ``client_id``.

    Raises:
        ConfigurationError: n < 1
        ADReuseError: the ledger already holds a drawn AD id (never expected)
    """
    if n < 1:
        raise ConfigurationError("Invalid pseudonym request", [f"n: must be >= 1, got {n}"])
    issued = []
    for _ in range(n):
        ad = issuer.issue(Scenario.OTB_MORPH, rng)
        issued.append(PseudonymSet("psn-" + rng.bytes(8).hex(), ad, client_id))
    logger.debug("Issued %d pseudonyms to %s", n, client_id)
    return issued


def ttp_replenish(
    se_state: SecureElementState, n: int, rng: np.random.Generator, issuer: KeyIssuer
) -> SecureElementState:
    """Append ``n`` fresh pseudonyms to the client's pool."""
    return se_state.with_pool(ttp_issue(se_state.client_id, n, rng, issuer))


def provision_client(
    client_id: str, pool_size: int, rng: np.random.Generator, issuer: KeyIssuer
) -> SecureElementState:
    """A new secure element pre-loaded with ``pool_size`` pseudonyms."""
    return SecureElementState(client_id, None, tuple(ttp_issue(client_id, pool_size, rng, issuer)))
