"""
Protection transforms and their key material.

Main exports:
- AuxiliaryData, ADLedger: transform keys and the AD uniqueness ledger
- ProtectedTemplate, protect_none, protect_gaussian, implode, protect_implode, protect_otb
- TransformParams, KeyIssuer, ProtectionPipeline
"""

from .auxiliary import ADLedger, AuxiliaryData, new_ad_id
from .pipeline import KeyIssuer, ProtectionPipeline, TransformParams
from .protect import (
    ProtectedTemplate,
    implode,
    protect_gaussian,
    protect_implode,
    protect_none,
    protect_otb,
)

__all__ = [
    "ADLedger",
    "AuxiliaryData",
    "KeyIssuer",
    "ProtectedTemplate",
    "ProtectionPipeline",
    "TransformParams",
    "implode",
    "new_ad_id",
    "protect_gaussian",
    "protect_implode",
    "protect_none",
    "protect_otb",
]
