"""Write the ``otb-morph-run/1`` manifest each command leaves in its output directory.

The manifest records what a command did in its own vocabulary: the resolved
inputs (``params``), the files it produced (``artifacts``, relative to the
output directory), scalar diagnostics (``info``) and a status.
"""

from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Optional

from otbmorph.writers.json_writer import write_json

SCHEMA = "otb-morph-run/1"
TOOL = "otb-morph"
MANIFEST_NAME = "run-manifest.json"

VALID_STATUS = {"ok", "failed"}


def _tool_version() -> str:
    try:
        return version(TOOL)
    except PackageNotFoundError:  # pragma: no cover - source checkouts
        return "unknown"


def build_manifest(
    command: str,
    status: str,
    *,
    params: Optional[dict[str, Any]] = None,
    artifacts: Optional[dict[str, Any]] = None,
    info: Optional[dict[str, Any]] = None,
    messages: Optional[list[dict[str, str]]] = None,
    exit_code: int = 0,
) -> dict[str, Any]:
    """Return a manifest dict. ``None`` values in params/artifacts/info are dropped."""
    if status not in VALID_STATUS:
        raise ValueError(f"Unknown manifest status {status!r}")
    manifest: dict[str, Any] = {
        "tool": TOOL,
        "tool_version": _tool_version(),
        "schema": SCHEMA,
        "command": command,
        "status": status,
        "exit_code": exit_code,
        "params": {k: v for k, v in (params or {}).items() if v is not None},
        "artifacts": {k: v for k, v in (artifacts or {}).items() if v is not None},
        "info": {k: v for k, v in (info or {}).items() if v is not None},
    }
    if messages:
        manifest["messages"] = messages
    return manifest


def write_manifest(out_dir: str | Path, *args: Any, **kwargs: Any) -> dict[str, Any]:
    """Build a manifest (see :func:`build_manifest`) and write it atomically into *out_dir*."""
    manifest = build_manifest(*args, **kwargs)
    write_json(manifest, Path(out_dir) / MANIFEST_NAME)
    return manifest
