"""
Run result dataclass.

Holds what one command produced: artifact paths, scalar diagnostics and
the issues met along the way.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


@dataclass
class RunResult:
    """
    Result of one workflow command.

    Attributes:
        command: Command name (simulate, attack, evaluate, demo, issue)
        out_dir: Output directory
        artifacts: Artifact name to path
        info: Scalar diagnostics for the run manifest
        warnings: Non-fatal issues encountered
        errors: Issues that make the run a failure
    """

    command: str
    out_dir: Path
    artifacts: dict[str, Path] = field(default_factory=dict)
    info: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def has_errors(self) -> bool:
        return len(self.errors) > 0

    @property
    def exit_code(self) -> int:
        return 1 if self.has_errors else 0

    def add_artifact(self, name: str, path: Path) -> None:
        self.artifacts[name] = Path(path)

    def relative_artifacts(self) -> dict[str, str]:
        """Artifact paths relative to the output directory, sorted by name."""
        out = {}
        for name in sorted(self.artifacts):
            path = self.artifacts[name]
            try:
                out[name] = path.relative_to(self.out_dir).as_posix()
            except ValueError:
                out[name] = path.as_posix()
        return out

    def summary(self) -> str:
        """Generate a human-readable summary."""
        lines = [f"{self.command.capitalize()} Summary:"]
        lines.append(f"  Output: {self.out_dir}")
        for key, value in self.info.items():
            lines.append(f"  {key}: {value}")
        lines.append(f"  Artifacts: {len(self.artifacts)}")

        if self.warnings:
            lines.append(f"\nWarnings ({len(self.warnings)}):")
            for w in self.warnings[:5]:
                lines.append(f"  - {w}")

        if self.errors:
            lines.append(f"\nErrors ({len(self.errors)}):")
            for e in self.errors:
                lines.append(f"  - {e}")

        return "\n".join(lines)
