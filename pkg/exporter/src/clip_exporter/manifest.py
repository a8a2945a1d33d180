"""Export manifest: what to embed, from where, and how to map scores."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError

LEVELS = ("bad", "poor", "fair", "good", "perfect")
DEFAULT_MODEL_TAG = "openai/clip-vit-base-patch32"


def default_prompts() -> tuple[str, ...]:
    """The five graded templates, worst to best."""
    return tuple(f"a photo of {level} quality" for level in LEVELS)


@dataclass(frozen=True)
class ExportManifest:
    """Everything one export run needs.

    model_tag names the exact checkpoint used (recorded so exports are
    reproducible); the special tag "stub" selects a deterministic offline
    backend. Scores from the raw table are mapped linearly from
    [score_lo, score_hi] onto [1, 5]; invert flips orientation for
    lower-is-better tables.
    """

    image_dir: Path
    score_table: Path
    score_lo: float
    score_hi: float
    invert: bool = False
    model_tag: str = DEFAULT_MODEL_TAG
    prompts: tuple[str, ...] = field(default_factory=default_prompts)

    def __post_init__(self):
        object.__setattr__(self, "image_dir", Path(self.image_dir))
        object.__setattr__(self, "score_table", Path(self.score_table))
        object.__setattr__(self, "prompts", tuple(self.prompts))
        if len(self.prompts) != len(LEVELS):
            raise ManifestError(
                f"need exactly {len(LEVELS)} prompts, worst to best, got {len(self.prompts)}"
            )
        if any(not isinstance(p, str) or not p.strip() for p in self.prompts):
            raise ManifestError("prompts must be nonempty strings")
        if len(set(self.prompts)) != len(self.prompts):
            raise ManifestError("prompts must be distinct")
        if not self.score_hi > self.score_lo:
            raise ManifestError(
                f"score bounds need hi > lo, got [{self.score_lo}, {self.score_hi}]"
            )
        if not self.model_tag.strip():
            raise ManifestError("model_tag must be nonempty")
