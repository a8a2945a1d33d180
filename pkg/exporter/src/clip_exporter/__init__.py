"""Export CLIP text and image features into iqdistill container files."""

from .backends import ClipBackend, StubBackend, get_backend
from .errors import BackendUnavailableError, DataError, ExporterError, ManifestError
from .export import export_image_features, export_text_bank, normalize_score, read_score_table
from .manifest import DEFAULT_MODEL_TAG, LEVELS, ExportManifest, default_prompts

__all__ = [
    "BackendUnavailableError",
    "ClipBackend",
    "DataError",
    "DEFAULT_MODEL_TAG",
    "ExporterError",
    "ExportManifest",
    "LEVELS",
    "ManifestError",
    "StubBackend",
    "default_prompts",
    "export_image_features",
    "export_text_bank",
    "get_backend",
    "normalize_score",
    "read_score_table",
]
