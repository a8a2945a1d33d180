"""Feature backends: the real vision-language model and an offline stub.

Both map prompt strings and image files to 512-wide feature rows. Images
are decoded with Pillow and resized to 224x224 before embedding; the real
backend delegates that to the model's own processor, the stub does it
here. Backends must be deterministic: the same input always produces the
same row.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import BackendUnavailableError, DataError

FEATURE_DIM = 512
IMAGE_SIZE = 224


def load_image(path) -> Image.Image:
    p = Path(path)
    try:
        with Image.open(p) as img:
            return img.convert("RGB")
    except (UnidentifiedImageError, OSError) as exc:
        raise DataError(f"cannot decode image {p}: {exc}") from exc


class StubBackend:
    """Deterministic offline features for tests and dry runs.

    Text rows are seeded from a digest of the prompt string; image rows are
    a fixed random projection of the 32x32 block-averaged grayscale image.
    No model weights, no network.
    """

    model_tag = "stub"
    _blocks = IMAGE_SIZE // 32

    def __init__(self):
        proj_rng = np.random.default_rng(0x51AB)
        self._projection = proj_rng.standard_normal((FEATURE_DIM, 32 * 32)) / np.sqrt(32 * 32)

    def embed_texts(self, prompts) -> np.ndarray:
        rows = []
        for prompt in prompts:
            digest = hashlib.sha256(prompt.encode("utf-8")).digest()
            seed = int.from_bytes(digest[:8], "little")
            rows.append(np.random.default_rng(seed).standard_normal(FEATURE_DIM))
        return np.stack(rows)

    def embed_images(self, paths) -> np.ndarray:
        rows = []
        for path in paths:
            img = load_image(path).resize((IMAGE_SIZE, IMAGE_SIZE), Image.Resampling.BILINEAR)
            gray = np.asarray(img, dtype=np.float64).mean(axis=2) / 255.0
            pooled = gray.reshape(32, self._blocks, 32, self._blocks).mean(axis=(1, 3))
            rows.append(self._projection @ pooled.reshape(-1))
        return np.stack(rows)

    def temperature(self) -> float:
        return 0.07


class ClipBackend:
    """Wraps a pretrained contrastive vision-language checkpoint.

    torch and transformers are imported lazily so the exporter works
    without them installed; any load failure (missing packages, missing
    weights, no network) surfaces as BackendUnavailableError.
    """

    def __init__(self, model_tag: str):
        self.model_tag = model_tag
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise BackendUnavailableError(
                f"model {model_tag!r} needs the torch and transformers packages: {exc}"
            ) from exc
        try:
            self._model = CLIPModel.from_pretrained(model_tag)
            self._processor = CLIPProcessor.from_pretrained(model_tag)
        except Exception as exc:
            raise BackendUnavailableError(f"cannot load model {model_tag!r}: {exc}") from exc
        self._torch = torch
        self._model.eval()

    def embed_texts(self, prompts) -> np.ndarray:
        inputs = self._processor(text=list(prompts), return_tensors="pt", padding=True)
        with self._torch.no_grad():
            feats = self._model.get_text_features(**inputs)
        return feats.numpy().astype(np.float64)

    def embed_images(self, paths) -> np.ndarray:
        images = [load_image(p) for p in paths]
        inputs = self._processor(images=images, return_tensors="pt")
        with self._torch.no_grad():
            feats = self._model.get_image_features(**inputs)
        return feats.numpy().astype(np.float64)

    def temperature(self) -> float:
        with self._torch.no_grad():
            return float(1.0 / self._model.logit_scale.exp())


def get_backend(model_tag: str):
    if model_tag == "stub":
        return StubBackend()
    return ClipBackend(model_tag)
