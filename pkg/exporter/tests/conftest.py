import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def make_png(path, seed, size=(48, 36)):
    """Small deterministic RGB noise image."""
    r = np.random.default_rng(seed)
    pixels = r.integers(0, 256, size=(size[1], size[0], 3), dtype=np.uint8)
    Image.fromarray(pixels, mode="RGB").save(path, format="PNG")


@pytest.fixture
def image_set(tmp_path):
    """Ten scored PNGs plus their score table; raw scores on a [0, 100] scale."""
    img_dir = tmp_path / "images"
    img_dir.mkdir()
    names = [f"img_{i:02d}.png" for i in range(10)]
    raw = [5.0, 17.5, 26.0, 38.0, 44.5, 55.0, 63.0, 71.5, 88.0, 96.0]
    for i, name in enumerate(names):
        make_png(img_dir / name, seed=100 + i)
    table = tmp_path / "scores.csv"
    lines = ["image,score"] + [f"{n},{s}" for n, s in zip(names, raw)]
    table.write_text("\n".join(lines) + "\n")
    return img_dir, table, names, raw
