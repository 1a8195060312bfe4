import json

import numpy as np
import pytest
from PIL import Image

SCENE_LABELS = [
    "beach", "harbor", "forest", "street", "kitchen",
    "office", "garden", "stadium", "desert", "library",
]


@pytest.fixture(scope="session")
def sample_images(tmp_path_factory):
    """Five deterministic RGB images on disk."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(90210)
    paths = []
    for i in range(5):
        arr = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
        path = root / f"sample{i}.png"
        Image.fromarray(arr).save(path)
        paths.append(path)
    return paths


@pytest.fixture(scope="session")
def scene_labels_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("labels") / "scenes.txt"
    path.write_text("\n".join(SCENE_LABELS) + "\n")
    return path


def write_manifest(path, **fields):
    path.write_text(json.dumps(fields))
    return path
