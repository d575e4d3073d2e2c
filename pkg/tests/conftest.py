"""Shared fixtures: synthetic datasets, backbone weights, a small trained model.

Heavy artifacts are session-scoped so the expensive work (weight file
creation, one head-training run) happens once per test run.
"""

from __future__ import annotations

import numpy as np
import pytest

from sensoryeval import dataset as dataset_mod
from sensoryeval import model as model_mod
from sensoryeval.dataset import SynthSpec


@pytest.fixture(scope="session")
def backbone_weights(tmp_path_factory):
    """A resnet18 backbone state_dict file (deterministic random init)."""
    path = tmp_path_factory.mktemp("weights") / "resnet18.pt"
    model_mod.init_backbone_weights("resnet18", path, seed=7)
    return str(path)


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    """A 26-image synthetic dataset on disk (64 px, seed 11)."""
    out = tmp_path_factory.mktemp("synth")
    dataset_mod.write_synth_dataset(SynthSpec(count=26, seed=11, image_size=64), out)
    return out


@pytest.fixture(scope="session")
def synth_records(synth_dir):
    return dataset_mod.load_annotations(synth_dir / "annotations.csv")


@pytest.fixture(scope="session")
def trained_model(backbone_weights, synth_dir, synth_records):
    """A small head-trained regressor (resnet18 @ 64 px) for pipeline tests."""
    spec = model_mod.RegressorSpec(backbone_id="resnet18", input_size=64,
                                   backbone_weights=backbone_weights, seed=3)
    model = model_mod.build_regressor(spec)
    data_split = dataset_mod.split(synth_records, ratio=0.8, seed=3)
    cfg = model_mod.TrainConfig(phase="feature_extractor", learning_rate=3e-3,
                                max_epochs=40, patience=40, seed=3)
    model_mod.train_phase(model, data_split, cfg, images_root=synth_dir)
    return model


def paste_fruits(samples, gap: int = 8) -> tuple[np.ndarray, list]:
    """Compose a horizontal scene from synthetic samples.

    Returns the scene plus per-fruit pixel-space boxes in scene
    coordinates (center format), mirroring the generator's layout.
    """
    from sensoryeval.boxes import BoundingBox

    size = samples[0].image.shape[0]
    width = len(samples) * size + (len(samples) + 1) * gap
    height = size + 2 * gap
    scene = np.full((height, width, 3), 55, dtype=np.uint8)
    boxes = []
    for i, sample in enumerate(samples):
        x0 = gap + i * (size + gap)
        scene[gap:gap + size, x0:x0 + size] = sample.image
        boxes.append(BoundingBox(sample.box.bx + x0, sample.box.by + gap,
                                 sample.box.bw, sample.box.bh))
    return scene, boxes
