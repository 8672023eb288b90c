"""Shared fixtures: small vocabularies, generated scenes and tiny models."""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.core.geometry import Box, full_mask  # noqa: E402
from src.core.scene_types import ObjectInstance, Scene  # noqa: E402
from src.core.vocab import Vocab  # noqa: E402
from src.data_processing.graph_builder import AugmentConfig, build_graphs  # noqa: E402
from src.data_processing.scene_generator import SceneGenConfig, default_priors, generate_dataset  # noqa: E402
from src.model.gcn import GcnConfig  # noqa: E402
from src.model.network import init_model  # noqa: E402
from src.model.prediction import HeadConfig  # noqa: E402


def make_scene(*boxes, categories=None, mask_side=4):
    categories = categories or list(range(len(boxes)))
    boxes = [b if isinstance(b, Box) else Box(*b) for b in boxes]
    return Scene(tuple(ObjectInstance(c, b, full_mask(mask_side)) for c, b in zip(categories, boxes)))


@pytest.fixture
def vocab():
    return Vocab.default()


@pytest.fixture
def scene_config(vocab):
    return SceneGenConfig(n_scenes=8, category_priors=default_priors(vocab), mask_side=4, seed=3)


@pytest.fixture
def scenes(scene_config):
    return generate_dataset(scene_config)


@pytest.fixture
def graphs(scenes):
    return build_graphs(scenes, 3, 2, AugmentConfig(enabled=True))


@pytest.fixture
def tiny_gcn_config():
    return GcnConfig(embed_dim=4, hidden_dim=6, n_layers=2, init_scale=0.5, seed=11)


@pytest.fixture
def tiny_head_config():
    return HeadConfig(object_mask_side=4, triplet_mask_side=6, init_scale=0.5)


@pytest.fixture
def tiny_model(vocab, tiny_gcn_config, tiny_head_config):
    return init_model(vocab, tiny_gcn_config, tiny_head_config)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
