import pytest

from src.core.errors import ConfigError, SceneGenerationError
from src.core.rng import derive_rng, seeded_rng
from src.core.vocab import Vocab
from src.data_processing.scene_generator import (CategoryPrior, SceneGenConfig, default_priors, generate_dataset,
                                                 generate_scene)


def test_three_categories_forced_count(vocab):
    priors = default_priors(Vocab.default(3))
    cfg = SceneGenConfig(category_priors=priors, min_objects=3, max_objects=3)
    scene = generate_scene(seeded_rng(1), cfg)
    assert sorted(scene.categories) == [0, 1, 2]


def test_generated_scenes_satisfy_invariants(scene_config):
    for scene in generate_dataset(SceneGenConfig(n_scenes=50, category_priors=scene_config.category_priors,
                                                 seed=9)):
        scene.check(n_categories=10)


def test_random_configs_produce_valid_scenes():
    rng = seeded_rng(2024)
    for trial in range(1000):
        n_cat = int(rng.integers(3, 11))
        lo = int(rng.integers(3, 9))
        hi = int(rng.integers(lo, 9))
        cfg = SceneGenConfig(n_scenes=1, category_priors=default_priors(Vocab.default(n_cat)),
                             min_objects=lo, max_objects=hi, seed=trial)
        scene = generate_scene(derive_rng(trial, "scene", 0), cfg)
        scene.check(n_categories=n_cat, min_objects=lo, max_objects=hi)


def test_determinism_and_keyed_streams(scene_config):
    first = generate_dataset(scene_config)
    assert first == generate_dataset(scene_config)
    # scene i depends only on (seed, i)
    assert generate_scene(derive_rng(scene_config.seed, "scene", 5), scene_config) == first[5]


def test_empty_dataset(scene_config):
    assert generate_dataset(SceneGenConfig(n_scenes=0, category_priors=scene_config.category_priors)) == []


def test_unsatisfiable_priors_report_attempts():
    tiny = (("dot", CategoryPrior(0.5, 0.0, 0.01, 0.0)),)
    cfg = SceneGenConfig(n_scenes=2, category_priors=tiny, max_attempts=7, seed=1)
    with pytest.raises(SceneGenerationError) as info:
        generate_dataset(cfg)
    assert info.value.attempts == 7
    assert info.value.scene_index == 0
    assert "7 attempts" in str(info.value)


def test_config_validation():
    with pytest.raises(ConfigError):
        SceneGenConfig(min_objects=5, max_objects=4).validate()
    with pytest.raises(ConfigError, match="min_objects"):
        SceneGenConfig(min_objects=1, max_objects=4).validate()
    with pytest.raises(ConfigError):
        SceneGenConfig(min_objects=3, max_objects=9).validate()
    with pytest.raises(ConfigError):
        SceneGenConfig(category_priors=(("x", CategoryPrior(0.5, 0.1, 0.3, 0.1, shape="star")),)).validate()
    with pytest.raises(ConfigError):
        SceneGenConfig(category_priors=default_priors(Vocab.default(3))).validate(Vocab.default())
