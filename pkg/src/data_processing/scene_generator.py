"""
Synthetic Scene Generator
Samples scenes from category-conditioned spatial priors: every category
lives in a vertical band of the canvas (sky near the top, road near the
bottom) with its own size, aspect ratio, frequency and mask shape.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from src.core.errors import ConfigError, SceneGenerationError
from src.core.geometry import Box, ellipse_mask, full_mask
from src.core.rng import derive_rng
from src.core.scene_types import MAX_OBJECTS, MIN_AREA, MIN_OBJECTS, ObjectInstance, Scene
from src.core.vocab import Vocab

logger = logging.getLogger(__name__)

MASK_SHAPES = ("rectangle", "ellipse")
MIN_SIZE = 0.05


@dataclass(frozen=True)
class CategoryPrior:
    band_mean: float
    band_std: float
    size_mean: float
    size_std: float
    aspect: float = 1.0
    shape: str = "rectangle"
    frequency: float = 1.0

    def validate(self, name):
        if self.shape not in MASK_SHAPES:
            raise ConfigError(f"prior {name!r}: mask shape must be one of {MASK_SHAPES}")
        if self.band_std < 0 or self.size_std < 0:
            raise ConfigError(f"prior {name!r}: standard deviations must be >= 0")
        if self.size_mean <= 0 or self.aspect <= 0 or self.frequency <= 0:
            raise ConfigError(f"prior {name!r}: size, aspect and frequency must be > 0")


# band centre / spread, size / spread, aspect (w/h), mask shape, frequency
DEFAULT_PRIORS = {
    'sky':      CategoryPrior(0.15, 0.06, 0.55, 0.10, 3.0, "rectangle", 3.0),
    'cloud':    CategoryPrior(0.18, 0.07, 0.24, 0.04, 2.0, "ellipse", 1.0),
    'tree':     CategoryPrior(0.45, 0.10, 0.30, 0.06, 0.6, "ellipse", 2.5),
    'building': CategoryPrior(0.38, 0.08, 0.40, 0.08, 0.8, "rectangle", 1.5),
    'wall':     CategoryPrior(0.50, 0.08, 0.38, 0.07, 1.4, "rectangle", 1.0),
    'person':   CategoryPrior(0.62, 0.08, 0.24, 0.04, 0.4, "ellipse", 3.0),
    'car':      CategoryPrior(0.74, 0.06, 0.26, 0.04, 2.0, "rectangle", 1.2),
    'grass':    CategoryPrior(0.82, 0.06, 0.40, 0.08, 3.0, "rectangle", 2.0),
    'road':     CategoryPrior(0.90, 0.04, 0.42, 0.06, 4.0, "rectangle", 1.5),
    'pavement': CategoryPrior(0.86, 0.05, 0.32, 0.05, 3.0, "rectangle", 0.8),
}


def default_priors(vocab: Vocab):
    """Priors for every vocab category; unknown names get evenly spread bands."""
    priors = []
    n = vocab.num_categories
    for i, name in enumerate(vocab.object_categories):
        prior = DEFAULT_PRIORS.get(name)
        if prior is None:
            band = 0.1 + 0.8 * (i + 0.5) / n
            prior = CategoryPrior(band, 0.08, 0.3, 0.05, 1.0, MASK_SHAPES[i % 2], 1.0)
        priors.append((name, prior))
    return tuple(priors)


@dataclass(frozen=True)
class SceneGenConfig:
    n_scenes: int = 100
    category_priors: Tuple[Tuple[str, CategoryPrior], ...] = field(default_factory=lambda: default_priors(Vocab.default()))
    min_objects: int = MIN_OBJECTS
    max_objects: int = MAX_OBJECTS
    min_area: float = MIN_AREA
    mask_side: int = 16
    max_attempts: int = 100
    seed: int = 0

    @property
    def vocab(self):
        return Vocab(tuple(name for name, _ in self.category_priors))

    def validate(self, vocab=None):
        if self.n_scenes < 0:
            raise ConfigError(f"n_scenes must be >= 0, got {self.n_scenes}")
        if not MIN_OBJECTS <= self.min_objects <= self.max_objects <= MAX_OBJECTS:
            raise ConfigError(f"need {MIN_OBJECTS} <= min_objects <= max_objects <= {MAX_OBJECTS}, "
                              f"got {self.min_objects}, {self.max_objects}")
        if not 0 <= self.min_area < 1:
            raise ConfigError(f"min_area must be in [0, 1), got {self.min_area}")
        if self.mask_side < 1 or self.max_attempts < 1:
            raise ConfigError("mask_side and max_attempts must be >= 1")
        if not self.category_priors:
            raise ConfigError("at least one category prior is required")
        for name, prior in self.category_priors:
            prior.validate(name)
        if vocab is not None:
            missing = [c for c in vocab.object_categories if c not in dict(self.category_priors)]
            if missing:
                raise ConfigError(f"no priors for categories {missing}")
        return self


def _sample_categories(rng, n, weights):
    k = min(n, len(weights))
    cats = list(rng.choice(len(weights), size=k, replace=False, p=weights))
    if n > k:
        cats.extend(rng.choice(len(weights), size=n - k, replace=True, p=weights))
    return [int(c) for c in cats]


def _sample_box(rng, prior, min_area):
    size = max(rng.normal(prior.size_mean, prior.size_std), MIN_SIZE)
    w = min(size * math.sqrt(prior.aspect), 1.0)
    h = min(size / math.sqrt(prior.aspect), 1.0)
    cx = rng.uniform(w / 2.0, 1.0 - w / 2.0) if w < 1.0 else 0.5
    cy = rng.normal(prior.band_mean, prior.band_std)
    x0, x1 = max(0.0, cx - w / 2.0), min(1.0, cx + w / 2.0)
    y0, y1 = max(0.0, cy - h / 2.0), min(1.0, cy + h / 2.0)
    if x1 <= x0 or y1 <= y0 or (x1 - x0) * (y1 - y0) < min_area:
        return None
    return Box(x0, y0, x1, y1)


def generate_scene(rng, cfg: SceneGenConfig):
    """Rejection-sample one scene satisfying the count and area constraints."""
    priors = [prior for _, prior in cfg.category_priors]
    weights = np.array([p.frequency for p in priors], dtype=np.float64)
    weights /= weights.sum()
    masks = {"rectangle": full_mask(cfg.mask_side), "ellipse": ellipse_mask(cfg.mask_side)}

    for attempt in range(1, cfg.max_attempts + 1):
        n = int(rng.integers(cfg.min_objects, cfg.max_objects + 1))
        objects = []
        for category in _sample_categories(rng, n, weights):
            prior = priors[category]
            box = _sample_box(rng, prior, cfg.min_area)
            if box is None:
                break
            objects.append(ObjectInstance(category, box, masks[prior.shape]))
        if len(objects) == n:
            if attempt > 1:
                logger.debug("scene accepted after %d attempts", attempt)
            return Scene(tuple(objects))
    raise SceneGenerationError("priors cannot satisfy the area/count constraints", cfg.max_attempts)


def generate_dataset(cfg: SceneGenConfig):
    """n_scenes scenes, scene i drawn from the stream keyed by (seed, i)."""
    cfg.validate()
    scenes = []
    for index in range(cfg.n_scenes):
        try:
            scenes.append(generate_scene(derive_rng(cfg.seed, "scene", index), cfg))
        except SceneGenerationError as exc:
            raise SceneGenerationError("priors cannot satisfy the area/count constraints",
                                       exc.attempts, scene_index=index) from exc
    logger.info("generated %d scenes (seed %d)", len(scenes), cfg.seed)
    return scenes
