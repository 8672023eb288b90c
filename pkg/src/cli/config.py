"""
Run configuration: one flat ``key = value`` file plus command line overrides.

Variant presets fix the triplet loss weights and depth augmentation:
    baseline    w_tmask = w_superbox = 0, augmentation off
    triplet     configured triplet weights, augmentation off
    triplet_da  configured triplet weights, augmentation on
"""
import configparser
import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Tuple

from src.core.errors import ConfigError, StorageError
from src.core.rng import check_seed
from src.core.vocab import DEFAULT_CATEGORIES, Vocab
from src.data_processing.graph_builder import AugmentConfig
from src.data_processing.scene_generator import SceneGenConfig, default_priors
from src.introspection.probe import ProbeConfig
from src.model.gcn import GcnConfig
from src.model.prediction import HeadConfig, LossWeights
from src.training.trainer import TrainConfig

VARIANTS = ("baseline", "triplet", "triplet_da")
SECTION = "run"


@dataclass(frozen=True)
class RunConfig:
    variant: str = "triplet_da"
    seed: int = 0

    # data
    n_scenes: int = 200
    n_categories: int = 10
    min_objects: int = 3
    max_objects: int = 8
    min_area: float = 0.02
    mask_side: int = 16
    max_attempts: int = 100
    edges_per_node: int = 2
    overlap_threshold: float = 0.2
    max_augmented_per_scene: Optional[int] = None

    # model
    embed_dim: int = 32
    hidden_dim: int = 64
    n_layers: int = 3
    init_scale: float = 0.05
    object_mask_side: int = 16
    triplet_mask_side: int = 32

    # training
    epochs: int = 100
    batch_size: int = 16
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    w_box: float = 1.0
    w_mask: float = 1.0
    w_tmask: float = 1.0
    w_superbox: float = 1.0
    eval_every: int = 0

    # evaluation
    canvas_resolution: int = 64
    render_layouts: int = 0
    palette: str = "naturalistic"

    # probe
    probe_C: float = 1.0
    probe_iterations: int = 200
    probe_test_fraction: float = 0.2
    probe_split_seed: int = 0
    export_top_k: int = 5
    mean_top_k: int = 50
    probe_report_top: int = 10
    export_predicates: bool = False

    # ablation
    ablation_seeds: Tuple[int, ...] = (0, 1, 2)
    test_scenes: int = 200

    def validate(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        check_seed(self.seed)
        check_seed(self.probe_split_seed)
        for seed in self.ablation_seeds:
            check_seed(seed)
        if not 1 <= self.n_categories <= len(DEFAULT_CATEGORIES):
            raise ConfigError(f"n_categories must be in 1..{len(DEFAULT_CATEGORIES)}")
        if self.edges_per_node < 1:
            raise ConfigError("edges_per_node must be >= 1")
        if self.canvas_resolution < 1 or self.render_layouts < 0 or self.test_scenes < 1:
            raise ConfigError("canvas_resolution and test_scenes must be >= 1, render_layouts >= 0")
        self.scene_config().validate()
        self.gcn_config().validate()
        self.head_config().validate()
        self.train_config().validate()
        self.probe_config().validate()
        return self

    def with_overrides(self, **values):
        return dataclasses.replace(self, **values)

    def vocab(self):
        return Vocab.default(self.n_categories)

    def scene_config(self, n_scenes=None, seed=None):
        vocab = self.vocab()
        return SceneGenConfig(
            n_scenes=self.n_scenes if n_scenes is None else n_scenes,
            category_priors=default_priors(vocab),
            min_objects=self.min_objects,
            max_objects=self.max_objects,
            min_area=self.min_area,
            mask_side=self.mask_side,
            max_attempts=self.max_attempts,
            seed=self.seed if seed is None else seed,
        )

    def augment_config(self):
        return AugmentConfig(enabled=self.variant == "triplet_da", overlap_threshold=self.overlap_threshold,
                             max_augmented_per_scene=self.max_augmented_per_scene)

    def loss_weights(self):
        triplet_on = self.variant != "baseline"
        return LossWeights(
            w_box=self.w_box,
            w_mask=self.w_mask,
            w_tmask=self.w_tmask if triplet_on else 0.0,
            w_superbox=self.w_superbox if triplet_on else 0.0,
        )

    def gcn_config(self):
        return GcnConfig(embed_dim=self.embed_dim, hidden_dim=self.hidden_dim, n_layers=self.n_layers,
                         init_scale=self.init_scale, seed=self.seed)

    def head_config(self):
        return HeadConfig(object_mask_side=self.object_mask_side, triplet_mask_side=self.triplet_mask_side,
                          init_scale=self.init_scale)

    def train_config(self, progress=False):
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            optimizer=self.optimizer,
            weights=self.loss_weights(),
            augmentation=self.augment_config(),
            seed=self.seed,
            eval_every=self.eval_every,
            progress=progress,
        )

    def probe_config(self):
        return ProbeConfig(C=self.probe_C, iterations=self.probe_iterations,
                           test_fraction=self.probe_test_fraction, split_seed=self.probe_split_seed,
                           export_top_k=self.export_top_k, mean_top_k=self.mean_top_k,
                           report_top=self.probe_report_top)


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(key, raw):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    default = _FIELDS[key].default
    raw = raw.strip()
    try:
        if key == "max_augmented_per_scene":
            return None if raw.lower() in ("", "none", "auto") else int(raw)
        if key == "ablation_seeds":
            return tuple(int(v) for v in raw.replace(",", " ").split())
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for {key}") from None
    return raw


def parse_config_text(text, base: RunConfig = None):
    """Parse flat key = value text (``#`` comments) on top of base."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(f"[{SECTION}]\n{text}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    values = {key: _convert(key, raw) for key, raw in parser.items(SECTION)}
    return (base or RunConfig()).with_overrides(**values)


def parse_overrides(pairs):
    values = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not key=value")
        key, raw = pair.split("=", 1)
        values[key.strip()] = _convert(key.strip(), raw)
    return values


def load_run_config(path=None, overrides=(), seed=None, variant=None) -> RunConfig:
    """File, then --set overrides, then --seed/--variant."""
    cfg = RunConfig()
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StorageError(path, exc.strerror or str(exc)) from exc
        cfg = parse_config_text(text, cfg)
    cfg = cfg.with_overrides(**parse_overrides(overrides))
    if seed is not None:
        cfg = cfg.with_overrides(seed=seed)
    if variant is not None:
        cfg = cfg.with_overrides(variant=variant)
    return cfg.validate()


def config_to_text(cfg: RunConfig):
    """Flat text form; parse_config_text reads it back to an equal config."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ", ".join(str(v) for v in value)
        elif value is None:
            value = "auto"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
