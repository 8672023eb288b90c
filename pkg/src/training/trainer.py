"""
Minibatch training of the layout network.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.core.errors import ConfigError, DataError, NumericalError
from src.core.rng import derive_rng
from src.core.storage import write_csv
from src.data_processing.graph_builder import AugmentConfig, rebuild_augmentation
from src.model.autodiff import global_norm
from src.model.gcn import GcnConfig
from src.model.network import LayoutModel, batch_loss, init_model
from src.model.prediction import HeadConfig, LossWeights, build_targets
from src.training.metrics import evaluate
from src.training.optimizers import OPTIMIZERS, create_optimizer

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "loss", "miou", "relscore"]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 16
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    weights: LossWeights = field(default_factory=LossWeights)
    augmentation: AugmentConfig = field(default_factory=AugmentConfig)
    seed: int = 0
    eval_every: int = 0  # 0: no periodic evaluation
    progress: bool = False

    def validate(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}, expected one of {OPTIMIZERS}")
        if self.eval_every < 0:
            raise ConfigError("eval_every must be >= 0")
        self.weights.validate()
        self.augmentation.validate()
        return self


@dataclass
class TrainHistory:
    rows: List[dict] = field(default_factory=list)

    def append(self, epoch, loss, miou=None, relscore=None):
        self.rows.append({"epoch": epoch, "loss": loss, "miou": miou, "relscore": relscore})

    @property
    def losses(self):
        return [row["loss"] for row in self.rows]

    def to_frame(self):
        return pd.DataFrame(self.rows, columns=HISTORY_COLUMNS)

    def write_csv(self, path):
        return write_csv(path, self.to_frame())


def epoch_batches(n_scenes, batch_size, seed, epoch):
    """Shuffled scene indices for one epoch, split into batches."""
    order = derive_rng(seed, "shuffle", epoch).permutation(n_scenes)
    return [order[start:start + batch_size] for start in range(0, n_scenes, batch_size)]


def train(scenes, graphs, cfg: TrainConfig, gcn_cfg: GcnConfig, vocab, head_cfg: HeadConfig = None,
          model: Optional[LayoutModel] = None):
    """
    Train on (scene, graph) pairs. Graphs are re-augmented under
    cfg.augmentation first, so one base dataset serves every variant.
    Returns the trained model and its history.
    """
    cfg.validate()
    if not scenes or len(scenes) != len(graphs):
        raise DataError(f"training needs matching nonempty scenes and graphs, got {len(scenes)} and {len(graphs)}")
    head_cfg = head_cfg or HeadConfig()
    model = model or init_model(vocab, gcn_cfg, head_cfg)
    graphs = [rebuild_augmentation(s, g, cfg.augmentation) for s, g in zip(scenes, graphs)]
    targets = [build_targets(s, g, model.head_config) for s, g in zip(scenes, graphs)]
    optimizer = create_optimizer(cfg.optimizer, cfg.learning_rate)
    params = model.named_arrays()
    history = TrainHistory()

    logger.info("training %d scenes for %d epochs (batch %d, %s lr=%g)", len(scenes), cfg.epochs,
                cfg.batch_size, cfg.optimizer, cfg.learning_rate)
    for epoch in tqdm(range(1, cfg.epochs + 1), desc="epochs", disable=not cfg.progress):
        total = 0.0
        for b, batch in enumerate(epoch_batches(len(scenes), cfg.batch_size, cfg.seed, epoch)):
            loss, grads, terms = batch_loss(
                model, [scenes[i] for i in batch], [graphs[i] for i in batch], cfg.weights,
                targets=[targets[i] for i in batch],
            )
            if not np.isfinite(loss) or not np.isfinite(global_norm(grads)):
                raise NumericalError(f"non-finite loss at epoch {epoch} batch {b}: {loss} (terms {terms})")
            logger.debug("epoch %d batch %d loss %.6f %s", epoch, b, loss, terms)
            params = optimizer.step(params, grads)
            model = model.with_arrays(params)
            total += loss * len(batch)

        mean_loss = total / len(scenes)
        miou = relscore = None
        if cfg.eval_every and (epoch % cfg.eval_every == 0 or epoch == cfg.epochs):
            report = evaluate(scenes, graphs, model, cfg.augmentation)
            miou, relscore = report.mean_iou, report.relation_score
        history.append(epoch, mean_loss, miou, relscore)
        logger.debug("epoch %d mean loss %.6f", epoch, mean_loss)

    logger.info("final epoch loss %.6f (first %.6f)", history.losses[-1], history.losses[0])
    return model, history
