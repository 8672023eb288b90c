"""
Variant ablation: baseline, triplet supervision and triplet supervision with
depth augmentation, trained on identical data for several seeds and scored
on a held-out split by mIoU, relation score and linear-probe accuracy.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd

from src.cli.config import VARIANTS, RunConfig
from src.data_processing.graph_builder import AugmentConfig, build_graphs, rebuild_augmentation
from src.data_processing.scene_generator import generate_dataset
from src.introspection.embeddings import collect_embeddings
from src.introspection.probe import linear_probe
from src.training.metrics import evaluate
from src.training.trainer import train

logger = logging.getLogger(__name__)

RUN_COLUMNS = ["seed", "variant", "final_loss", "miou", "relation_score", "relation_score_base",
               "probe_mean_accuracy"]
RELATION_MARGIN = 0.02
PROBE_MARGIN = 0.03


@dataclass
class AblationResult:
    runs: pd.DataFrame
    summary: pd.DataFrame
    correlation: Optional[float]
    comparison: Optional[dict] = None

    def to_dict(self):
        return {
            "comparison": self.comparison,
            "variants": list(self.summary["variant"]),
            "summary": self.summary.astype(object).where(self.summary.notna(), None).to_dict(orient="records"),
            "probe_relation_correlation": self.correlation,
            "n_runs": int(len(self.runs)),
        }


def split_dataset(cfg: RunConfig, seed):
    """Train and test scenes plus base graphs for one seed."""
    scenes = generate_dataset(cfg.scene_config(n_scenes=cfg.n_scenes + cfg.test_scenes, seed=seed))
    graphs = build_graphs(scenes, seed, cfg.edges_per_node, AugmentConfig(enabled=False))
    n = cfg.n_scenes
    return (scenes[:n], graphs[:n]), (scenes[n:], graphs[n:])


def run_variant(cfg: RunConfig, train_data, test_data):
    """Train one variant and score it on the test split. Returns one result row."""
    train_cfg = cfg.train_config()
    model, history = train(train_data[0], train_data[1], train_cfg, cfg.gcn_config(), cfg.vocab(),
                           cfg.head_config())
    test_scenes = test_data[0]
    test_graphs = [rebuild_augmentation(s, g, train_cfg.augmentation) for s, g in zip(*test_data)]
    report = evaluate(test_scenes, test_graphs, model, train_cfg.augmentation)
    probe_cfg = cfg.probe_config()
    probe = linear_probe(collect_embeddings(test_graphs, model, cfg.variant), split_seed=probe_cfg.split_seed,
                         C=probe_cfg.C, iterations=probe_cfg.iterations, test_fraction=probe_cfg.test_fraction)
    return {
        "seed": cfg.seed,
        "variant": cfg.variant,
        "final_loss": history.losses[-1],
        "miou": report.mean_iou,
        "relation_score": report.relation_score,
        "relation_score_base": report.relation_score_base,
        "probe_mean_accuracy": probe.mean_accuracy,
    }


def summarize(runs: pd.DataFrame):
    """Median of every metric per variant, in preset order."""
    metrics = [c for c in RUN_COLUMNS if c not in ("seed", "variant")]
    summary = runs.groupby("variant", sort=False)[metrics].median().reindex(
        [v for v in VARIANTS if v in set(runs["variant"])])
    return summary.reset_index()


def _gap(medians, column, better, worse):
    gap = float(medians.at[better, column] - medians.at[worse, column])
    return gap if np.isfinite(gap) else None


def compare_variants(summary: pd.DataFrame, relation_column="relation_score_base"):
    """
    Median gaps between variants and whether the expected orderings hold:
    relation score triplet_da >= triplet >= baseline with triplet_da ahead of
    baseline by RELATION_MARGIN, and probe accuracy of triplet_da ahead of
    baseline by PROBE_MARGIN. None unless all three variants ran.
    """
    medians = summary.set_index("variant").astype(np.float64)
    if not set(VARIANTS) <= set(medians.index):
        return None
    relation_gap = _gap(medians, relation_column, "triplet_da", "baseline")
    steps = (_gap(medians, relation_column, "triplet_da", "triplet"),
             _gap(medians, relation_column, "triplet", "baseline"))
    probe_gap = _gap(medians, "probe_mean_accuracy", "triplet_da", "baseline")
    relation_order = (relation_gap is not None and None not in steps
                      and min(steps) >= 0.0 and relation_gap >= RELATION_MARGIN)
    return {
        "relation_column": relation_column,
        "relation_gap": relation_gap,
        "relation_gap_combined": _gap(medians, "relation_score", "triplet_da", "baseline"),
        "probe_gap": probe_gap,
        "relation_order_holds": bool(relation_order),
        "probe_gap_holds": bool(probe_gap is not None and probe_gap >= PROBE_MARGIN),
    }


def run_ablation(cfg: RunConfig, seeds=None, variants=VARIANTS) -> AblationResult:
    seeds = list(cfg.ablation_seeds if seeds is None else seeds)
    rows: List[dict] = []
    for seed in seeds:
        train_data, test_data = split_dataset(cfg, seed)
        for variant in variants:
            logger.info("ablation seed %d variant %s", seed, variant)
            rows.append(run_variant(cfg.with_overrides(seed=seed, variant=variant), train_data, test_data))
    runs = pd.DataFrame(rows, columns=RUN_COLUMNS)
    paired = runs[["probe_mean_accuracy", "relation_score"]].dropna().astype(np.float64)
    correlation = float(paired["probe_mean_accuracy"].corr(paired["relation_score"])) if len(paired) > 1 else None
    if correlation is not None and not np.isfinite(correlation):
        correlation = None
    summary = summarize(runs)
    return AblationResult(runs, summary, correlation, compare_variants(summary))
