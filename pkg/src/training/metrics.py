"""
Layout metrics: box mIoU and relation score, per scene and over a dataset.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from src.core.geometry import Box, boxes_iou
from src.data_processing.graph_builder import AugmentConfig, relation_holds
from src.model.prediction import LayoutPrediction
from src.training.layout import predict_layout

logger = logging.getLogger(__name__)


def mean_iou(pred: LayoutPrediction, scene) -> float:
    """Mean over objects of the IoU between predicted and ground-truth boxes."""
    return float(np.mean(boxes_iou(pred.boxes, scene.box_array())))


def relation_score(pred: LayoutPrediction, graph, cfg: AugmentConfig, base_only=False) -> Optional[float]:
    """
    Fraction of edges whose predicate rule holds for the predicted boxes;
    None when there is no edge to score.
    """
    boxes = [Box(*row) for row in pred.boxes]
    edges = [t for t, aug in zip(graph.edges, graph.augmented_flags) if not (base_only and aug)]
    if not edges:
        return None
    hits = sum(1 for t in edges if relation_holds(t.predicate, boxes[t.subject], boxes[t.object], cfg))
    return hits / len(edges)


@dataclass
class SceneMetrics:
    scene: int
    miou: float
    relation_score: Optional[float]
    relation_score_base: Optional[float]

    def to_dict(self):
        return {"scene": self.scene, "miou": self.miou, "relation_score": self.relation_score,
                "relation_score_base": self.relation_score_base}


@dataclass
class MetricsReport:
    mean_iou: float
    relation_score: Optional[float]
    relation_score_base: Optional[float]
    per_scene: List[SceneMetrics] = field(default_factory=list)
    loss_curve: List[float] = field(default_factory=list)

    def to_dict(self):
        return {
            "mean_iou": self.mean_iou,
            "relation_score": self.relation_score,
            "relation_score_base": self.relation_score_base,
            "n_scenes": len(self.per_scene),
            "loss_curve": list(self.loss_curve),
            "per_scene": [m.to_dict() for m in self.per_scene],
        }


def _mean_defined(values):
    defined = [v for v in values if v is not None]
    return float(np.mean(defined)) if defined else None


def evaluate(scenes, graphs, model, cfg: AugmentConfig, loss_curve=None) -> MetricsReport:
    """
    Predict every scene's layout from its graph and average the per-scene
    metrics. Relation scores are reported over all edges and over base
    edges only; scenes without edges do not enter the relation averages.
    """
    per_scene = []
    for index, (scene, graph) in enumerate(zip(scenes, graphs)):
        pred = predict_layout(graph, model)
        per_scene.append(SceneMetrics(
            scene=index,
            miou=mean_iou(pred, scene),
            relation_score=relation_score(pred, graph, cfg),
            relation_score_base=relation_score(pred, graph, cfg, base_only=True),
        ))
    report = MetricsReport(
        mean_iou=float(np.mean([m.miou for m in per_scene])) if per_scene else 0.0,
        relation_score=_mean_defined(m.relation_score for m in per_scene),
        relation_score_base=_mean_defined(m.relation_score_base for m in per_scene),
        per_scene=per_scene,
        loss_curve=list(loss_curve or []),
    )
    logger.info("evaluated %d scenes: mIoU %.4f, relation score %s", len(per_scene), report.mean_iou,
                "n/a" if report.relation_score is None else f"{report.relation_score:.4f}")
    return report
