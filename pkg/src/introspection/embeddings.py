"""
Labelled embedding collection from a trained layout network.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.core.errors import DataError
from src.model.gcn import embed_graph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabelledEmbeddings:
    vectors: np.ndarray
    labels: np.ndarray
    label_names: Tuple[str, ...]
    source: str = "baseline"

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "label_names", tuple(self.label_names))
        if vectors.ndim != 2 or vectors.shape[0] == 0:
            raise DataError(f"embeddings must be a nonempty N x D array, got shape {vectors.shape}")
        if labels.shape != (vectors.shape[0],):
            raise DataError(f"{vectors.shape[0]} vectors but {labels.size} labels")
        if labels.min() < 0 or labels.max() >= len(self.label_names):
            raise DataError(f"labels must index the {len(self.label_names)} label names")

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]

    def class_counts(self):
        return np.bincount(self.labels, minlength=len(self.label_names))

    def subset(self, mask):
        return LabelledEmbeddings(self.vectors[mask], self.labels[mask], self.label_names, self.source)


def top_classes(labels, k, n_classes=None):
    """The k most frequent labels; equal counts go to the lower label."""
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=n_classes or 0)
    present = np.flatnonzero(counts)
    ranked = sorted(present, key=lambda c: (-counts[c], c))
    return [int(c) for c in ranked[:k]]


def filter_top(emb: LabelledEmbeddings, k) -> LabelledEmbeddings:
    keep = top_classes(emb.labels, k, len(emb.label_names))
    return emb.subset(np.isin(emb.labels, keep))


def collect_embeddings(graphs, model, source="baseline") -> LabelledEmbeddings:
    """Final object embedding of every node of every graph, labelled by category."""
    vectors, labels = [], []
    for graph in graphs:
        obj, _, _ = embed_graph(graph, model.gcn)
        vectors.append(obj.value)
        labels.extend(graph.node_categories)
    logger.info("collected %d object embeddings from %d graphs", len(labels), len(graphs))
    return LabelledEmbeddings(np.vstack(vectors), np.array(labels), model.vocab.object_categories, source)


def collect_predicate_embeddings(graphs, model, source="baseline") -> LabelledEmbeddings:
    """Final predicate embedding of every edge, labelled by predicate."""
    vectors, labels = [], []
    for graph in graphs:
        if not graph.num_edges:
            continue
        _, pred, _ = embed_graph(graph, model.gcn)
        vectors.append(pred.value)
        labels.extend(t.predicate for t in graph.edges)
    if not vectors:
        raise DataError("no edges to collect predicate embeddings from")
    return LabelledEmbeddings(np.vstack(vectors), np.array(labels), model.vocab.predicates, source)
