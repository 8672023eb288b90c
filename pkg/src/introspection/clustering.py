"""
Class-mean embeddings, their distance matrix and an average-linkage merge tree.
"""
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from src.core.errors import DataError
from src.introspection.embeddings import LabelledEmbeddings, top_classes

logger = logging.getLogger(__name__)


def mean_embeddings(emb: LabelledEmbeddings, top_k):
    """Mean vector per class name for the top_k most frequent classes, in label order."""
    if top_k < 1:
        raise DataError(f"top_k must be >= 1, got {top_k}")
    keep = sorted(top_classes(emb.labels, top_k, len(emb.label_names)))
    return {emb.label_names[c]: emb.vectors[emb.labels == c].mean(axis=0) for c in keep}


def distance_matrix(means):
    """Pairwise Euclidean distances between the mean vectors, in key order."""
    vectors = np.array(list(means.values()), dtype=np.float64)
    if vectors.shape[0] < 2:
        raise DataError(f"distance matrix needs >= 2 means, got {vectors.shape[0]}")
    diff = vectors[:, None, :] - vectors[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True)
class ClusterTree:
    """
    merges[m] = (i, j, height) joins clusters i < j into cluster K + m;
    leaves are 0..K-1.
    """

    merges: Tuple[Tuple[int, int, float], ...]
    leaf_order: Tuple[int, ...]
    labels: Tuple[str, ...] = ()

    @property
    def n_leaves(self):
        return len(self.merges) + 1

    @property
    def heights(self):
        return [m[2] for m in self.merges]

    def to_dict(self):
        return {
            "merges": [[i, j, h] for i, j, h in self.merges],
            "leaf_order": list(self.leaf_order),
            "labels": list(self.labels),
        }


def agglomerate(dist, labels=()) -> ClusterTree:
    """
    Average-linkage clustering. The closest pair of active clusters merges
    first; equal distances go to the pair with the smallest cluster ids.
    Linkage is kept as sums of leaf distances so averages are never
    re-averaged.
    """
    dist = np.asarray(dist, dtype=np.float64)
    k = dist.shape[0]
    if dist.ndim != 2 or dist.shape[1] != k:
        raise DataError(f"distance matrix must be square, got shape {dist.shape}")
    if k < 2:
        raise DataError(f"clustering needs >= 2 points, got {k}")

    sums = {}
    for i in range(k):
        for j in range(i + 1, k):
            sums[(i, j)] = float(dist[i, j])
    size = {i: 1 for i in range(k)}
    children = {}
    active = list(range(k))
    merges = []
    for m in range(k - 1):
        best = None
        for x in range(len(active)):
            for y in range(x + 1, len(active)):
                a, b = active[x], active[y]
                avg = sums[(a, b)] / (size[a] * size[b])
                if best is None or avg < best[0]:
                    best = (avg, a, b)
        height, a, b = best
        new = k + m
        merges.append((a, b, height))
        children[new] = (a, b)
        size[new] = size[a] + size[b]
        active = [c for c in active if c not in (a, b)]
        for c in active:
            sums[(c, new)] = sums[_key(c, a)] + sums[_key(c, b)]
        active.append(new)

    return ClusterTree(tuple(merges), tuple(_leaf_order(k + len(merges) - 1, children, size)), tuple(labels))


def _key(a, b):
    return (a, b) if a < b else (b, a)


def _leaf_order(root, children, size):
    """Smaller subtree first; equal sizes keep the lower cluster id first."""
    order, stack = [], [root]
    while stack:
        node = stack.pop()
        if node not in children:
            order.append(node)
            continue
        first, second = sorted(children[node], key=lambda c: (size[c], c))
        stack.append(second)
        stack.append(first)
    return order
