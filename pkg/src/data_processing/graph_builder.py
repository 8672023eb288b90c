"""
Scene Graph Builder
Geometric predicates from 2D box layout, plus depth-order augmentation
from a linear-perspective cue (the lower bottom edge is nearer the viewer).
"""
import logging
from dataclasses import dataclass
from typing import Optional

from src.core.errors import ConfigError, DataError
from src.core.geometry import Box, strictly_contains
from src.core.rng import derive_rng
from src.core.scene_types import Scene, SceneGraph, Triplet
from src.core.vocab import (ABOVE, BEHIND, BELOW, IN_FRONT_OF, INSIDE, LEFT_OF, NUM_BASE_PREDICATES,
                            RIGHT_OF, SURROUNDING)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AugmentConfig:
    enabled: bool = False
    overlap_threshold: float = 0.2
    max_augmented_per_scene: Optional[int] = None  # None: twice the base edge count

    def validate(self):
        if not 0.0 <= self.overlap_threshold <= 1.0:
            raise ConfigError(f"overlap_threshold must be in [0, 1], got {self.overlap_threshold}")
        if self.max_augmented_per_scene is not None and self.max_augmented_per_scene < 0:
            raise ConfigError("max_augmented_per_scene must be >= 0")
        return self

    def cap_for(self, base_edges):
        if self.max_augmented_per_scene is None:
            return 2 * base_edges
        return self.max_augmented_per_scene


def assign_predicate(a: Box, b: Box) -> int:
    """
    The base predicate p with "a p b".
    Containment is checked first; otherwise the centroid delta from a to b
    picks a quadrant (half-open at the diagonals). Coincident centroids
    without containment resolve to "left of".
    """
    if strictly_contains(a, b):
        return SURROUNDING
    if strictly_contains(b, a):
        return INSIDE
    ax, ay = a.centroid
    bx, by = b.centroid
    dx, dy = bx - ax, by - ay
    if dx == 0.0 and dy == 0.0:
        return LEFT_OF
    if dx > 0 and -dx <= dy < dx:
        return LEFT_OF
    if dy >= dx and dy > -dx:
        return ABOVE
    if dx < 0 and dx < dy <= -dx:
        return RIGHT_OF
    return BELOW


def horizontal_overlap_ratio(a: Box, b: Box) -> float:
    """Overlap of the x-intervals divided by the shorter interval."""
    overlap = min(a.x1, b.x1) - max(a.x0, b.x0)
    if overlap <= 0.0:
        return 0.0
    return overlap / min(a.width, b.width)


def depth_order(a: Box, b: Box, cfg: AugmentConfig):
    """
    +1 when a is in front of b, -1 when behind, 0 when no depth order
    (too little horizontal overlap or equal bottom edges).
    """
    ratio = horizontal_overlap_ratio(a, b)
    if ratio <= 0.0 or ratio < cfg.overlap_threshold:
        return 0
    if a.y1 > b.y1:
        return 1
    if a.y1 < b.y1:
        return -1
    return 0


def relation_holds(p: int, a: Box, b: Box, cfg: AugmentConfig) -> bool:
    """True iff the rule that generates p also generates it for (a, b)."""
    if 0 <= p < NUM_BASE_PREDICATES:
        return assign_predicate(a, b) == p
    if p == IN_FRONT_OF:
        return depth_order(a, b, cfg) == 1
    if p == BEHIND:
        return depth_order(a, b, cfg) == -1
    raise DataError(f"unknown predicate index {p}")


def build_scene_graph(scene: Scene, rng, edges_per_node=2) -> SceneGraph:
    """
    One directed base edge per sampled ordered pair: each node samples
    edges_per_node distinct partners without replacement.
    """
    n = len(scene.objects)
    if n < 2:
        raise DataError(f"scene with {n} objects cannot form edges")
    if edges_per_node < 1:
        raise ConfigError(f"edges_per_node must be >= 1, got {edges_per_node}")

    boxes = [obj.box for obj in scene.objects]
    k = min(edges_per_node, n - 1)
    seen = set()
    edges = []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        for j in rng.choice(len(others), size=k, replace=False):
            j = others[int(j)]
            if (i, j) in seen:
                continue
            seen.add((i, j))
            edges.append(Triplet(i, assign_predicate(boxes[i], boxes[j]), j))
    return SceneGraph(tuple(scene.categories), tuple(edges), (False,) * len(edges))


def augment_graph(scene: Scene, graph: SceneGraph, cfg: AugmentConfig) -> SceneGraph:
    """
    Append <nearer, in front of, farther> and <farther, behind, nearer> for
    object pairs with enough horizontal overlap, most-overlapping pairs
    first, up to the per-scene cap. Existing edges are left untouched.
    """
    if not cfg.enabled:
        return graph
    boxes = [obj.box for obj in scene.objects]
    candidates = []
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            order = depth_order(boxes[i], boxes[j], cfg)
            if order != 0:
                near, far = (i, j) if order > 0 else (j, i)
                candidates.append((-horizontal_overlap_ratio(boxes[i], boxes[j]), i, j, near, far))
    candidates.sort()

    cap = cfg.cap_for(graph.base_edge_count)
    edges = list(graph.edges)
    flags = list(graph.augmented_flags)
    added = 0
    for _, _, _, near, far in candidates:
        if added + 2 > cap:
            break
        edges.append(Triplet(near, IN_FRONT_OF, far))
        edges.append(Triplet(far, BEHIND, near))
        flags.extend((True, True))
        added += 2
    return SceneGraph(graph.node_categories, tuple(edges), tuple(flags))


def build_graphs(scenes, seed, edges_per_node, augment: AugmentConfig):
    """Graphs for a dataset; scene i uses the stream keyed by (seed, "graph", i)."""
    graphs = []
    for index, scene in enumerate(scenes):
        base = build_scene_graph(scene, derive_rng(seed, "graph", index), edges_per_node)
        graphs.append(augment_graph(scene, base, augment))
    logger.info("built %d graphs (%d base edges, %d augmented)", len(graphs),
                sum(g.base_edge_count for g in graphs), sum(g.augmented_edge_count for g in graphs))
    return graphs


def rebuild_augmentation(scene: Scene, graph: SceneGraph, cfg: AugmentConfig) -> SceneGraph:
    """Drop any augmented edges and re-apply augmentation under cfg."""
    return augment_graph(scene, graph.base_only(), cfg)
