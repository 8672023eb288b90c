"""
Scene and scene graph value types.
"""
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from src.core.errors import DataError
from src.core.geometry import Box, MaskGrid
from src.core.vocab import NUM_BASE_PREDICATES

MIN_OBJECTS = 3
MAX_OBJECTS = 8
MIN_AREA = 0.02


@dataclass(frozen=True)
class ObjectInstance:
    category: int
    box: Box
    mask: MaskGrid

    def __post_init__(self):
        if self.category < 0:
            raise DataError(f"category index must be >= 0, got {self.category}")
        if self.mask.foreground_count < 1:
            raise DataError("object mask needs at least one foreground cell")


@dataclass(frozen=True)
class Scene:
    objects: Tuple[ObjectInstance, ...]

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))

    def __len__(self):
        return len(self.objects)

    @property
    def categories(self):
        return [obj.category for obj in self.objects]

    def box_array(self):
        return np.array([obj.box.as_tuple() for obj in self.objects], dtype=np.float64).reshape(-1, 4)

    def check(self, n_categories=None, min_objects=MIN_OBJECTS, max_objects=MAX_OBJECTS, min_area=MIN_AREA):
        """Raise DataError unless the count/area/category invariants hold."""
        if not min_objects <= len(self.objects) <= max_objects:
            raise DataError(f"scene has {len(self.objects)} objects, expected {min_objects}-{max_objects}")
        for i, obj in enumerate(self.objects):
            if obj.box.area < min_area:
                raise DataError(f"object {i} area {obj.box.area:.4f} below {min_area}")
            if n_categories is not None and obj.category >= n_categories:
                raise DataError(f"object {i} category {obj.category} outside vocabulary of {n_categories}")


@dataclass(frozen=True)
class Triplet:
    subject: int
    predicate: int
    object: int

    def __post_init__(self):
        if self.subject == self.object:
            raise DataError(f"triplet subject and object must differ, got node {self.subject}")


@dataclass(frozen=True)
class SceneGraph:
    node_categories: Tuple[int, ...]
    edges: Tuple[Triplet, ...] = ()
    augmented_flags: Tuple[bool, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "node_categories", tuple(int(c) for c in self.node_categories))
        object.__setattr__(self, "edges", tuple(self.edges))
        flags = tuple(bool(f) for f in self.augmented_flags) or (False,) * len(self.edges)
        if len(flags) != len(self.edges):
            raise DataError(f"{len(self.edges)} edges but {len(flags)} augmentation flags")
        object.__setattr__(self, "augmented_flags", flags)
        n = len(self.node_categories)
        for t in self.edges:
            if not (0 <= t.subject < n and 0 <= t.object < n):
                raise DataError(f"edge {t} references a node outside 0..{n - 1}")

    @property
    def num_nodes(self):
        return len(self.node_categories)

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def base_edge_count(self):
        return sum(1 for f in self.augmented_flags if not f)

    @property
    def augmented_edge_count(self):
        return sum(1 for f in self.augmented_flags if f)

    def edge_arrays(self):
        """(subjects, predicates, objects) as int64 arrays."""
        s = np.array([t.subject for t in self.edges], dtype=np.int64)
        p = np.array([t.predicate for t in self.edges], dtype=np.int64)
        o = np.array([t.object for t in self.edges], dtype=np.int64)
        return s, p, o

    def base_only(self):
        kept = [(t, f) for t, f in zip(self.edges, self.augmented_flags) if not f]
        return SceneGraph(self.node_categories, tuple(t for t, _ in kept), tuple(f for _, f in kept))

    def check(self, n_predicates=None):
        """Raise DataError unless base edges are unique per ordered pair and every node is covered."""
        seen = set()
        covered = set()
        for t, aug in zip(self.edges, self.augmented_flags):
            if n_predicates is not None and not 0 <= t.predicate < n_predicates:
                raise DataError(f"edge {t} predicate outside vocabulary")
            if not aug:
                if t.predicate >= NUM_BASE_PREDICATES:
                    raise DataError(f"edge {t} uses a depth predicate but is not flagged as augmented")
                pair = (t.subject, t.object)
                if pair in seen:
                    raise DataError(f"duplicate base edge for ordered pair {pair}")
                seen.add(pair)
            covered.update((t.subject, t.object))
        missing = sorted(set(range(self.num_nodes)) - covered)
        if missing:
            raise DataError(f"nodes {missing} appear in no edge")


def batch_graphs(graphs):
    """
    Disjoint union of scene graphs.
    Returns the merged graph plus per-graph node and edge offsets.
    """
    categories, edges, flags = [], [], []
    node_offsets, edge_offsets = [], []
    for g in graphs:
        node_offsets.append(len(categories))
        edge_offsets.append(len(edges))
        base = len(categories)
        categories.extend(g.node_categories)
        edges.extend(Triplet(t.subject + base, t.predicate, t.object + base) for t in g.edges)
        flags.extend(g.augmented_flags)
    merged = SceneGraph(tuple(categories), tuple(edges), tuple(flags))
    return merged, node_offsets, edge_offsets
