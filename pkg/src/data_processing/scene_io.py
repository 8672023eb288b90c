"""
Scene and scene graph JSON ingestion.

Scenes file: {"categories": [...]?, "scenes": [{"objects": [{"category": "sky",
"box": [x0, y0, x1, y1], "mask": {"side": M, "cells": [0|1, ...]}?}, ...]}, ...]}

Loading applies the dataset filters: objects covering less than the minimum
area are dropped, then scenes outside the object-count range are discarded.
Both counts are reported.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

from src.core.errors import DataError, GeometryError
from src.core.geometry import Box, MaskGrid, full_mask
from src.core.scene_types import MAX_OBJECTS, MIN_AREA, MIN_OBJECTS, ObjectInstance, Scene, SceneGraph, Triplet
from src.core.storage import read_json, write_json
from src.core.vocab import Vocab

logger = logging.getLogger(__name__)

DEFAULT_MASK_SIDE = 16


@dataclass
class SceneLoadReport:
    scenes: List[Scene]
    vocab: Vocab
    dropped_objects: int = 0
    discarded_scenes: int = 0

    @property
    def kept_scenes(self):
        return len(self.scenes)


def _require(condition, field, message):
    if not condition:
        raise DataError(f"schema violation at {field}: {message}")


def _parse_box(raw, field):
    _require(isinstance(raw, list) and len(raw) == 4, field, "expected [x0, y0, x1, y1]")
    _require(all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw), field, "coordinates must be numbers")
    try:
        return Box(*raw)
    except GeometryError as exc:
        raise DataError(f"schema violation at {field}: {exc}") from exc


def _parse_mask(raw, field):
    if raw is None:
        return full_mask(DEFAULT_MASK_SIDE)
    _require(isinstance(raw, dict), field, "expected an object with side and cells")
    side = raw.get("side")
    cells = raw.get("cells")
    _require(isinstance(side, int) and side >= 1, f"{field}.side", "expected a positive integer")
    _require(isinstance(cells, list), f"{field}.cells", "expected a list")
    _require(len(cells) == side * side, f"{field}.cells", f"expected {side * side} values, got {len(cells)}")
    _require(all(c in (0, 1) and not isinstance(c, bool) for c in cells), f"{field}.cells", "values must be 0 or 1")
    _require(any(cells), f"{field}.cells", "mask needs at least one foreground cell")
    return MaskGrid(side, cells)


def _check_structure(payload):
    """Scene and object shapes, checked before any category is looked up."""
    for si, raw_scene in enumerate(payload["scenes"]):
        field = f"scenes[{si}]"
        _require(isinstance(raw_scene, dict) and isinstance(raw_scene.get("objects"), list),
                 f"{field}.objects", "expected a list")
        for oi, raw_obj in enumerate(raw_scene["objects"]):
            ofield = f"{field}.objects[{oi}]"
            _require(isinstance(raw_obj, dict), ofield, "expected an object")
            _require(isinstance(raw_obj.get("category"), str), f"{ofield}.category", "expected a category name")


def _collect_vocab(payload, vocab):
    if "categories" in payload:
        names = payload["categories"]
        _require(isinstance(names, list) and all(isinstance(n, str) for n in names), "categories", "expected a list of names")
        file_vocab = Vocab(tuple(names))
        if vocab is not None and vocab.object_categories != file_vocab.object_categories:
            raise DataError(f"file categories {list(names)} differ from expected {list(vocab.object_categories)}")
        return file_vocab
    if vocab is not None:
        return vocab
    names = []
    for scene in payload["scenes"]:
        for obj in scene["objects"]:
            if obj["category"] not in names:
                names.append(obj["category"])
    _require(names, "scenes", "no categories found")
    return Vocab(tuple(names))


def read_scenes(path, vocab: Optional[Vocab] = None, min_objects=MIN_OBJECTS,
                max_objects=MAX_OBJECTS, min_area=MIN_AREA) -> SceneLoadReport:
    """Parse, validate and filter a scenes file."""
    payload = read_json(path)
    _require(isinstance(payload, dict), "<root>", "expected an object")
    _require(isinstance(payload.get("scenes"), list), "scenes", "expected a list")
    _check_structure(payload)
    vocab = _collect_vocab(payload, vocab)

    report = SceneLoadReport([], vocab)
    for si, raw_scene in enumerate(payload["scenes"]):
        field = f"scenes[{si}]"
        objects = []
        for oi, raw_obj in enumerate(raw_scene["objects"]):
            ofield = f"{field}.objects[{oi}]"
            name = raw_obj["category"]
            _require(name in vocab.object_categories, f"{ofield}.category", f"unknown category {name!r}")
            box = _parse_box(raw_obj.get("box"), f"{ofield}.box")
            mask = _parse_mask(raw_obj.get("mask"), f"{ofield}.mask")
            if box.area < min_area:
                report.dropped_objects += 1
                continue
            objects.append(ObjectInstance(vocab.category_index(name), box, mask))
        if min_objects <= len(objects) <= max_objects:
            report.scenes.append(Scene(tuple(objects)))
        else:
            report.discarded_scenes += 1

    logger.info("loaded %d scenes from %s (%d undersized objects dropped, %d scenes discarded)",
                report.kept_scenes, path, report.dropped_objects, report.discarded_scenes)
    return report


def load_scenes(path, vocab: Optional[Vocab] = None, **filters):
    return read_scenes(path, vocab, **filters).scenes


def scenes_to_dict(scenes, vocab: Vocab):
    return {
        "categories": list(vocab.object_categories),
        "scenes": [
            {"objects": [
                {"category": vocab.object_categories[obj.category],
                 "box": list(obj.box.as_tuple()),
                 "mask": obj.mask.to_dict()}
                for obj in scene.objects
            ]}
            for scene in scenes
        ],
    }


def save_scenes(path, scenes, vocab: Vocab):
    return write_json(path, scenes_to_dict(scenes, vocab))


def graph_to_dict(graph: SceneGraph, vocab: Vocab):
    return {
        "nodes": [vocab.object_categories[c] for c in graph.node_categories],
        "edges": [
            {"s": t.subject, "p": vocab.predicates[t.predicate], "o": t.object, "aug": aug}
            for t, aug in zip(graph.edges, graph.augmented_flags)
        ],
    }


def graph_from_dict(raw, vocab: Vocab, field="graph"):
    _require(isinstance(raw, dict), field, "expected an object")
    nodes = raw.get("nodes")
    edges = raw.get("edges")
    _require(isinstance(nodes, list), f"{field}.nodes", "expected a list")
    _require(isinstance(edges, list), f"{field}.edges", "expected a list")
    categories = []
    for ni, name in enumerate(nodes):
        _require(name in vocab.object_categories, f"{field}.nodes[{ni}]", f"unknown category {name!r}")
        categories.append(vocab.category_index(name))
    triplets, flags = [], []
    for ei, edge in enumerate(edges):
        efield = f"{field}.edges[{ei}]"
        _require(isinstance(edge, dict), efield, "expected an object")
        _require(edge.get("p") in vocab.predicates, f"{efield}.p", f"unknown predicate {edge.get('p')!r}")
        for key in ("s", "o"):
            value = edge.get(key)
            _require(isinstance(value, int) and 0 <= value < len(nodes), f"{efield}.{key}", "expected a node index")
        _require(edge["s"] != edge["o"], efield, "subject and object must differ")
        triplets.append(Triplet(edge["s"], vocab.predicate_index(edge["p"]), edge["o"]))
        flags.append(bool(edge.get("aug", False)))
    return SceneGraph(tuple(categories), tuple(triplets), tuple(flags))


def save_graphs(path, graphs, vocab: Vocab):
    return write_json(path, {"graphs": [graph_to_dict(g, vocab) for g in graphs]})


def load_graphs(path, vocab: Vocab):
    payload = read_json(path)
    _require(isinstance(payload, dict) and isinstance(payload.get("graphs"), list), "graphs", "expected a list")
    return [graph_from_dict(raw, vocab, f"graphs[{i}]") for i, raw in enumerate(payload["graphs"])]
