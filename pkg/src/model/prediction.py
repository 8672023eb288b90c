"""
Prediction heads and the layout losses.

Object heads map a D-vector to a box (logistic-squashed centre/size) and a
box-aligned mask grid. Triplet heads map a 3D triplet embedding
(subject, predicate, object) to a 3-class canvas mask and a superbox.

Two layers of API: plain numpy functions on single items (used by
evaluation and tests) and tape functions on stacked rows (used by training).
Both share the same forward arithmetic.
"""
import logging
from dataclasses import dataclass
from typing import Dict

import numpy as np

from src.core.errors import ConfigError, DataError
from src.core.geometry import TRIPLET_ALPHABET, Box, MaskGrid, resample_mask, sample_box_mask, union_box
from src.core.rng import derive_rng
from src.model import autodiff as ad
from src.model.gcn import uniform_init

logger = logging.getLogger(__name__)

BOX_EPS = 1e-4
TRIPLET_CLASSES = 3
HEAD_FIELDS = ("box_w", "box_b", "mask_w", "mask_b", "tmask_w", "tmask_b", "superbox_w", "superbox_b")


@dataclass(frozen=True)
class HeadConfig:
    object_mask_side: int = 16
    triplet_mask_side: int = 32
    init_scale: float = 0.05

    def validate(self):
        if self.object_mask_side < 1 or self.triplet_mask_side < 1:
            raise ConfigError("mask sides must be >= 1")
        if self.init_scale < 0:
            raise ConfigError(f"init_scale must be >= 0, got {self.init_scale}")
        return self

    def to_dict(self):
        return {"object_mask_side": self.object_mask_side, "triplet_mask_side": self.triplet_mask_side,
                "init_scale": self.init_scale}


@dataclass(frozen=True)
class HeadParams:
    box_w: np.ndarray
    box_b: np.ndarray
    mask_w: np.ndarray
    mask_b: np.ndarray
    tmask_w: np.ndarray
    tmask_b: np.ndarray
    superbox_w: np.ndarray
    superbox_b: np.ndarray

    def named_arrays(self) -> Dict[str, np.ndarray]:
        return {f"head.{name}": getattr(self, name) for name in HEAD_FIELDS}

    @classmethod
    def from_named(cls, arrays):
        return cls(**{name: arrays[f"head.{name}"] for name in HEAD_FIELDS})

    @property
    def object_mask_side(self):
        return int(round(np.sqrt(self.mask_b.shape[0])))

    @property
    def triplet_mask_side(self):
        return int(round(np.sqrt(self.tmask_b.shape[0] // TRIPLET_CLASSES)))


@dataclass(frozen=True)
class LossWeights:
    w_box: float = 1.0
    w_mask: float = 1.0
    w_tmask: float = 1.0
    w_superbox: float = 1.0

    def validate(self):
        for name in ("w_box", "w_mask", "w_tmask", "w_superbox"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be a finite value >= 0, got {value}")
        return self

    def to_dict(self):
        return {"w_box": self.w_box, "w_mask": self.w_mask, "w_tmask": self.w_tmask, "w_superbox": self.w_superbox}


@dataclass(frozen=True)
class LayoutPrediction:
    """
    boxes (n, 4) corner coordinates; masks (n, M_o, M_o) foreground
    probabilities; triplet_masks (E, M_t, M_t, 3) class probabilities;
    superboxes (E, 4).
    """

    boxes: np.ndarray
    masks: np.ndarray
    triplet_masks: np.ndarray
    superboxes: np.ndarray

    @property
    def num_objects(self):
        return self.boxes.shape[0]

    @property
    def num_edges(self):
        return self.superboxes.shape[0]

    def box(self, i) -> Box:
        return Box(*self.boxes[i])

    def superbox(self, k) -> Box:
        return Box(*self.superboxes[k])

    def triplet_labels(self, k) -> MaskGrid:
        """Argmax rendering of one triplet mask."""
        probs = self.triplet_masks[k]
        return MaskGrid(probs.shape[0], np.argmax(probs, axis=-1), TRIPLET_ALPHABET)


def head_shapes(cfg: HeadConfig, embed_dim):
    d, mo, mt = embed_dim, cfg.object_mask_side, cfg.triplet_mask_side
    return {
        "head.box_w": (d, 4),
        "head.box_b": (4,),
        "head.mask_w": (d, mo * mo),
        "head.mask_b": (mo * mo,),
        "head.tmask_w": (3 * d, mt * mt * TRIPLET_CLASSES),
        "head.tmask_b": (mt * mt * TRIPLET_CLASSES,),
        "head.superbox_w": (3 * d, 4),
        "head.superbox_b": (4,),
    }


def init_heads(cfg: HeadConfig, embed_dim, seed) -> HeadParams:
    cfg.validate()
    arrays = uniform_init(derive_rng(seed, "init", "head"), head_shapes(cfg, embed_dim), cfg.init_scale)
    return HeadParams.from_named(arrays)


# ---------------------------------------------------------------- tape heads

def box_rows(x, w, b):
    """Rows of raw (cx, cy, w, h) to valid corner boxes."""
    corners = ad.centre_size_to_corners(ad.sigmoid(ad.affine(x, w, b)))
    return ad.repair_boxes(ad.clip(corners, 0.0, 1.0), BOX_EPS)


def mask_rows(x, w, b):
    return ad.sigmoid(ad.affine(x, w, b))


def triplet_mask_rows(t, w, b):
    return ad.softmax_groups(ad.affine(t, w, b), TRIPLET_CLASSES)


def triplet_rows(obj, pred, s_idx, o_idx):
    """Stacked triplet embeddings, one row per edge."""
    return ad.concat_cols([ad.gather_rows(obj, s_idx), pred, ad.gather_rows(obj, o_idx)])


def head_vars(tape, head: HeadParams):
    return {name: tape.param(name, arr) for name, arr in head.named_arrays().items()}


# ---------------------------------------------------------------- single items

def _single(fn, vec, *arrays):
    tape = ad.Tape()
    x = tape.constant(np.atleast_2d(np.asarray(vec, dtype=np.float64)))
    return fn(x, *(tape.constant(a) for a in arrays)).value[0]


def triplet_embed(v_s, v_p, v_o):
    return np.concatenate([np.ravel(v_s), np.ravel(v_p), np.ravel(v_o)]).astype(np.float64)


def predict_box(v, head: HeadParams) -> Box:
    return Box(*_single(box_rows, v, head.box_w, head.box_b))


def predict_mask(v, head: HeadParams):
    side = head.object_mask_side
    return _single(mask_rows, v, head.mask_w, head.mask_b).reshape(side, side)


def predict_triplet_mask(t, head: HeadParams):
    """(M_t, M_t, 3) per-cell probabilities over background, subject, object."""
    side = head.triplet_mask_side
    return _single(triplet_mask_rows, t, head.tmask_w, head.tmask_b).reshape(side, side, TRIPLET_CLASSES)


def predict_superbox(t, head: HeadParams) -> Box:
    return Box(*_single(box_rows, t, head.superbox_w, head.superbox_b))


def gt_triplet_mask(s_box: Box, s_mask: MaskGrid, o_box: Box, o_mask: MaskGrid, side) -> MaskGrid:
    """Canvas-frame labels: subject 1, then object 2 on top, background 0."""
    labels = np.zeros((side, side), dtype=np.uint8)
    labels[sample_box_mask(s_box.as_tuple(), s_mask.cells, side)] = 1
    labels[sample_box_mask(o_box.as_tuple(), o_mask.cells, side)] = 2
    return MaskGrid(side, labels, TRIPLET_ALPHABET)


# ---------------------------------------------------------------- losses

def _coords(b):
    return b.as_array() if isinstance(b, Box) else np.asarray(b, dtype=np.float64).reshape(4)


def loss_box(pred, gt):
    d = _coords(pred) - _coords(gt)
    return float(np.mean(d * d))


def loss_mask(pred_probs, gt: MaskGrid):
    """Mean binary cross-entropy over cells."""
    probs = np.asarray(pred_probs, dtype=np.float64)
    if probs.size != gt.cells.size:
        raise DataError(f"mask prediction has {probs.size} cells, target has {gt.cells.size}")
    p = np.clip(probs.ravel(), ad.PROB_EPS, 1.0 - ad.PROB_EPS)
    t = gt.cells.ravel().astype(np.float64)
    return float(-np.mean(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)))


def loss_triplet_mask(pred_probs, gt: MaskGrid):
    """Mean categorical cross-entropy over cells."""
    probs = np.asarray(pred_probs, dtype=np.float64)
    cells = gt.cells.size
    if probs.size != cells * TRIPLET_CLASSES:
        raise DataError(f"triplet mask prediction has shape {probs.shape}, target has {cells} cells")
    probs = probs.reshape(cells, TRIPLET_CLASSES)
    picked = probs[np.arange(cells), gt.cells.ravel().astype(np.int64)]
    return float(-np.mean(np.log(np.clip(picked, ad.PROB_EPS, 1.0 - ad.PROB_EPS))))


def loss_superbox(pred, gt_s: Box, gt_o: Box):
    """Squared Euclidean distance to the union of the two ground-truth boxes."""
    d = _coords(pred) - union_box(gt_s, gt_o).as_array()
    return float(np.sum(d * d))


def _check_alignment(pred: LayoutPrediction, scene, graph):
    if pred.num_objects != len(scene.objects) or graph.num_nodes != len(scene.objects):
        raise DataError(f"prediction has {pred.num_objects} objects, graph {graph.num_nodes}, "
                        f"scene {len(scene.objects)}")
    if pred.num_edges != graph.num_edges:
        raise DataError(f"prediction has {pred.num_edges} triplets, graph has {graph.num_edges} edges")


def total_loss(pred: LayoutPrediction, scene, graph, w: LossWeights):
    """Weighted sum of the four per-scene loss means; triplet terms are 0 without edges."""
    _check_alignment(pred, scene, graph)
    mask_side = pred.masks.shape[1]
    tmask_side = pred.triplet_masks.shape[1] if pred.num_edges else 0
    boxes = [loss_box(pred.boxes[i], obj.box) for i, obj in enumerate(scene.objects)]
    masks = [loss_mask(pred.masks[i], _mask_target(obj.mask, mask_side)) for i, obj in enumerate(scene.objects)]
    total = w.w_box * float(np.mean(boxes)) + w.w_mask * float(np.mean(masks))
    if graph.num_edges:
        tmask, sbox = [], []
        for k, t in enumerate(graph.edges):
            s, o = scene.objects[t.subject], scene.objects[t.object]
            tmask.append(loss_triplet_mask(pred.triplet_masks[k],
                                           gt_triplet_mask(s.box, s.mask, o.box, o.mask, tmask_side)))
            sbox.append(loss_superbox(pred.superboxes[k], s.box, o.box))
        total += w.w_tmask * float(np.mean(tmask)) + w.w_superbox * float(np.mean(sbox))
    return total


def _mask_target(mask: MaskGrid, side):
    if mask.side == side:
        return mask
    return MaskGrid(side, resample_mask(mask.cells, side))


# ---------------------------------------------------------------- training targets

@dataclass(frozen=True)
class LayoutTargets:
    """Stacked supervision for one scene or a batch of scenes."""

    boxes: np.ndarray          # (n, 4)
    masks: np.ndarray          # (n, M_o * M_o)
    triplet_labels: np.ndarray  # (E, M_t * M_t)
    superboxes: np.ndarray     # (E, 4)

    @classmethod
    def concat(cls, parts):
        return cls(*(np.concatenate([getattr(p, f) for p in parts], axis=0)
                     for f in ("boxes", "masks", "triplet_labels", "superboxes")))


def build_targets(scene, graph, cfg: HeadConfig) -> LayoutTargets:
    if graph.num_nodes != len(scene.objects):
        raise DataError(f"graph has {graph.num_nodes} nodes, scene has {len(scene.objects)} objects")
    mo, mt = cfg.object_mask_side, cfg.triplet_mask_side
    boxes = scene.box_array()
    masks = np.array([_mask_target(obj.mask, mo).cells.ravel() for obj in scene.objects], dtype=np.float64)
    labels = np.zeros((graph.num_edges, mt * mt), dtype=np.int64)
    supers = np.zeros((graph.num_edges, 4), dtype=np.float64)
    for k, t in enumerate(graph.edges):
        s, o = scene.objects[t.subject], scene.objects[t.object]
        labels[k] = gt_triplet_mask(s.box, s.mask, o.box, o.mask, mt).cells.ravel()
        supers[k] = union_box(s.box, o.box).as_array()
    return LayoutTargets(boxes, masks.reshape(len(scene.objects), mo * mo), labels, supers)


def weighted_loss(outputs, targets: LayoutTargets, weights: LossWeights, node_weights, edge_weights):
    """
    Scalar loss on the tape. node_weights/edge_weights are per-row factors
    (1 / (rows in scene * scenes in batch)) turning row sums into the mean
    over scenes of per-scene means. Terms with zero weight are not recorded.
    Returns the loss Var and a dict of term Vars.
    """
    terms = {}
    if weights.w_box > 0:
        rows = ad.squared_error_rows(outputs["boxes"], targets.boxes, reduce="mean")
        terms["box"] = ad.weighted_sum(rows, weights.w_box * node_weights)
    if weights.w_mask > 0:
        rows = ad.bce_rows(outputs["masks"], targets.masks)
        terms["mask"] = ad.weighted_sum(rows, weights.w_mask * node_weights)
    if len(edge_weights):
        if weights.w_tmask > 0:
            rows = ad.categorical_ce_rows(outputs["triplet_masks"], targets.triplet_labels)
            terms["triplet_mask"] = ad.weighted_sum(rows, weights.w_tmask * edge_weights)
        if weights.w_superbox > 0:
            rows = ad.squared_error_rows(outputs["superboxes"], targets.superboxes, reduce="sum")
            terms["superbox"] = ad.weighted_sum(rows, weights.w_superbox * edge_weights)
    if not terms:
        return None, terms
    return ad.add(*terms.values()), terms
