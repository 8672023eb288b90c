"""
Geometry primitives on the unit canvas.
Coordinates are normalized to [0, 1], origin top-left, y growing downward.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from src.core.errors import GeometryError

BINARY_ALPHABET = (0, 1)
TRIPLET_ALPHABET = (0, 1, 2)  # background, subject, object


@dataclass(frozen=True)
class Box:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        for name in ("x0", "y0", "x1", "y1"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (0.0 <= self.x0 < self.x1 <= 1.0 and 0.0 <= self.y0 < self.y1 <= 1.0):
            raise GeometryError(f"invalid box {self.as_tuple()}: need 0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1")

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x0, self.y0, self.x1, self.y1)

    def as_array(self):
        return np.array(self.as_tuple(), dtype=np.float64)

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    @property
    def centroid(self):
        return ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)

    @property
    def area(self):
        return box_area(self)


def box_area(b: Box) -> float:
    return (b.x1 - b.x0) * (b.y1 - b.y0)


def box_iou(a: Box, b: Box) -> float:
    """Intersection over union; 0 for disjoint boxes."""
    iw = min(a.x1, b.x1) - max(a.x0, b.x0)
    ih = min(a.y1, b.y1) - max(a.y0, b.y0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = box_area(a) + box_area(b) - inter
    return min(1.0, inter / union)


def union_box(a: Box, b: Box) -> Box:
    """Tight box around both inputs (the triplet superbox)."""
    return Box(min(a.x0, b.x0), min(a.y0, b.y0), max(a.x1, b.x1), max(a.y1, b.y1))


def strictly_contains(outer: Box, inner: Box) -> bool:
    return outer.x0 < inner.x0 and outer.y0 < inner.y0 and outer.x1 > inner.x1 and outer.y1 > inner.y1


def boxes_iou(pred, target):
    """Row-wise IoU of two (n, 4) coordinate arrays."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1, 4)
    target = np.asarray(target, dtype=np.float64).reshape(-1, 4)
    iw = np.minimum(pred[:, 2], target[:, 2]) - np.maximum(pred[:, 0], target[:, 0])
    ih = np.minimum(pred[:, 3], target[:, 3]) - np.maximum(pred[:, 1], target[:, 1])
    inter = np.where((iw > 0) & (ih > 0), iw * ih, 0.0)
    area_p = (pred[:, 2] - pred[:, 0]) * (pred[:, 3] - pred[:, 1])
    area_t = (target[:, 2] - target[:, 0]) * (target[:, 3] - target[:, 1])
    union = area_p + area_t - inter
    return np.minimum(1.0, np.divide(inter, union, out=np.zeros_like(inter), where=union > 0))


@dataclass(frozen=True)
class MaskGrid:
    """Square grid of labels; binary masks or triplet label masks."""

    side: int
    cells: np.ndarray
    alphabet: Tuple[int, ...] = BINARY_ALPHABET

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if self.side < 1:
            raise GeometryError(f"mask side must be >= 1, got {self.side}")
        if cells.size != self.side * self.side:
            raise GeometryError(f"mask of side {self.side} needs {self.side * self.side} cells, got {cells.size}")
        cells = cells.reshape(self.side, self.side).astype(np.uint8)
        if not np.isin(cells, self.alphabet).all():
            raise GeometryError(f"mask values must be in {self.alphabet}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @property
    def foreground_count(self):
        return int(np.count_nonzero(self.cells))

    def to_dict(self):
        return {"side": self.side, "cells": self.cells.ravel().tolist()}

    def __eq__(self, other):
        if not isinstance(other, MaskGrid):
            return NotImplemented
        return self.side == other.side and self.alphabet == other.alphabet and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.side, self.alphabet, self.cells.tobytes()))


def full_mask(side):
    return MaskGrid(side, np.ones((side, side), dtype=np.uint8))


def ellipse_mask(side):
    """Ellipse inscribed in the grid, by cell-centre membership."""
    centres = (np.arange(side) + 0.5) / side - 0.5
    yy, xx = np.meshgrid(centres, centres, indexing="ij")
    return MaskGrid(side, ((xx * xx + yy * yy) <= 0.25).astype(np.uint8))


def cell_centres(resolution):
    return (np.arange(resolution) + 0.5) / resolution


def sample_box_mask(box_coords, mask_cells, resolution):
    """
    Rasterize a box-aligned mask onto a resolution x resolution canvas grid.
    A canvas cell is set when its centre lies inside the box and the mask
    cell under that centre is foreground.
    """
    x0, y0, x1, y1 = (float(v) for v in box_coords)
    mask_cells = np.asarray(mask_cells)
    side = mask_cells.shape[0]
    centres = cell_centres(resolution)
    in_x = (centres >= x0) & (centres < x1)
    in_y = (centres >= y0) & (centres < y1)
    out = np.zeros((resolution, resolution), dtype=bool)
    if not in_x.any() or not in_y.any() or x1 <= x0 or y1 <= y0:
        return out
    cols = np.clip(((centres[in_x] - x0) / (x1 - x0) * side).astype(np.int64), 0, side - 1)
    rows = np.clip(((centres[in_y] - y0) / (y1 - y0) * side).astype(np.int64), 0, side - 1)
    out[np.ix_(in_y, in_x)] = mask_cells[np.ix_(rows, cols)] > 0
    return out


def resample_mask(mask_cells, side):
    """Nearest cell-centre resampling of a square mask to a new side."""
    mask_cells = np.asarray(mask_cells)
    src = mask_cells.shape[0]
    idx = np.clip((cell_centres(side) * src).astype(np.int64), 0, src - 1)
    return mask_cells[np.ix_(idx, idx)]
