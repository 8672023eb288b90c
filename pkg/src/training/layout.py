"""
Layout prediction from a scene graph, label-grid composition and PNG rendering.
"""
import logging

import numpy as np
from PIL import Image

from src.core.color_palettes import create_palette
from src.core.errors import ConfigError, StorageError
from src.core.geometry import sample_box_mask
from src.core.storage import ensure_parent
from src.model.network import LayoutModel, forward, to_prediction
from src.model.prediction import LayoutPrediction

logger = logging.getLogger(__name__)

BACKGROUND = -1
MASK_THRESHOLD = 0.5


def predict_layout(graph, model: LayoutModel) -> LayoutPrediction:
    """Boxes and masks per node, triplet masks and superboxes per edge, from the graph alone."""
    outputs, _ = forward(model, graph)
    return to_prediction(outputs, graph, model.head_config)


def paint_order(boxes):
    """Node indices by descending box area; ties keep index order."""
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    areas = (boxes[:, 2] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 1])
    return np.argsort(-areas, kind="stable")


def compose_layout(pred: LayoutPrediction, resolution, labels=None):
    """
    Paint each object's thresholded mask into its predicted box, largest
    first so smaller objects end up on top. Cells no object covers hold -1.
    labels maps node index to the painted value (node index by default).
    """
    if resolution < 1:
        raise ConfigError(f"canvas resolution must be >= 1, got {resolution}")
    labels = np.arange(pred.num_objects) if labels is None else np.asarray(labels, dtype=np.int64)
    canvas = np.full((resolution, resolution), BACKGROUND, dtype=np.int64)
    for i in paint_order(pred.boxes):
        cells = pred.masks[i] >= MASK_THRESHOLD
        canvas[sample_box_mask(pred.boxes[i], cells, resolution)] = labels[i]
    return canvas


def render_layout_png(grid, category_names, path, palette="naturalistic", scale=8):
    """Colour a category label grid and save it as a PNG; -1 cells get the background colour."""
    grid = np.asarray(grid, dtype=np.int64)
    colors = np.array(create_palette(palette).lookup_table(category_names), dtype=np.uint8)
    # background is the last table entry
    pixels = colors[np.where(grid == BACKGROUND, len(colors) - 1, grid)]
    height, width = grid.shape
    img = Image.fromarray(pixels)
    img = img.resize((width * scale, height * scale), Image.Resampling.NEAREST)
    path = ensure_parent(path)
    try:
        img.save(path, format="PNG")
    except OSError as exc:
        raise StorageError(path, str(exc)) from exc
    logger.debug("rendered layout %s", path)
    return path
