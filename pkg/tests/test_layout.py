import numpy as np
import pytest
from PIL import Image

from src.core.color_palettes import create_palette
from src.core.errors import ConfigError
from src.model.prediction import LayoutPrediction
from src.training.layout import BACKGROUND, compose_layout, paint_order, predict_layout, render_layout_png


def _prediction(boxes, masks):
    boxes = np.asarray(boxes, dtype=np.float64)
    return LayoutPrediction(boxes, np.asarray(masks, dtype=np.float64), np.zeros((0, 2, 2, 3)), np.zeros((0, 4)))


def test_paint_order_largest_first_with_stable_ties():
    boxes = [[0.0, 0.0, 0.5, 0.5], [0.0, 0.0, 1.0, 1.0], [0.5, 0.5, 1.0, 1.0]]
    assert paint_order(boxes).tolist() == [1, 0, 2]


def test_smaller_object_painted_on_top():
    pred = _prediction([[0.25, 0.25, 0.75, 0.75], [0.0, 0.0, 1.0, 1.0]], np.ones((2, 2, 2)))
    canvas = compose_layout(pred, 4)
    expected = np.ones((4, 4), dtype=np.int64)
    expected[1:3, 1:3] = 0
    np.testing.assert_array_equal(canvas, expected)


def test_uncovered_cells_are_background():
    pred = _prediction([[0.0, 0.0, 0.5, 0.5]], np.ones((1, 2, 2)))
    canvas = compose_layout(pred, 4, labels=[7])
    assert (canvas[:2, :2] == 7).all()
    assert (canvas[2:, :] == BACKGROUND).all()
    assert (canvas[:, 2:] == BACKGROUND).all()


def test_mask_threshold_applies():
    masks = np.array([[[0.5, 0.49], [0.9, 0.1]]])
    canvas = compose_layout(_prediction([[0.0, 0.0, 1.0, 1.0]], masks), 2)
    np.testing.assert_array_equal(canvas, [[0, BACKGROUND], [0, BACKGROUND]])


def test_resolution_must_be_positive():
    with pytest.raises(ConfigError):
        compose_layout(_prediction([[0.0, 0.0, 1.0, 1.0]], np.ones((1, 2, 2))), 0)


def test_predicted_layout_has_graph_shape(graphs, tiny_model):
    pred = predict_layout(graphs[0], tiny_model)
    assert pred.boxes.shape == (graphs[0].num_nodes, 4)
    assert pred.masks.shape == (graphs[0].num_nodes, 4, 4)
    assert pred.triplet_masks.shape == (graphs[0].num_edges, 6, 6, 3)
    assert np.all(pred.boxes[:, 2] > pred.boxes[:, 0])
    canvas = compose_layout(pred, 8)
    assert canvas.min() >= BACKGROUND and canvas.max() < graphs[0].num_nodes


def test_png_uses_palette_colours(tmp_path, vocab):
    grid = np.array([[0, BACKGROUND], [2, 0]])
    path = render_layout_png(grid, vocab.object_categories, tmp_path / "out" / "layout.png", scale=3)
    img = np.asarray(Image.open(path).convert("RGB"))
    assert img.shape == (6, 6, 3)
    palette = create_palette("naturalistic")
    assert tuple(img[0, 0]) == palette.category_color(0, "sky")
    assert tuple(img[0, 5]) == palette.background
    assert tuple(img[5, 0]) == palette.category_color(2, "tree")


@pytest.mark.parametrize("name", ["naturalistic", "vibrant", "monochrome", "classic"])
def test_palette_table_has_background_last(name):
    palette = create_palette(name)
    table = palette.lookup_table(("sky", "tree", "thing"))
    assert len(table) == 4
    assert table[-1] == palette.background
    assert all(0 <= c <= 255 for rgb in table for c in rgb)


def test_unknown_palette_falls_back_to_naturalistic():
    assert type(create_palette("sepia")) is type(create_palette("naturalistic"))


def test_monochrome_palette_is_grey():
    for r, g, b in create_palette("monochrome").lookup_table(("sky", "a", "b", "c")):
        assert r == g == b
