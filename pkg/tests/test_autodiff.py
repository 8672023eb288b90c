import numpy as np
import pytest

from src.core.errors import TapeError
from src.model import autodiff as ad


def numeric_grad(f, x, eps=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + eps
        up = f(x)
        x[idx] = old - eps
        down = f(x)
        x[idx] = old
        g[idx] = (up - down) / (2 * eps)
    return g


def grad_of(build, value):
    """Analytic and numeric gradient of a scalar built from one parameter."""
    def f(v):
        tape = ad.Tape()
        return float(build(tape.param("x", v)).value)

    tape = ad.Tape()
    build(tape.param("x", value))
    analytic = ad.backward(tape)["x"]
    return analytic, numeric_grad(f, value.copy())


def test_sum_of_params_has_unit_gradient():
    tape = ad.Tape()
    ad.sum_all(tape.param("w", np.arange(6.0).reshape(2, 3)))
    np.testing.assert_array_equal(ad.backward(tape)["w"], np.ones((2, 3)))


def test_backward_needs_scalar():
    tape = ad.Tape()
    ad.relu(tape.param("w", np.ones(3)))
    with pytest.raises(TapeError):
        ad.backward(tape)


def test_inputs_must_share_a_tape():
    a, b = ad.Tape(), ad.Tape()
    with pytest.raises(TapeError):
        ad.add(a.param("x", np.ones(2)), b.param("y", np.ones(2)))


def test_unused_parameters_get_zero_gradient():
    tape = ad.Tape()
    used = tape.param("used", np.ones(2))
    tape.param("unused", np.ones(3))
    ad.sum_all(used)
    grads = ad.backward(tape, output=tape.output)
    np.testing.assert_array_equal(grads["unused"], np.zeros(3))


def test_replay_is_bit_identical(rng):
    tape = ad.Tape()
    x = tape.param("x", rng.normal(size=(5, 4)))
    w = tape.param("w", rng.normal(size=(4, 6)))
    b = tape.param("b", rng.normal(size=6))
    h = ad.softmax_groups(ad.affine(x, w, b), 3)
    loss = ad.sum_all(ad.categorical_ce_rows(h, rng.integers(0, 3, size=(5, 2))))
    assert np.array_equal(tape.replay(), loss.value)


def test_relu_subgradient_at_zero_is_zero():
    tape = ad.Tape()
    ad.sum_all(ad.relu(tape.param("x", np.array([-1.0, 0.0, 2.0]))))
    np.testing.assert_array_equal(ad.backward(tape)["x"], [0.0, 0.0, 1.0])


def test_scatter_mean_forward_and_gradient(rng):
    index = np.array([0, 2, 0, 2, 2])
    values = rng.normal(size=(5, 3))
    tape = ad.Tape()
    out = ad.scatter_mean(tape.param("v", values), index, 4)
    np.testing.assert_allclose(out.value[0], values[[0, 2]].mean(axis=0))
    np.testing.assert_array_equal(out.value[1], np.zeros(3))
    ad.sum_all(out)
    grads = ad.backward(tape)["v"]
    np.testing.assert_array_equal(grads[:, 0], [0.5, 1 / 3, 0.5, 1 / 3, 1 / 3])


@pytest.mark.parametrize("name", ["affine_relu", "sigmoid_bce", "softmax_ce", "boxes", "gather_scatter"])
def test_primitive_gradients(name, rng):
    x0 = rng.normal(size=(4, 6))
    target = rng.uniform(size=(4, 6))
    labels = rng.integers(0, 3, size=(4, 2))
    w = rng.normal(size=(6, 4))

    def build(x):
        tape = x.tape
        if name == "affine_relu":
            h = ad.relu(ad.affine(x, tape.constant(w), tape.constant(np.full(4, 0.1))))
            return ad.sum_all(h)
        if name == "sigmoid_bce":
            return ad.weighted_sum(ad.bce_rows(ad.sigmoid(x), target), np.arange(1.0, 5.0))
        if name == "softmax_ce":
            return ad.sum_all(ad.categorical_ce_rows(ad.softmax_groups(x, 3), labels))
        if name == "boxes":
            corners = ad.centre_size_to_corners(ad.sigmoid(ad.slice_cols(x, 0, 4)))
            return ad.sum_all(ad.squared_error_rows(corners, target[:, :4], reduce="sum"))
        gathered = ad.gather_rows(x, [0, 3, 3, 1])
        pooled = ad.scatter_mean(ad.interleave_rows(gathered, gathered), [0, 1, 1, 2, 2, 2, 0, 4], 5)
        return ad.add(ad.sum_all(ad.scale(pooled, 3.0)), ad.sum_all(ad.concat_cols([x, x])))

    analytic, numeric = grad_of(build, x0)
    np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-7)


def test_softmax_groups_rows_sum_to_one(rng):
    tape = ad.Tape()
    probs = ad.softmax_groups(tape.param("x", rng.normal(size=(3, 12))), 3)
    assert probs.shape == (3, 4, 3)
    np.testing.assert_allclose(probs.value.sum(axis=-1), 1.0, atol=1e-12)


def test_repair_inflates_degenerate_boxes():
    tape = ad.Tape()
    boxes = ad.repair_boxes(tape.param("b", np.array([[0.5, 0.2, 0.5, 0.8], [1.0, 0.0, 1.0, 1.0]])), 1e-4)
    out = boxes.value
    assert np.all(out[:, 2] - out[:, 0] >= 1e-4 - 1e-15)
    assert np.all(out >= 0) and np.all(out <= 1 + 1e-12)
    np.testing.assert_array_equal(out[:, 1], [0.2, 0.0])


def test_global_norm():
    assert ad.global_norm({"a": np.array([3.0]), "b": np.array([[4.0]])}) == 5.0
