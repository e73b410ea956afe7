import numpy as np
import pytest
from scipy import signal

from sscan.autodiff import (Function, Tensor, check_gradient, concat_channels, conv2d, finite_difference_check,
                            group_bands, merge_groups, mse_loss, mul, pool_channel, pool_spatial, relu, sigmoid,
                            tensor_sum)
from sscan.errors import ShapeError


def _leaf(shape, seed=0):
    return Tensor(np.random.default_rng(seed).standard_normal(shape), requires_grad=True)


def test_conv2d_is_a_zero_padded_correlation():
    rng = np.random.default_rng(1)
    image, kernel = rng.standard_normal((7, 9)), rng.standard_normal((3, 3))
    out = conv2d(Tensor(image[None, None]), Tensor(kernel[None, None]), pad=1)
    assert out.shape == (1, 1, 7, 9)
    assert np.allclose(out.data[0, 0], signal.correlate2d(image, kernel, mode="same"))


def test_conv2d_sums_input_channels_and_adds_bias():
    rng = np.random.default_rng(2)
    x, w = rng.standard_normal((2, 3, 5, 5)), rng.standard_normal((4, 3, 1, 1))
    bias = np.arange(4.0)
    out = conv2d(Tensor(x), Tensor(w), Tensor(bias))
    expected = np.einsum("nchw,oc->nohw", x, w[:, :, 0, 0]) + bias[None, :, None, None]
    assert np.allclose(out.data, expected)


def test_conv2d_stride():
    out = conv2d(Tensor(np.ones((1, 1, 7, 7))), Tensor(np.ones((1, 1, 3, 3))), pad=1, stride=2)
    assert out.shape == (1, 1, 4, 4)
    assert out.data[0, 0, 1, 1] == 9.0
    assert out.data[0, 0, 0, 0] == 4.0


@pytest.mark.parametrize("weight_shape, message", [
    ((2, 4, 3, 3), "channel"),
    ((2, 3, 2, 3), "odd"),
])
def test_conv2d_rejects_bad_shapes(weight_shape, message):
    with pytest.raises(ShapeError, match=message):
        conv2d(Tensor(np.ones((1, 3, 5, 5))), Tensor(np.ones(weight_shape)), pad=1)


def test_conv2d_rejects_a_kernel_larger_than_the_image():
    with pytest.raises(ShapeError):
        conv2d(Tensor(np.ones((1, 1, 2, 2))), Tensor(np.ones((1, 1, 5, 5))))


def test_conv2d_gradients():
    x, w, b = _leaf((2, 2, 5, 5), 3), _leaf((3, 2, 3, 3), 4), _leaf((3,), 5)
    readout = Tensor(np.random.default_rng(6).standard_normal((2, 3, 5, 5)))
    assert finite_difference_check(lambda t: tensor_sum(mul(conv2d(t, w, b, pad=1), readout)), x) < 1e-6
    assert finite_difference_check(lambda t: tensor_sum(mul(conv2d(x, t, b, pad=1), readout)), w) < 1e-6
    assert finite_difference_check(lambda t: tensor_sum(mul(conv2d(x, w, t, pad=1), readout)), b) < 1e-6


def test_relu_subgradient_at_zero_is_zero():
    x = Tensor(np.array([-1.0, 0.0, 2.0]), requires_grad=True)
    tensor_sum(relu(x)).backward()
    assert np.array_equal(relu(x).data, [0.0, 0.0, 2.0])
    assert np.array_equal(x.grad, [0.0, 0.0, 1.0])


def test_sigmoid_does_not_overflow():
    with np.errstate(over="raise"):
        out = sigmoid(Tensor(np.array([-1000.0, 0.0, 1000.0])))
    assert np.allclose(out.data, [0.0, 0.5, 1.0])


def test_spatial_max_pool_routes_to_the_first_maximum():
    data = np.zeros((1, 1, 2, 2))
    data[0, 0, 0, 1] = data[0, 0, 1, 0] = 5.0
    x = Tensor(data, requires_grad=True)
    out = pool_spatial(x, "max")
    assert out.shape == (1, 1, 1, 1)
    tensor_sum(out).backward()
    expected = np.zeros((1, 1, 2, 2))
    expected[0, 0, 0, 1] = 1.0
    assert np.array_equal(x.grad, expected)


def test_pool_averages():
    x = Tensor(np.arange(24.0).reshape(1, 2, 3, 4))
    assert np.allclose(pool_spatial(x, "avg").data[0, :, 0, 0], [5.5, 17.5])
    assert np.allclose(pool_channel(x, "avg").data[0, 0], np.arange(12.0).reshape(3, 4) + 6.0)
    assert np.allclose(pool_channel(x, "max").data[0, 0], np.arange(12.0).reshape(3, 4) + 12.0)


def test_pool_rejects_unknown_modes():
    with pytest.raises(ValueError):
        pool_spatial(Tensor(np.ones((1, 1, 2, 2))), "median")


def test_concat_channels_order_and_shape_check():
    a, b = Tensor(np.zeros((1, 2, 3, 3))), Tensor(np.ones((1, 1, 3, 3)))
    out = concat_channels(a, b)
    assert out.shape == (1, 3, 3, 3)
    assert np.array_equal(out.data[0, 2], np.ones((3, 3)))
    with pytest.raises(ShapeError, match="height"):
        concat_channels(a, Tensor(np.ones((1, 1, 4, 3))))


def test_mask_broadcast_gradient_is_summed():
    features = Tensor(np.ones((1, 3, 2, 2)), requires_grad=True)
    mask = Tensor(np.full((1, 3, 1, 1), 2.0), requires_grad=True)
    tensor_sum(mul(features, mask)).backward()
    assert np.array_equal(mask.grad, np.full((1, 3, 1, 1), 4.0))
    assert np.array_equal(features.grad, np.full((1, 3, 2, 2), 2.0))


def test_mul_rejects_incompatible_shapes():
    with pytest.raises(ShapeError):
        mul(Tensor(np.ones((1, 3, 2, 2))), Tensor(np.ones((1, 2, 2, 2))))


def test_mse_loss_value():
    pred = Tensor(np.ones((2, 1, 2, 2)))
    target = Tensor(np.zeros((2, 1, 2, 2)))
    assert mse_loss(pred, target, 2).item() == pytest.approx(8.0 / 4.0)
    assert mse_loss(pred, pred, 2).item() == 0.0


def test_mse_loss_checks_shapes():
    with pytest.raises(ShapeError):
        mse_loss(Tensor(np.ones((1, 2, 2, 2))), Tensor(np.ones((1, 3, 2, 2))), 1)


def test_group_bands_layout_and_overlap_gradient():
    x = Tensor(np.arange(2 * 6 * 1 * 1, dtype=np.float64).reshape(2, 6, 1, 1), requires_grad=True)
    groups = [[0, 1, 2, 3], [2, 3, 4, 5]]
    grouped = group_bands(x, groups)
    assert grouped.shape == (4, 4, 1, 1)
    # group-major: rows 0, 1 are group 0 of images 0, 1
    assert np.array_equal(grouped.data[1, :, 0, 0], [6.0, 7.0, 8.0, 9.0])
    assert np.array_equal(grouped.data[2, :, 0, 0], [2.0, 3.0, 4.0, 5.0])
    tensor_sum(grouped).backward()
    assert np.array_equal(x.grad[0, :, 0, 0], [1.0, 1.0, 2.0, 2.0, 1.0, 1.0])


def test_merge_groups_inverts_the_batch_layout():
    features = np.arange(3 * 2 * 2, dtype=np.float64).reshape(6, 2, 1, 1)
    merged = merge_groups(Tensor(features), 3)
    assert merged.shape == (2, 6, 1, 1)
    # image 1, group 2 sits at batch row 2·2 + 1
    assert np.array_equal(merged.data[1, 4:6, 0, 0], features[5, :, 0, 0])
    with pytest.raises(ShapeError):
        merge_groups(Tensor(features), 4)


def test_group_bands_rejects_out_of_range_indices():
    with pytest.raises(ShapeError):
        group_bands(Tensor(np.ones((1, 4, 2, 2))), [[0, 1, 2, 4]])


class _DoubledReLU(Function):
    # wrong backward rule, used to make sure the checker notices
    def forward(self, x):
        self.mask = x > 0
        return np.where(self.mask, x, 0.0)

    def backward(self, grad):
        return (2.0 * grad * self.mask,)


def test_check_gradient_detects_a_wrong_backward_rule():
    x = Tensor(np.array([0.5, 1.0, -2.0, 3.0]), requires_grad=True)
    error, index = check_gradient(lambda t: tensor_sum(_DoubledReLU.apply(t)), x)
    assert error > 0.1
    assert index in ((0,), (1,), (3,))


def test_check_gradient_samples_coordinates():
    x = _leaf((4, 4), 7)
    error, _ = check_gradient(lambda t: tensor_sum(mul(t, t)), x, max_coords=5, seed=3)
    assert error < 1e-6


def test_check_gradient_needs_a_leaf():
    with pytest.raises(ValueError):
        check_gradient(lambda t: tensor_sum(t), Tensor(np.ones(2)))
