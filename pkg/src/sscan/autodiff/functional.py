"""
Differentiable operations on Tensors. Every layer of the network is built from these.
Each operation is a Function subclass with its forward/backward rule plus a lower-case
convenience wrapper (conv2d, relu, ...) that validates shapes and applies it.
"""
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from sscan.autodiff.tensor import Function, Tensor, as_tensor
from sscan.errors import ShapeError

_POOL_MODES = ("max", "avg")


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a gradient over the axes along which an operand of `shape` was broadcast."""
    if grad.shape == shape:
        return grad
    axes = tuple(axis for axis, extent in enumerate(shape) if extent == 1 and grad.shape[axis] != 1)
    return grad.sum(axis=axes, keepdims=True)


class Conv2d(Function):
    """2-D cross-correlation over N×C×H×W inputs with zero padding."""

    def forward(self, x: np.ndarray, weight: np.ndarray, bias: np.ndarray, pad: int = 0, stride: int = 1) -> np.ndarray:
        self.pad = pad
        self.stride = stride
        self.input_shape = x.shape
        kh, kw = weight.shape[2:]
        padded = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
        # N × C × H' × W' × kh × kw view, no copy
        windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
        self.windows = windows
        self.weight = weight
        out = np.tensordot(windows, weight, axes=([1, 4, 5], [1, 2, 3]))
        out = out.transpose(0, 3, 1, 2) + bias.reshape(1, -1, 1, 1)
        return np.ascontiguousarray(out)

    def backward(self, grad: np.ndarray):
        x_t, w_t, b_t = self.tensors
        grad_x = grad_w = grad_b = None
        if w_t.requires_grad:
            grad_w = np.tensordot(grad, self.windows, axes=([0, 2, 3], [0, 2, 3]))
        if b_t.requires_grad:
            grad_b = grad.sum(axis=(0, 2, 3))
        if x_t.requires_grad:
            n, c, h, w = self.input_shape
            kh, kw = self.weight.shape[2:]
            s, p = self.stride, self.pad
            ho, wo = grad.shape[2:]
            padded_grad = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=grad.dtype)
            for i in range(kh):
                for j in range(kw):
                    contribution = np.tensordot(grad, self.weight[:, :, i, j], axes=([1], [0]))
                    padded_grad[:, :, i:i + s * (ho - 1) + 1:s, j:j + s * (wo - 1) + 1:s] += \
                        contribution.transpose(0, 3, 1, 2)
            grad_x = padded_grad[:, :, p:p + h, p:p + w] if p else padded_grad
        return grad_x, grad_w, grad_b


class ReLU(Function):

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.mask = x > 0
        return np.where(self.mask, x, 0.0).astype(x.dtype, copy=False)

    def backward(self, grad: np.ndarray):
        return (grad * self.mask,)


class Sigmoid(Function):

    def forward(self, x: np.ndarray) -> np.ndarray:
        # exp of a non-positive argument only, so no overflow for large |x|
        z = np.exp(-np.abs(x))
        out = np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z)).astype(x.dtype, copy=False)
        self.out = out
        return out

    def backward(self, grad: np.ndarray):
        return (grad * self.out * (1.0 - self.out),)


class SpatialPool(Function):
    """Global max/avg reduction over H×W: N×C×H×W → N×C×1×1."""

    def forward(self, x: np.ndarray, mode: str = "max") -> np.ndarray:
        self.mode = mode
        self.input_shape = x.shape
        n, c, h, w = x.shape
        if mode == "avg":
            return x.mean(axis=(2, 3), keepdims=True)
        flat = x.reshape(n, c, h * w)
        # argmax returns the first maximal element in row-major order
        self.argmax = flat.argmax(axis=2)
        return np.take_along_axis(flat, self.argmax[..., None], axis=2).reshape(n, c, 1, 1)

    def backward(self, grad: np.ndarray):
        n, c, h, w = self.input_shape
        if self.mode == "avg":
            return (np.broadcast_to(grad / (h * w), self.input_shape).copy(),)
        out = np.zeros((n, c, h * w), dtype=grad.dtype)
        np.put_along_axis(out, self.argmax[..., None], grad.reshape(n, c, 1), axis=2)
        return (out.reshape(self.input_shape),)


class ChannelPool(Function):
    """Per-pixel max/avg reduction over channels: N×C×H×W → N×1×H×W."""

    def forward(self, x: np.ndarray, mode: str = "max") -> np.ndarray:
        self.mode = mode
        self.input_shape = x.shape
        if mode == "avg":
            return x.mean(axis=1, keepdims=True)
        self.argmax = x.argmax(axis=1)[:, None]
        return np.take_along_axis(x, self.argmax, axis=1)

    def backward(self, grad: np.ndarray):
        if self.mode == "avg":
            return (np.broadcast_to(grad / self.input_shape[1], self.input_shape).copy(),)
        out = np.zeros(self.input_shape, dtype=grad.dtype)
        np.put_along_axis(out, self.argmax, grad, axis=1)
        return (out,)


class ConcatChannels(Function):

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.split = a.shape[1]
        return np.concatenate([a, b], axis=1)

    def backward(self, grad: np.ndarray):
        return grad[:, :self.split], grad[:, self.split:]


class Add(Function):

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.shapes = (a.shape, b.shape)
        return a + b

    def backward(self, grad: np.ndarray):
        return _unbroadcast(grad, self.shapes[0]), _unbroadcast(grad, self.shapes[1])


class Mul(Function):

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.a, self.b = a, b
        return a * b

    def backward(self, grad: np.ndarray):
        return _unbroadcast(grad * self.b, self.a.shape), _unbroadcast(grad * self.a, self.b.shape)


class Sum(Function):

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.input_shape = x.shape
        return np.asarray(x.sum(), dtype=x.dtype)

    def backward(self, grad: np.ndarray):
        return (np.full(self.input_shape, grad, dtype=grad.dtype),)


class MSELoss(Function):
    """(1 / 2N) · Σ_n ‖target_n − pred_n‖², the batch objective of the training loop."""

    def forward(self, pred: np.ndarray, target: np.ndarray, n_images: int = 1) -> np.ndarray:
        self.n_images = n_images
        self.diff = pred - target
        return np.asarray(np.sum(self.diff * self.diff) / (2.0 * n_images), dtype=pred.dtype)

    def backward(self, grad: np.ndarray):
        scaled = grad * self.diff / self.n_images
        return scaled, -scaled


class GroupBands(Function):
    """
    Gather band groups into the batch axis: N×B×H×W → (G·N)×k×H×W, group-major.
    Row g·N + n holds bands `index[g]` of image n.
    """

    def forward(self, x: np.ndarray, index: np.ndarray = None) -> np.ndarray:
        self.index = index
        self.input_shape = x.shape
        n, _, h, w = x.shape
        g, k = index.shape
        gathered = x[:, index]  # N × G × k × H × W
        return np.ascontiguousarray(gathered.transpose(1, 0, 2, 3, 4).reshape(g * n, k, h, w))

    def backward(self, grad: np.ndarray):
        n, b, h, w = self.input_shape
        g, k = self.index.shape
        grouped = grad.reshape(g, n, k, h, w).transpose(1, 0, 2, 3, 4)
        out = np.zeros(self.input_shape, dtype=grad.dtype)
        # overlapping groups hit the same band more than once
        np.add.at(out, (slice(None), self.index), grouped)
        return (out,)


class MergeGroups(Function):
    """Inverse layout of GroupBands for features: (G·N)×C×H×W → N×(G·C)×H×W, group-major channels."""

    def forward(self, x: np.ndarray, n_groups: int = 1) -> np.ndarray:
        self.input_shape = x.shape
        gn, c, h, w = x.shape
        n = gn // n_groups
        self.layout = (n_groups, n, c, h, w)
        return np.ascontiguousarray(x.reshape(self.layout).transpose(1, 0, 2, 3, 4).reshape(n, n_groups * c, h, w))

    def backward(self, grad: np.ndarray):
        g, n, c, h, w = self.layout
        return (np.ascontiguousarray(grad.reshape(n, g, c, h, w).transpose(1, 0, 2, 3, 4).reshape(self.input_shape)),)


def _require_4d(name: str, t: Tensor):
    if t.ndim != 4:
        raise ShapeError(f"{name} must be N×C×H×W, got rank {t.ndim} shape {t.shape}")


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, pad: int = 0, stride: int = 1) -> Tensor:
    """
    2-D convolution (cross-correlation) of an N×Cin×H×W input with a Cout×Cin×kh×kw kernel.

    Args:
        x (Tensor): the input
        weight (Tensor): the kernel, kh and kw odd
        bias (Optional[Tensor]): per-output-channel bias, zeros if None
        pad (int): zero padding on every spatial side
        stride (int): spatial stride

    Returns:
        Tensor: N×Cout×H'×W' with H' = (H + 2·pad − kh) / stride + 1

    :raises ShapeError: If the shapes are inconsistent; the message names the dimension.
    """
    _require_4d("conv2d input", x)
    if weight.ndim != 4:
        raise ShapeError(f"conv2d weight must be Cout×Cin×kh×kw, got shape {weight.shape}")
    cout, cin, kh, kw = weight.shape
    if x.shape[1] != cin:
        raise ShapeError(f"conv2d channel dimension mismatch: input has Cin={x.shape[1]}, weight expects Cin={cin}")
    if kh % 2 == 0 or kw % 2 == 0:
        raise ShapeError(f"conv2d kernel height/width must be odd, got {kh}×{kw}")
    if pad < 0 or stride < 1:
        raise ShapeError(f"conv2d needs pad >= 0 and stride >= 1, got pad={pad}, stride={stride}")
    h, w = x.shape[2] + 2 * pad, x.shape[3] + 2 * pad
    if h < kh or w < kw:
        raise ShapeError(f"conv2d height/width {x.shape[2]}×{x.shape[3]} with pad {pad} is smaller than kernel {kh}×{kw}")
    if bias is None:
        bias = Tensor(np.zeros(cout, dtype=weight.dtype))
    elif bias.shape != (cout,):
        raise ShapeError(f"conv2d bias must have Cout={cout} entries, got shape {bias.shape}")
    return Conv2d.apply(x, weight, bias, pad=pad, stride=stride)


def relu(x: Tensor) -> Tensor:
    """Elementwise max(x, 0); the subgradient at 0 is 0."""
    return ReLU.apply(x)


def sigmoid(x: Tensor) -> Tensor:
    """Elementwise 1 / (1 + exp(−x)), evaluated without overflow."""
    return Sigmoid.apply(x)


def pool_spatial(x: Tensor, mode: str = "max") -> Tensor:
    """
    Global spatial pooling, N×C×H×W → N×C×1×1. In max mode the gradient is routed to the
    first (row-major) maximal element, in avg mode it is spread as 1/(H·W).
    """
    _require_4d("pool_spatial input", x)
    if mode not in _POOL_MODES:
        raise ValueError(f"pool mode must be one of {_POOL_MODES}, got '{mode}'")
    return SpatialPool.apply(x, mode=mode)


def pool_channel(x: Tensor, mode: str = "max") -> Tensor:
    """Channel pooling, N×C×H×W → N×1×H×W; gradient rules as pool_spatial."""
    _require_4d("pool_channel input", x)
    if mode not in _POOL_MODES:
        raise ValueError(f"pool mode must be one of {_POOL_MODES}, got '{mode}'")
    return ChannelPool.apply(x, mode=mode)


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate along channels; the channels of `a` come first."""
    _require_4d("concat_channels first operand", a)
    _require_4d("concat_channels second operand", b)
    for axis, label in ((0, "batch"), (2, "height"), (3, "width")):
        if a.shape[axis] != b.shape[axis]:
            raise ShapeError(f"concat_channels {label} dimension mismatch: {a.shape[axis]} vs {b.shape[axis]}")
    return ConcatChannels.apply(a, b)


def _check_broadcast(op: str, a: Tensor, b: Tensor):
    if a.ndim != b.ndim:
        raise ShapeError(f"{op} operands must have the same rank, got {a.shape} and {b.shape}")
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op} operands are not broadcastable: {a.shape} and {b.shape}") from None


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise a + b, with broadcasting over unit extents."""
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("add", a, b)
    return Add.apply(a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """
    Elementwise a · b. A N×C×1×1 (channel) or N×1×H×W (spatial) mask broadcasts over a
    N×C×H×W feature map; its gradient is summed over the broadcast axes.
    """
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast("mul", a, b)
    return Mul.apply(a, b)


def tensor_sum(x: Tensor) -> Tensor:
    """Sum of all elements as a scalar tensor."""
    return Sum.apply(x)


def mse_loss(pred: Tensor, target: Tensor, n_images: int) -> Tensor:
    """
    Batch reconstruction loss (1 / 2N) · Σ_n ‖target_n − pred_n‖².

    Args:
        pred (Tensor): the network output
        target (Tensor): the clean reference, same shape
        n_images (int): N, the number of images in the batch

    Returns:
        Tensor: a scalar
    """
    target = as_tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"mse_loss shape mismatch: pred {pred.shape} vs target {target.shape}")
    if n_images < 1:
        raise ValueError(f"mse_loss needs n_images >= 1, got {n_images}")
    return MSELoss.apply(pred, target, n_images=n_images)


def group_bands(x: Tensor, groups: Sequence[Sequence[int]]) -> Tensor:
    """
    Stack the band groups of an N×B×H×W batch along the batch axis, (G·N)×k×H×W, so that
    weights shared across groups are applied in a single call.
    """
    _require_4d("group_bands input", x)
    index = np.asarray(groups, dtype=np.intp)
    if index.ndim != 2:
        raise ShapeError("group_bands needs groups of equal size")
    if index.size and (index.min() < 0 or index.max() >= x.shape[1]):
        raise ShapeError(f"group_bands band index out of range for {x.shape[1]} bands")
    return GroupBands.apply(x, index=index)


def merge_groups(x: Tensor, n_groups: int) -> Tensor:
    """Concatenate per-group features from the batch axis back into channels, group-major."""
    _require_4d("merge_groups input", x)
    if n_groups < 1 or x.shape[0] % n_groups:
        raise ShapeError(f"merge_groups batch dimension {x.shape[0]} is not a multiple of {n_groups} groups")
    return MergeGroups.apply(x, n_groups=n_groups)
