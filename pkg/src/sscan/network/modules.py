"""
Building blocks of the SSCAN network.

Every block is a Module: it owns named Parameters (and child modules) and is applied by
calling it on Tensors. Weights are drawn from one numpy Generator in construction order,
so a model is fully determined by its configuration and seed.
"""
from abc import abstractmethod
from typing import Dict, Iterator, List, Tuple

import numpy as np

from sscan.autodiff import (Parameter, Tensor, add, concat_channels, conv2d, mul, pool_channel, pool_spatial, relu,
                            sigmoid)
from sscan.errors import ShapeError
from sscan.utils import enforce_no_abstract_class_instances


class Module:
    """Abstract base of the network blocks."""

    def __init__(self, name: str):
        enforce_no_abstract_class_instances(self.__class__, Module)
        self._name = name
        self._parameters: Dict[str, Parameter] = {}
        self._children: Dict[str, "Module"] = {}

    @property
    def name(self) -> str:
        """Get the dotted name prefix of this module's parameters."""
        return self._name

    def _register(self, child: "Module") -> "Module":
        self._children[child.name] = child
        return child

    def _parameter(self, suffix: str, data: np.ndarray) -> Parameter:
        parameter = Parameter(data, name=f"{self._name}.{suffix}", dtype=data.dtype)
        self._parameters[parameter.name] = parameter
        return parameter

    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        """Yield (name, parameter) pairs, own parameters first, then children in registration order."""
        yield from self._parameters.items()
        for child in self._children.values():
            yield from child.named_parameters()

    def parameters(self) -> List[Parameter]:
        return [parameter for _, parameter in self.named_parameters()]

    @abstractmethod
    def __call__(self, *inputs: Tensor) -> Tensor:
        ...


class Conv(Module):
    """
    A same-padded convolution layer, kernel × kernel, with He-uniform fan-in weights and zero
    bias. `zero_init` zeroes the weights as well.
    """

    def __init__(self, name: str, in_channels: int, out_channels: int, kernel: int, rng: np.random.Generator,
                 dtype: np.dtype = np.float64, zero_init: bool = False):
        super().__init__(name)
        shape = (out_channels, in_channels, kernel, kernel)
        if zero_init:
            weight = np.zeros(shape, dtype=dtype)
        else:
            bound = np.sqrt(6.0 / (in_channels * kernel * kernel))
            weight = rng.uniform(-bound, bound, size=shape).astype(dtype)
        self.weight = self._parameter("weight", weight)
        self.bias = self._parameter("bias", np.zeros(out_channels, dtype=dtype))
        self.pad = kernel // 2

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, self.bias, pad=self.pad)


class ChannelAttention(Module):
    """
    Channel (spectral) attention. Global max and average spatial pooling each go through the
    same C → C/r → C bottleneck with a ReLU in between; the two descriptors are concatenated and
    fused by a 1×1 map back to C channels, and a sigmoid turns them into an N×C×1×1 mask.
    """

    def __init__(self, name: str, channels: int, hidden: int, rng: np.random.Generator, dtype: np.dtype):
        super().__init__(name)
        self.squeeze = self._register(Conv(f"{name}.squeeze", channels, hidden, 1, rng, dtype))
        self.excite = self._register(Conv(f"{name}.excite", hidden, channels, 1, rng, dtype))
        self.fuse = self._register(Conv(f"{name}.fuse", 2 * channels, channels, 1, rng, dtype))

    def mask(self, x: Tensor) -> Tensor:
        max_descriptor = self.excite(relu(self.squeeze(pool_spatial(x, "max"))))
        avg_descriptor = self.excite(relu(self.squeeze(pool_spatial(x, "avg"))))
        return sigmoid(self.fuse(concat_channels(max_descriptor, avg_descriptor)))

    def __call__(self, x: Tensor) -> Tensor:
        return mul(x, self.mask(x))


class SpatialAttention(Module):
    """Spatial attention: channel max/avg maps, concatenated, kernel × kernel conv 2 → 1, sigmoid."""

    def __init__(self, name: str, kernel: int, rng: np.random.Generator, dtype: np.dtype):
        super().__init__(name)
        self.conv = self._register(Conv(f"{name}.conv", 2, 1, kernel, rng, dtype))

    def mask(self, x: Tensor) -> Tensor:
        return sigmoid(self.conv(concat_channels(pool_channel(x, "max"), pool_channel(x, "avg"))))

    def __call__(self, x: Tensor) -> Tensor:
        return mul(x, self.mask(x))


class SGCAM(Module):
    """
    Spectral grouped cross attention module.

    Group i is concatenated with group i+1 and run through the trunk convolutions
    (2k → C → C); the channel-attention mask computed from the trunk features is multiplied
    onto them, the 3×3 projection of group i alone (k → C) is added back, and a last 3×3
    convolution maps the result to C_g channels.
    """

    def __init__(self, name: str, k: int, channels: int, group_channels: int, hidden: int, activation: str,
                 rng: np.random.Generator, dtype: np.dtype):
        super().__init__(name)
        self.k = k
        self.activation = activation
        self.trunk_in = self._register(Conv(f"{name}.trunk_in", 2 * k, channels, 3, rng, dtype))
        self.trunk_out = self._register(Conv(f"{name}.trunk_out", channels, channels, 3, rng, dtype))
        self.attention = self._register(ChannelAttention(f"{name}.attention", channels, hidden, rng, dtype))
        self.skip = self._register(Conv(f"{name}.skip", k, channels, 3, rng, dtype))
        self.project = self._register(Conv(f"{name}.project", channels, group_channels, 3, rng, dtype))

    def _check(self, label: str, g: Tensor):
        if g.ndim != 4 or g.shape[1] != self.k:
            raise ShapeError(f"SGCAM {label} must have k={self.k} channels, got shape {g.shape}")

    def trunk(self, g_i: Tensor, g_next: Tensor) -> Tensor:
        self._check("group i", g_i)
        self._check("group i+1", g_next)
        if g_i.shape != g_next.shape:
            raise ShapeError(f"SGCAM groups differ in shape: {g_i.shape} vs {g_next.shape}")
        features = self.trunk_in(concat_channels(g_i, g_next))
        if self.activation != "none":
            features = relu(features)
        features = self.trunk_out(features)
        if self.activation == "after_each":
            features = relu(features)
        return features

    def attention_mask(self, g_i: Tensor, g_next: Tensor) -> Tensor:
        """The N×C×1×1 channel mask applied to the trunk features of the pair."""
        return self.attention.mask(self.trunk(g_i, g_next))

    def __call__(self, g_i: Tensor, g_next: Tensor) -> Tensor:
        attended = self.attention(self.trunk(g_i, g_next))
        return self.project(add(attended, self.skip(g_i)))


class SSAB(Module):
    """
    Spectral-spatial attention block: optional 3×3 trunk with ReLU, spectral attention, then
    spatial attention, plus the block input.
    """

    def __init__(self, name: str, channels: int, hidden: int, spatial_kernel: int, use_trunk: bool,
                 rng: np.random.Generator, dtype: np.dtype):
        super().__init__(name)
        self.channels = channels
        self.trunk_conv = self._register(Conv(f"{name}.trunk", channels, channels, 3, rng, dtype)) if use_trunk else None
        self.spectral = self._register(ChannelAttention(f"{name}.spectral", channels, hidden, rng, dtype))
        self.spatial = self._register(SpatialAttention(f"{name}.spatial", spatial_kernel, rng, dtype))

    def trunk(self, f: Tensor) -> Tensor:
        return f if self.trunk_conv is None else relu(self.trunk_conv(f))

    def spectral_mask(self, x: Tensor) -> Tensor:
        return self.spectral.mask(x)

    def spatial_mask(self, x: Tensor) -> Tensor:
        return self.spatial.mask(x)

    def __call__(self, f: Tensor) -> Tensor:
        if f.ndim != 4 or f.shape[1] != self.channels:
            raise ShapeError(f"SSAB expects {self.channels} channels, got shape {f.shape}")
        features = self.trunk(f)
        features = mul(features, self.spectral_mask(features))
        features = mul(features, self.spatial_mask(features))
        return add(features, f)


class SSAN(Module):
    """A cascade of SSABs with one residual connection around it. An empty cascade is the identity."""

    def __init__(self, name: str, n_blocks: int, channels: int, hidden: int, spatial_kernel: int, use_trunk: bool,
                 rng: np.random.Generator, dtype: np.dtype):
        super().__init__(name)
        self.channels = channels
        self.blocks = [self._register(SSAB(f"{name}.block{i}", channels, hidden, spatial_kernel, use_trunk, rng, dtype))
                       for i in range(n_blocks)]

    def __call__(self, f: Tensor) -> Tensor:
        if f.ndim != 4 or f.shape[1] != self.channels:
            raise ShapeError(f"SSAN expects {self.channels} channels, got shape {f.shape}")
        if not self.blocks:
            return f
        out = f
        for block in self.blocks:
            out = block(out)
        return add(out, f)
