import logging
from typing import Iterator, Tuple

import numpy as np

from sscan.autodiff import Parameter, Tensor, add, group_bands, merge_groups
from sscan.errors import BandMismatchError, ConfigError, ShapeError
from sscan.network.config import ModelConfig
from sscan.network.modules import SGCAM, SSAB, SSAN, Conv, Module


class SSCANModel(Module):
    """
    Spatial-spectral cross attention network.

    The input batch N×B×H×W is cut into overlapping band groups. Every group and its successor
    (the last group is paired with itself) go through one SGCAM and one branch SSAN whose
    weights are shared by all groups; the per-group features are concatenated, fused by a 1×1
    convolution to C channels, refined by the fusion SSAN and turned into a B-channel residual
    by the reconstruction convolution. The output is input + residual. The reconstruction
    convolution starts at zero, so a freshly built model is the identity.
    """

    def __init__(self, config: ModelConfig):
        '''Initialize the model.

        Args:
            config (ModelConfig): the hyper-parameters; the seed fixes every initial weight
        '''
        super().__init__("sscan")
        self._config = config
        self._groups = config.grouping
        index = np.asarray(self._groups.indices(), dtype=np.intp)
        self._index = index
        self._next_index = np.concatenate([index[1:], index[-1:]], axis=0)

        rng = np.random.default_rng(config.seed)
        dtype = config.dtype
        c, cg = config.trunk_channels, config.group_channels
        self.sgcam = self._register(SGCAM("sgcam", config.k, c, cg, config.hidden_channels(c),
                                          config.sgcam_activation, rng, dtype))
        self.branch = self._register(SSAN("branch", config.n_ssab, cg, config.hidden_channels(cg),
                                          config.spatial_kernel, config.ssab_trunk, rng, dtype))
        self.fusion = self._register(Conv("fusion", self._groups.n_groups * cg, c, 1, rng, dtype))
        self.fusion_ssan = self._register(SSAN("fusion_ssan", config.fusion_ssab, c, config.hidden_channels(c),
                                               config.spatial_kernel, config.ssab_trunk, rng, dtype))
        self.reconstruction = self._register(Conv("reconstruction", c, config.bands, 3, rng, dtype, zero_init=True))

    def __repr__(self):
        return (f"{self.__class__.__name__}(bands={self._config.bands}, n_groups={self.n_groups}, "
                f"parameters={parameter_count(self)})")

    @property
    def config(self) -> ModelConfig:
        """Get the hyper-parameters."""
        return self._config

    @property
    def n_groups(self) -> int:
        return self._groups.n_groups

    @property
    def groups(self):
        """Get the band groups."""
        return self._groups

    def features(self, x: Tensor) -> Tensor:
        """The fused, refined N×C×H×W feature map the reconstruction convolution reads."""
        g_i = group_bands(x, self._index)
        g_next = group_bands(x, self._next_index)
        branch_features = self.branch(self.sgcam(g_i, g_next))
        fused = self.fusion(merge_groups(branch_features, self.n_groups))
        return self.fusion_ssan(fused)

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim != 4:
            raise ShapeError(f"the model expects an N×B×H×W batch, got shape {x.shape}")
        if x.shape[1] != self._config.bands:
            raise BandMismatchError(f"the model was built for {self._config.bands} bands, the input has {x.shape[1]}")
        if x.dtype != self._config.dtype:
            if not x.is_leaf:
                raise ConfigError("dtype", f"the model computes in {np.dtype(self._config.dtype).name} but the input "
                                           f"is a {np.dtype(x.dtype).name} graph node; cast it before it enters the graph")
            x = Tensor(x.data.astype(self._config.dtype), requires_grad=x.requires_grad)
        residual = self.reconstruction(self.features(x))
        return add(x, residual)


def build_model(config: ModelConfig) -> SSCANModel:
    """
    Build a freshly initialized model.

    Args:
        config (ModelConfig): the hyper-parameters

    Returns:
        SSCANModel: the model; it reproduces its input exactly until trained
    """
    model = SSCANModel(config)
    logging.info(f"built SSCAN model: {model.n_groups} band groups, {parameter_count(model)} parameters")
    return model


def named_parameters(model: Module) -> Iterator[Tuple[str, Parameter]]:
    """Yield the (name, parameter) pairs of a model in a fixed order."""
    return model.named_parameters()


def parameter_count(model: Module) -> int:
    """The total number of scalar parameters."""
    return int(sum(parameter.data.size for _, parameter in model.named_parameters()))


def sgcam_forward(model: SSCANModel, g_i: Tensor, g_next: Tensor) -> Tensor:
    """
    Cross-attention features of group i given group i+1.

    Args:
        model (SSCANModel): the model whose shared SGCAM is applied
        g_i (Tensor): N×k×H×W
        g_next (Tensor): N×k×H×W

    Returns:
        Tensor: N×C_g×H×W
    """
    return model.sgcam(g_i, g_next)


def ssab_forward(block: SSAB, f: Tensor) -> Tensor:
    """Apply one spectral-spatial attention block, N×C×H×W → N×C×H×W."""
    return block(f)


def ssan_forward(network: SSAN, f: Tensor) -> Tensor:
    """Apply an SSAB cascade with its outer residual, N×C×H×W → N×C×H×W."""
    return network(f)


def model_forward(model: SSCANModel, batch: Tensor) -> Tensor:
    """
    Denoise a batch, N×B×H×W → N×B×H×W.

    :raises BandMismatchError: If B differs from the configured band count.
    :raises ConfigError: If a non-leaf input has a dtype other than the model's.
    """
    return model(batch)
