from typing import Optional

import numpy as np

from sscan.constants import (DEFAULT_GROUP_CHANNELS, DEFAULT_K, DEFAULT_N_SSAB, DEFAULT_OVERLAP, DEFAULT_REDUCTION,
                             DEFAULT_SPATIAL_KERNEL, DEFAULT_TRUNK_CHANNELS)
from sscan.errors import ConfigError
from sscan.hsi.grouping import BandGroupingSpec, BandGroups, make_band_groups
from sscan.yaml.sscan_yaml_object import SscanYAMLObject

SGCAM_ACTIVATIONS = ("between", "after_each", "none")
MODEL_DTYPES = ("float64", "float32")

# serialization order of the checkpoint header; do not reorder
CONFIG_FIELDS = ("k", "o", "n_ssab", "trunk_channels", "group_channels", "reduction", "spatial_kernel", "bands",
                 "seed", "fusion_ssab", "ssab_trunk", "sgcam_activation", "dtype")


class ModelConfig(SscanYAMLObject):
    '''
    The hyper-parameters of an SSCAN model. Declared in YAML as

        model: !sscan.network.ModelConfig
          bands: 191
          k: 4
          o: 2
    '''
    yaml_tag = u'!sscan.network.ModelConfig'

    def __new__(cls, *args, **kwargs):
        '''Create a new instance of the class, setting default values for the instance variables.'''
        obj = super().__new__(cls)
        obj._k = DEFAULT_K
        obj._o = DEFAULT_OVERLAP
        obj._n_ssab = DEFAULT_N_SSAB
        obj._trunk_channels = DEFAULT_TRUNK_CHANNELS
        obj._group_channels = DEFAULT_GROUP_CHANNELS
        obj._reduction = DEFAULT_REDUCTION
        obj._spatial_kernel = DEFAULT_SPATIAL_KERNEL
        obj._bands = None
        obj._seed = 0
        obj._fusion_ssab = None
        obj._ssab_trunk = True
        obj._sgcam_activation = "between"
        obj._dtype = "float64"
        return obj

    def __init__(self, bands: int, k: int = DEFAULT_K, o: int = DEFAULT_OVERLAP, n_ssab: int = DEFAULT_N_SSAB,
                 trunk_channels: int = DEFAULT_TRUNK_CHANNELS, group_channels: int = DEFAULT_GROUP_CHANNELS,
                 reduction: int = DEFAULT_REDUCTION, spatial_kernel: int = DEFAULT_SPATIAL_KERNEL, seed: int = 0,
                 fusion_ssab: Optional[int] = None, ssab_trunk: bool = True, sgcam_activation: str = "between",
                 dtype: str = "float64"):
        '''Initialize the configuration.

        Args:
            bands (int): the band count B of the cubes the model denoises
            k (int): bands per group
            o (int): bands shared by adjacent groups, o < k
            n_ssab (int): SSABs in the per-group SSAN; 0 makes that SSAN the identity
            trunk_channels (int): feature width C, divisible by reduction
            group_channels (int): per-group output width C_g
            reduction (int): channel-attention bottleneck ratio r
            spatial_kernel (int): odd side of the spatial-attention kernel
            seed (int): initialization seed
            fusion_ssab (Optional[int]): SSABs in the fusion SSAN, n_ssab if None
            ssab_trunk (bool): whether every SSAB starts with a 3×3 convolution + ReLU
            sgcam_activation (str): ReLU placement in the SGCAM trunk, one of between, after_each, none
            dtype (str): parameter precision, float64 or float32
        '''
        super().__init__()
        d = self._validate_and_convert_types({
            "_k": k, "_o": o, "_n_ssab": n_ssab, "_trunk_channels": trunk_channels,
            "_group_channels": group_channels, "_reduction": reduction, "_spatial_kernel": spatial_kernel,
            "_bands": bands, "_seed": seed, "_fusion_ssab": fusion_ssab, "_ssab_trunk": ssab_trunk,
            "_sgcam_activation": sgcam_activation, "_dtype": dtype})
        for key, value in d.items():
            setattr(self, key, value)

    def __repr__(self):
        fields = ", ".join(f"{name}={getattr(self, name)}" for name in CONFIG_FIELDS)
        return f"{self.__class__.__name__}({fields})"

    def __eq__(self, other):
        return isinstance(other, ModelConfig) and self.to_dict() == other.to_dict()

    def _validate_and_convert_types(self, d: dict) -> dict:
        for name in ("_k", "_o", "_n_ssab", "_trunk_channels", "_group_channels", "_reduction", "_spatial_kernel",
                     "_bands", "_seed"):
            d[name] = _as_int(name[1:], d.get(name))
        if d.get("_fusion_ssab") is None:
            d["_fusion_ssab"] = d["_n_ssab"]
        d["_fusion_ssab"] = _as_int("fusion_ssab", d["_fusion_ssab"])

        for name in ("k", "trunk_channels", "group_channels", "reduction", "spatial_kernel", "bands"):
            if d[f"_{name}"] < 1:
                raise ConfigError(name, f"must be positive, got {d[f'_{name}']}")
        for name in ("o", "n_ssab", "fusion_ssab"):
            if d[f"_{name}"] < 0:
                raise ConfigError(name, f"must not be negative, got {d[f'_{name}']}")
        if d["_o"] >= d["_k"]:
            raise ConfigError("o", f"overlap {d['_o']} must be smaller than k={d['_k']}")
        if d["_bands"] < d["_k"]:
            raise ConfigError("bands", f"{d['_bands']} bands cannot hold a group of k={d['_k']}")
        if d["_trunk_channels"] % d["_reduction"]:
            raise ConfigError("trunk_channels",
                              f"{d['_trunk_channels']} is not divisible by reduction={d['_reduction']}")
        if d["_spatial_kernel"] % 2 == 0:
            raise ConfigError("spatial_kernel", f"must be odd, got {d['_spatial_kernel']}")
        if not 0 <= d["_seed"] < 1 << 63:
            raise ConfigError("seed", f"must lie in [0, 2^63), got {d['_seed']}")
        if not isinstance(d.get("_ssab_trunk"), bool):
            raise ConfigError("ssab_trunk", f"must be a boolean, got {d.get('_ssab_trunk')!r}")
        if d.get("_sgcam_activation") not in SGCAM_ACTIVATIONS:
            raise ConfigError("sgcam_activation",
                              f"must be one of {SGCAM_ACTIVATIONS}, got {d.get('_sgcam_activation')!r}")
        if d.get("_dtype") not in MODEL_DTYPES:
            raise ConfigError("dtype", f"must be one of {MODEL_DTYPES}, got {d.get('_dtype')!r}")
        return d

    @property
    def k(self) -> int:
        """Get the number of bands per group."""
        return self._k

    @property
    def o(self) -> int:
        """Get the overlap between adjacent groups."""
        return self._o

    @property
    def n_ssab(self) -> int:
        """Get the depth of the per-group SSAN."""
        return self._n_ssab

    @property
    def fusion_ssab(self) -> int:
        """Get the depth of the fusion SSAN."""
        return self._fusion_ssab

    @property
    def trunk_channels(self) -> int:
        """Get the feature width C."""
        return self._trunk_channels

    @property
    def group_channels(self) -> int:
        """Get the per-group output width C_g."""
        return self._group_channels

    @property
    def reduction(self) -> int:
        return self._reduction

    @property
    def spatial_kernel(self) -> int:
        return self._spatial_kernel

    @property
    def bands(self) -> int:
        return self._bands

    @property
    def seed(self) -> int:
        return self._seed

    @property
    def ssab_trunk(self) -> bool:
        return self._ssab_trunk

    @property
    def sgcam_activation(self) -> str:
        return self._sgcam_activation

    @property
    def dtype(self) -> np.dtype:
        """Get the parameter precision as a numpy dtype."""
        return np.dtype(self._dtype)

    @property
    def grouping(self) -> BandGroups:
        """Get the band groups implied by bands, k and o."""
        return make_band_groups(self._bands, BandGroupingSpec(k=self._k, o=self._o))

    def hidden_channels(self, channels: int) -> int:
        """Width of the channel-attention bottleneck for a feature map of `channels` channels."""
        return max(1, channels // self._reduction)

    def to_dict(self) -> dict:
        """The fields as plain Python values, in checkpoint order."""
        return {name: getattr(self, f"_{name}") for name in CONFIG_FIELDS}

    def replace(self, **overrides) -> "ModelConfig":
        """
        A copy with some fields overridden; None values leave a field unchanged.

        Returns:
            ModelConfig: the new, validated configuration
        """
        values = self.to_dict()
        values.update({key: value for key, value in overrides.items() if value is not None})
        return ModelConfig(**values)


def _as_int(field: str, value) -> int:
    if isinstance(value, bool) or value is None:
        raise ConfigError(field, f"must be an integer, got {value!r}")
    try:
        converted = int(value)
    except (TypeError, ValueError):
        raise ConfigError(field, f"must be an integer, got {value!r}") from None
    if converted != value:
        raise ConfigError(field, f"must be an integer, got {value!r}")
    return converted
