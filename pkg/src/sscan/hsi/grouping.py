from typing import List, Tuple

from pydantic import BaseModel, Field, model_validator

from sscan.constants import DEFAULT_K, DEFAULT_OVERLAP
from sscan.errors import ConfigError


class BandGroupingSpec(BaseModel):
    """
    How the spectral axis is cut into overlapping groups.

    Attributes:
        k (int): bands per group
        o (int): bands shared by adjacent groups, 0 <= o < k
        tail_policy (str): only "anchor_end": an uncovered remainder becomes one extra group
            ending at the last band
    """
    k: int = Field(default=DEFAULT_K, ge=1)
    o: int = Field(default=DEFAULT_OVERLAP, ge=0)
    tail_policy: str = "anchor_end"

    @model_validator(mode="after")
    def _check(self):
        if self.o >= self.k:
            raise ValueError(f"o must be smaller than k={self.k}, got {self.o}")
        if self.tail_policy != "anchor_end":
            raise ValueError(f"only the anchor_end tail policy is supported, got {self.tail_policy!r}")
        return self

    @property
    def stride(self) -> int:
        return self.k - self.o


class BandGroups(BaseModel):
    """
    The ordered band groups of a cube.

    Attributes:
        groups (List[Tuple[int, int]]): half-open [start, stop) band ranges, ordered by start
    """
    groups: List[Tuple[int, int]]

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def indices(self) -> List[List[int]]:
        """The band indices of every group."""
        return [list(range(start, stop)) for start, stop in self.groups]


def make_band_groups(bands: int, spec: BandGroupingSpec) -> BandGroups:
    """
    Cut `bands` spectral bands into groups of k bands with o shared between neighbours.

    Regular groups start at 0, k−o, 2(k−o), ... while they fit; if the last band is still
    uncovered one more group is anchored at [bands − k, bands), which may overlap its
    predecessor by more than o.

    Args:
        bands (int): the number of bands
        spec (BandGroupingSpec): k, o and the tail policy

    Returns:
        BandGroups: the groups in start order

    :raises ConfigError: If bands < k.
    """
    if bands < spec.k:
        raise ConfigError("bands", f"need at least k={spec.k} bands to form a group, got {bands}")
    groups = [(start, start + spec.k) for start in range(0, bands - spec.k + 1, spec.stride)]
    if groups[-1][1] < bands:
        groups.append((bands - spec.k, bands))
    return BandGroups(groups=groups)
