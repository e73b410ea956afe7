from typing import Callable, Optional, Tuple

import numpy as np

from sscan.autodiff.tensor import Tensor, no_grad
from sscan.constants import GRADCHECK_STEP


def check_gradient(f: Callable[[Tensor], Tensor], x: Tensor, step: float = GRADCHECK_STEP,
                   max_coords: Optional[int] = None, seed: int = 0) -> Tuple[float, Tuple[int, ...]]:
    """
    Compare the analytic gradient of a scalar function with central finite differences.

    The analytic gradient comes from one backward pass; each checked coordinate of `x` is then
    perturbed in place by ±step (and restored) and `f` re-evaluated without building a graph.
    The error at a coordinate is |analytic − numeric| / max(1, |analytic|).

    Args:
        f (Callable[[Tensor], Tensor]): maps x to a scalar tensor
        x (Tensor): a leaf with requires_grad; may be a model Parameter that f closes over
        step (float): the finite-difference step
        max_coords (Optional[int]): check only this many coordinates, drawn without replacement
        seed (int): seed for the coordinate draw

    Returns:
        Tuple[float, Tuple[int, ...]]: the largest error and the coordinate where it occurs
    """
    if not x.requires_grad or not x.is_leaf:
        raise ValueError("check_gradient needs a leaf tensor with requires_grad=True")
    x.zero_grad()
    f(x).backward()
    analytic = x.grad if x.grad is not None else np.zeros_like(x.data)
    x.zero_grad()

    coords = np.arange(x.data.size)
    if max_coords is not None and max_coords < coords.size:
        coords = np.sort(np.random.default_rng(seed).choice(coords.size, size=max_coords, replace=False))

    flat = x.data.reshape(-1)
    worst, worst_index = 0.0, 0
    with no_grad():
        for i in coords:
            original = flat[i]
            flat[i] = original + step
            plus = float(f(x).data)
            flat[i] = original - step
            minus = float(f(x).data)
            flat[i] = original
            numeric = (plus - minus) / (2.0 * step)
            exact = float(analytic.reshape(-1)[i])
            error = abs(exact - numeric) / max(1.0, abs(exact))
            if error > worst or not np.isfinite(error):
                worst, worst_index = error, int(i)
    return worst, tuple(int(v) for v in np.unravel_index(worst_index, x.shape))


def finite_difference_check(f: Callable[[Tensor], Tensor], x: Tensor, step: float = GRADCHECK_STEP) -> float:
    """
    Largest relative error between the analytic gradient of `f` at `x` and its central
    finite-difference estimate, over all coordinates of `x`.

    Args:
        f (Callable[[Tensor], Tensor]): a scalar-valued tensor function
        x (Tensor): the point, a leaf with requires_grad
        step (float): the finite-difference step

    Returns:
        float: max |analytic − numeric| / max(1, |analytic|)
    """
    return check_gradient(f, x, step)[0]
