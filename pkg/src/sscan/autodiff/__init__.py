# This is the __init__.py file for the sscan.autodiff package

from .tensor import Function, Parameter, Tensor, as_tensor, is_grad_enabled, no_grad, zero_grad
from .functional import (add, concat_channels, conv2d, group_bands, merge_groups, mse_loss, mul, pool_channel,
                         pool_spatial, relu, sigmoid, tensor_sum)
from .gradcheck import check_gradient, finite_difference_check

__all__ = ['Tensor', 'Parameter', 'Function', 'as_tensor', 'no_grad', 'is_grad_enabled', 'zero_grad',
           'conv2d', 'relu', 'sigmoid', 'pool_spatial', 'pool_channel', 'concat_channels', 'add', 'mul',
           'tensor_sum', 'mse_loss', 'group_bands', 'merge_groups',
           'check_gradient', 'finite_difference_check']
