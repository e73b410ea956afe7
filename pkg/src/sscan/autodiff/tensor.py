import contextlib
import logging
import threading
from abc import abstractmethod
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from sscan.errors import ShapeError
from sscan.utils import enforce_no_abstract_class_instances

ArrayLike = Union[np.ndarray, float, int, Sequence[float]]

_grad_mode = threading.local()


def _contiguous(array: np.ndarray) -> np.ndarray:
    # np.ascontiguousarray would promote 0-d scalars to shape (1,)
    return array if array.flags.c_contiguous else np.ascontiguousarray(array)


def is_grad_enabled() -> bool:
    """Whether operations executed on this thread record a gradient graph."""
    return getattr(_grad_mode, "enabled", True)


@contextlib.contextmanager
def no_grad():
    """
    Context manager that disables graph construction on the current thread.
    Used for inference and for the repeated forward evaluations of finite-difference checks.
    """
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


class Function:
    """
    Base class for differentiable operations.

    Subclasses implement `forward`, which receives the numpy arrays of the input tensors, and
    `backward`, which receives the gradient of the loss with respect to the output and returns
    one gradient array (or None) per input, in input order.
    """

    def __init__(self, *tensors: "Tensor"):
        enforce_no_abstract_class_instances(self.__class__, Function)
        self.tensors = tensors

    @abstractmethod
    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        ...

    @abstractmethod
    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        ...

    @classmethod
    def apply(cls, *tensors: "Tensor", **kwargs: Any) -> "Tensor":
        """
        Run the forward pass and wrap the result in a Tensor that remembers this function, so
        backward() can walk back through it.

        Args:
            *tensors (Tensor): the inputs of the operation
            **kwargs: operation parameters (padding, mode, ...)

        Returns:
            Tensor: the output tensor
        """
        func = cls(*tensors)
        out_data = func.forward(*(t.data for t in tensors), **kwargs)
        requires_grad = is_grad_enabled() and any(t.requires_grad for t in tensors)
        if not requires_grad:
            return Tensor(out_data)
        return Tensor(out_data, requires_grad=True, creator=func)

    @property
    def name(self) -> str:
        """Get the operation name used in diagnostics."""
        return self.__class__.__name__


class Tensor:
    """
    An n-dimensional real array taking part in a reverse-mode differentiation graph.

    The canonical network layout is batch × channels × height × width. Leaves created with
    requires_grad=True accumulate gradients in `grad` on every backward pass until they are
    reset with `zero_grad()`.
    """

    def __init__(self, data: ArrayLike, requires_grad: bool = False, creator: Optional[Function] = None,
                 dtype: Optional[np.dtype] = None):
        '''Initialize the tensor.

        Args:
            data (ArrayLike): the values, kept as a C-contiguous float array (not copied when already one)
            requires_grad (bool): whether gradients flow to this tensor
            creator (Optional[Function]): the operation that produced it, None for leaves
            dtype (Optional[np.dtype]): float64 unless the data is already floating point
        '''
        array = np.asarray(data)
        if dtype is not None:
            array = array.astype(dtype, copy=False)
        elif not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)
        self._data = _contiguous(array)
        self._requires_grad = requires_grad
        self._creator = creator
        self._grad: Optional[np.ndarray] = None

    def __repr__(self):
        return f"{self.__class__.__name__}(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    @property
    def data(self) -> np.ndarray:
        """Get the values."""
        return self._data

    @data.setter
    def data(self, value: np.ndarray):
        value = np.asarray(value, dtype=self._data.dtype)
        if value.shape != self._data.shape:
            raise ShapeError(f"cannot assign data of shape {value.shape} to tensor of shape {self._data.shape}")
        self._data = _contiguous(value)

    @property
    def shape(self) -> Tuple[int, ...]:
        """Get the extents."""
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self._data.dtype

    @property
    def requires_grad(self) -> bool:
        """Whether gradients are propagated to (or through) this tensor."""
        return self._requires_grad

    @property
    def creator(self) -> Optional[Function]:
        """Get the operation that produced this tensor, None for leaves."""
        return self._creator

    @property
    def is_leaf(self) -> bool:
        return self._creator is None

    @property
    def grad(self) -> Optional[np.ndarray]:
        """Get the accumulated gradient, or None if no gradient has reached this tensor."""
        return self._grad

    def zero_grad(self):
        """Drop the accumulated gradient."""
        self._grad = None

    def detach(self) -> "Tensor":
        """Return a leaf sharing the same values but cut from the graph."""
        return Tensor(self._data)

    def item(self) -> float:
        return float(self._data.reshape(-1)[0]) if self._data.size == 1 else float("nan")

    def numpy(self) -> np.ndarray:
        return self._data

    def _accumulate(self, grad: np.ndarray):
        if self._grad is None:
            self._grad = np.array(grad, dtype=self._data.dtype, copy=True)
        else:
            self._grad += grad

    def backward(self):
        """
        Propagate gradients from this scalar tensor to every leaf of its graph.

        Gradients accumulate: calling backward twice without zero_grad() in between sums the
        two contributions. Shared subexpressions receive the sum over all paths.

        :raises ShapeError: If the tensor is not a scalar.
        """
        if self._data.size != 1:
            raise ShapeError(f"backward() needs a scalar root, got shape {self.shape}")
        if not self._requires_grad:
            logging.debug("backward() called on a tensor that is not connected to any leaf")
            return

        order = self._topological_order()
        grads = {id(self): np.ones_like(self._data)}
        for node in order:
            grad = grads.pop(id(node), None)
            if grad is None:
                continue
            if node.is_leaf:
                node._accumulate(grad)
                continue
            input_grads = node.creator.backward(grad)
            for parent, parent_grad in zip(node.creator.tensors, input_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                if parent_grad.shape != parent.shape:
                    raise ShapeError(f"{node.creator.name} backward produced gradient of shape {parent_grad.shape}"
                                     f" for input of shape {parent.shape}")
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + parent_grad
                else:
                    grads[key] = parent_grad

    def _topological_order(self) -> List["Tensor"]:
        # iterative DFS; consumers come before producers in the returned list
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node.creator is not None:
                for parent in node.creator.tensors:
                    if parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))
        order.reverse()
        return order


class Parameter(Tensor):
    """A named trainable leaf tensor. Its shape is fixed after construction."""

    def __init__(self, data: ArrayLike, name: str, dtype: Optional[np.dtype] = None):
        '''Initialize the parameter.

        Args:
            data (ArrayLike): initial values
            name (str): identifier, unique within one model
            dtype (Optional[np.dtype]): storage precision
        '''
        super().__init__(np.array(data, dtype=dtype, copy=True), requires_grad=True, dtype=dtype)
        self._name = name

    def __repr__(self):
        return f"{self.__class__.__name__}(name={self.name}, shape={self.shape}, dtype={self.dtype})"

    @property
    def name(self) -> str:
        """Get the parameter name."""
        return self._name


def zero_grad(parameters: Iterable[Tensor]):
    """Reset the accumulated gradient of every tensor in `parameters`."""
    for parameter in parameters:
        parameter.zero_grad()


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    """Wrap a value in a constant Tensor unless it already is one."""
    return value if isinstance(value, Tensor) else Tensor(value)
