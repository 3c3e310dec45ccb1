"""Dense tensors with a define-by-run graph and reverse-mode gradients.

A `Tensor` wraps a numpy array. Every differentiable operation is a
`Function` subclass; applying one to inputs that require gradients appends a
`Node` to the thread-local `Graph`. `Tensor.backward` walks that graph in
reverse append order, which is a valid topological order because a node's
inputs always exist before the node itself is recorded.

The graph is cleared after each backward pass (and by the trainer before
each sub-step), so no node outlives a training step.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Any, Iterator, Optional, Sequence, Union

import numpy as np

from src.utils.errors import ContractError

ArrayLike = Union[np.ndarray, float, int, Sequence[Any]]

TRAINING_DTYPE = np.float32
VERIFICATION_DTYPE = np.float64


class _EngineState(threading.local):
    """Per-thread engine state: default dtype, recording flag, active graph"""

    def __init__(self) -> None:
        self.dtype: type = TRAINING_DTYPE
        self.recording: bool = True
        self.graph: Graph = Graph()


def get_default_dtype() -> type:
    return _state.dtype


@contextmanager
def precision(dtype: type) -> Iterator[None]:
    """Temporarily switch the default dtype used for new tensors"""
    if np.dtype(dtype) not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ContractError(f"unsupported precision: {dtype}")
    previous = _state.dtype
    _state.dtype = dtype
    try:
        yield
    finally:
        _state.dtype = previous


def verification_mode() -> Any:
    """64-bit mode used by gradient checks"""
    return precision(VERIFICATION_DTYPE)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block"""
    previous = _state.recording
    _state.recording = False
    try:
        yield
    finally:
        _state.recording = previous


class Node:
    """One recorded operation: the function (holding its cached forward
    values), its input tensors, and its position in the graph"""

    __slots__ = ("index", "generation", "function", "inputs")

    def __init__(self, index: int, generation: int, function: "Function", inputs: tuple["Tensor", ...]):
        self.index = index
        self.generation = generation
        self.function = function
        self.inputs = inputs


class Graph:
    """Append-only operation record for the current step"""

    def __init__(self) -> None:
        self.nodes: list[Node] = []
        self.generation = 0

    def record(self, function: "Function", inputs: tuple["Tensor", ...]) -> Node:
        node = Node(len(self.nodes), self.generation, function, inputs)
        self.nodes.append(node)
        return node

    def owns(self, node: Node) -> bool:
        return (
            node.generation == self.generation
            and node.index < len(self.nodes)
            and self.nodes[node.index] is node
        )

    def clear(self) -> None:
        self.nodes = []
        self.generation += 1

    def __len__(self) -> int:
        return len(self.nodes)


_state = _EngineState()


def current_graph() -> Graph:
    return _state.graph


def reset_graph() -> None:
    """Drop every recorded node; tensors built before this are constants"""
    _state.graph.clear()


class Function:
    """Base class for differentiable operations.

    Subclasses implement `forward` over numpy arrays, caching whatever the
    backward pass needs on `self`, and `backward`, which maps the gradient of
    the output to one gradient per input (None for inputs that take none).
    """

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *tensors: "Tensor", **kwargs: Any) -> "Tensor":
        function = cls()
        out_data = function.forward(*(t.data for t in tensors), **kwargs)
        needs_grad = _state.recording and any(t.requires_grad for t in tensors)
        out = Tensor._wrap(out_data)
        if needs_grad:
            out.requires_grad = True
            out.node = _state.graph.record(function, tensors)
        return out


class Tensor:
    """n-dimensional array of reals with gradient buffer and graph linkage"""

    __array_priority__ = 100

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
        dtype: Optional[type] = None,
    ):
        self.data: np.ndarray = np.array(data, dtype=dtype or _state.dtype, copy=True)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.node: Optional[Node] = None
        self.name = name

    @classmethod
    def _wrap(cls, array: np.ndarray) -> "Tensor":
        """Adopt an op result without copying when it already has the default dtype"""
        out = cls.__new__(cls)
        dtype = _state.dtype
        out.data = array if isinstance(array, np.ndarray) and array.dtype == dtype else np.asarray(array, dtype=dtype)
        out.grad = None
        out.requires_grad = False
        out.node = None
        out.name = None
        return out

    # -- introspection -------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self.node is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, dtype=self.data.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def __len__(self) -> int:
        return self.shape[0] if self.shape else 1

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{label}, requires_grad={self.requires_grad})"

    # -- gradients -----------------------------------------------------
    def _accumulate(self, grad: np.ndarray) -> None:
        grad = np.asarray(grad, dtype=self.data.dtype).reshape(self.data.shape)
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad = self.grad + grad

    def backward(self, retain_graph: bool = False) -> None:
        """Fill `.grad` of every reachable leaf with d(self)/d(leaf).

        Gradients accumulate additively into existing `.grad` buffers;
        leaves that are not reachable from `self` are left untouched.
        """
        if self.data.size != 1:
            raise ContractError(f"backward() needs a scalar loss, got shape {self.shape}")

        seed = np.ones_like(self.data)
        if self.node is None:
            if not self.requires_grad:
                raise ContractError("backward() called on a loss that is not connected to any graph")
            self._accumulate(seed)
            return

        graph = _state.graph
        if not graph.owns(self.node):
            raise ContractError("backward() called on a loss whose graph has been cleared")

        pending: dict[int, np.ndarray] = {self.node.index: seed}
        for index in range(self.node.index, -1, -1):
            grad = pending.pop(index, None)
            if grad is None:
                continue
            node = graph.nodes[index]
            input_grads = node.function.backward(grad)
            for tensor, input_grad in zip(node.inputs, input_grads):
                if input_grad is None or not tensor.requires_grad:
                    continue
                if tensor.node is not None and graph.owns(tensor.node):
                    key = tensor.node.index
                    if key in pending:
                        pending[key] = pending[key] + input_grad
                    else:
                        pending[key] = input_grad
                elif tensor.node is None:
                    tensor._accumulate(input_grad)

        if not retain_graph:
            graph.clear()

    # -- operator sugar ------------------------------------------------
    def __add__(self, other: Any) -> "Tensor":
        from src.core import ops

        return ops.add(self, as_tensor(other))

    def __radd__(self, other: Any) -> "Tensor":
        from src.core import ops

        return ops.add(as_tensor(other), self)

    def __sub__(self, other: Any) -> "Tensor":
        from src.core import ops

        return ops.sub(self, as_tensor(other))

    def __rsub__(self, other: Any) -> "Tensor":
        from src.core import ops

        return ops.sub(as_tensor(other), self)

    def __mul__(self, other: Any) -> "Tensor":
        from src.core import ops

        return ops.mul(self, as_tensor(other))

    def __rmul__(self, other: Any) -> "Tensor":
        from src.core import ops

        return ops.mul(as_tensor(other), self)

    def __neg__(self) -> "Tensor":
        from src.core import ops

        return ops.negate(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from src.core import ops

        return ops.matmul(self, other)

    def sum(self) -> "Tensor":
        from src.core import ops

        return ops.reduce_sum(self)

    def mean(self, axes: Optional[Sequence[int]] = None) -> "Tensor":
        from src.core import ops

        return ops.reduce_mean(self, axes)

    def reshape(self, *shape: int) -> "Tensor":
        from src.core import ops

        return ops.reshape(self, shape)


def as_tensor(value: Any) -> Tensor:
    """Wrap plain numbers/arrays as constant tensors"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False)
