# numcore/tensor.py
# Dense float64 tensors and the reverse-mode tape that records operations on them.
import logging
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from core.errors import ContractError, NonFiniteError

logger = logging.getLogger(__name__)


class Tensor:
    """A float64 array, optionally recorded on a `Tape`.

    `requires_grad` is only ever true for tensors created through a tape
    (parameters via `Tape.param`, intermediates via recorded ops).
    """

    __slots__ = ("data", "requires_grad", "tape")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, tape: "Tape | None" = None, allow_nonfinite: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if not allow_nonfinite and not np.isfinite(arr).all():
            raise NonFiniteError(f"tensor of shape {arr.shape} holds NaN or Inf")
        if requires_grad and tape is None:
            raise ContractError("requires_grad tensors must belong to a tape")
        self.data = arr
        self.requires_grad = requires_grad
        self.tape = tape

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self):
        flag = ", requires_grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __len__(self):
        return self.data.shape[0]

    # operators defer to numcore.ops
    def __add__(self, other):
        from numcore import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from numcore import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from numcore import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from numcore import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from numcore import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from numcore import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from numcore import ops
        return ops.div(self, other)

    def __rtruediv__(self, other):
        from numcore import ops
        return ops.div(other, self)

    def __neg__(self):
        from numcore import ops
        return ops.neg(self)

    def __pow__(self, exponent: float):
        from numcore import ops
        return ops.pow_(self, exponent)

    def __matmul__(self, other):
        from numcore import ops
        return ops.matmul(self, other)


@dataclass(eq=False)
class _Node:
    out: Tensor
    parents: tuple
    backward: Callable[[np.ndarray], tuple]


class Tape:
    """Ordered record of differentiable operations plus a parameter registry.

    Nodes are appended as ops run, so parents always precede children.
    """

    def __init__(self):
        self.nodes: list[_Node] = []
        self.params: dict[str, Tensor] = {}

    def param(self, name: str, value) -> Tensor:
        if name in self.params:
            raise ContractError(f"parameter '{name}' registered twice")
        t = Tensor(np.array(value, dtype=np.float64, copy=True), requires_grad=True, tape=self)
        self.params[name] = t
        return t

    def watch(self, params: Mapping[str, np.ndarray]) -> dict[str, Tensor]:
        return {name: self.param(name, value) for name, value in params.items()}

    def __len__(self):
        return len(self.nodes)


def tape_of(parents) -> "Tape | None":
    tape = None
    for p in parents:
        if isinstance(p, Tensor) and p.requires_grad:
            if tape is None:
                tape = p.tape
            elif p.tape is not tape:
                raise ContractError("operands are recorded on different tapes")
    return tape


def make_result(data: np.ndarray, parents: tuple, backward_fn: Callable[[np.ndarray], tuple]) -> Tensor:
    tape = tape_of(parents)
    if tape is None:
        return Tensor(data)
    out = Tensor(data, requires_grad=True, tape=tape)
    tape.nodes.append(_Node(out, parents, backward_fn))
    return out


def backward(tape: Tape, loss: Tensor) -> dict[str, np.ndarray]:
    """Gradients of a scalar `loss` for every parameter registered on `tape`.

    Unreachable parameters get zeros. Fan-out accumulates with +=.
    """
    if not isinstance(loss, Tensor) or loss.data.size != 1:
        shape = loss.shape if isinstance(loss, Tensor) else type(loss).__name__
        raise ContractError(f"backward needs a scalar loss, got {shape}")
    grads: dict[int, np.ndarray] = {}
    if loss.requires_grad:
        if loss.tape is not tape:
            raise ContractError("loss was recorded on a different tape")
        grads[id(loss)] = np.ones_like(loss.data)

    for node in reversed(tape.nodes):
        g = grads.pop(id(node.out), None)
        if g is None:
            continue
        for parent, pg in zip(node.parents, node.backward(g)):
            if pg is None or not isinstance(parent, Tensor) or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg

    logger.debug("backward visited %d nodes for %d params", len(tape.nodes), len(tape.params))
    return {name: np.array(grads.get(id(t), np.zeros_like(t.data)), dtype=np.float64)
            for name, t in tape.params.items()}
