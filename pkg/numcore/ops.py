# numcore/ops.py
# Differentiable operations. Each op computes with numpy and, when any input is
# on a tape, records a closure mapping the output gradient to input gradients.
import numpy as np
from scipy.special import expit

from core.errors import ContractError, DimensionError
from numcore.tensor import Tensor, make_result


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _binary(op: str, a, b):
    a, b = as_tensor(a), as_tensor(b)
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(op, a.shape, b.shape)
    return a, b


# ─────────────────────────────────────────────────────
# Elementwise
# ─────────────────────────────────────────────────────
def add(a, b) -> Tensor:
    a, b = _binary("add", a, b)
    return make_result(a.data + b.data, (a, b),
                       lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = _binary("sub", a, b)
    return make_result(a.data - b.data, (a, b),
                       lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = _binary("mul", a, b)
    return make_result(a.data * b.data, (a, b),
                       lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def div(a, b) -> Tensor:
    a, b = _binary("div", a, b)
    out = a.data / b.data
    return make_result(out, (a, b),
                       lambda g: (_unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)))


def neg(a) -> Tensor:
    a = as_tensor(a)
    return make_result(-a.data, (a,), lambda g: (-g,))


def pow_(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    p = float(exponent)
    return make_result(a.data ** p, (a,), lambda g: (g * p * a.data ** (p - 1.0),))


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return make_result(out, (a,), lambda g: (g * out,))


def log(a) -> Tensor:
    a = as_tensor(a)
    return make_result(np.log(a.data), (a,), lambda g: (g / a.data,))


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    out = np.sqrt(a.data)
    return make_result(out, (a,), lambda g: (0.5 * g / out,))


def abs_(a) -> Tensor:
    a = as_tensor(a)
    return make_result(np.abs(a.data), (a,), lambda g: (g * np.sign(a.data),))


def silu(a) -> Tensor:
    a = as_tensor(a)
    s = expit(a.data)
    return make_result(a.data * s, (a,), lambda g: (g * (s + a.data * s * (1.0 - s)),))


# ─────────────────────────────────────────────────────
# Linear algebra
# ─────────────────────────────────────────────────────
def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError("matmul", a.shape, b.shape)
    return make_result(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def _parse_einsum(subscripts: str, operands: list[Tensor]) -> tuple[list[str], str]:
    if "->" not in subscripts or "." in subscripts:
        raise ContractError(f"einsum needs explicit output and no ellipsis: '{subscripts}'")
    lhs, out = subscripts.replace(" ", "").split("->")
    inputs = lhs.split(",")
    if len(inputs) != len(operands):
        raise ContractError(f"einsum '{subscripts}' expects {len(inputs)} operands, got {len(operands)}")
    for subs, t in zip(inputs, operands):
        if len(subs) != t.ndim:
            raise DimensionError(f"einsum '{subscripts}'", *(o.shape for o in operands))
        if len(set(subs)) != len(subs):
            raise ContractError(f"einsum '{subscripts}': repeated index within one operand")
    for k, subs in enumerate(inputs):
        elsewhere = set(out).union(*(set(s) for m, s in enumerate(inputs) if m != k))
        if not set(subs) <= elsewhere:
            raise ContractError(f"einsum '{subscripts}': index summed within a single operand")
    return inputs, out


def einsum(subscripts: str, *operands) -> Tensor:
    ts = [as_tensor(o) for o in operands]
    inputs, out_subs = _parse_einsum(subscripts, ts)
    optimize = len(ts) > 2
    try:
        data = np.einsum(subscripts, *(t.data for t in ts), optimize=optimize)
    except ValueError:
        raise DimensionError(f"einsum '{subscripts}'", *(t.shape for t in ts))

    def backward(g):
        grads = []
        for k, t in enumerate(ts):
            if not t.requires_grad:
                grads.append(None)
                continue
            others = [m for m in range(len(ts)) if m != k]
            grad_subs = ",".join([out_subs] + [inputs[m] for m in others]) + "->" + inputs[k]
            grads.append(np.einsum(grad_subs, g, *(ts[m].data for m in others), optimize=optimize))
        return tuple(grads)

    return make_result(np.asarray(data, dtype=np.float64), tuple(ts), backward)


# ─────────────────────────────────────────────────────
# Reductions and shape
# ─────────────────────────────────────────────────────
def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape),)

    return make_result(out, (a,), backward)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([a.shape[ax] for ax in axes]))
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    return make_result(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes) -> Tensor:
    a = as_tensor(a)
    inverse = np.argsort(axes)
    return make_result(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def take(a, index, axis: int = 0) -> Tensor:
    """Gather along `axis` with an integer index array (embedding lookup, reordering)."""
    a = as_tensor(a)
    idx = np.asarray(index, dtype=np.intp)

    def backward(g):
        grad = np.zeros_like(a.data)
        np.add.at(np.moveaxis(grad, axis, 0), idx, np.moveaxis(g, axis, 0))
        return (grad,)

    return make_result(np.take(a.data, idx, axis=axis), (a,), backward)


def take_along(a, index, axis: int) -> Tensor:
    """np.take_along_axis with a gradient; `index` has the rank of `a` and broadcasts against it."""
    a = as_tensor(a)
    idx = np.asarray(index, dtype=np.intp)
    if idx.ndim != a.ndim:
        raise DimensionError("take_along", a.shape, idx.shape)

    def backward(g):
        grad = np.zeros_like(a.data)
        coords = list(np.indices(g.shape, sparse=True))
        coords[axis] = np.broadcast_to(idx, g.shape)
        np.add.at(grad, tuple(coords), g)
        return (grad,)

    return make_result(np.take_along_axis(a.data, idx, axis=axis), (a,), backward)


def concat(tensors, axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    try:
        data = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        raise DimensionError("concat", *(t.shape for t in ts))
    cuts = np.cumsum([t.shape[axis] for t in ts])[:-1]
    return make_result(data, tuple(ts), lambda g: tuple(np.split(g, cuts, axis=axis)))


# ─────────────────────────────────────────────────────
# Normalized exponentials
# ─────────────────────────────────────────────────────
def softmax_rows(a) -> Tensor:
    """Softmax over the last axis with row-max subtraction."""
    a = as_tensor(a)
    e = np.exp(a.data - a.data.max(axis=-1, keepdims=True))
    s = e / e.sum(axis=-1, keepdims=True)
    return make_result(s, (a,), lambda g: (s * (g - (g * s).sum(axis=-1, keepdims=True)),))


def log_softmax(a) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = shifted - lse
    s = np.exp(out)
    return make_result(out, (a,), lambda g: (g - s * g.sum(axis=-1, keepdims=True),))
