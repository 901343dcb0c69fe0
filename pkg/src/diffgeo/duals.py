"""Forward-mode automatic differentiation with batched tangents.

A :class:`Dual` carries a value array of shape ``S`` and a tangent array of
shape ``S + (P,)`` holding directional derivatives along ``P`` independent
directions.  Math helpers in this module (``exp``, ``log``, ``softplus``,
``logsumexp``, ...) accept either plain numpy arrays or Duals, so numeric
code written against them works unchanged in both modes.

Conventions:
  * all Duals inside one expression share the same trailing tangent width P;
  * plain arrays and scalars act as constants (zero tangent);
  * indexing a Dual applies the index to the leading value axes, so avoid
    ``...`` in subscripts.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Dual", "seed", "exp", "log", "sqrt", "sin", "cos", "sigmoid",
    "softplus", "logsumexp", "dsum", "cumsum", "maximum", "minimum",
    "matmul", "concatenate", "value_of",
]


@dataclass
class Dual:
    val: np.ndarray
    tan: np.ndarray

    # Make `ndarray <op> Dual` defer to our reflected operators instead of
    # numpy silently building an object array.
    __array_ufunc__ = None

    def __post_init__(self):
        self.val = np.asarray(self.val, dtype=float)
        self.tan = np.asarray(self.tan, dtype=float)
        if self.tan.shape[:-1] != self.val.shape:
            # Allow broadcast-compatible tangents (e.g. scalar val, (P,) tan).
            self.tan = np.broadcast_to(
                self.tan, self.val.shape + (self.tan.shape[-1],)
            ).copy()

    @property
    def width(self) -> int:
        return self.tan.shape[-1]

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.tan + other.tan)
        return Dual(self.val + other, _keep(self.tan, np.shape(other), self.val.shape))

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.tan)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Dual) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(
                self.val * other.val,
                self.tan * other.val[..., None] + other.tan * self.val[..., None],
            )
        other = np.asarray(other, dtype=float)
        return Dual(self.val * other, self.tan * other[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.val
            val = self.val * inv
            tan = (self.tan - other.tan * val[..., None]) * inv[..., None]
            return Dual(val, tan)
        other = np.asarray(other, dtype=float)
        return Dual(self.val / other, self.tan / other[..., None])

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        val = np.asarray(other, dtype=float) * inv
        return Dual(val, -self.tan * (val * inv)[..., None])

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise TypeError("only constant exponents are supported")
        val = self.val**p
        return Dual(val, self.tan * (p * self.val ** (p - 1))[..., None])

    def __matmul__(self, w):
        return matmul(self, w)

    def __getitem__(self, idx):
        return Dual(self.val[idx], self.tan[idx])

    def unsqueeze(self, axis: int):
        """Insert a length-1 value axis (negative axes count value dims)."""
        ax = axis if axis >= 0 else self.val.ndim + 1 + axis
        return Dual(np.expand_dims(self.val, ax), np.expand_dims(self.tan, ax))

    def reshape(self, shape):
        return Dual(self.val.reshape(shape), self.tan.reshape(tuple(shape) + (-1,)))


def _keep(tan, other_shape, val_shape):
    """Tangent of dual+const; broadcast tan if the const widened the value."""
    out_shape = np.broadcast_shapes(val_shape, other_shape)
    if out_shape == val_shape:
        return tan
    return np.broadcast_to(tan, out_shape + (tan.shape[-1],)).copy()


def seed(val, tan) -> Dual:
    """Construct a Dual from a value and its tangent stack."""
    return Dual(np.asarray(val, dtype=float), np.asarray(tan, dtype=float))


def value_of(x):
    return x.val if isinstance(x, Dual) else x


def _unary(x, f, df):
    if isinstance(x, Dual):
        v = f(x.val)
        return Dual(v, x.tan * df(x.val, v)[..., None])
    return f(x)


def exp(x):
    return _unary(x, np.exp, lambda v, out: out)


def log(x):
    return _unary(x, np.log, lambda v, out: 1.0 / v)


def sqrt(x):
    return _unary(x, np.sqrt, lambda v, out: 0.5 / out)


def sin(x):
    return _unary(x, np.sin, lambda v, out: np.cos(v))


def cos(x):
    return _unary(x, np.cos, lambda v, out: -np.sin(v))


def _sigmoid(v):
    out = np.empty_like(v, dtype=float)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def sigmoid(x):
    if isinstance(x, Dual):
        s = sigmoid(x.val)
        return Dual(s, x.tan * (s * (1.0 - s))[..., None])
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        return float(_sigmoid(v[None])[0])
    return _sigmoid(v)


def softplus(x):
    """log(1 + e^x), overflow-safe."""
    if isinstance(x, Dual):
        return Dual(softplus(x.val), x.tan * sigmoid(x.val)[..., None])
    v = np.asarray(x, dtype=float)
    out = np.maximum(v, 0.0) + np.log1p(np.exp(-np.abs(v)))
    return float(out) if out.ndim == 0 else out


def logsumexp(x, axis: int):
    if isinstance(x, Dual):
        lse = logsumexp(x.val, axis)
        w = np.exp(x.val - np.expand_dims(lse, axis))
        tan = np.sum(w[..., None] * x.tan, axis=_norm_axis(axis, x.val.ndim))
        return Dual(lse, tan)
    m = np.max(x, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def _norm_axis(axis, ndim):
    return axis if axis >= 0 else ndim + axis


def dsum(x, axis=None):
    """Sum that accepts Duals (tangents reduce along the same value axis)."""
    if isinstance(x, Dual):
        if axis is None:
            return Dual(np.sum(x.val), np.sum(x.tan, axis=tuple(range(x.val.ndim))))
        return Dual(np.sum(x.val, axis=axis), np.sum(x.tan, axis=_norm_axis(axis, x.val.ndim)))
    return np.sum(x, axis=axis)


def cumsum(x, axis: int):
    if isinstance(x, Dual):
        ax = _norm_axis(axis, x.val.ndim)
        return Dual(np.cumsum(x.val, axis=ax), np.cumsum(x.tan, axis=ax))
    return np.cumsum(x, axis=axis)


def maximum(x, c: float):
    """max(x, c) for constant c; gradient 0 on the constant branch and ties."""
    if isinstance(x, Dual):
        mask = x.val > c
        return Dual(np.maximum(x.val, c), x.tan * mask[..., None])
    return np.maximum(x, c)


def minimum(x, c: float):
    if isinstance(x, Dual):
        mask = x.val < c
        return Dual(np.minimum(x.val, c), x.tan * mask[..., None])
    return np.minimum(x, c)


def matmul(x, w: np.ndarray):
    """x @ w for a constant matrix w."""
    if isinstance(x, Dual):
        return Dual(x.val @ w, np.einsum("...ip,ij->...jp", x.tan, w))
    return x @ w


def concatenate(parts, axis: int):
    if any(isinstance(p, Dual) for p in parts):
        width = next(p.width for p in parts if isinstance(p, Dual))
        vals, tans = [], []
        for p in parts:
            if not isinstance(p, Dual):
                p = Dual(np.asarray(p, dtype=float), np.zeros(np.shape(p) + (width,)))
            vals.append(p.val)
            tans.append(p.tan)
        ax = _norm_axis(axis, vals[0].ndim)
        return Dual(np.concatenate(vals, axis=ax), np.concatenate(tans, axis=ax))
    return np.concatenate(parts, axis=axis)
