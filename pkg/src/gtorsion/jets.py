"""Second-order forward-mode jets.

A :class:`Jet` carries the value of an array-valued function together with its
exact first and second partial derivatives with respect to the chart
coordinates::

    val  : shape S
    d1   : shape S + (n,)      d1[..., k]    = d_k f
    d2   : shape S + (n, n)    d2[..., k, l] = d_k d_l f

Scenario closures are written once against the small helper vocabulary in this
module (``sin``, ``cos``, ``stack``, ``inv``, ``eye``, ...). Called on a plain
ndarray they return plain values; called on :func:`variable` they return exact
jets, which is what the ``analytic`` differentiation backend uses.
"""

import numpy as np


class Jet:
    __array_priority__ = 1000
    __array_ufunc__ = None  # make ndarray binops defer to the reflected Jet ops

    def __init__(self, val, d1, d2):
        self.val = np.asarray(val, dtype=float)
        self.d1 = np.asarray(d1, dtype=float)
        self.d2 = np.asarray(d2, dtype=float)

    @property
    def nvars(self):
        return self.d1.shape[-1]

    @property
    def shape(self):
        return self.val.shape

    @property
    def ndim(self):
        return self.val.ndim

    def __repr__(self):
        return f"Jet(shape={self.shape}, nvars={self.nvars})"

    # -- construction helpers -------------------------------------------------

    @classmethod
    def constant(cls, value, nvars):
        value = np.asarray(value, dtype=float)
        return cls(value, np.zeros(value.shape + (nvars,)), np.zeros(value.shape + (nvars, nvars)))

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.nvars)

    def _broadcast(self, shape):
        if self.shape == shape:
            return self
        n = self.nvars
        return Jet(
            np.broadcast_to(self.val, shape),
            np.broadcast_to(self.d1, shape + (n,)),
            np.broadcast_to(self.d2, shape + (n, n)),
        )

    # -- elementwise arithmetic ----------------------------------------------

    def __neg__(self):
        return Jet(-self.val, -self.d1, -self.d2)

    def __add__(self, other):
        other = self._lift(other)
        shape = np.broadcast_shapes(self.shape, other.shape)
        a, b = self._broadcast(shape), other._broadcast(shape)
        return Jet(a.val + b.val, a.d1 + b.d1, a.d2 + b.d2)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            return Jet(self.val * c, self.d1 * c[..., None], self.d2 * c[..., None, None])
        shape = np.broadcast_shapes(self.shape, other.shape)
        a, b = self._broadcast(shape), other._broadcast(shape)
        av, bv = a.val[..., None], b.val[..., None]
        d1 = a.d1 * bv + av * b.d1
        d2 = (
            a.d2 * bv[..., None]
            + av[..., None] * b.d2
            + a.d1[..., :, None] * b.d1[..., None, :]
            + b.d1[..., :, None] * a.d1[..., None, :]
        )
        return Jet(a.val * b.val, d1, d2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        p = float(p)
        if p == 2.0:
            return self * self
        v = self.val
        return self.apply(v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def apply(self, f, df, d2f):
        """Chain rule for an elementwise scalar map given f, f', f'' at val."""
        df = np.asarray(df)[..., None]
        d1 = df * self.d1
        d2 = df[..., None] * self.d2 + np.asarray(d2f)[..., None, None] * (
            self.d1[..., :, None] * self.d1[..., None, :]
        )
        return Jet(f, d1, d2)

    def reciprocal(self):
        r = 1.0 / self.val
        return self.apply(r, -(r**2), 2.0 * r**3)

    # -- array structure ------------------------------------------------------

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis or k is None for k in key):
            raise IndexError("Jet indexing supports only leading-axis keys")
        return Jet(self.val[key], self.d1[key], self.d2[key])

    @property
    def T(self):
        if self.ndim != 2:
            raise ValueError("transpose is defined for matrix jets only")
        return Jet(self.val.T, self.d1.transpose(1, 0, 2), self.d2.transpose(1, 0, 2, 3))

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        n = self.nvars
        return Jet(
            self.val.reshape(shape),
            self.d1.reshape(tuple(shape) + (n,)),
            self.d2.reshape(tuple(shape) + (n, n)),
        )

    def sum(self, axis=None):
        if axis is None:
            axes = tuple(range(self.ndim))
        else:
            axes = (axis,) if np.isscalar(axis) else tuple(axis)
        return Jet(self.val.sum(axis=axes), self.d1.sum(axis=axes), self.d2.sum(axis=axes))

    # -- linear algebra -------------------------------------------------------

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)


def variable(x):
    """Identity jet at ``x``: the seed for differentiating a closure."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    return Jet(x.copy(), np.eye(n), np.zeros((n, n, n)))


def is_jet(x):
    return isinstance(x, Jet)


def value(x):
    return x.val if isinstance(x, Jet) else np.asarray(x, dtype=float)


def matmul(a, b):
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.asarray(a) @ np.asarray(b)
    n = a.nvars if isinstance(a, Jet) else b.nvars
    a = a if isinstance(a, Jet) else Jet.constant(a, n)
    b = b if isinstance(b, Jet) else Jet.constant(b, n)
    vec = b.ndim == 1
    if vec:
        b = Jet(b.val[:, None], b.d1[:, None, :], b.d2[:, None, :, :])
    val = a.val @ b.val
    d1 = np.einsum("ijk,jl->ilk", a.d1, b.val) + np.einsum("ij,jlk->ilk", a.val, b.d1)
    d2 = (
        np.einsum("ijkm,jl->ilkm", a.d2, b.val)
        + np.einsum("ij,jlkm->ilkm", a.val, b.d2)
        + np.einsum("ijk,jlm->ilkm", a.d1, b.d1)
        + np.einsum("ijm,jlk->ilkm", a.d1, b.d1)
    )
    out = Jet(val, d1, d2)
    return out[:, 0] if vec else out


def inv(a):
    if not isinstance(a, Jet):
        return np.linalg.inv(a)
    ai = np.linalg.inv(a.val)
    # d_k(A^-1) = -A^-1 (d_k A) A^-1
    t = np.einsum("ij,jlk->ilk", ai, a.d1)  # A^-1 d_k A
    d1 = -np.einsum("ilk,lm->imk", t, ai)
    tt = np.einsum("ilk,lmq->imkq", t, t)  # A^-1 dA_k A^-1 dA_q
    d2 = (
        np.einsum("imkq,mr->irkq", tt, ai)
        + np.einsum("imqk,mr->irkq", tt, ai)
        - np.einsum("ij,jlkq,lm->imkq", ai, a.d2, ai)
    )
    return Jet(ai, d1, d2)


def sin(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.val), np.cos(x.val)
        return x.apply(s, c, -s)
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.val), np.cos(x.val)
        return x.apply(c, -s, -c)
    return np.cos(x)


def sqrt(x):
    if isinstance(x, Jet):
        r = np.sqrt(x.val)
        return x.apply(r, 0.5 / r, -0.25 / r**3)
    return np.sqrt(x)


def dot(a, b):
    """Sum of elementwise products over the full (1-D) arrays."""
    if isinstance(a, Jet) or isinstance(b, Jet):
        prod = a * b if isinstance(a, Jet) else b * a
        return prod.sum()
    return float(np.dot(a, b))


def stack(items, axis=0):
    """``np.stack`` for a mixed list of jets and constants (leading axes only)."""
    jets = [it for it in items if isinstance(it, Jet)]
    if not jets:
        return np.stack([np.asarray(it, dtype=float) for it in items], axis=axis)
    n = jets[0].nvars
    lifted = [it if isinstance(it, Jet) else Jet.constant(it, n) for it in items]
    shape = np.broadcast_shapes(*(j.shape for j in lifted))
    lifted = [j._broadcast(shape) for j in lifted]
    if axis < 0:
        axis += len(shape) + 1
    return Jet(
        np.stack([j.val for j in lifted], axis=axis),
        np.stack([j.d1 for j in lifted], axis=axis),
        np.stack([j.d2 for j in lifted], axis=axis),
    )


def eye(n, like=None):
    e = np.eye(n)
    if isinstance(like, Jet):
        return Jet.constant(e, like.nvars)
    return e


def jet_of(fn, x):
    """Evaluate ``fn`` on a seeded jet and return (value, d1, d2) arrays."""
    out = fn(variable(x))
    if not isinstance(out, Jet):
        out = Jet.constant(out, len(x))
    return out.val, out.d1, out.d2
