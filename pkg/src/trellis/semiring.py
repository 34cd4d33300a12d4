"""Commutative pre-semirings used by the generic reduction engine.

Each instance supplies a binary combine (ring-product) and an axis
reduction (ring-sum) over numpy tables. Identities are not required;
reductions are only ever taken over non-empty axes. Values are plain
floats except for the dual instance, whose tables carry a trailing
axis of length 2 holding (real, dual) parts.
"""

import numpy as np


class DualNumber:
    """Scalar dual number a + eps*b, matrix form [[a, b], [0, a]]."""

    __slots__ = ("a", "b")

    def __init__(self, a, b=0.0):
        self.a = float(a)
        self.b = float(b)

    @classmethod
    def from_angle(cls, a, t):
        """Polar form a angle t with t = b/a."""
        return cls(a, a * t)

    @property
    def angle(self):
        return self.b / self.a

    def __add__(self, other):
        return DualNumber(self.a + other.a, self.b + other.b)

    def __mul__(self, other):
        return DualNumber(self.a * other.a, self.a * other.b + self.b * other.a)

    def to_matrix(self):
        return np.array([[self.a, self.b], [0.0, self.a]])

    def __repr__(self):
        return "DualNumber(%r, %r)" % (self.a, self.b)


class Semiring:
    """A validated (ring-sum, ring-product) pair acting on numpy tables.

    tail_dims is the number of trailing non-variable axes in a value
    table (1 for the dual instance, else 0).
    """

    def __init__(self, name, combine, reduce_axis, sample, tail_dims=0):
        self.name = name
        self._combine = combine
        self._reduce_axis = reduce_axis
        self._sample = sample
        self.tail_dims = tail_dims

    def combine(self, x, y):
        return self._combine(x, y)

    def reduce_axis(self, table, axis):
        return self._reduce_axis(table, axis)

    def sample(self, rng, shape):
        return self._sample(rng, shape)

    def __repr__(self):
        return "Semiring(%s)" % self.name


def _dual_combine(x, y):
    out = np.empty(np.broadcast_shapes(x.shape, y.shape))
    out[..., 0] = x[..., 0] * y[..., 0]
    out[..., 1] = x[..., 0] * y[..., 1] + x[..., 1] * y[..., 0]
    return out


def _build(name):
    if name == "sum-product":
        return Semiring(
            name,
            np.multiply,
            lambda t, ax: np.add.reduce(t, axis=ax),
            lambda rng, shape: rng.uniform(0.1, 2.0, shape),
        )
    if name == "max-product":
        return Semiring(
            name,
            np.multiply,
            lambda t, ax: np.maximum.reduce(t, axis=ax),
            lambda rng, shape: rng.uniform(0.1, 2.0, shape),
        )
    if name == "max-sum":
        return Semiring(
            name,
            np.add,
            lambda t, ax: np.maximum.reduce(t, axis=ax),
            lambda rng, shape: rng.uniform(-3.0, 3.0, shape),
        )
    if name == "dual":
        return Semiring(
            name,
            _dual_combine,
            lambda t, ax: np.add.reduce(t, axis=ax),
            lambda rng, shape: rng.uniform(-2.0, 2.0, tuple(shape) + (2,)),
            tail_dims=1,
        )
    raise KeyError("unknown semiring %r" % name)


def check_laws(sr, rng=None, triples=100, rtol=1e-9):
    """Spot-check commutativity, associativity and distributivity.

    The laws are contracts over the whole domain; this samples them on
    random triples rather than proving them.
    """
    rng = rng or np.random.default_rng(0)
    for _ in range(triples):
        a, b, c = (sr.sample(rng, ()) for _ in range(3))
        a, b, c = (np.asarray(v) for v in (a, b, c))
        pairs = [
            (sr.combine(a, b), sr.combine(b, a)),
            (sr.combine(sr.combine(a, b), c), sr.combine(a, sr.combine(b, c))),
        ]
        # ring-sum on scalars via stacked reduction
        def rsum(x, y):
            return sr.reduce_axis(np.stack([x, y]), 0)

        pairs.append((rsum(a, b), rsum(b, a)))
        pairs.append((rsum(rsum(a, b), c), rsum(a, rsum(b, c))))
        pairs.append(
            (sr.combine(a, rsum(b, c)), rsum(sr.combine(a, b), sr.combine(a, c)))
        )
        for lhs, rhs in pairs:
            if not np.allclose(lhs, rhs, rtol=rtol, atol=1e-12):
                raise AssertionError(
                    "semiring %s law violation: %r vs %r" % (sr.name, lhs, rhs)
                )
    return True


ALL_SEMIRINGS = ("sum-product", "max-product", "max-sum", "dual")

_cache = {}


def semiring(name):
    """Return the named instance, validating its laws on first use."""
    if name not in _cache:
        sr = _build(name)
        check_laws(sr)
        _cache[name] = sr
    return _cache[name]
