"""
Finite-alphabet probability kernels.

All information measures are returned in nats. Joints are dense numpy
arrays with one axis per random variable; axis sets are plain iterables of
axis indices.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, InvalidDistribution

NORM_TOL = 1e-12


def _check_probs(probs, what="pmf"):
    if probs.size == 0:
        raise InvalidDistribution(f"{what} is empty")
    if not np.all(np.isfinite(probs)):
        raise InvalidDistribution(f"{what} has non-finite entries")
    if np.any(probs < 0):
        raise InvalidDistribution(f"{what} has negative entries")


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Dense joint pmf over the product of ``probs.shape`` alphabets."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.ndim == 0:
            raise InvalidDistribution("joint pmf needs at least one axis")
        _check_probs(probs, "joint pmf")
        total = probs.sum()
        if abs(total - 1.0) > NORM_TOL:
            raise InvalidDistribution(f"joint pmf sums to {total!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def axes(self):
        return self.probs.shape

    @property
    def ndim(self):
        return self.probs.ndim

    def marginal(self, keep):
        """Marginal over the axes in ``keep`` (in their original order)."""
        keep = _axis_set(keep, self.ndim)
        drop = tuple(a for a in range(self.ndim) if a not in keep)
        return JointPmf(self.probs.sum(axis=drop))


class Pmf(JointPmf):
    """Probability vector over a single finite alphabet."""

    def __post_init__(self):
        super().__post_init__()
        if self.probs.ndim != 1:
            raise InvalidDistribution("pmf must be one-dimensional")

    @property
    def alphabet_size(self):
        return self.probs.shape[0]


@dataclass(frozen=True, eq=False)
class ConditionalKernel:
    """Row-stochastic matrix; ``rows[a]`` is the pmf of the output given input ``a``."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2:
            raise InvalidDistribution("kernel must be a 2-D matrix")
        _check_probs(rows, "kernel")
        sums = rows.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > NORM_TOL)
        if bad.size:
            raise InvalidDistribution(
                f"kernel row {bad[0]} sums to {sums[bad[0]]!r}, not 1")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def input_size(self):
        return self.rows.shape[0]

    @property
    def output_size(self):
        return self.rows.shape[1]

    def row(self, a):
        return Pmf(self.rows[a])


def _axis_set(axes, ndim):
    out = set()
    for a in axes:
        if isinstance(a, bool) or not isinstance(a, (int, np.integer)):
            raise InvalidArgument(f"axis {a!r} is not an integer")
        if not 0 <= a < ndim:
            raise InvalidArgument(f"axis {a} out of range for {ndim}-axis joint")
        out.add(int(a))
    return frozenset(out)


def _disjoint(*sets):
    seen = set()
    for s in sets:
        if seen & s:
            raise InvalidArgument(f"axis sets overlap on {sorted(seen & s)}")
        seen |= s


def _as_array(joint):
    return joint.probs if isinstance(joint, JointPmf) else np.asarray(joint, dtype=float)


def _marginal_entropy(p, keep):
    """H of the marginal on ``keep``; ``p`` is a raw array assumed valid."""
    drop = tuple(a for a in range(p.ndim) if a not in keep)
    m = p.sum(axis=drop) if drop else p
    m = m[m > 0]
    return float(-np.sum(m * np.log(m)))


def entropy(joint, target_axes, given_axes=()):
    """H(T | G) in nats.

    Computed as sum_{t,g} p(t,g) ln(p(g)/p(t,g)) with 0 ln 0 = 0; with no
    conditioning axes this is the plain entropy of the target marginal.
    """
    p = _as_array(joint)
    t = _axis_set(target_axes, p.ndim)
    g = _axis_set(given_axes, p.ndim)
    _disjoint(t, g)
    if not t:
        return 0.0
    drop = tuple(a for a in range(p.ndim) if a not in t | g)
    ptg = p.sum(axis=drop, keepdims=True) if drop else p
    gdrop = tuple(sorted(t))
    pg = ptg.sum(axis=gdrop, keepdims=True)
    pg = np.broadcast_to(pg, ptg.shape)
    mask = ptg > 0
    return float(np.sum(ptg[mask] * np.log(pg[mask] / ptg[mask])))


def mutual_information(joint, axes_a, axes_b, given_axes=()):
    """I(A; B | G) in nats, clamped at zero from below."""
    p = _as_array(joint)
    a = _axis_set(axes_a, p.ndim)
    b = _axis_set(axes_b, p.ndim)
    g = _axis_set(given_axes, p.ndim)
    _disjoint(a, b, g)
    if not a or not b:
        return 0.0
    val = entropy(p, a, g) - entropy(p, a, b | g)
    return max(val, 0.0)


def csiszar_sum_check(joint):
    """Both sides of the Csiszar sum identity for a joint over (X_1..X_n, Y_1..Y_n).

    Axes ``0..n-1`` hold X_1..X_n and axes ``n..2n-1`` hold Y_1..Y_n.
    Returns ``(lhs, rhs)`` with

        lhs = sum_i I(X_{i+1}^n ; Y_i | Y^{i-1})
        rhs = sum_i I(Y^{i-1} ; X_i | X_{i+1}^n)
    """
    p = _as_array(joint)
    if p.ndim % 2:
        raise InvalidArgument(f"expected an even number of axes, got {p.ndim}")
    n = p.ndim // 2
    xs = list(range(n))
    ys = list(range(n, 2 * n))
    lhs = rhs = 0.0
    for i in range(n):
        x_future = xs[i + 1:]
        y_past = ys[:i]
        lhs += mutual_information(p, x_future, [ys[i]], y_past)
        rhs += mutual_information(p, y_past, [xs[i]], x_future)
    return lhs, rhs


def bits(nats):
    return nats / np.log(2.0)


def nats(bits_):
    return bits_ * np.log(2.0)
