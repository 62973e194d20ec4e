"""
Single-letter rate region of the noisy/noiseless-relay diamond channel.

A distribution is given by its three factors p(u,x), p(y|x) and p(z|u,y);
the full joint is laid out with axes (U, Z, X, Y).
"""
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .channel import capacity_input, channel_from_dict
from .errors import InvalidArgument, InvalidDistribution
from .prob import (ConditionalKernel, JointPmf, _marginal_entropy, entropy,
                   mutual_information)

U, Z, X, Y = 0, 1, 2, 3
FEAS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DiamondDistribution:
    """p(u,x) p(y|x) p(z|u,y); ``p_z_given_uy`` rows are indexed by u*|Y| + y."""

    p_ux: JointPmf
    channel: object
    p_z_given_uy: ConditionalKernel

    def __post_init__(self):
        if not isinstance(self.p_ux, JointPmf):
            object.__setattr__(self, "p_ux", JointPmf(self.p_ux))
        if not isinstance(self.p_z_given_uy, ConditionalKernel):
            object.__setattr__(self, "p_z_given_uy", ConditionalKernel(self.p_z_given_uy))
        if self.p_ux.ndim != 2:
            raise InvalidArgument("p_ux must be a |U| x |X| matrix")
        nu, nx = self.p_ux.axes
        if nx != self.channel.input_alphabet:
            raise InvalidArgument(
                f"p_ux has |X|={nx} but channel input alphabet is {self.channel.input_alphabet}")
        ny = self.channel.output_alphabet
        if self.p_z_given_uy.input_size != nu * ny:
            raise InvalidArgument(
                f"p_z_given_uy has {self.p_z_given_uy.input_size} rows, "
                f"expected |U|*|Y| = {nu * ny}")

    @property
    def card_u(self):
        return self.p_ux.axes[0]

    @property
    def card_x(self):
        return self.p_ux.axes[1]

    @property
    def card_y(self):
        return self.channel.output_alphabet

    @property
    def card_z(self):
        return self.p_z_given_uy.output_size

    def to_dict(self):
        return {
            "p_ux": self.p_ux.probs.tolist(),
            "channel": self.channel.to_dict(),
            "p_z_given_uy": self.p_z_given_uy.rows.tolist(),
        }


def distribution_from_dict(d):
    try:
        return DiamondDistribution(
            JointPmf(np.asarray(d["p_ux"], dtype=float)),
            channel_from_dict(d["channel"]),
            ConditionalKernel(np.asarray(d["p_z_given_uy"], dtype=float)),
        )
    except KeyError as exc:
        raise InvalidArgument(f"distribution file is missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidArgument):
            raise
        raise InvalidDistribution(f"malformed distribution: {exc}") from None


def load_distribution(path):
    with open(path) as fh:
        return distribution_from_dict(json.load(fh))


def _joint_array(p_ux, W, K):
    nu = p_ux.shape[0]
    ny = W.shape[1]
    K3 = K.reshape(nu, ny, -1)
    return np.einsum("ux,xy,uyz->uzxy", p_ux, W, K3)


def joint_from_factors(dist):
    """Full joint p(u,z,x,y) = p(u,x) p(y|x) p(z|u,y) with axes (U, Z, X, Y)."""
    return JointPmf(_joint_array(dist.p_ux.probs, dist.channel.matrix,
                                 dist.p_z_given_uy.rows))


@dataclass(frozen=True)
class RegionEval:
    b1: float      # I(U;Y) + H(X|U)
    b2: float      # I(Z;Y|U,X)
    b3: float      # H(X|Z,U)
    b4: float      # I(Y;Z|X,U)
    i_uy: float    # I(U;Y)
    i_yz_u: float  # I(Y;Z|U)
    i_xz_u: float  # I(X;Z|U)

    def as_dict(self):
        return dict(self.__dict__)


@dataclass(frozen=True)
class RateTriple:
    r: float
    r1: float
    r2: float

    def __post_init__(self):
        if min(self.r, self.r1, self.r2) < 0:
            raise InvalidArgument(f"rates must be nonnegative, got {self}")


def evaluate_bounds(dist):
    p = joint_from_factors(dist).probs
    i_uy = mutual_information(p, [U], [Y])
    return RegionEval(
        b1=i_uy + entropy(p, [X], [U]),
        b2=mutual_information(p, [Z], [Y], [U, X]),
        b3=entropy(p, [X], [Z, U]),
        b4=mutual_information(p, [Y], [Z], [X, U]),
        i_uy=i_uy,
        i_yz_u=mutual_information(p, [Y], [Z], [U]),
        i_xz_u=mutual_information(p, [X], [Z], [U]),
    )


def _fast_bounds(p):
    """(b1, b2, b3) straight from marginal entropies of a raw (U,Z,X,Y) array.

    Used inside the optimizer loop where validation overhead matters; b4
    equals b2 and is not returned separately.
    """
    h = lambda *axes: _marginal_entropy(p, axes)
    h_ux = h(U, X)
    h_uxz = h(U, X, Z)
    b1 = h(Y) - h(U, Y) + h_ux
    b2 = h_uxz + h(U, X, Y) - _marginal_entropy(p, (U, Z, X, Y)) - h_ux
    b3 = h_uxz - h(U, Z)
    return b1, max(b2, 0.0), max(b3, 0.0)


def check_triple(t, e, tol=FEAS_TOL):
    """Whether ``t`` satisfies all four region inequalities for evaluation ``e``."""
    return bool(
        t.r <= e.b1 + tol
        and t.r1 >= e.b2 - tol
        and t.r2 >= e.b3 - tol
        and t.r1 + t.r2 >= t.r + e.b4 - tol
    )


def corner_points(e, r):
    """Corners a' and b' of the (R1, R2) region for message rate ``r``.

    a' is the decode-and-compress operating point; its R2 coordinate is
    clamped at zero. b' sends everything over the noiseless relay.
    """
    if r < 0:
        raise InvalidArgument(f"rate must be nonnegative, got {r}")
    a = (e.i_uy + e.i_yz_u, max(0.0, r - e.i_uy - e.i_xz_u))
    b = (0.0, float(r))
    return a, b


def _min_cut(W, p, r1, r2):
    q = p @ W
    hx = -np.sum(p[p > 0] * np.log(p[p > 0]))
    hy = -np.sum(q[q > 0] * np.log(q[q > 0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        hyx = -np.sum(np.where(W > 0, W * np.log(W), 0.0), axis=1) @ p
    return min(hx, hy - hyx + r2, r1 + r2)


def _softmax(theta):
    z = np.concatenate(([0.0], theta))
    z = np.exp(z - z.max())
    return z / z.sum()


def cut_set_bound(channel, r1, r2, restarts=8, seed=0):
    """max over p(x) of min(H(X), I(X;Y) + r2, r1 + r2), in nats.

    The objective is concave in p(x), so a handful of local searches from
    structured and random starts reaches the maximum.
    """
    if r1 < 0 or r2 < 0:
        raise InvalidArgument("link rates must be nonnegative")
    W = channel.matrix
    nx = W.shape[0]
    cap = r1 + r2
    if nx == 1:
        return 0.0
    starts = [np.full(nx, 1.0 / nx), capacity_input(channel)[0]]
    rng = np.random.default_rng(seed)
    starts += list(rng.dirichlet(np.ones(nx), size=restarts))

    def neg(theta):
        return -_min_cut(W, _softmax(theta), r1, r2)

    best = -np.inf
    for p0 in starts:
        p0 = np.clip(p0, 1e-12, None)
        lp = np.log(p0 / p0.sum())
        theta0 = lp[1:] - lp[0]
        best = max(best, -neg(theta0))
        res = minimize(neg, theta0, method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-14, "maxiter": 4000 * nx,
                                "adaptive": nx > 3})
        best = max(best, -res.fun)
        if best >= cap:
            break
    return float(max(0.0, min(best, cap)))


def dual_bounds(dist):
    """Rate constraints of the dual multiterminal source coding problem.

    Returns (I(U;X|Y), I(Z;Y|U,X), H(X|Z,U), I(X,Y; U,X,Z)).
    """
    p = joint_from_factors(dist).probs
    r0 = mutual_information(p, [U], [X], [Y])
    r1 = mutual_information(p, [Z], [Y], [U, X])
    r2 = entropy(p, [X], [Z, U])
    # I(X,Y; U,X,Z) = H(X,Y) - H(X,Y | U,X,Z) = H(X,Y) - H(Y | U,X,Z)
    total = max(entropy(p, [X, Y]) - entropy(p, [Y], [U, X, Z]), 0.0)
    return r0, r1, r2, total
