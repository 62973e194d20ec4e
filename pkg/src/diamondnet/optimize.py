"""
Capacity lower bounds by multi-start local search over the rate region.

For link rates (r1, r2) the achievable message rate of a distribution is
min(b1, r1 + r2 - b4) provided b2 <= r1 and b3 <= r2. Distributions are
parameterised by row-wise normalised exponentials of free logits, one block
for p(u,x) (a single simplex over |U||X| cells) and one row per (u, y) for
p(z|u,y).

Each restart first runs a short screening search; the most promising
restarts (ranked by the exact-penalty objective) are then polished with the
remaining iteration budget. Restart 0 is seeded at the decode-and-forward
point (U = X, Z constant) and restart 1 at the routing point (U and Z
constant), and both seeds are also scored exactly, so the result is never
below those baselines.
"""
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .channel import capacity_input
from .errors import InvalidArgument
from .prob import ConditionalKernel, JointPmf, Pmf
from .region import (FEAS_TOL, DiamondDistribution, U, X, Y, Z, _fast_bounds,
                     _joint_array, evaluate_bounds)

log = logging.getLogger(__name__)

SATURATION = 30.0
LOGIT_BOUND = 40.0


@dataclass
class OptimizerConfig:
    restarts: int = 64
    max_iterations: int = 2000
    convergence_tol: float = 1e-7
    penalty_weight: float = 10.0
    seed: int = 0
    card_u: int = None
    card_z: int = None
    unsafe: bool = False
    screen_iterations: int = 30
    polish: int = 8
    n_jobs: int = 1

    def resolved_cards(self, channel):
        nx, ny = channel.input_alphabet, channel.output_alphabet
        cu = nx + 4 if self.card_u is None else int(self.card_u)
        cz = cu * ny + 3 if self.card_z is None else int(self.card_z)
        if cu < 1 or cz < 1:
            raise InvalidArgument("auxiliary cardinalities must be positive")
        if not self.unsafe:
            if cu > nx + 4:
                raise InvalidArgument(f"|U|={cu} exceeds |X|+4={nx + 4}")
            if cz > cu * ny + 3:
                raise InvalidArgument(f"|Z|={cz} exceeds |U||Y|+3={cu * ny + 3}")
        return cu, cz

    def validate(self):
        if self.restarts < 1 or self.max_iterations < 1:
            raise InvalidArgument("restarts and max_iterations must be positive")
        if self.penalty_weight <= 0:
            raise InvalidArgument("penalty_weight must be positive")
        if self.convergence_tol <= 0:
            raise InvalidArgument("convergence_tol must be positive")


@dataclass
class OptimizationResult:
    best_rate: float
    best_dist: DiamondDistribution
    per_restart_rates: list = field(default_factory=list)
    feasible: bool = True
    iterations_used: int = 0


def simplex_embed(free_params):
    """Pmf from free logits; the first coordinate's logit is pinned at 0."""
    return Pmf(_softmax_rows(np.asarray(free_params, dtype=float)))


def _softmax_rows(t):
    t = np.concatenate([np.zeros(t.shape[:-1] + (1,)), t], axis=-1)
    t = np.exp(t - t.max(axis=-1, keepdims=True))
    return t / t.sum(axis=-1, keepdims=True)


def _logits(p):
    """Inverse of the embedding, with zeros mapped to -SATURATION."""
    p = np.asarray(p, dtype=float)
    lp = np.log(np.maximum(p, np.exp(-SATURATION) * p.max(axis=-1, keepdims=True)))
    return (lp - lp[..., :1])[..., 1:]


def penalized_objective(dist, r1, r2, weight):
    if weight <= 0:
        raise InvalidArgument("penalty weight must be positive")
    e = evaluate_bounds(dist)
    return (min(e.b1, r1 + r2 - e.b4)
            - weight * max(0.0, e.b2 - r1)
            - weight * max(0.0, e.b3 - r2))


# entropy terms (marginal axes, sign) making up each bound
_TERMS = {
    "b1": (((Y,), 1), ((U, Y), -1), ((U, X), 1)),
    "b2": (((U, X, Z), 1), ((U, X, Y), 1), ((U, Z, X, Y), -1), ((U, X), -1)),
    "b3": (((U, X, Z), 1), ((U, Z), -1)),
}


class _Problem:
    """Bounds and their logit gradients for a fixed channel and cardinalities."""

    def __init__(self, channel, card_u, card_z, r1, r2):
        self.W = channel.matrix
        self.channel = channel
        self.nx, self.ny = self.W.shape
        self.nu, self.nz = card_u, card_z
        self.r1, self.r2 = r1, r2
        self.k = self.nu * self.nx - 1
        self.dim = self.k + self.nu * self.ny * (self.nz - 1)
        self._key = None

    def factors(self, theta):
        p_ux = _softmax_rows(theta[:self.k]).reshape(self.nu, self.nx)
        K = _softmax_rows(theta[self.k:].reshape(self.nu * self.ny, self.nz - 1))
        return p_ux, K

    def theta_of(self, p_ux, K):
        return np.concatenate([_logits(np.ravel(p_ux)), _logits(K).ravel()])

    def distribution(self, theta):
        p_ux, K = self.factors(theta)
        return DiamondDistribution(JointPmf(p_ux), self.channel, ConditionalKernel(K))

    def _eval(self, theta):
        key = theta.tobytes()
        if key == self._key:
            return self._cache
        p_ux, K = self.factors(theta)
        p = _joint_array(p_ux, self.W, K)
        K3 = K.reshape(self.nu, self.ny, self.nz)
        logs = {}
        out = {}
        for name, terms in _TERMS.items():
            val = 0.0
            G = np.zeros_like(p)
            for axes, sign in terms:
                if axes not in logs:
                    drop = tuple(a for a in range(4) if a not in axes)
                    m = p.sum(axis=drop, keepdims=True) if drop else p
                    pos = m > 0
                    lm = np.where(pos, np.log(np.where(pos, m, 1.0)), 0.0)
                    logs[axes] = (lm, float(-np.sum(m * lm)))
                lm, h = logs[axes]
                val += sign * h
                G -= sign * lm
            # constant offsets of G drop out because total mass is fixed
            g_ux = np.einsum("uzxy,xy,uyz->ux", G, self.W, K3).ravel()
            q = p_ux.ravel()
            d_ux = (q * (g_ux - q @ g_ux))[1:]
            g_k = np.einsum("uzxy,ux,xy->uyz", G, p_ux, self.W).reshape(-1, self.nz)
            d_k = (K * (g_k - np.sum(K * g_k, axis=1, keepdims=True)))[:, 1:].ravel()
            out[name] = (val, np.concatenate([d_ux, d_k]))
        self._key, self._cache = key, out
        return out

    def bounds(self, theta):
        p_ux, K = self.factors(theta)
        return _fast_bounds(_joint_array(p_ux, self.W, K))

    def penalized(self, theta, weight):
        b1, b2, b3 = self.bounds(theta)
        return (min(b1, self.r1 + self.r2 - b2)
                - weight * max(0.0, b2 - self.r1) - weight * max(0.0, b3 - self.r2))

    def local_search(self, theta, maxiter, tol):
        """SLSQP on the epigraph form: max t s.t. t <= b1, t <= r1+r2-b4, b2 <= r1, b3 <= r2."""
        r1, r2, dim = self.r1, self.r2, self.dim

        def c_b1(x):
            return self._eval(x[:-1])["b1"][0] - x[-1]

        def j_b1(x):
            return np.append(self._eval(x[:-1])["b1"][1], -1.0)

        def c_sum(x):
            return r1 + r2 - self._eval(x[:-1])["b2"][0] - x[-1]

        def j_sum(x):
            return np.append(-self._eval(x[:-1])["b2"][1], -1.0)

        def c_r1(x):
            return r1 - self._eval(x[:-1])["b2"][0]

        def j_r1(x):
            return np.append(-self._eval(x[:-1])["b2"][1], 0.0)

        def c_r2(x):
            return r2 - self._eval(x[:-1])["b3"][0]

        def j_r2(x):
            return np.append(-self._eval(x[:-1])["b3"][1], 0.0)

        cons = [{"type": "ineq", "fun": f, "jac": j}
                for f, j in ((c_b1, j_b1), (c_sum, j_sum), (c_r1, j_r1), (c_r2, j_r2))]
        b1, b2, _ = self.bounds(theta)
        x0 = np.append(theta, min(b1, r1 + r2 - b2))
        grad_t = np.zeros(dim + 1)
        grad_t[-1] = -1.0
        bounds = [(-LOGIT_BOUND, LOGIT_BOUND)] * dim + [(None, None)]
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(lambda x: -x[-1], x0, jac=lambda x: grad_t, method="SLSQP",
                           constraints=cons, bounds=bounds,
                           options={"maxiter": int(maxiter), "ftol": tol * 1e-3})
        x = res.x[:-1] if np.all(np.isfinite(res.x)) else theta
        return np.clip(x, -LOGIT_BOUND, LOGIT_BOUND), int(res.nit)


def _entropy_mix(nx, target):
    """Pmf on nx symbols with entropy ``target`` nats, between a point mass and uniform."""
    point = np.zeros(nx)
    point[0] = 1.0
    if target <= 0 or nx == 1:
        return point
    if target >= np.log(nx):
        return np.full(nx, 1.0 / nx)
    uni = np.full(nx, 1.0 / nx)

    def h(t):
        p = (1 - t) * point + t * uni
        p = p[p > 0]
        return -np.sum(p * np.log(p)) - target

    t = brentq(h, 0.0, 1.0, xtol=1e-15)
    return (1 - t) * point + t * uni


def daf_seed(channel, card_u, card_z):
    """U = X with capacity-achieving input, Z constant."""
    nx, ny = channel.input_alphabet, channel.output_alphabet
    px, _ = capacity_input(channel)
    p_ux = np.zeros((card_u, nx))
    for x in range(nx):
        p_ux[min(x, card_u - 1), x] = px[x]
    K = np.zeros((card_u * ny, card_z))
    K[:, 0] = 1.0
    return p_ux, K


def routing_seed(channel, card_u, card_z, r2):
    """U and Z constant, input entropy min(r2, ln|X|) so all of it fits on the noiseless link."""
    nx, ny = channel.input_alphabet, channel.output_alphabet
    p_ux = np.zeros((card_u, nx))
    p_ux[0] = _entropy_mix(nx, r2)
    K = np.zeros((card_u * ny, card_z))
    K[:, 0] = 1.0
    return p_ux, K


def _rate_of(prob, p_ux, K):
    """Exact (rate, feasible) for explicit factors."""
    b1, b2, b3 = _fast_bounds(_joint_array(p_ux, prob.W, K))
    feasible = b2 <= prob.r1 + FEAS_TOL and b3 <= prob.r2 + FEAS_TOL
    return max(0.0, min(b1, prob.r1 + prob.r2 - b2)), feasible


def _repair(prob, theta, anchor):
    """Bisect on the logit segment toward a feasible anchor; return a feasible theta."""
    def ok(t):
        _, b2, b3 = prob.bounds(t)
        return b2 <= prob.r1 + FEAS_TOL and b3 <= prob.r2 + FEAS_TOL

    if ok(theta):
        return theta
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if ok((1 - mid) * theta + mid * anchor):
            hi = mid
        else:
            lo = mid
    t = (1 - hi) * theta + hi * anchor
    return t if ok(t) else None


def _start_points(prob, cfg, rng):
    seeds = [daf_seed(prob.channel, prob.nu, prob.nz)]
    if cfg.restarts > 1:
        seeds.append(routing_seed(prob.channel, prob.nu, prob.nz, prob.r2))
    thetas = [prob.theta_of(*s) for s in seeds]
    for _ in range(cfg.restarts - len(seeds)):
        thetas.append(rng.uniform(-4.0, 4.0, prob.dim))
    return seeds, thetas


def maximize_rate(channel, r1, r2, cfg=None):
    """Largest message rate found for link rates (r1, r2), in nats.

    The returned rate is achieved by ``best_dist`` with all region
    constraints met to within 1e-9 nats, so it is a capacity lower bound.
    """
    cfg = cfg or OptimizerConfig()
    cfg.validate()
    if r1 < 0 or r2 < 0:
        raise InvalidArgument("link rates must be nonnegative")
    r1, r2 = float(r1), float(r2)
    card_u, card_z = cfg.resolved_cards(channel)
    prob = _Problem(channel, card_u, card_z, r1, r2)
    rng = np.random.default_rng(cfg.seed)
    seeds, thetas = _start_points(prob, cfg, rng)
    anchor = thetas[0]

    screen = min(cfg.screen_iterations, cfg.max_iterations)
    stage1 = _map(cfg.n_jobs, _search_one,
                  [(channel, card_u, card_z, r1, r2, th, screen, cfg.convergence_tol)
                   for th in thetas])
    iterations = sum(it for _, it in stage1)
    finals = [th for th, _ in stage1]

    remaining = cfg.max_iterations - screen
    if remaining > 0 and cfg.polish > 0:
        scores = [prob.penalized(th, cfg.penalty_weight) for th in finals]
        order = sorted(range(len(finals)), key=lambda i: (-scores[i], i))[:cfg.polish]
        stage2 = _map(cfg.n_jobs, _search_one,
                      [(channel, card_u, card_z, r1, r2, finals[i], remaining,
                        cfg.convergence_tol) for i in order])
        for i, (th, it) in zip(order, stage2):
            finals[i] = th
            iterations += it

    rates, dists = [], []
    for i, th in enumerate(finals):
        rate, dist = 0.0, None
        fixed = _repair(prob, th, anchor)
        if fixed is not None:
            p_ux, K = prob.factors(fixed)
            r, ok = _rate_of(prob, p_ux, K)
            if ok:
                rate, dist = r, (p_ux, K)
        if i < len(seeds):
            r, ok = _rate_of(prob, *seeds[i])
            if ok and (dist is None or r > rate):
                rate, dist = r, seeds[i]
        rates.append(rate)
        dists.append(dist)

    best = max(range(len(rates)), key=lambda i: (rates[i], -i))
    feasible = dists[best] is not None
    if not feasible:
        log.warning("no restart reached a feasible point")
        p_ux, K = seeds[0]
        return OptimizationResult(0.0, _dist(channel, p_ux, K), rates, False, iterations)
    return OptimizationResult(rates[best], _dist(channel, *dists[best]), rates, True,
                              iterations)


def _dist(channel, p_ux, K):
    p_ux = np.asarray(p_ux, dtype=float)
    return DiamondDistribution(JointPmf(p_ux / p_ux.sum()), channel,
                               ConditionalKernel(K / K.sum(axis=1, keepdims=True)))


def _search_one(channel, card_u, card_z, r1, r2, theta, maxiter, tol):
    prob = _Problem(channel, card_u, card_z, r1, r2)
    return prob.local_search(np.asarray(theta, dtype=float), maxiter, tol)


def _map(n_jobs, fn, arglist):
    if n_jobs == 1 or len(arglist) < 2:
        return [fn(*a) for a in arglist]
    from joblib import Parallel, delayed
    return Parallel(n_jobs=n_jobs)(delayed(fn)(*a) for a in arglist)


def baselines(channel, r1, r2):
    """Routing and decode-and-forward rates: min(r2, ln|X|) and min(C, r1 + r2)."""
    routing = min(r2, np.log(channel.input_alphabet))
    _, cap = capacity_input(channel)
    return routing, min(cap, r1 + r2)
