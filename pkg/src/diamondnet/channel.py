"""Discrete memoryless channels and the binary modulo-2 example."""
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidArgument, InvalidChannel, InvalidDistribution
from .prob import ConditionalKernel


@dataclass(frozen=True, eq=False)
class Dmc:
    transition: ConditionalKernel

    @property
    def input_alphabet(self):
        return self.transition.input_size

    @property
    def output_alphabet(self):
        return self.transition.output_size

    @property
    def matrix(self):
        return self.transition.rows

    def to_dict(self):
        return {
            "input_alphabet": self.input_alphabet,
            "output_alphabet": self.output_alphabet,
            "rows": self.matrix.tolist(),
        }


def dmc_from_matrix(rows):
    """Validate a row-major transition matrix p(y|x) and wrap it as a ``Dmc``."""
    if not isinstance(rows, np.ndarray):
        rows = list(rows)
        if not rows:
            raise InvalidChannel("channel matrix is empty")
        try:
            widths = {len(r) for r in rows}
        except TypeError:
            raise InvalidChannel("channel rows must be sequences") from None
        if len(widths) != 1:
            raise InvalidChannel(f"ragged channel matrix (row widths {sorted(widths)})")
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidChannel(f"channel matrix is not numeric: {exc}") from None
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidChannel(f"channel matrix must be nonempty 2-D, got shape {arr.shape}")
    try:
        return Dmc(ConditionalKernel(arr))
    except InvalidDistribution as exc:
        raise InvalidChannel(str(exc)) from None


def channel_from_dict(d):
    try:
        rows = d["rows"]
    except (KeyError, TypeError):
        raise InvalidChannel("channel description needs a 'rows' field") from None
    ch = dmc_from_matrix(rows)
    for key, have in (("input_alphabet", ch.input_alphabet),
                      ("output_alphabet", ch.output_alphabet)):
        if key in d and d[key] != have:
            raise InvalidChannel(f"{key}={d[key]} does not match matrix ({have})")
    return ch


def load_channel(path):
    with open(path) as fh:
        return channel_from_dict(json.load(fh))


def binary_entropy(p):
    """Binary entropy in bits."""
    p = float(p)
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * np.log2(p) - (1 - p) * np.log2(1 - p)


def binary_entropy_inverse(target):
    """Crossover p in [0, 0.5] whose binary entropy equals ``target`` bits."""
    target = float(target)
    if not 0.0 <= target <= 1.0:
        raise InvalidArgument(f"binary entropy target {target} outside [0, 1] bits")
    if target == 0.0:
        return 0.0
    if target == 1.0:
        return 0.5
    return brentq(lambda p: binary_entropy(p) - target, 0.0, 0.5,
                  xtol=1e-17, rtol=4 * np.finfo(float).eps, maxiter=500)


def binary_symmetric(crossover):
    q = float(crossover)
    return dmc_from_matrix([[1 - q, q], [q, 1 - q]])


def build_paper_example():
    """Y = X xor W with W ~ Bernoulli carrying half a bit of entropy."""
    return binary_symmetric(binary_entropy_inverse(0.5))


def capacity_input(channel, iterations=5000, tol=1e-13):
    """Blahut-Arimoto: capacity-achieving input pmf and the capacity in nats."""
    W = channel.matrix
    nx = W.shape[0]
    p = np.full(nx, 1.0 / nx)
    logW = np.where(W > 0, np.log(np.where(W > 0, W, 1.0)), 0.0)
    for _ in range(iterations):
        q = p @ W
        logq = np.where(q > 0, np.log(np.where(q > 0, q, 1.0)), 0.0)
        d = np.sum(W * (logW - logq), axis=1)
        lower = p @ d
        upper = d.max()
        if upper - lower < tol:
            break
        p = p * np.exp(d - upper)
        p /= p.sum()
    q = p @ W
    logq = np.where(q > 0, np.log(np.where(q > 0, q, 1.0)), 0.0)
    return p, float(p @ np.sum(W * (logW - logq), axis=1))
