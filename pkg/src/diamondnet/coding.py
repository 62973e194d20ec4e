"""
Monte Carlo simulation of the superposition decode-and-compress scheme.

The message is split into (W_a, W_b, W_c). An inner codebook of M_a words is
drawn from p(u); for every inner word and every W_b an outer codebook of M_c
words is drawn from p(x|u). The noisy relay finds a u-word jointly typical
with its observation, then quantises Y^n with a random conditional code of
L candidates drawn from p(z|u); the noiseless relay forwards W_b; the
receiver looks for an outer codeword jointly typical with Z^n given the
u-word.

Sequences are integer arrays; typicality is the strong (letter-count)
notion with slack ``delta`` per joint symbol.
"""
import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, ResourceLimitError
from .prob import JointPmf
from .region import evaluate_bounds, joint_from_factors

log = logging.getLogger(__name__)

MEMORY_CAP = 10**7
FAILED = -1
_Z_CHUNK = 2048


@dataclass
class SimConfig:
    dist: object
    n: int
    epsilon: float
    tau: float
    trials: int
    seed: int = 0
    delta: float = None
    rate: float = None
    memory_cap: int = MEMORY_CAP

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise InvalidArgument(f"blocklength must be a positive integer, got {self.n!r}")
        if self.trials is None or self.trials < 1:
            raise InvalidArgument(f"trials must be positive, got {self.trials!r}")
        if not self.epsilon > 0 or not self.tau > 0:
            raise InvalidArgument("epsilon and tau must be positive")
        if self.delta is None:
            self.delta = 0.5 / math.sqrt(self.n)
        if not self.delta > 0:
            raise InvalidArgument("delta must be positive")
        if self.rate is not None and self.rate < 0:
            raise InvalidArgument("rate must be nonnegative")

    def echo(self):
        return {"n": int(self.n), "epsilon": self.epsilon, "tau": self.tau,
                "delta": self.delta, "trials": int(self.trials), "seed": int(self.seed),
                "rate": self.rate, "memory_cap": int(self.memory_cap)}


@dataclass
class Codebook:
    u_words: np.ndarray    # (M_a, n)
    x_words: np.ndarray    # (M_a, M_b, M_c, n)
    M_a: int
    M_b: int
    M_c: int
    L: int

    @property
    def M(self):
        return self.M_a * self.M_b * self.M_c


@dataclass
class SimOutcome:
    trials: int
    errors_total: int
    errors_e1: int
    errors_e2: int
    errors_e3: int

    @property
    def empirical_pe(self):
        return self.errors_total / self.trials

    def as_dict(self):
        return {"trials": self.trials, "errors_total": self.errors_total,
                "errors_e1": self.errors_e1, "errors_e2": self.errors_e2,
                "errors_e3": self.errors_e3, "empirical_pe": self.empirical_pe}


def _ceil_exp(x):
    if x > 700:
        return math.inf
    return max(1, math.ceil(math.exp(x)))


def codebook_sizes(cfg):
    """(M_a, M_b, M_c, L) for the configuration."""
    e = evaluate_bounds(cfg.dist)
    n, eps = cfg.n, cfg.epsilon
    M_a = _ceil_exp(n * (e.i_uy - 3 * eps))
    M_c = _ceil_exp(n * (e.i_xz_u - 3 * eps))
    L = _ceil_exp(n * (e.i_yz_u + cfg.tau))
    if cfg.rate is None:
        M_b = 1
    else:
        M = _ceil_exp(n * cfg.rate)
        M_b = max(1, math.ceil(M / (M_a * M_c))) if math.isfinite(M) else math.inf
    return M_a, M_b, M_c, L


def _check_memory(cfg, sizes):
    M_a, M_b, M_c, L = sizes
    n = cfg.n
    parts = {"u_words": M_a * n, "x_words": M_a * M_b * M_c * n, "z_candidates": L * n}
    total = sum(parts.values())
    if total > cfg.memory_cap:
        worst = max(parts, key=parts.get)
        raise ResourceLimitError(
            f"codebooks need {total:.3g} symbols (> cap {cfg.memory_cap}); "
            f"largest is {worst} with M_a={M_a}, M_b={M_b}, M_c={M_c}, L={L}, n={n}",
            {"M_a": M_a, "M_b": M_b, "M_c": M_c, "L": L, "n": n})


def _sample_rows(rng, cdf_rows, cond, size=None):
    """Draw one symbol per entry of ``cond`` from the row ``cdf_rows[cond]``."""
    r = rng.random(np.shape(cond) if size is None else size)
    cdf = cdf_rows[cond]
    out = (r[..., None] >= cdf[..., :-1]).sum(axis=-1)
    return out


def _cdf(rows):
    c = np.cumsum(rows, axis=-1)
    c[..., -1] = 1.0
    return c


def _rngs(seed):
    base = int(seed) & 0xFFFFFFFFFFFFFFFF
    return base


def generate_codebooks(cfg):
    sizes = codebook_sizes(cfg)
    _check_memory(cfg, sizes)
    M_a, M_b, M_c, L = sizes
    rng = np.random.default_rng([_rngs(cfg.seed), 0])
    p_ux = cfg.dist.p_ux.probs
    pu = p_ux.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        px_u = np.where(pu[:, None] > 0, p_ux / pu[:, None], 1.0 / p_ux.shape[1])
    n = cfg.n
    u_words = _sample_rows(rng, _cdf(pu)[None, :], np.zeros((M_a, n), dtype=int))
    parents = np.broadcast_to(u_words[:, None, None, :], (M_a, M_b, M_c, n))
    x_words = _sample_rows(rng, _cdf(px_u), parents)
    return Codebook(u_words, x_words, M_a, M_b, M_c, L)


def _typical_mask(codes, ref, n, delta):
    """Row-wise strong typicality of flattened joint-symbol index rows."""
    k = ref.size
    rows = codes.shape[0]
    offs = (np.arange(rows) * k)[:, None]
    counts = np.bincount((codes + offs).ravel(), minlength=rows * k).reshape(rows, k)
    freq = counts / n
    ok = np.all(np.abs(freq - ref) <= delta + 1e-12, axis=1)
    zero = ref == 0
    if zero.any():
        ok &= ~np.any(counts[:, zero] > 0, axis=1)
    return ok


def strongly_typical(sequences, reference, delta):
    """Whether the tuple of equal-length sequences has a joint type within ``delta`` of ``reference``."""
    ref = reference.probs if isinstance(reference, JointPmf) else np.asarray(reference)
    seqs = [np.asarray(s, dtype=int) for s in sequences]
    if len(seqs) != ref.ndim:
        raise InvalidArgument(f"{len(seqs)} sequences for a {ref.ndim}-axis reference")
    n = len(seqs[0])
    if n == 0 or any(len(s) != n for s in seqs):
        raise InvalidArgument("sequences must share a positive length")
    for s, size in zip(seqs, ref.shape):
        if s.min() < 0 or s.max() >= size:
            raise InvalidArgument("symbol outside the reference alphabet")
    codes = np.ravel_multi_index(tuple(seqs), ref.shape)[None, :]
    return bool(_typical_mask(codes, ref.ravel(), n, delta)[0])


class _Refs:
    """Reference joints and conditional tables derived from the distribution."""

    def __init__(self, dist):
        p = joint_from_factors(dist).probs            # (U, Z, X, Y)
        self.nu, self.nz, self.nx, self.ny = p.shape
        self.p_uzxy = p.ravel()
        self.p_uy = p.sum(axis=(1, 2)).ravel()         # (U, Y)
        p_uyz = p.sum(axis=2).transpose(0, 2, 1)       # (U, Y, Z)
        self.p_uyz = p_uyz.ravel()
        self.p_uxz = p.sum(axis=3).transpose(0, 2, 1).ravel()  # (U, X, Z)
        p_uz = p.sum(axis=(2, 3))
        pu = p_uz.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            z_u = np.where(pu > 0, p_uz / pu, 1.0 / self.nz)
        self.cdf_z_u = _cdf(z_u)
        self.cdf_y_x = _cdf(dist.channel.matrix)


def _refs(cfg):
    refs = getattr(cfg, "_refs", None)
    if refs is None:
        refs = _Refs(cfg.dist)
        object.__setattr__(cfg, "_refs", refs)
    return refs


def relay_process(y_seq, codebook, cfg, rng):
    """Noisy-relay processing: returns (w_a_hat, z_seq, z_index, e1_flag)."""
    refs = _refs(cfg)
    n, delta = cfg.n, cfg.delta
    y_seq = np.asarray(y_seq)
    codes = codebook.u_words * refs.ny + y_seq[None, :]
    hits = np.flatnonzero(_typical_mask(codes, refs.p_uy, n, delta))
    w_a_hat = int(hits[0]) if hits.size else 0
    u_hat = codebook.u_words[w_a_hat]

    first = None
    drawn = 0
    while drawn < codebook.L:
        m = min(_Z_CHUNK, codebook.L - drawn)
        cands = _sample_rows(rng, refs.cdf_z_u, np.broadcast_to(u_hat, (m, n)), size=(m, n))
        if first is None:
            first = cands[0].copy()
        zc = (u_hat * refs.ny + y_seq)[None, :] * refs.nz + cands
        ok = np.flatnonzero(_typical_mask(zc, refs.p_uyz, n, delta))
        if ok.size:
            i = int(ok[0])
            return w_a_hat, cands[i].copy(), drawn + i, False
        drawn += m
    return w_a_hat, first, 0, True


def decode(w_a_hat, z_seq, w_b, codebook, cfg):
    """Lowest outer-codebook index typical with Z^n given the u-word; FAILED if none."""
    refs = _refs(cfg)
    u_hat = codebook.u_words[w_a_hat]
    xs = codebook.x_words[w_a_hat, w_b]              # (M_c, n)
    codes = ((u_hat[None, :] * refs.nx + xs) * refs.nz) + np.asarray(z_seq)[None, :]
    hits = np.flatnonzero(_typical_mask(codes, refs.p_uxz, cfg.n, cfg.delta))
    return int(hits[0]) if hits.size else FAILED


def run_trial(codebook, cfg, trial):
    """One transmission; returns None on success or the error class 'e1'/'e2'/'e3'."""
    refs = _refs(cfg)
    rng = np.random.default_rng([_rngs(cfg.seed), 1, int(trial)])
    w_a = int(rng.integers(codebook.M_a))
    w_b = int(rng.integers(codebook.M_b))
    w_c = int(rng.integers(codebook.M_c))
    x = codebook.x_words[w_a, w_b, w_c]
    y = _sample_rows(rng, refs.cdf_y_x, x)
    w_a_hat, z, _, e1_flag = relay_process(y, codebook, cfg, rng)
    w_c_hat = decode(w_a_hat, z, w_b, codebook, cfg)
    if w_a_hat == w_a and w_c_hat == w_c:
        return None
    u = codebook.u_words[w_a]
    code = ((u * refs.nz + z) * refs.nx + x) * refs.ny + y
    if e1_flag or not _typical_mask(code[None, :], refs.p_uzxy, cfg.n, cfg.delta)[0]:
        return "e1"
    if w_a_hat != w_a:
        return "e2"
    return "e3"


def run_trials(cfg, codebook=None):
    if codebook is None:
        codebook = generate_codebooks(cfg)
    counts = {"e1": 0, "e2": 0, "e3": 0}
    for t in range(cfg.trials):
        ev = run_trial(codebook, cfg, t)
        if ev is not None:
            counts[ev] += 1
    total = sum(counts.values())
    return SimOutcome(cfg.trials, total, counts["e1"], counts["e2"], counts["e3"])


def simulate(cfg):
    """Codebook generation plus trials, packaged as a JSON-ready dict."""
    t0 = time.perf_counter()
    codebook = generate_codebooks(cfg)
    outcome = run_trials(cfg, codebook)
    e = evaluate_bounds(cfg.dist)
    return {
        "config": cfg.echo(),
        "codebook": {"M_a": codebook.M_a, "M_b": codebook.M_b, "M_c": codebook.M_c,
                     "L": codebook.L, "M": codebook.M},
        "informations": {"i_uy": e.i_uy, "i_xz_u": e.i_xz_u, "i_yz_u": e.i_yz_u},
        "outcome": outcome.as_dict(),
        "wall_time_s": time.perf_counter() - t0,
    }
