"""Discrete-time SIR spreading used as the node influence label.

Randomness is counter based: every Bernoulli trial hashes
``(replicate key, arc or node, infection age)`` into a uniform, so each
(seed node, replicate) pair owns an independent stream derived from the
master seed and results do not depend on evaluation order. With the same
keys, raising the infection probability can only enlarge the outbreak
when ``delta == 1``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

import numba
import numpy as np

from .graph import DegreeStats, Graph, degree_stats

_MASK64 = (1 << 64) - 1


class DegenerateNetworkError(ValueError):
    """The mean-field threshold is undefined (<k^2> <= <k>)."""


@dataclass(frozen=True)
class SirConfig:
    gamma: float | None = None  # explicit infection probability; None -> multiplier * gamma_c
    delta: float = 1.0
    sims_per_node: int = 100
    gamma_multiplier: float = 1.5
    max_steps: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.sims_per_node < 1:
            raise ValueError("sims_per_node must be >= 1")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if self.gamma is not None and self.gamma < 0:
            raise ValueError("gamma must be non-negative")


@dataclass
class InfluenceScores:
    y: np.ndarray
    config: SirConfig
    gamma: float
    gamma_c: float | None
    truncated: int = 0
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"config": asdict(self.config), "gamma": self.gamma, "gamma_c": self.gamma_c}


def epidemic_threshold(stats: DegreeStats) -> float:
    """Mean-field threshold <k> / (<k^2> - <k>)."""
    k1, k2 = Fraction(stats.mean_k), Fraction(stats.mean_k2)
    if k2 <= k1:
        raise DegenerateNetworkError(f"<k^2>={float(k2)} <= <k>={float(k1)}; threshold undefined")
    return float(k1 / (k2 - k1))


def resolve_gamma(g: Graph, cfg: SirConfig) -> tuple[float, float | None]:
    """Return ``(gamma, gamma_c)``; gamma is clamped to 1."""
    if cfg.gamma is not None:
        return min(1.0, float(cfg.gamma)), None
    gc = epidemic_threshold(degree_stats(g))
    return min(1.0, cfg.gamma_multiplier * gc), gc


@numba.njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def _uniform(key, a, b, salt):
    z = _mix64(key ^ _mix64(np.uint64(a) * np.uint64(0x9E3779B97F4A7C15) + np.uint64(salt)))
    z = _mix64(z + np.uint64(b) * np.uint64(0xD1B54A32D192ED03))
    return (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True)
def _replicate_key(master, seed_node, rep):
    return _mix64(_mix64(master + np.uint64(seed_node) * np.uint64(0x9E3779B97F4A7C15)) ^ np.uint64(rep))


@numba.njit(cache=True)
def _run(indptr, indices, seed_node, gamma, delta, key, max_steps, state, age, front, nxt):
    # state: 0 susceptible, 1 infected, 2 recovered
    n = state.shape[0]
    for i in range(n):
        state[i] = 0
        age[i] = 0
    state[seed_node] = 1
    front[0] = seed_node
    nf = 1
    ever = 1
    steps = 0
    while nf > 0 and steps < max_steps:
        nn = 0
        # infections use the step-start state; newly infected are marked 3
        for f in range(nf):
            u = front[f]
            a = age[u]
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                if state[v] == 0:
                    if _uniform(key, e, a, 1) < gamma:
                        state[v] = 3
                        nxt[nn] = v
                        nn += 1
        keep = 0
        for f in range(nf):
            u = front[f]
            if _uniform(key, u, age[u], 2) < delta:
                state[u] = 2
            else:
                age[u] += 1
                front[keep] = u
                keep += 1
        for f in range(nn):
            v = nxt[f]
            state[v] = 1
            front[keep] = v
            keep += 1
        ever += nn
        nf = keep
        steps += 1
    return ever, nf > 0


@numba.njit(cache=True)
def _influence(indptr, indices, gamma, delta, sims, master, max_steps, nodes):
    n = indptr.shape[0] - 1
    state = np.zeros(n, np.int8)
    age = np.zeros(n, np.int64)
    front = np.zeros(n, np.int64)
    nxt = np.zeros(n, np.int64)
    out = np.zeros(nodes.shape[0], np.float64)
    truncated = 0
    for k in range(nodes.shape[0]):
        v = nodes[k]
        total = 0
        for r in range(sims):
            key = _replicate_key(master, v, r)
            c, t = _run(indptr, indices, v, gamma, delta, key, max_steps, state, age, front, nxt)
            total += c
            if t:
                truncated += 1
        out[k] = total / sims
    return out, truncated


def _csr(g: Graph):
    indptr, indices = g.csr
    return np.ascontiguousarray(indptr, np.int64), np.ascontiguousarray(indices, np.int64)


def _master(seed: int) -> np.uint64:
    return np.uint64((int(seed) * 0x9E3779B97F4A7C15 + 0x632BE59BD9B4E019) & _MASK64)


def simulate_once(
    g: Graph,
    seed_node: int,
    cfg: SirConfig,
    rng: np.random.Generator | int,
) -> tuple[int, bool]:
    """One outbreak from ``seed_node``; returns ``(ever_infected, truncated)``.

    ``rng`` is either a Generator (one 64-bit key is drawn from it) or the
    integer key itself. ``cfg.gamma`` must be set, or is resolved from the
    threshold of ``g``.
    """
    if not 0 <= seed_node < g.n:
        raise IndexError(f"seed node {seed_node} outside [0, {g.n})")
    gamma, _ = resolve_gamma(g, cfg)
    if isinstance(rng, np.random.Generator):
        key = int(rng.integers(0, 2**63, dtype=np.int64))
    else:
        key = int(rng)
    indptr, indices = _csr(g)
    n = g.n
    c, t = _run(
        indptr, indices, int(seed_node), gamma, float(cfg.delta), np.uint64(key & _MASK64),
        int(cfg.max_steps), np.zeros(n, np.int8), np.zeros(n, np.int64),
        np.zeros(n, np.int64), np.zeros(n, np.int64),
    )
    return int(c), bool(t)


def influence_scores(g: Graph, cfg: SirConfig, nodes=None) -> InfluenceScores:
    """Mean ever-infected count (seed included) over ``sims_per_node`` runs."""
    gamma, gc = resolve_gamma(g, cfg)
    indptr, indices = _csr(g)
    idx = np.arange(g.n, dtype=np.int64) if nodes is None else np.asarray(nodes, np.int64)
    y, trunc = _influence(
        indptr, indices, gamma, float(cfg.delta), int(cfg.sims_per_node),
        _master(cfg.seed), int(cfg.max_steps), idx,
    )
    return InfluenceScores(y=y, config=cfg, gamma=gamma, gamma_c=gc, truncated=int(trunc))


def with_gamma(cfg: SirConfig, gamma: float) -> SirConfig:
    return replace(cfg, gamma=gamma)


def label_header(scores: InfluenceScores) -> str:
    c = scores.config
    gc = "nan" if scores.gamma_c is None else repr(scores.gamma_c)
    return (
        f"gamma={scores.gamma!r} gamma_c={gc} delta={c.delta!r} "
        f"sims={c.sims_per_node} seed={c.seed}"
    )


__all__ = [
    "SirConfig", "InfluenceScores", "DegenerateNetworkError", "epidemic_threshold",
    "simulate_once", "influence_scores", "resolve_gamma", "label_header", "with_gamma",
]
