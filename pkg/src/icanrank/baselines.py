"""Classical centrality baselines."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph
from .ranking import Ranking


@dataclass(frozen=True)
class CentralityResult:
    method: str
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def ranking(self) -> Ranking:
        return Ranking.from_scores(self.values)


def degree_centrality(g: Graph) -> CentralityResult:
    if g.n < 2:
        raise ValueError("degree centrality needs at least two nodes")
    return CentralityResult("DC", g.degrees.astype(np.float64) / (g.n - 1))


def betweenness_centrality(g: Graph) -> CentralityResult:
    """Brandes accumulation, unnormalized, each unordered pair counted once."""
    n = g.n
    nbrs = g.neighbors
    bc = np.zeros(n)
    for s in range(n):
        stack = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = np.zeros(n)
        sigma[s] = 1.0
        dist = np.full(n, -1, dtype=np.int64)
        dist[s] = 0
        q = deque([s])
        while q:
            v = q.popleft()
            stack.append(v)
            for w in nbrs[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    q.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = np.zeros(n)
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    # every unordered pair was visited from both endpoints
    return CentralityResult("BC", bc / 2.0)


EC_SHIFT = 1.0


def eigenvector_centrality(g: Graph, tol: float = 1e-8, max_iter: int = 1000) -> CentralityResult:
    """Power iteration on A + I from the uniform vector.

    The shift keeps bipartite graphs from oscillating between the two
    extreme eigenvectors; it does not change the eigenvectors.
    """
    if g.num_edges == 0:
        raise ValueError("eigenvector centrality needs at least one edge")
    indptr, indices = g.csr
    n = g.n
    rows = np.repeat(np.arange(n), np.diff(indptr))

    def apply(v):
        out = np.zeros(n)
        np.add.at(out, rows, v[indices])
        return out

    x = np.full(n, 1.0 / np.sqrt(n))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        nxt = apply(x) + EC_SHIFT * x
        nxt /= np.linalg.norm(nxt)
        done = np.max(np.abs(nxt - x)) <= tol
        x = nxt
        if done:
            converged = True
            break
    ax = apply(x)
    lam = float(x @ ax)
    return CentralityResult("EC", np.abs(x), {"converged": converged, "iterations": it,
                                              "eigenvalue": lam, "shift": EC_SHIFT})


def h_index(g: Graph) -> CentralityResult:
    deg = g.degrees
    out = np.zeros(g.n)
    for v, nb in enumerate(g.neighbors):
        d = np.sort(deg[np.asarray(nb, dtype=np.int64)])[::-1]
        # largest x with d[x-1] >= x
        out[v] = int(np.sum(d >= np.arange(1, d.size + 1)))
    return CentralityResult("H-index", out)


def k_shell(g: Graph) -> CentralityResult:
    """Iterative pruning: at level k remove every node of degree <= k until none is left."""
    deg = g.degrees.astype(np.int64).copy()
    alive = np.ones(g.n, dtype=bool)
    shell = np.zeros(g.n)
    nbrs = g.neighbors
    k = 0
    remaining = g.n
    while remaining:
        q = deque(np.flatnonzero(alive & (deg <= k)).tolist())
        for v in q:
            alive[v] = False
        while q:
            v = q.popleft()
            shell[v] = k
            remaining -= 1
            for w in nbrs[v]:
                if alive[w]:
                    deg[w] -= 1
                    if deg[w] <= k:
                        alive[w] = False
                        q.append(w)
        k += 1
    return CentralityResult("K-shell", shell)


BASELINES = {
    "DC": degree_centrality,
    "BC": betweenness_centrality,
    "EC": eigenvector_centrality,
    "H-index": h_index,
    "K-shell": k_shell,
}


def baseline(name: str, g: Graph) -> CentralityResult:
    key = {k.lower(): k for k in BASELINES}.get(name.lower())
    if key is None:
        raise ValueError(f"unknown baseline {name!r}; expected one of {list(BASELINES)}")
    return BASELINES[key](g)
