"""Seeded generators for the synthetic training families BA, ER, EH, QS, RH."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .graph import Graph

MODELS = ("BA", "ER", "EH", "QS", "RH")


class GeneratorConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GenSpec:
    """What to generate.

    ``model_params`` keys: ``m`` (BA), ``p`` (ER/EH), ``budget`` (EH),
    ``q`` and ``r`` (QS).
    """

    model: str
    n: int
    target_avg_degree: float = 4.0
    seed: int = 0
    model_params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "model", self.model.upper())
        if self.model not in MODELS:
            raise GeneratorConfigError(f"unknown model {self.model!r}; expected one of {MODELS}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def param(self, key, default=None):
        return self.model_params.get(key, default)


def gen_ba(spec: GenSpec) -> Graph:
    """Preferential attachment grown from an (m+1)-clique."""
    m = int(spec.param("m", round(spec.target_avg_degree / 2)))
    n = spec.n
    if m < 1:
        raise GeneratorConfigError(f"BA attachment m must be >= 1, got {m}")
    if n <= m:
        raise GeneratorConfigError(f"BA needs n > m (n={n}, m={m})")
    rng = spec.rng()
    edges = [(i, j) for i in range(m + 1) for j in range(i + 1, m + 1)]
    # every node appears once per incident edge -> uniform draw is degree-proportional
    stubs = [v for e in edges for v in e]
    for new in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(stubs[int(rng.integers(len(stubs)))])
        for t in sorted(targets):
            edges.append((t, new))
            stubs.extend((t, new))
    return Graph.from_edges(n, edges)


def _er_probability(spec: GenSpec) -> float:
    if spec.n < 2:
        raise GeneratorConfigError("ER needs n >= 2")
    p = float(spec.param("p", spec.target_avg_degree / (spec.n - 1)))
    if not 0.0 <= p <= 1.0:
        raise GeneratorConfigError(f"ER probability out of range: {p}")
    return p


def gen_er(spec: GenSpec) -> Graph:
    """G(n, p) with ``p = avg / (n - 1)`` unless given explicitly."""
    p = _er_probability(spec)
    rng = spec.rng()
    iu, ju = np.triu_indices(spec.n, k=1)
    keep = rng.random(iu.size) < p
    return Graph.from_edges(spec.n, zip(iu[keep].tolist(), ju[keep].tolist()))


def rectify_degrees(g: Graph, rng: np.random.Generator, budget: int) -> tuple[Graph, int]:
    """Move edge endpoints from max-degree to min-degree nodes.

    Returns the rewired graph and the number of successful rewires. Stops
    once ``max_degree - min_degree <= 1`` or after ``budget`` attempts.
    """
    n = g.n
    adj = [set(nb) for nb in g.neighbors]
    deg = g.degrees.copy()
    rewires = 0
    for _ in range(budget):
        hi, lo = deg.max(), deg.min()
        if hi - lo <= 1:
            break
        u = int(rng.choice(np.flatnonzero(deg == hi)))
        v = int(rng.choice(np.flatnonzero(deg == lo)))
        w = int(rng.choice(sorted(adj[u])))
        if w == v or v in adj[w]:
            continue
        adj[u].discard(w)
        adj[w].discard(u)
        adj[v].add(w)
        adj[w].add(v)
        deg[u] -= 1
        deg[v] += 1
        rewires += 1
    pairs = ((i, j) for i in range(n) for j in adj[i] if i < j)
    return Graph.from_edges(n, pairs), rewires


def gen_eh(spec: GenSpec) -> Graph:
    """ER followed by endpoint rectification towards near-uniform degrees."""
    g = gen_er(spec)
    budget = int(spec.param("budget", 50 * spec.n))
    # separate stream so the ER draw matches gen_er for the same seed
    rng = np.random.default_rng([spec.seed, 1])
    out, _ = rectify_degrees(g, rng, budget)
    return out


def _qs_snapback_slots(n: int, r: int) -> int:
    # node i may snap back to j in [max(0, i - r), i - 2]
    return sum(max(0, i - 1 - max(0, i - r)) for i in range(2, n))


def qs_probability(n: int, target_avg_degree: float, r: int) -> float:
    """Snapback probability whose expected mean degree equals the target."""
    slots = _qs_snapback_slots(n, r)
    if slots == 0:
        return 0.0
    extra_edges = target_avg_degree * n / 2.0 - (n - 1)
    return float(np.clip(extra_edges / slots, 0.0, 1.0))


def gen_qs(spec: GenSpec) -> Graph:
    """Backbone chain i -> i-1 plus random snapbacks within range r."""
    n = spec.n
    if n < 2:
        raise GeneratorConfigError("QS needs n >= 2")
    r = int(spec.param("r", 30))
    if r < 1:
        raise GeneratorConfigError("QS range r must be >= 1")
    q = spec.param("q")
    q = qs_probability(n, spec.target_avg_degree, r) if q is None else float(q)
    if not 0.0 <= q <= 1.0:
        raise GeneratorConfigError(f"QS snapback probability out of range: {q}")
    rng = spec.rng()
    arcs = [(i, i - 1) for i in range(1, n)]
    for i in range(2, n):
        lo = max(0, i - r)
        js = np.arange(lo, i - 1)
        if js.size:
            hit = js[rng.random(js.size) < q]
            arcs.extend((i, int(j)) for j in hit)
    return Graph.from_edges(n, arcs)


def gen_rh(spec: GenSpec) -> Graph:
    """Disjoint hexagons, chained for connectivity, plus random cross links.

    Hexagon ``k`` occupies nodes ``6k..6k+5`` in cycle order. Leftover nodes
    (``n mod 6``) hang off the last hexagon as a path and count as part of
    its group.
    """
    n = spec.n
    if n < 6:
        raise GeneratorConfigError("RH needs n >= 6")
    rng = spec.rng()
    h = n // 6
    group = np.minimum(np.arange(n) // 6, h - 1)
    edges: set[tuple[int, int]] = set()

    def add(a, b):
        edges.add((a, b) if a < b else (b, a))

    for k in range(h):
        base = 6 * k
        for s in range(6):
            add(base + s, base + (s + 1) % 6)
    prev = 6 * h - 1
    for extra in range(6 * h, n):
        add(prev, extra)
        prev = extra
    members = [np.flatnonzero(group == k) for k in range(h)]
    for k in range(h - 1):
        a = int(rng.choice(members[k]))
        b = int(rng.choice(members[k + 1]))
        add(a, b)
    need = int(np.ceil(spec.target_avg_degree * n / 2.0 - 1e-9))
    max_cross = n * (n - 1) // 2
    if h > 1:
        tries = 0
        while len(edges) < min(need, max_cross) and tries < 100 * n * max(1, need):
            tries += 1
            a, b = (int(x) for x in rng.integers(n, size=2))
            if group[a] == group[b]:
                continue
            add(a, b)
    return Graph.from_edges(n, edges)


GENERATORS: dict[str, Callable[[GenSpec], Graph]] = {
    "BA": gen_ba,
    "ER": gen_er,
    "EH": gen_eh,
    "QS": gen_qs,
    "RH": gen_rh,
}


def generate(spec: GenSpec) -> Graph:
    return GENERATORS[spec.model](spec)
