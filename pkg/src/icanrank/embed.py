"""Node features: biased random walks + skip-gram with negative sampling,
or an externally supplied attribute matrix."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import asdict, dataclass, field

import numba
import numpy as np

from .graph import Graph

log = logging.getLogger(__name__)


class FeatureFormatError(ValueError):
    pass


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 80
    window: int = 10
    p: float = 1.0  # return bias
    q: float = 1.0  # in-out bias
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    seed: int = 0

    def __post_init__(self):
        for name in ("walks_per_node", "walk_length", "window", "negatives", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.p <= 0 or self.q <= 0:
            raise ValueError("walk biases p and q must be positive")


@dataclass
class FeatureMatrix:
    data: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise FeatureFormatError(f"feature matrix must be 2-D, got {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise FeatureFormatError("feature matrix contains non-finite entries")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def check_dims(a: FeatureMatrix | np.ndarray, expected: int, what: str = "features"):
    d = a.dim if isinstance(a, FeatureMatrix) else a.shape[1]
    if d != expected:
        raise FeatureFormatError(f"{what} have dimension {d}, model expects {expected}")


# -- walks ----------------------------------------------------------------------


@numba.njit(cache=True)
def _is_neighbor(indptr, indices, a, b):
    lo = indptr[a]
    hi = indptr[a + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        x = indices[mid]
        if x == b:
            return True
        if x < b:
            lo = mid + 1
        else:
            hi = mid
    return False


@numba.njit(cache=True)
def _walks(indptr, indices, walks_per_node, length, p, q, seed):
    np.random.seed(seed)
    n = indptr.shape[0] - 1
    out = np.full((walks_per_node * n, length), -1, np.int64)
    lens = np.zeros(walks_per_node * n, np.int64)
    uniform = p == 1.0 and q == 1.0
    row = 0
    weights = np.zeros(max(1, np.max(indptr[1:] - indptr[:-1])), np.float64)
    for _ in range(walks_per_node):
        order = np.random.permutation(n)
        for s in range(n):
            v = order[s]
            out[row, 0] = v
            k = 1
            prev = -1
            cur = v
            while k < length:
                lo = indptr[cur]
                deg = indptr[cur + 1] - lo
                if deg == 0:
                    break
                if uniform or prev < 0:
                    nxt = indices[lo + np.random.randint(deg)]
                else:
                    tot = 0.0
                    for j in range(deg):
                        x = indices[lo + j]
                        if x == prev:
                            w = 1.0 / p
                        elif _is_neighbor(indptr, indices, prev, x):
                            w = 1.0
                        else:
                            w = 1.0 / q
                        tot += w
                        weights[j] = tot
                    r = np.random.random() * tot
                    j = 0
                    while j < deg - 1 and weights[j] <= r:
                        j += 1
                    nxt = indices[lo + j]
                out[row, k] = nxt
                prev = cur
                cur = nxt
                k += 1
            lens[row] = k
            row += 1
    return out, lens


@dataclass
class WalkCorpus:
    walks: np.ndarray  # (num_walks, walk_length), padded with -1
    lengths: np.ndarray
    n: int
    degrees: np.ndarray | None = None  # of the source graph, for the noise distribution

    def __len__(self):
        return self.walks.shape[0]

    def __iter__(self):
        for w, k in zip(self.walks, self.lengths):
            yield w[:k]

    @property
    def tokens(self) -> int:
        return int(self.lengths.sum())


def generate_walks(g: Graph, cfg: WalkConfig) -> WalkCorpus:
    """``walks_per_node`` second-order walks from every node."""
    if g.n < 1:
        raise ValueError("graph has no nodes")
    indptr, indices = g.csr
    walks, lens = _walks(
        indptr, indices, cfg.walks_per_node, cfg.walk_length,
        float(cfg.p), float(cfg.q), cfg.seed % (2**32),
    )
    return WalkCorpus(walks, lens, g.n, g.degrees.copy())


def transition_weights(g: Graph, prev: int, cur: int, p: float, q: float) -> dict[int, float]:
    """Unnormalised second-order weights for stepping away from ``cur``."""
    out = {}
    prev_nb = set(g.neighbors[prev])
    for x in g.neighbors[cur]:
        if x == prev:
            out[x] = 1.0 / p
        elif x in prev_nb:
            out[x] = 1.0
        else:
            out[x] = 1.0 / q
    return out


# -- skip-gram -------------------------------------------------------------------


@numba.njit(cache=True, fastmath=True)
def _sgns_epoch(walks, lens, emb, ctx, window, negatives, noise_cdf, lr0, done, total, seed):
    np.random.seed(seed)
    dim = emb.shape[1]
    grad = np.zeros(dim, np.float32)
    for r in range(walks.shape[0]):
        L = lens[r]
        for i in range(L):
            lr = lr0 * max(1e-4, 1.0 - done / total)
            done += 1
            center = walks[r, i]
            b = np.random.randint(window)  # word2vec-style shrunk window
            lo = max(0, i - window + b)
            hi = min(L, i + window - b + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                for t in range(dim):
                    grad[t] = 0.0
                for s in range(negatives + 1):
                    if s == 0:
                        target = walks[r, j]
                        label = 1.0
                    else:
                        target = np.searchsorted(noise_cdf, np.random.random() * noise_cdf[-1], "right")
                        if target == walks[r, j]:
                            continue
                        label = 0.0
                    dot = np.float32(0.0)
                    for t in range(dim):
                        dot += emb[center, t] * ctx[target, t]
                    if dot > 6.0:
                        sig = 1.0
                    elif dot < -6.0:
                        sig = 0.0
                    else:
                        sig = 1.0 / (1.0 + np.exp(-dot))
                    gcoef = np.float32((label - sig) * lr)
                    for t in range(dim):
                        grad[t] += gcoef * ctx[target, t]
                    for t in range(dim):
                        ctx[target, t] += gcoef * emb[center, t]
                for t in range(dim):
                    emb[center, t] += grad[t]
    return done


def _noise_cdf(corpus: WalkCorpus) -> np.ndarray:
    """Cumulative negative-sampling weights, degree^0.75.

    Corpora without a source graph fall back to token counts; a graph with
    no edges at all gets uniform weights so the table is never empty.
    """
    if corpus.degrees is not None:
        w = np.asarray(corpus.degrees, dtype=np.float64)
    else:
        w = np.bincount(corpus.walks[corpus.walks >= 0], minlength=corpus.n).astype(np.float64)
    if w.sum() == 0:
        w = np.ones(corpus.n)
    return np.cumsum(w**0.75)


def _probe(corpus: WalkCorpus, cfg: WalkConfig, noise_cdf: np.ndarray, size: int = 4096):
    rng = np.random.default_rng([cfg.seed, 7])
    rows = rng.integers(len(corpus), size=size)
    lens = corpus.lengths[rows]
    ok = lens > 1
    rows, lens = rows[ok], lens[ok]
    i = (rng.random(rows.size) * lens).astype(np.int64)
    off = rng.integers(1, cfg.window + 1, size=rows.size) * rng.choice([-1, 1], size=rows.size)
    j = np.clip(i + off, 0, lens - 1)
    keep = j != i
    rows, i, j = rows[keep], i[keep], j[keep]
    centers = corpus.walks[rows, i]
    contexts = corpus.walks[rows, j]
    u = rng.random((centers.size, cfg.negatives)) * noise_cdf[-1]
    negs = np.searchsorted(noise_cdf, u, side="right")
    return centers, contexts, negs


def _probe_loss(emb, ctx, probe) -> float:
    c, o, negs = probe
    if c.size == 0:  # no node has a neighbour
        return float("nan")
    emb = emb.astype(np.float64)
    ctx = ctx.astype(np.float64)
    pos = np.einsum("ij,ij->i", emb[c], ctx[o])
    neg = np.einsum("ij,ikj->ik", emb[c], ctx[negs])
    return float(np.mean(np.logaddexp(0.0, -pos) + np.logaddexp(0.0, neg).sum(axis=1)))


def train_skipgram(corpus: WalkCorpus, cfg: WalkConfig, dim: int = 128, standardize: bool = True) -> FeatureMatrix:
    """Negative-sampling skip-gram over the walk corpus.

    Deterministic for a fixed ``cfg.seed``. The per-epoch loss on a fixed
    probe batch is kept in ``provenance["probe_loss"]`` (index 0 is the
    untrained loss).
    """
    if len(corpus) == 0 or corpus.tokens == 0:
        raise ValueError("empty walk corpus")
    n = corpus.n
    rng = np.random.default_rng([cfg.seed, 3])
    # float32 working copies; the returned matrix is float64
    emb = ((rng.random((n, dim)) - 0.5) / dim).astype(np.float32)
    ctx = np.zeros((n, dim), dtype=np.float32)
    noise = _noise_cdf(corpus)
    probe = _probe(corpus, cfg, noise)
    losses = [_probe_loss(emb, ctx, probe)]
    total = float(cfg.epochs * corpus.tokens)
    done = 0.0
    for ep in range(cfg.epochs):
        done = _sgns_epoch(
            corpus.walks, corpus.lengths, emb, ctx, cfg.window, cfg.negatives, noise,
            cfg.learning_rate, done, total, (cfg.seed * 1000003 + ep) % (2**32),
        )
        losses.append(_probe_loss(emb, ctx, probe))
    data = emb.astype(np.float64)
    if standardize:
        data = standardize_columns(data)
    prov = {"kind": "walk-embedding", "config": asdict(cfg), "dim": dim,
            "standardized": standardize, "probe_loss": losses}
    return FeatureMatrix(data, prov)


def standardize_columns(x: np.ndarray) -> np.ndarray:
    mu = x.mean(axis=0, keepdims=True)
    sd = x.std(axis=0, keepdims=True)
    sd[sd == 0] = 1.0
    return (x - mu) / sd


def node_features(g: Graph, cfg: WalkConfig | None = None, dim: int = 128, standardize: bool = True) -> FeatureMatrix:
    cfg = cfg or WalkConfig()
    return train_skipgram(generate_walks(g, cfg), cfg, dim=dim, standardize=standardize)


_ID_HEADERS = {"id", "node", "node_id", "nodeid"}


def load_features(path: str | os.PathLike, expected_dim: int | None = None) -> FeatureMatrix:
    """Read a numeric CSV, one row per node in edge-list index order.

    A header row is optional; when its first field is an id name
    (``id``, ``node``, ``node_id``) that column is dropped.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [
            r for r in csv.reader(fh)
            if r and any(c.strip() for c in r) and not r[0].lstrip().startswith("#")
        ]
    if not rows:
        raise FeatureFormatError(f"{path}: no rows")
    drop_id = False
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header = rows.pop(0)
        drop_id = header[0].strip().lower() in _ID_HEADERS
    width = len(rows[0])
    out = []
    for k, r in enumerate(rows, start=1):
        if len(r) != width:
            raise FeatureFormatError(f"{path}: row {k} has {len(r)} fields, expected {width}")
        try:
            out.append([float(c) for c in r])
        except ValueError as e:
            raise FeatureFormatError(f"{path}: row {k}: {e}") from None
    data = np.asarray(out, dtype=np.float64)
    if drop_id:
        data = data[:, 1:]
    if expected_dim is not None and data.shape[1] != expected_dim:
        raise FeatureFormatError(f"{path}: dimension {data.shape[1]} != expected {expected_dim}")
    return FeatureMatrix(data, {"kind": "external", "path": os.fspath(path)})


def save_features(fm: FeatureMatrix, path: str | os.PathLike, header: str | None = None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header:
            for h in header.splitlines():
                fh.write(f"# {h}\n")
        for row in fm.data:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
