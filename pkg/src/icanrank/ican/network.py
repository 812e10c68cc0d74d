"""Causal graph autoencoder, injected influence column and ranking head."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .. import diffcore as dc
from ..embed import FeatureMatrix, check_dims
from ..graph import Graph, normalize_adjacency
from .config import IcanConfig

log = logging.getLogger(__name__)


def enc_name(i: int) -> str:
    return f"enc{i}"


def dec_name(i: int) -> str:
    return f"dec{i}"


def rank_name(i: int) -> str:
    return f"rank{i}"


@dataclass
class IcanModel:
    config: IcanConfig
    params: dict[str, dc.Tensor]
    mb_columns: tuple[int, ...] | None = None
    mb_fallback: bool = True
    threshold_used: float | None = None
    history: list[dict] = field(default_factory=list)

    @property
    def W(self) -> dc.Tensor:
        return self.params["W"]

    def weight(self, name: str) -> dc.Tensor:
        return self.params[f"{name}.w"]

    def bias(self, name: str) -> dc.Tensor:
        return self.params[f"{name}.b"]

    def encoder_layers(self) -> list[int]:
        m = self.config.inject_layer
        return [i for i in range(self.config.hidden_layers + 1) if i != m]

    def decoder_layers(self) -> list[int]:
        return list(range(1, self.config.inject_layer))

    def rank_layers(self) -> list[int]:
        return list(range(1, self.config.rank_layers + 2))

    def regularized_weights(self) -> list[dc.Tensor]:
        """Weights entering the L2 penalty: encoder i in 1..l (i != m), decoder, ranking."""
        out = [self.weight(enc_name(i)) for i in self.encoder_layers() if i >= 1]
        out += [self.weight(dec_name(i)) for i in self.decoder_layers()]
        out += [self.weight(rank_name(i)) for i in self.rank_layers()]
        return out

    def ranking_columns(self) -> np.ndarray:
        """Feature columns of the low-dimensional embedding read by the ranking head."""
        p = self.config.hidden
        if self.config.ranking_input == "full" or not self.mb_columns:
            return np.arange(p)
        return np.asarray(self.mb_columns, dtype=np.int64)

    def copy(self) -> "IcanModel":
        params = {k: dc.Tensor(v.value.copy(), v.requires_grad, v.name) for k, v in self.params.items()}
        return IcanModel(self.config, params, self.mb_columns, self.mb_fallback,
                         self.threshold_used, [dict(h) for h in self.history])


def _uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_model(cfg: IcanConfig) -> IcanModel:
    """Random fan-in-scaled weights, zero biases, W = I."""
    rng = np.random.default_rng(cfg.seed)
    p, d, m, l = cfg.hidden, cfg.feature_dim, cfg.inject_layer, cfg.hidden_layers
    params: dict[str, dc.Tensor] = {}

    def layer(name, fan_in, fan_out):
        params[f"{name}.w"] = dc.parameter(_uniform(rng, fan_in, fan_out), f"{name}.w")
        params[f"{name}.b"] = dc.parameter(np.zeros((1, fan_out)), f"{name}.b")

    for i in range(l + 1):
        if i == m:
            continue
        if i == 0:
            layer(enc_name(0), d, p)
        elif i < m:
            layer(enc_name(i), p, p)
        else:
            layer(enc_name(i), p + 1, p + 1)
    params["W"] = dc.parameter(np.eye(p + 1), "W")
    for i in range(1, m):
        layer(dec_name(i), p + 1, p + 1)
    h = cfg.rank_hidden
    for i in range(1, cfg.rank_layers + 2):
        fan_in = p if i == 1 else h
        fan_out = 1 if i == cfg.rank_layers + 1 else h
        layer(rank_name(i), fan_in, fan_out)
    return IcanModel(cfg, params)


@dataclass
class GraphInputs:
    """Per-graph constants reused across forward passes."""

    n: int
    a_norm: sp.csr_matrix
    a_rank: sp.csr_matrix
    ax: np.ndarray  # A-tilde @ X, precomputed since both are constant
    adjacency: np.ndarray | None = None  # dense 0/1 target for reconstruction
    y_col: np.ndarray | None = None  # standardized influence column (n x 1)
    order: np.ndarray | None = None  # nodes by descending influence


def standardize_scores(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    sd = y.std()
    return (y - y.mean()) / (sd if sd > 0 else 1.0)


def influence_order(y: np.ndarray) -> np.ndarray:
    """Indices by descending y, ties by ascending node index."""
    y = np.asarray(y, dtype=np.float64)
    return np.lexsort((np.arange(y.size), -y))


def prepare(
    g: Graph,
    x: FeatureMatrix | np.ndarray,
    cfg: IcanConfig,
    y: np.ndarray | None = None,
    dense_adjacency: bool = True,
) -> GraphInputs:
    data = x.data if isinstance(x, FeatureMatrix) else np.asarray(x, dtype=np.float64)
    check_dims(data, cfg.feature_dim)
    if data.shape[0] != g.n:
        raise ValueError(f"feature rows {data.shape[0]} != node count {g.n}")
    a_norm = sp.csr_matrix(normalize_adjacency(g)) if g.n <= 4000 else _sparse_norm(g)
    raw = _sparse_adj(g)
    a_rank = raw if cfg.rank_adjacency == "raw" else a_norm
    inputs = GraphInputs(g.n, a_norm, a_rank, np.asarray(a_norm @ data))
    if dense_adjacency:
        inputs.adjacency = raw.toarray()
    if y is not None:
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (g.n,):
            raise ValueError(f"influence vector has shape {y.shape}, expected ({g.n},)")
        inputs.y_col = standardize_scores(y)[:, None]
        inputs.order = influence_order(y)
    return inputs


def _sparse_adj(g: Graph) -> sp.csr_matrix:
    e = g.edge_array
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    return sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(g.n, g.n))


def _sparse_norm(g: Graph) -> sp.csr_matrix:
    a = _sparse_adj(g) + sp.identity(g.n, format="csr")
    dinv = 1.0 / np.sqrt(np.asarray(a.sum(axis=1)).ravel())
    d = sp.diags(dinv)
    return (d @ a @ d).tocsr()


def _gcn(model: IcanModel, name: str, h: dc.Tensor, prop) -> dc.Tensor:
    z = dc.propagate(prop, dc.matmul(h, model.weight(name)))
    return dc.relu(dc.add_bias_row_broadcast(z, model.bias(name)))


def encode(model: IcanModel, inputs: GraphInputs, train: bool = True, high: bool = True):
    """Return ``(H_low, H_l)``; ``H_l`` is None when ``high`` is False.

    In training the standardized influence column is appended after the
    low-dimensional layer; at inference it is a zero column.
    """
    cfg = model.config
    m, l = cfg.inject_layer, cfg.hidden_layers
    ax = dc.constant(inputs.ax)
    h = dc.relu(dc.add_bias_row_broadcast(dc.matmul(ax, model.weight(enc_name(0))), model.bias(enc_name(0))))
    for i in range(1, m):
        h = _gcn(model, enc_name(i), h, inputs.a_norm)
    h_low = h
    if not high:
        return h_low, None
    if train:
        if inputs.y_col is None:
            raise ValueError("training-mode encode needs influence scores")
        ycol = dc.constant(inputs.y_col)
    else:
        ycol = dc.constant(np.zeros((inputs.n, 1)))
    h = dc.concat_cols([h_low, ycol])
    for i in range(m + 1, l + 1):
        h = _gcn(model, enc_name(i), h, inputs.a_norm)
    return h_low, h


def decode_logits(model: IcanModel, h_l: dc.Tensor, inputs: GraphInputs) -> dc.Tensor:
    cfg = model.config
    phi = dc.matmul(h_l, model.W)
    for i in range(1, cfg.inject_layer):
        phi = _gcn(model, dec_name(i), phi, inputs.a_norm)
    phi = dc.slice_cols(phi, 0, cfg.hidden)  # drop the influence column
    return dc.matmul(phi, dc.transpose(phi))


def decode(model: IcanModel, h_l: dc.Tensor, inputs: GraphInputs) -> dc.Tensor:
    """Reconstructed adjacency sigmoid(Phi Phi^T)."""
    return dc.sigmoid(decode_logits(model, h_l, inputs))


def column_mask(model: IcanModel, columns: np.ndarray | None = None) -> np.ndarray:
    p = model.config.hidden
    cols = model.ranking_columns() if columns is None else columns
    mask = np.zeros((p, 1))
    mask[cols] = 1.0
    return np.repeat(mask, model.config.rank_hidden, axis=1)


def ranking_forward(
    model: IcanModel,
    feats: dc.Tensor,
    inputs: GraphInputs,
    columns: np.ndarray | None = None,
) -> dc.Tensor:
    """Sigmoid GNN layers over the ranking adjacency, then an affine score.

    ``feats`` is the full low-dimensional embedding; only ``columns``
    (default: the model's current ranking columns) reach the head.
    """
    cfg = model.config
    if feats.shape[1] != cfg.hidden:
        raise dc.DimensionError(f"ranking input width {feats.shape[1]} != {cfg.hidden}")
    w1 = model.weight(rank_name(1))
    wmask = dc.hadamard(w1, dc.constant(column_mask(model, columns)))
    e = feats
    for i in range(1, cfg.rank_layers + 1):
        w = wmask if i == 1 else model.weight(rank_name(i))
        z = dc.propagate(inputs.a_rank, dc.matmul(e, w))
        e = dc.sigmoid(dc.add_bias_row_broadcast(z, model.bias(rank_name(i))))
    last = rank_name(cfg.rank_layers + 1)
    return dc.add_bias_row_broadcast(dc.matmul(e, model.weight(last)), model.bias(last))


def predict_scores(model: IcanModel, inputs: GraphInputs) -> np.ndarray:
    """Inference-mode scores (no tape, zero influence column)."""
    h_low, _ = encode(model, inputs, train=False, high=False)
    return ranking_forward(model, h_low, inputs).value[:, 0].copy()
