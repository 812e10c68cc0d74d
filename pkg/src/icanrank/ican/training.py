"""Augmented-Lagrangian training of the causal autoencoder and ranking head."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from .. import diffcore as dc
from ..embed import FeatureMatrix
from ..graph import Graph
from .causal import extract_mb
from .config import IcanConfig
from .losses import acyclicity_penalty, listmle_loss, mse_loss, reconstruction_loss, regularizer
from .network import GraphInputs, IcanModel, decode, encode, init_model, prepare, ranking_forward

log = logging.getLogger(__name__)


class TrainingDivergedError(FloatingPointError):
    def __init__(self, msg: str, components: dict):
        super().__init__(f"{msg}; components={components}")
        self.components = components


@dataclass
class Objective:
    total: dc.Tensor
    parts: dict[str, float]
    h: float


def total_objective(
    model: IcanModel,
    inputs: GraphInputs,
    alpha: float,
    rho: float,
    *,
    use_reconstruction: bool = True,
    use_ranking: bool = True,
    use_penalty: bool = True,
) -> Objective:
    """L1 + L2 + L3 + alpha * h(W) + rho / 2 * h(W)^2 for one graph."""
    cfg = model.config
    lam1, lam2, lam3 = cfg.lambdas
    recon = use_reconstruction and lam1 > 0
    h_low, h_l = encode(model, inputs, train=True, high=recon)
    terms: list[tuple[str, dc.Tensor]] = []
    if recon:
        terms.append(("L1", reconstruction_loss(inputs.adjacency, decode(model, h_l, inputs), lam1)))
    if use_ranking:
        scores = ranking_forward(model, h_low, inputs)
        if cfg.ranking_loss == "mse":
            l2 = mse_loss(scores, inputs.y_col)
        else:
            l2 = listmle_loss(scores, inputs.order)
        terms.append(("L2", dc.scalar_mul(l2, lam2)))
    terms.append(("L3", regularizer(model.regularized_weights(), lam3)))
    h_val = float("nan")
    if use_penalty:
        pen, h = acyclicity_penalty(model.W, alpha, rho)
        terms.append(("penalty", pen))
        h_val = h.item()
    total = terms[0][1]
    for _, t in terms[1:]:
        total = dc.add(total, t)
    parts = {k: t.item() for k, t in terms}
    return Objective(total, parts, h_val)


class Adam:
    def __init__(self, params: list[dc.Tensor], lr: float, b1=0.9, b2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]
        self.t = 0

    def step(self):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p.value -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class GradientDescent:
    def __init__(self, params: list[dc.Tensor], lr: float):
        self.params, self.lr = params, lr

    def step(self):
        for p in self.params:
            if p.grad is not None:
                p.value -= self.lr * p.grad


def _optimizer(cfg: IcanConfig, params: list[dc.Tensor]):
    if cfg.optimizer == "adam":
        return Adam(params, cfg.learning_rate)
    return GradientDescent(params, cfg.learning_rate)


def _names(model: IcanModel, groups: set[str]) -> list[str]:
    out = []
    for k in model.params:
        g = "W" if k == "W" else ("rank" if k.startswith("rank") else "autoencoder")
        if g in groups:
            out.append(k)
    return out


def _descend(model, inputs, names, steps, alpha, rho, flags, opt=None):
    """Run ``steps`` updates; returns (objective before, objective after, last h)."""
    params = [model.params[k] for k in names]
    opt = opt or _optimizer(model.config, params)
    start = None
    for _ in range(steps):
        for p in model.params.values():
            p.grad = None
        try:
            with dc.Tape() as tape:
                obj = total_objective(model, inputs, alpha, rho, **flags)
            tape.backward(obj.total)
        except dc.NonFiniteError as e:
            raise TrainingDivergedError(str(e), _safe_parts(model, inputs, alpha, rho, flags)) from e
        if not np.isfinite(obj.total.item()):
            raise TrainingDivergedError("objective is not finite", obj.parts)
        if start is None:
            start = obj.total.item()
        opt.step()
    for p in model.params.values():
        p.grad = None
    end = total_objective(model, inputs, alpha, rho, **flags)
    if start is None:
        start = end.total.item()
    return start, end.total.item(), end


def _safe_parts(model, inputs, alpha, rho, flags):
    try:
        with np.errstate(all="ignore"):
            return total_objective(model, inputs, alpha, rho, **flags).parts
    except Exception as e:  # diagnostics only
        return {"error": repr(e)}


def _h(model: IcanModel) -> float:
    return dc.expm_trace(dc.constant(model.W.value)).item()


def _refresh_mb(model: IcanModel, warn: bool = False) -> None:
    cfg = model.config
    cg = extract_mb(model.W.value, cfg.w_threshold)
    model.threshold_used = cg.threshold
    if cfg.ranking_input == "full":
        model.mb_columns = cg.mb
        model.mb_fallback = False
        return
    model.mb_columns = cg.mb
    model.mb_fallback = len(cg.mb) == 0
    if model.mb_fallback and warn:
        log.warning("Markov blanket of the influence variable is empty; ranking head reads all columns")


def _augmented_lagrangian(model, inputs, names, flags, refresh_mb, t0, callback=None):
    cfg = model.config
    alpha, rho = 0.0, 1.0
    h_old = _h(model)
    for it in range(cfg.outer_iters):
        start, end, obj = _descend(model, inputs, names, cfg.inner_steps, alpha, rho, flags)
        h_new = _h(model)
        entry = {"stage": "joint" if refresh_mb else "features", "iter": it, "alpha": alpha,
                 "rho": rho, "objective_start": start, "objective_end": end,
                 "h_before": h_old, "h": h_new, "parts": obj.parts,
                 "seconds": round(time.perf_counter() - t0, 3)}
        alpha += rho * h_new
        if abs(h_new) > cfg.theta * abs(h_old):
            rho *= cfg.beta
        h_old = h_new
        if refresh_mb:
            _refresh_mb(model)
            entry["mb"] = list(model.mb_columns or ())
        model.history.append(entry)
        if callback is not None:
            callback(model, entry)
        log.info("outer %d: objective %.6g -> %.6g, h=%.3e, rho=%.1e", it, start, end, h_new, rho)
    return alpha, rho


def train(g: Graph, x: FeatureMatrix | np.ndarray, y: np.ndarray, cfg: IcanConfig,
          callback=None) -> IcanModel:
    """Fit a model on one labelled training graph.

    ``callback(model, entry)`` runs after every outer iteration with the
    history entry just recorded.
    """
    model = init_model(cfg)
    inputs = prepare(g, x, cfg, y=y)
    return fit(model, inputs, callback)


def _plain_stage(model, inputs, names, flags, stage, t0, callback):
    cfg = model.config
    for it in range(cfg.outer_iters):
        start, end, obj = _descend(model, inputs, names, cfg.inner_steps, 0.0, 1.0, flags)
        entry = {"stage": stage, "iter": it, "objective_start": start, "objective_end": end,
                 "parts": obj.parts, "seconds": round(time.perf_counter() - t0, 3)}
        model.history.append(entry)
        if callback is not None:
            callback(model, entry)
        log.info("%s %d: objective %.6g -> %.6g", stage, it, start, end)


def fit(model: IcanModel, inputs: GraphInputs, callback=None) -> IcanModel:
    cfg = model.config
    t0 = time.perf_counter()
    _refresh_mb(model)
    if not cfg.causal_enabled:
        # W stays the identity and the reconstruction term is off
        names = _names(model, {"autoencoder", "rank"})
        flags = dict(use_reconstruction=False, use_ranking=True, use_penalty=False)
        _plain_stage(model, inputs, names, flags, "joint", t0, callback)
    elif cfg.two_stage:
        names = _names(model, {"autoencoder", "W"})
        flags = dict(use_reconstruction=True, use_ranking=False, use_penalty=True)
        _augmented_lagrangian(model, inputs, names, flags, refresh_mb=False, t0=t0, callback=callback)
        _refresh_mb(model)
        names = _names(model, {"rank"})
        flags = dict(use_reconstruction=False, use_ranking=True, use_penalty=False)
        _plain_stage(model, inputs, names, flags, "ranking", t0, callback)
    else:
        names = _names(model, {"autoencoder", "W", "rank"})
        flags = dict(use_reconstruction=True, use_ranking=True, use_penalty=True)
        _augmented_lagrangian(model, inputs, names, flags, refresh_mb=True, t0=t0, callback=callback)
    _refresh_mb(model, warn=True)
    return model
