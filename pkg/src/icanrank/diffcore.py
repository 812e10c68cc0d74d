"""A small dense reverse-mode autodiff engine over 2-D float64 arrays.

Operations executed inside a ``with Tape() as tape:`` block are recorded;
``tape.backward(out)`` replays them in reverse and accumulates (``+=``)
gradients into every tensor with ``requires_grad``. Outside a tape the same
functions just compute values, which is how inference runs.

Only the primitives the ranking model needs are provided; there is no
general broadcasting.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class DimensionError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


class Tensor:
    __slots__ = ("value", "requires_grad", "grad", "name")

    def __init__(self, value, requires_grad: bool = False, name: str | None = None):
        v = np.asarray(value, dtype=np.float64)
        if v.ndim == 0:
            v = v.reshape(1, 1)
        elif v.ndim == 1:
            v = v.reshape(1, -1)
        if v.ndim != 2:
            raise DimensionError(f"tensors are 2-D, got shape {v.shape}")
        self.value = v
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def item(self) -> float:
        if self.value.size != 1:
            raise DimensionError(f"item() on tensor of shape {self.shape}")
        return float(self.value[0, 0])

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return hadamard(self, other)
        return scalar_mul(self, other)

    __rmul__ = __mul__

    @property
    def T(self):
        return transpose(self)


def constant(value, name: str | None = None) -> Tensor:
    return Tensor(value, requires_grad=False, name=name)


def parameter(value, name: str | None = None) -> Tensor:
    return Tensor(value, requires_grad=True, name=name)


class Tape:
    """Ordered record of primitive applications."""

    _stack: list["Tape"] = []

    def __init__(self, check_finite: bool = True):
        self.records: list[tuple[Tensor, tuple[Tensor, ...], Callable]] = []
        self.check_finite = check_finite

    def __enter__(self) -> "Tape":
        Tape._stack.append(self)
        return self

    def __exit__(self, *exc):
        Tape._stack.pop()
        return False

    @classmethod
    def current(cls) -> "Tape | None":
        return cls._stack[-1] if cls._stack else None

    def record(self, out: Tensor, inputs: tuple[Tensor, ...], backward: Callable):
        self.records.append((out, inputs, backward))

    def backward(self, out: Tensor, seed: np.ndarray | None = None):
        """Propagate d(out) back through the record; out must be 1x1 unless seeded."""
        if seed is None:
            if out.value.size != 1:
                raise DimensionError(f"backward needs a scalar output or a seed, got {out.shape}")
            seed = np.ones_like(out.value)
        grads: dict[int, np.ndarray] = {id(out): np.asarray(seed, dtype=np.float64)}
        for node, inputs, fn in reversed(self.records):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node.requires_grad:
                continue
            for inp, gi in zip(inputs, fn(g)):
                if gi is None or not inp.requires_grad:
                    continue
                if inp.__class__ is _Intermediate:
                    prev = grads.get(id(inp))
                    grads[id(inp)] = gi if prev is None else prev + gi
                else:
                    inp._accumulate(gi)
        # out itself may be a leaf
        g = grads.pop(id(out), None)
        if g is not None and out.__class__ is not _Intermediate and out.requires_grad:
            out._accumulate(g)


class _Intermediate(Tensor):
    """Op output; its gradient lives on the tape, not on the tensor."""

    __slots__ = ()


def _emit(name: str, value: np.ndarray, inputs: tuple[Tensor, ...], backward: Callable) -> Tensor:
    tape = Tape.current()
    needs = any(t.requires_grad for t in inputs)
    out = _Intermediate.__new__(_Intermediate)
    out.value = value
    out.requires_grad = needs and tape is not None
    out.grad = None
    out.name = name
    if tape is not None:
        if tape.check_finite and not np.isfinite(value).all():
            raise NonFiniteError(f"{name} produced non-finite values")
        if needs:
            tape.record(out, inputs, backward)
    return out


def _check(cond: bool, prim: str, msg: str):
    if not cond:
        raise DimensionError(f"{prim}: {msg}")


# -- primitives ---------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    _check(a.shape[1] == b.shape[0], "matmul", f"{a.shape} @ {b.shape}")
    av, bv = a.value, b.value

    def back(g):
        return (g @ bv.T if a.requires_grad else None, av.T @ g if b.requires_grad else None)

    return _emit("matmul", av @ bv, (a, b), back)


def propagate(s, b: Tensor) -> Tensor:
    """Constant (dense or scipy.sparse) matrix ``s`` times ``b``.

    Equivalent to ``matmul(constant(s), b)`` without densifying ``s``.
    """
    _check(s.shape[1] == b.shape[0], "propagate", f"{s.shape} @ {b.shape}")
    st = s.T
    out = np.asarray(s @ b.value)
    return _emit("propagate", out, (b,), lambda g: (np.asarray(st @ g),))


def add(a: Tensor, b: Tensor) -> Tensor:
    _check(a.shape == b.shape, "add", f"{a.shape} + {b.shape}")
    return _emit("add", a.value + b.value, (a, b), lambda g: (g, g))


def add_bias_row_broadcast(a: Tensor, b: Tensor) -> Tensor:
    """``a`` (n x k) plus row vector ``b`` (1 x k) added to every row."""
    _check(b.shape == (1, a.shape[1]), "add_bias_row_broadcast", f"{a.shape} + {b.shape}")

    def back(g):
        return g, (g.sum(axis=0, keepdims=True) if b.requires_grad else None)

    return _emit("add_bias", a.value + b.value, (a, b), back)


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    _check(a.shape == b.shape, "hadamard", f"{a.shape} * {b.shape}")
    av, bv = a.value, b.value

    def back(g):
        return (g * bv if a.requires_grad else None, g * av if b.requires_grad else None)

    return _emit("hadamard", av * bv, (a, b), back)


def relu(a: Tensor) -> Tensor:
    mask = a.value > 0
    return _emit("relu", np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid(a: Tensor) -> Tensor:
    s = _sigmoid(a.value)
    return _emit("sigmoid", s, (a,), lambda g: (g * s * (1.0 - s),))


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    rows = {p.shape[0] for p in parts}
    _check(len(rows) == 1, "concat_cols", f"row counts differ: {[p.shape for p in parts]}")
    widths = [p.shape[1] for p in parts]
    edges = np.cumsum([0] + widths)

    def back(g):
        return tuple(g[:, edges[i]:edges[i + 1]] for i in range(len(parts)))

    return _emit("concat_cols", np.concatenate([p.value for p in parts], axis=1), tuple(parts), back)


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    _check(0 <= start <= stop <= a.shape[1], "slice_cols", f"[{start}:{stop}] of {a.shape}")
    shape = a.shape

    def back(g):
        full = np.zeros(shape)
        full[:, start:stop] = g
        return (full,)

    return _emit("slice_cols", a.value[:, start:stop].copy(), (a,), back)


def gather_rows(a: Tensor, index: np.ndarray) -> Tensor:
    """Rows of ``a`` picked (and possibly repeated) by ``index``."""
    index = np.asarray(index, dtype=np.int64)
    shape = a.shape

    def back(g):
        full = np.zeros(shape)
        np.add.at(full, index, g)
        return (full,)

    return _emit("gather_rows", a.value[index], (a,), back)


def transpose(a: Tensor) -> Tensor:
    return _emit("transpose", a.value.T.copy(), (a,), lambda g: (g.T,))


def scalar_mul(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _emit("scalar_mul", a.value * c, (a,), lambda g: (g * c,))


def add_scalar(a: Tensor, c: float) -> Tensor:
    return _emit("add_scalar", a.value + float(c), (a,), lambda g: (g,))


def sum(a: Tensor) -> Tensor:  # noqa: A001 - mirrors the primitive name
    shape = a.shape
    return _emit("sum", np.array([[a.value.sum()]]), (a,), lambda g: (np.full(shape, g[0, 0]),))


def frobenius_sq(a: Tensor) -> Tensor:
    av = a.value
    return _emit("frobenius_sq", np.array([[np.sum(av * av)]]), (a,), lambda g: (2.0 * g[0, 0] * av,))


def log(a: Tensor) -> Tensor:
    av = a.value
    _check(bool((av > 0).all()), "log", "non-positive input")
    return _emit("log", np.log(av), (a,), lambda g: (g / av,))


def exp(a: Tensor) -> Tensor:
    e = np.exp(a.value)
    return _emit("exp", e, (a,), lambda g: (g * e,))


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    av = a.value
    inside = (av >= lo) & (av <= hi)
    return _emit("clip", np.clip(av, lo, hi), (a,), lambda g: (g * inside,))


def logsumexp_rows(a: Tensor) -> Tensor:
    """Row-wise log-sum-exp, n x k -> n x 1."""
    av = a.value
    mx = av.max(axis=1, keepdims=True)
    lse = mx + np.log(np.exp(av - mx).sum(axis=1, keepdims=True))
    soft = np.exp(av - lse)
    return _emit("logsumexp_rows", lse, (a,), lambda g: (g * soft,))


def suffix_logsumexp(a: Tensor) -> Tensor:
    """For a column (n x 1): out[i] = log sum_{k >= i} exp(a[k]).

    Accumulated tail-first so no intermediate exponentiates a large value.
    """
    _check(a.shape[1] == 1, "suffix_logsumexp", f"expects a column, got {a.shape}")
    s = a.value[:, 0]
    lse = np.logaddexp.accumulate(s[::-1])[::-1]

    def back(g):
        gv = g[:, 0]
        # d/ds_k = sum_{i<=k} g_i exp(s_k - lse_i); split by sign for log-space prefix sums
        out = np.zeros_like(s)
        with np.errstate(divide="ignore"):
            for part, sign in ((np.where(gv > 0, gv, 0.0), 1.0), (np.where(gv < 0, -gv, 0.0), -1.0)):
                if not part.any():
                    continue
                acc = np.logaddexp.accumulate(np.log(part) - lse)
                out += sign * np.exp(s + acc)
        return (out[:, None],)

    return _emit("suffix_logsumexp", lse[:, None], (a,), back)


# -- matrix exponential trace -------------------------------------------------

SERIES_ORDER = 18


def _expm_series(q: np.ndarray, order: int = SERIES_ORDER) -> np.ndarray:
    """exp(q) by scaling and squaring a truncated Taylor series."""
    k = q.shape[0]
    norm = np.abs(q).sum(axis=0).max() if q.size else 0.0
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    qs = q / (2.0**s)
    term = np.eye(k)
    total = np.eye(k)
    for j in range(1, order + 1):
        term = term @ qs / j
        total = total + term
    for _ in range(s):
        total = total @ total
    return total


def expm(q: np.ndarray) -> np.ndarray:
    return _expm_series(np.asarray(q, dtype=np.float64))


def expm_trace(w: Tensor) -> Tensor:
    """Acyclicity residual h = tr(exp(W * W)) - k for square W."""
    _check(w.shape[0] == w.shape[1], "expm_trace", f"needs a square matrix, got {w.shape}")
    wv = w.value
    e = _expm_series(wv * wv)
    h = np.trace(e) - wv.shape[0]

    def back(g):
        return (g[0, 0] * 2.0 * wv * e.T,)

    return _emit("expm_trace", np.array([[h]]), (w,), back)


# -- finite-difference check --------------------------------------------------


def grad_check(
    f: Callable[[Tensor], Tensor],
    x: Tensor,
    eps: float = 1e-5,
    entries: np.ndarray | None = None,
) -> float:
    """Max |g_ad - g_fd| / max(1, |g_fd|) over the entries of ``x``.

    ``f`` maps ``x`` to a 1x1 tensor and may close over other tensors.
    ``entries`` optionally restricts the check to these flat indices.
    """
    was = x.requires_grad
    x.requires_grad = True
    saved = x.grad
    x.grad = None
    try:
        with Tape() as tape:
            out = f(x)
        tape.backward(out)
        g_ad = np.zeros_like(x.value) if x.grad is None else x.grad.copy()
    finally:
        x.grad = saved
        x.requires_grad = was
    flat = x.value.reshape(-1)
    idx = np.arange(flat.size) if entries is None else np.asarray(entries)
    worst = 0.0
    for i in idx:
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x).item()
        flat[i] = orig - eps
        fm = f(x).item()
        flat[i] = orig
        g_fd = (fp - fm) / (2.0 * eps)
        err = abs(g_ad.reshape(-1)[i] - g_fd) / max(1.0, abs(g_fd))
        worst = max(worst, err)
    return worst
