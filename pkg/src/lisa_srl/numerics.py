"""Dense float64 tensors with tape-based reverse-mode differentiation.

The whole model runs on a deliberately small op set: enough for projections,
scaled dot-product attention, width-3 convolutions (built from row shifts and
matmuls), bilinear scoring, scalar mixing and cross-entropy style losses.
Everything is float64 and row-major; there is no broadcasting beyond the few
shapes the ops below accept. Tensors are immutable once created (the SGD
optimizer mutates parameter storage only *between* tapes).

A `Tape` records one forward computation. `Tape.backward(loss)` replays the
recorded operations in exact reverse order, accumulating gradients into the
`.grad` buffers of every tensor on the path from `loss` back to the leaves.
`Parameter` wraps a persistent leaf tensor whose gradient buffer survives
across tapes until `reset_gradient()` is called.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, DimensionError, NonFiniteError, OracleError


class Tensor:
    """An immutable dense float64 array plus a gradient buffer.

    All entries must be finite; constructing a tensor from data containing
    NaN or infinity raises NonFiniteError, which is how training divergence
    is first detected.
    """

    __slots__ = ("data", "grad")

    def __init__(self, data) -> None:
        arr = np.asarray(data, dtype=np.float64)
        if not np.isfinite(arr).all():
            raise NonFiniteError(f"non-finite entries in tensor of shape {arr.shape}")
        self.data = arr
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Tensor(shape={self.data.shape})"


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


class Parameter:
    """A named leaf tensor with a persistent gradient buffer.

    The name must be unique within a model; checkpoints are keyed by it.
    `gradient` is all-zero after `reset_gradient()` and accumulates across
    every `Tape.backward` call in between.
    """

    __slots__ = ("name", "value")

    def __init__(self, name: str, data) -> None:
        self.name = name
        self.value = Tensor(data)
        self.value.grad = np.zeros_like(self.value.data)

    @property
    def gradient(self) -> np.ndarray:
        assert self.value.grad is not None
        return self.value.grad

    def reset_gradient(self) -> None:
        self.value.grad = np.zeros_like(self.value.data)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Parameter({self.name!r}, shape={self.value.shape})"


class Tape:
    """Ordered record of differentiable operations for one forward pass.

    Single-writer: one training step owns one tape. Ops are methods so the
    ownership is explicit at every call site.
    """

    __slots__ = ("_backprops",)

    def __init__(self) -> None:
        self._backprops: list[Callable[[], None]] = []

    # -- graph construction helpers -------------------------------------

    def _record(self, fn: Callable[[], None]) -> None:
        self._backprops.append(fn)

    # -- elementwise and shape ops ---------------------------------------

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise DimensionError(f"add shapes differ: {a.shape} vs {b.shape}")
        out = Tensor(a.data + b.data)

        def back() -> None:
            if out.grad is None:
                return
            _accumulate(a, out.grad)
            _accumulate(b, out.grad)

        self._record(back)
        return out

    def sub(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise DimensionError(f"sub shapes differ: {a.shape} vs {b.shape}")
        out = Tensor(a.data - b.data)

        def back() -> None:
            if out.grad is None:
                return
            _accumulate(a, out.grad)
            _accumulate(b, -out.grad)

        self._record(back)
        return out

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise DimensionError(f"mul shapes differ: {a.shape} vs {b.shape}")
        out = Tensor(a.data * b.data)

        def back() -> None:
            if out.grad is None:
                return
            _accumulate(a, out.grad * b.data)
            _accumulate(b, out.grad * a.data)

        self._record(back)
        return out

    def scale(self, a: Tensor, c: float) -> Tensor:
        out = Tensor(a.data * c)

        def back() -> None:
            if out.grad is None:
                return
            _accumulate(a, out.grad * c)

        self._record(back)
        return out

    def scale_by(self, a: Tensor, s: Tensor) -> Tensor:
        """Multiply a tensor by a scalar tensor; gradients reach both."""
        if s.ndim != 0:
            raise DimensionError(f"scale_by needs a scalar, got shape {s.shape}")
        out = Tensor(a.data * s.data)

        def back() -> None:
            if out.grad is None:
                return
            _accumulate(a, out.grad * s.data)
            _accumulate(s, np.asarray((out.grad * a.data).sum()))

        self._record(back)
        return out

    def add_row(self, a: Tensor, b: Tensor) -> Tensor:
        """Add a length-n vector to every row of an m-by-n matrix."""
        if a.ndim != 2 or b.ndim != 1 or a.shape[1] != b.shape[0]:
            raise DimensionError(f"add_row shapes: {a.shape} + {b.shape}")
        out = Tensor(a.data + b.data[None, :])

        def back() -> None:
            if out.grad is None:
                return
            _accumulate(a, out.grad)
            _accumulate(b, out.grad.sum(axis=0))

        self._record(back)
        return out

    def concat_cols(self, parts: Sequence[Tensor]) -> Tensor:
        rows = parts[0].shape[0]
        for p in parts:
            if p.ndim != 2 or p.shape[0] != rows:
                raise DimensionError(
                    f"concat_cols row mismatch: {[p.shape for p in parts]}"
                )
        widths = [p.shape[1] for p in parts]
        out = Tensor(np.concatenate([p.data for p in parts], axis=1))

        def back() -> None:
            if out.grad is None:
                return
            start = 0
            for p, w in zip(parts, widths):
                _accumulate(p, out.grad[:, start : start + w])
                start += w

        self._record(back)
        return out

    def shift_rows(self, a: Tensor, k: int) -> Tensor:
        """Shift rows down by k (up for negative k), filling with zeros."""
        out_data = np.zeros_like(a.data)
        if k == 0:
            out_data[...] = a.data
        elif k > 0:
            out_data[k:] = a.data[:-k] if k < a.shape[0] else 0.0
        else:
            out_data[:k] = a.data[-k:] if -k < a.shape[0] else 0.0
        out = Tensor(out_data)

        def back() -> None:
            if out.grad is None:
                return
            g = np.zeros_like(a.data)
            if k == 0:
                g[...] = out.grad
            elif k > 0:
                if k < a.shape[0]:
                    g[:-k] = out.grad[k:]
            else:
                if -k < a.shape[0]:
                    g[-k:] = out.grad[:k]
            _accumulate(a, g)

        self._record(back)
        return out

    def pick_row(self, a: Tensor, i: int) -> Tensor:
        if a.ndim != 2:
            raise DimensionError(f"pick_row needs a matrix, got {a.shape}")
        out = Tensor(a.data[i].copy())

        def back() -> None:
            if out.grad is None:
                return
            g = np.zeros_like(a.data)
            g[i] = out.grad
            _accumulate(a, g)

        self._record(back)
        return out

    def take_per_row(self, a: Tensor, cols: Sequence[int]) -> Tensor:
        """out[t] = a[t, cols[t]]; the gather used by all cross-entropies."""
        idx = np.asarray(cols, dtype=np.intp)
        if a.ndim != 2 or idx.shape[0] != a.shape[0]:
            raise DimensionError(f"take_per_row: {a.shape} with {idx.shape[0]} indices")
        rows = np.arange(a.shape[0])
        out = Tensor(a.data[rows, idx])

        def back() -> None:
            if out.grad is None:
                return
            g = np.zeros_like(a.data)
            np.add.at(g, (rows, idx), out.grad)
            _accumulate(a, g)

        self._record(back)
        return out

    # -- linear algebra ---------------------------------------------------

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise DimensionError(f"matmul shapes incompatible: {a.shape} x {b.shape}")
        out = Tensor(a.data @ b.data)

        def back() -> None:
            if out.grad is None:
                return
            _accumulate(a, out.grad @ b.data.T)
            _accumulate(b, a.data.T @ out.grad)

        self._record(back)
        return out

    def vecmat(self, v: Tensor, w: Tensor) -> Tensor:
        if v.ndim != 1 or w.ndim != 2 or v.shape[0] != w.shape[0]:
            raise DimensionError(f"vecmat shapes incompatible: {v.shape} x {w.shape}")
        out = Tensor(v.data @ w.data)

        def back() -> None:
            if out.grad is None:
                return
            _accumulate(v, out.grad @ w.data.T)
            _accumulate(w, np.outer(v.data, out.grad))

        self._record(back)
        return out

    def transpose(self, a: Tensor) -> Tensor:
        out = Tensor(a.data.T.copy())

        def back() -> None:
            if out.grad is None:
                return
            _accumulate(a, out.grad.T)

        self._record(back)
        return out

    def bilinear(self, p: Tensor, u: Tensor, r: Tensor) -> Tensor:
        """scores[t, l] = p . U[:, l, :] . r[t]  for a rank-3 operator U."""
        if p.ndim != 1 or u.ndim != 3 or r.ndim != 2:
            raise DimensionError(
                f"bilinear ranks: {p.shape}, {u.shape}, {r.shape}"
            )
        if u.shape[0] != p.shape[0] or u.shape[2] != r.shape[1]:
            raise DimensionError(
                f"bilinear dims incompatible: {p.shape}, {u.shape}, {r.shape}"
            )
        out = Tensor(np.einsum("i,ilj,tj->tl", p.data, u.data, r.data))

        def back() -> None:
            if out.grad is None:
                return
            g = out.grad
            _accumulate(p, np.einsum("tl,ilj,tj->i", g, u.data, r.data))
            _accumulate(u, np.einsum("i,tl,tj->ilj", p.data, g, r.data))
            _accumulate(r, np.einsum("tl,i,ilj->tj", g, p.data, u.data))

        self._record(back)
        return out

    def mix_layers(self, coeffs: Tensor, layers: np.ndarray) -> Tensor:
        """Weighted sum over frozen layer stack: out = sum_l coeffs[0,l] layers[l].

        `layers` is a constant [L, T, d] array (never differentiated), which
        is what keeps precomputed contextual representations off the tape.
        """
        if coeffs.ndim != 2 or coeffs.shape[0] != 1 or coeffs.shape[1] != layers.shape[0]:
            raise DimensionError(
                f"mix_layers: coeffs {coeffs.shape} vs {layers.shape[0]} layers"
            )
        out = Tensor(np.einsum("l,ltd->td", coeffs.data[0], layers))

        def back() -> None:
            if out.grad is None:
                return
            _accumulate(coeffs, np.einsum("td,ltd->l", out.grad, layers)[None, :])

        self._record(back)
        return out

    # -- nonlinearities and normalizers -----------------------------------

    def relu(self, a: Tensor) -> Tensor:
        out = Tensor(np.maximum(a.data, 0.0))

        def back() -> None:
            if out.grad is None:
                return
            _accumulate(a, out.grad * (a.data > 0.0))

        self._record(back)
        return out

    def softmax_rows(self, x: Tensor) -> Tensor:
        """Row-wise softmax with per-row max subtraction for stability.

        Every output row is non-negative and sums to 1 (within 1e-9).
        """
        if x.ndim != 2:
            raise DimensionError(f"softmax_rows needs a matrix, got {x.shape}")
        shifted = x.data - x.data.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=1, keepdims=True)
        out = Tensor(y)

        def back() -> None:
            if out.grad is None:
                return
            g = out.grad
            _accumulate(x, y * (g - (g * y).sum(axis=1, keepdims=True)))

        self._record(back)
        return out

    def log_softmax_rows(self, x: Tensor) -> Tensor:
        if x.ndim != 2:
            raise DimensionError(f"log_softmax_rows needs a matrix, got {x.shape}")
        shifted = x.data - x.data.max(axis=1, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        out = Tensor(shifted - lse)

        def back() -> None:
            if out.grad is None:
                return
            g = out.grad
            _accumulate(x, g - np.exp(out.data) * g.sum(axis=1, keepdims=True))

        self._record(back)
        return out

    # -- reductions --------------------------------------------------------

    def sum_all(self, a: Tensor) -> Tensor:
        out = Tensor(np.asarray(a.data.sum()))

        def back() -> None:
            if out.grad is None:
                return
            _accumulate(a, np.full_like(a.data, float(out.grad)))

        self._record(back)
        return out

    def mean_all(self, a: Tensor) -> Tensor:
        n = a.data.size
        out = Tensor(np.asarray(a.data.sum() / n))

        def back() -> None:
            if out.grad is None:
                return
            _accumulate(a, np.full_like(a.data, float(out.grad) / n))

        self._record(back)
        return out

    def neg(self, a: Tensor) -> Tensor:
        return self.scale(a, -1.0)

    # -- reverse pass -------------------------------------------------------

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into every reachable tensor's grad.

        Replays the recorded ops in exact reverse execution order. Tensors
        (and therefore Parameters) not on any path to `loss` are untouched.
        """
        if loss.ndim != 0:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        if loss.grad is None:
            loss.grad = np.zeros_like(loss.data)
        loss.grad += 1.0
        for fn in reversed(self._backprops):
            fn()


def finite_difference_check(
    f: Callable[[], float], param: Parameter, eps: float
) -> float:
    """Compare `param.gradient` against central differences of `f`.

    `f` must be a deterministic closure over the current parameter values
    returning the scalar loss as a plain float (no tape needed). The caller
    is expected to have already populated `param.gradient` via a backward
    pass. For each coordinate the relative error is

        |g_tape - g_fd| / max(|g_tape|, |g_fd|, 1.0)

    and the maximum over coordinates is returned. The max(..., 1.0) floor
    keeps near-zero gradients from inflating the ratio with pure roundoff.
    """
    if eps <= 0:
        raise ContractError("eps must be positive")
    if f() != f():
        raise OracleError("f is not deterministic under repeated evaluation")
    values = param.value.data
    analytic = param.gradient
    worst = 0.0
    flat = values.reshape(-1)
    flat_grad = analytic.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + eps
        up = f()
        flat[i] = saved - eps
        down = f()
        flat[i] = saved
        fd = (up - down) / (2.0 * eps)
        g = flat_grad[i]
        err = abs(g - fd) / max(abs(g), abs(fd), 1.0)
        if err > worst:
            worst = err
    return worst
