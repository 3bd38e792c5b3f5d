"""Bias-free fully connected networks and their empirical loss.

Hidden layers apply the activation componentwise, the output layer is
linear: ``T_1 = s(W_1 X)``, ``T_i = s(W_i T_{i-1})``, ``T_out = W_out T_H``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from landscape_lab.activations import ActivationDescriptor, apply_elementwise
from landscape_lab.errors import AssumptionViolation, PreconditionError, ShapeError
from landscape_lab.linalg import as_matrix
from landscape_lab.seeding import DATA, WEIGHTS, stream


@dataclass(frozen=True, eq=False)
class LossDescriptor:
    name: str
    eval: Callable[[np.ndarray, np.ndarray], float]
    gradient: Callable[[np.ndarray, np.ndarray], np.ndarray]
    infimum: Callable[[np.ndarray], float]


def _quadratic_eval(y, yhat):
    return float(np.sum((y - yhat) ** 2))


def _quadratic_grad(y, yhat):
    return 2.0 * (yhat - y)


def _logistic_eval(y, yhat):
    # labels in {-1, +1}; log(1 + exp(-y * yhat)) summed over entries
    return float(np.sum(np.logaddexp(0.0, -y * yhat)))


def _logistic_grad(y, yhat):
    z = -y * yhat
    return -y * 0.5 * (1.0 + np.tanh(0.5 * z))


QUADRATIC = LossDescriptor("quadratic", _quadratic_eval, _quadratic_grad, lambda y: 0.0)
LOGISTIC = LossDescriptor("logistic", _logistic_eval, _logistic_grad, lambda y: 0.0)

_LOSSES = {"quadratic": QUADRATIC, "logistic": LOGISTIC}


def builtin_loss(name: str) -> LossDescriptor:
    try:
        return _LOSSES[name]
    except KeyError:
        raise PreconditionError(f"unknown loss {name!r}; expected one of {sorted(_LOSSES)}") from None


@dataclass(frozen=True, eq=False)
class NetSpec:
    dims: tuple[int, ...]
    activation: ActivationDescriptor
    loss: LossDescriptor = QUADRATIC

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 3:
            raise PreconditionError("need at least one hidden layer: dims = [d_0, d_1, ..., d_out]")
        if any(d < 1 for d in dims):
            raise PreconditionError("layer widths must be positive")
        object.__setattr__(self, "dims", dims)

    @property
    def n_hidden(self) -> int:
        return len(self.dims) - 2

    @property
    def last_hidden_width(self) -> int:
        return self.dims[-2]

    def with_activation(self, activation: ActivationDescriptor) -> "NetSpec":
        return NetSpec(self.dims, activation, self.loss)


@dataclass(frozen=True, eq=False)
class Weights:
    mats: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "mats", tuple(as_matrix(m, name=f"W_{i + 1}") for i, m in enumerate(self.mats))
        )

    @property
    def hidden(self) -> tuple[np.ndarray, ...]:
        return self.mats[:-1]

    @property
    def last(self) -> np.ndarray:
        return self.mats[-1]

    def replace_last(self, w_last) -> "Weights":
        return Weights(self.mats[:-1] + (w_last,))

    def replace_hidden(self, hidden: Sequence[np.ndarray]) -> "Weights":
        return Weights(tuple(hidden) + (self.last,))

    def check(self, spec: NetSpec) -> None:
        if len(self.mats) != len(spec.dims) - 1:
            raise ShapeError(f"expected {len(spec.dims) - 1} weight matrices, got {len(self.mats)}")
        for i, m in enumerate(self.mats):
            want = (spec.dims[i + 1], spec.dims[i])
            if m.shape != want:
                raise ShapeError(f"W_{i + 1} has shape {m.shape}, expected {want}")

    def to_lists(self) -> list[list[list[float]]]:
        return [m.tolist() for m in self.mats]


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = as_matrix(self.X, name="X")
        Y = as_matrix(self.Y, name="Y")
        if X.shape[1] != Y.shape[1]:
            raise ShapeError(f"X has {X.shape[1]} samples but Y has {Y.shape[1]}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n_samples(self) -> int:
        return self.X.shape[1]


def hidden_output(spec: NetSpec, hidden: Sequence[np.ndarray], X) -> np.ndarray:
    """``T_H`` for the given hidden-layer weights."""
    t = as_matrix(X, name="X")
    if t.shape[0] != spec.dims[0]:
        raise ShapeError(f"X has {t.shape[0]} rows, network expects {spec.dims[0]}")
    for w in hidden:
        if w.shape[1] != t.shape[0]:
            raise ShapeError(f"weight of shape {w.shape} does not fit input with {t.shape[0]} rows")
        t = apply_elementwise(spec.activation, w @ t)
    return t


def feedforward(spec: NetSpec, w: Weights, X) -> list[np.ndarray]:
    """Layer outputs ``[T_1, ..., T_H, T_out]``."""
    w.check(spec)
    t = as_matrix(X, name="X")
    if t.shape[0] != spec.dims[0]:
        raise ShapeError(f"X has {t.shape[0]} rows, network expects {spec.dims[0]}")
    outs = []
    for m in w.hidden:
        t = apply_elementwise(spec.activation, m @ t)
        outs.append(t)
    outs.append(as_matrix(w.last @ t))
    return outs


def loss_eval(spec: NetSpec, w: Weights, data: Dataset) -> float:
    out = feedforward(spec, w, data.X)[-1]
    if out.shape != data.Y.shape:
        raise ShapeError(f"network output {out.shape} does not match Y {data.Y.shape}")
    return spec.loss.eval(data.Y, out)


def check_data_distinct(X) -> int | None:
    """Index of the first row whose entries are pairwise distinct, else ``None``."""
    X = as_matrix(X, name="X")
    for k, row in enumerate(X):
        if len(np.unique(row)) == len(row):
            return k
    return None


def min_row_gap(X, k: int) -> float:
    """Smallest gap between entries of row ``k``; a conditioning diagnostic."""
    row = np.sort(as_matrix(X)[k])
    return float(np.min(np.diff(row))) if len(row) > 1 else float("inf")


def require_distinct(X) -> int:
    k = check_data_distinct(X)
    if k is None:
        raise AssumptionViolation("no input row has pairwise distinct entries across samples")
    return k


def random_weights(spec: NetSpec, seed: int, scale: float = 1.0, *, stream_id: int = 0) -> Weights:
    """I.i.d. ``N(0, scale^2)`` entries from the counter-based stream ``(seed, WEIGHTS, stream_id)``."""
    if not scale > 0:
        raise PreconditionError("scale must be positive")
    rng = stream(seed, WEIGHTS, stream_id)
    mats = tuple(
        scale * rng.standard_normal((spec.dims[i + 1], spec.dims[i]))
        for i in range(len(spec.dims) - 1)
    )
    return Weights(mats)


def random_dataset(d_in: int, d_out: int, n: int, seed: int, *, stream_id: int = 0) -> Dataset:
    """Inputs uniform on ``[-1, 1]``, targets standard normal."""
    rng = stream(seed, DATA, stream_id)
    return Dataset(rng.uniform(-1.0, 1.0, (d_in, n)), rng.standard_normal((d_out, n)))
