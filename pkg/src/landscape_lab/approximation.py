"""Repairing analytic activations so that no derivative at zero vanishes.

Given an analytic base ``g``, the sequence

    f_k(x) = g(x) + (sin x + cos x) / (s (k + 1))

converges to ``g`` uniformly with ``|f_k - g| <= sqrt(2) / (s (k + 1))``.
With ``s = 2 / delta_min`` (``delta_min`` the smallest non-zero ``|g^(n)(0)|``)
every ``f_k`` keeps all derivatives of orders ``0..N-1`` away from zero.

The n-th derivative of ``sin + cos`` at zero is ``(-1)^floor(n/2)``,
i.e. ``1, 1, -1, -1, ...``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from landscape_lab.activations import ActivationDescriptor
from landscape_lab.errors import PreconditionError, UnsupportedOrderError
from landscape_lab.network import Dataset, NetSpec, Weights, loss_eval
from landscape_lab.seeding import BOX, stream

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class ApproxSequence:
    base: ActivationDescriptor
    s: float
    order: int

    def __post_init__(self):
        if self.s == 0:
            raise PreconditionError("s must be non-zero")
        if not self.base.is_analytic or not self.base.has_taylor:
            raise UnsupportedOrderError(
                f"{self.base.name} is not analytic with Taylor data; "
                "approximate it by an analytic surrogate first"
            )

    def bound(self, k: int) -> float:
        return SQRT2 / (abs(self.s) * (k + 1))


def _base_derivatives(g: ActivationDescriptor, N: int) -> list[float]:
    if not g.has_taylor:
        raise UnsupportedOrderError(f"{g.name} has no Taylor data")
    return g.taylor_at_zero(N)


def delta_min(g: ActivationDescriptor, N: int) -> float | None:
    """Smallest non-zero ``|g^(n)(0)|`` over ``n < N``; ``None`` if all vanish."""
    nonzero = [abs(v) for v in _base_derivatives(g, N) if v != 0]
    return min(nonzero) if nonzero else None


def choose_s(g: ActivationDescriptor, N: int) -> float:
    dm = delta_min(g, N)
    return 1.0 if dm is None else 2.0 / dm


def make_sequence(g: ActivationDescriptor, N: int, s: float | None = None) -> ApproxSequence:
    return ApproxSequence(g, choose_s(g, N) if s is None else float(s), N)


def sincos_derivative(n: int) -> float:
    return 1.0 if (n // 2) % 2 == 0 else -1.0


def f_k(seq: ApproxSequence, k: int) -> ActivationDescriptor:
    if k < 0:
        raise PreconditionError("k must be non-negative")
    g = seq.base
    eps = 1.0 / (seq.s * (k + 1))

    def evaluate(x):
        return g.evaluate(x) + eps * (np.sin(x) + np.cos(x))

    def derivative(n):
        return g.derivative(n) + eps * sincos_derivative(n)

    return ActivationDescriptor(
        f"{g.name}~k{k}",
        evaluate,
        True,
        derivative,
        g.max_order,
        {**g.params, "s": seq.s, "k": float(k)},
    )


def uniform_distance(f: ActivationDescriptor, g: ActivationDescriptor, grid: Sequence[float]) -> float:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise PreconditionError("grid must be non-empty")
    return float(np.max(np.abs(f.evaluate(grid) - g.evaluate(grid))))


def sample_weights_in_box(
    spec: NetSpec, n: int, radius: float, seed: int
) -> list[Weights]:
    """``n`` weight tuples drawn uniformly from the sup-norm ball of the given radius."""
    out = []
    for i in range(n):
        rng = stream(seed, BOX, i)
        out.append(
            Weights(
                tuple(
                    rng.uniform(-radius, radius, (spec.dims[j + 1], spec.dims[j]))
                    for j in range(len(spec.dims) - 1)
                )
            )
        )
    return out


@dataclass(frozen=True)
class ConvergenceRow:
    k: int
    gap: float
    bound: float


def loss_compact_convergence(
    spec: NetSpec,
    base_g: ActivationDescriptor,
    weight_samples: Sequence[Weights],
    data: Dataset,
    ks: Sequence[int],
    *,
    s: float | None = None,
    workers: int = 1,
) -> list[ConvergenceRow]:
    """``sup_W |E_k(W) - E(W)|`` over the samples for each ``k``.

    ``E`` uses ``spec.activation``; ``E_k`` swaps in ``f_k`` built from
    ``base_g``. The ``bound`` column is the activation-level bound, not a
    bound on the loss gap.
    """
    if not weight_samples:
        raise PreconditionError("need at least one weight sample")
    seq = make_sequence(base_g, data.n_samples, s)
    reference = np.array([loss_eval(spec, w, data) for w in weight_samples])

    def row(k: int) -> ConvergenceRow:
        net_k = spec.with_activation(f_k(seq, k))
        approx = np.array([loss_eval(net_k, w, data) for w in weight_samples])
        return ConvergenceRow(k, float(np.max(np.abs(approx - reference))), seq.bound(k))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(row, ks))
    return [row(k) for k in ks]


def gaps_non_increasing(rows: Sequence[ConvergenceRow], slack: float = 0.1) -> bool:
    return all(b.gap <= (1 + slack) * a.gap for a, b in zip(rows, rows[1:]))
