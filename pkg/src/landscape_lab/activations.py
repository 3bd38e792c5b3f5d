"""Activation registry with Taylor data at the origin.

Derivatives at zero come from hand-coded closed forms. For the logistic
family they are computed exactly with rational power-series arithmetic, so
a derivative that vanishes (``sigmoid''(0)``) is stored as an exact ``0.0``
rather than a round-off residue. Certification of the non-vanishing
derivative condition only ever reads these closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, NamedTuple

import numpy as np

from landscape_lab.errors import NumericOverflowError, PreconditionError, UnsupportedOrderError
from landscape_lab.linalg import as_matrix

SERIES_MAX_ORDER = 40
FD_STEP = 1e-2
FD_MAX_ORDER = 3

BUILTIN_NAMES = ("relu", "leaky_relu", "sigmoid", "tanh", "softplus", "swish", "exp", "negsin2")


@dataclass(frozen=True, eq=False)
class ActivationDescriptor:
    name: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    is_analytic: bool
    derivative: Callable[[int], float] | None = None
    max_order: int | None = None
    params: Mapping[str, float] = field(default_factory=dict)

    def __call__(self, x):
        return self.evaluate(np.asarray(x, dtype=np.float64))

    @property
    def has_taylor(self) -> bool:
        return self.derivative is not None

    def supports_order(self, order: int) -> bool:
        if self.derivative is None:
            return False
        return self.max_order is None or order <= self.max_order

    def taylor_at_zero(self, m: int) -> list[float]:
        """``[s(0), s'(0), ..., s^(m-1)(0)]`` from the closed form."""
        if m < 1:
            raise PreconditionError("need at least one Taylor coefficient")
        if not self.supports_order(m - 1):
            raise UnsupportedOrderError(f"{self.name}: no closed-form derivative of order {m - 1}")
        return [float(self.derivative(j)) for j in range(m)]


class Derivative(NamedTuple):
    value: float
    approximate: bool


class DerivativeCheck(NamedTuple):
    ok: bool
    failing_order: int | None


# -- exact series for the logistic family ---------------------------------


@lru_cache(maxsize=None)
def _sigmoid_series() -> tuple[Fraction, ...]:
    # 1 / (1 + e^{-x}) as a power series: invert the denominator term by term
    denom = [Fraction((-1) ** n, math.factorial(n)) for n in range(SERIES_MAX_ORDER + 1)]
    denom[0] += 1
    inv: list[Fraction] = []
    for n in range(SERIES_MAX_ORDER + 1):
        acc = Fraction(1) if n == 0 else Fraction(0)
        for k in range(1, n + 1):
            acc -= denom[k] * inv[n - k]
        inv.append(acc / denom[0])
    return tuple(inv)


def sigmoid_derivative_exact(n: int) -> Fraction:
    return _sigmoid_series()[n] * math.factorial(n)


def _check_order(order: int, limit: int | None, name: str) -> None:
    if order < 0:
        raise PreconditionError("derivative order must be non-negative")
    if limit is not None and order > limit:
        raise UnsupportedOrderError(f"{name}: closed form only up to order {limit}")


# -- builtins --------------------------------------------------------------


def _sigmoid_eval(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _make_relu(params):
    return ActivationDescriptor("relu", lambda x: np.maximum(x, 0.0), is_analytic=False)


def _make_leaky_relu(params):
    alpha = float(params.get("alpha", 0.01))
    return ActivationDescriptor(
        "leaky_relu",
        lambda x: np.where(x >= 0, x, alpha * x),
        is_analytic=False,
        params={"alpha": alpha},
    )


def _make_sigmoid(params):
    def d(n):
        _check_order(n, SERIES_MAX_ORDER, "sigmoid")
        return float(sigmoid_derivative_exact(n))

    return ActivationDescriptor("sigmoid", _sigmoid_eval, True, d, SERIES_MAX_ORDER)


def _make_tanh(params):
    def d(n):
        _check_order(n, SERIES_MAX_ORDER, "tanh")
        # tanh(x) = 2 sigmoid(2x) - 1
        exact = 2 ** (n + 1) * sigmoid_derivative_exact(n) - (1 if n == 0 else 0)
        return float(exact)

    return ActivationDescriptor("tanh", np.tanh, True, d, SERIES_MAX_ORDER)


def _make_softplus(params):
    beta = float(params.get("beta", 1.0))
    if beta <= 0:
        raise PreconditionError("softplus beta must be positive")

    def d(n):
        _check_order(n, SERIES_MAX_ORDER + 1, "softplus")
        if n == 0:
            return math.log(2.0) / beta
        return beta ** (n - 1) * float(sigmoid_derivative_exact(n - 1))

    return ActivationDescriptor(
        "softplus",
        lambda x: np.logaddexp(0.0, beta * x) / beta,
        True,
        d,
        SERIES_MAX_ORDER + 1,
        {"beta": beta},
    )


def _make_swish(params):
    beta = float(params.get("beta", 1.0))

    def d(n):
        _check_order(n, SERIES_MAX_ORDER + 1, "swish")
        if n == 0:
            return 0.0
        # Leibniz on x * sigmoid(beta x)
        return n * beta ** (n - 1) * float(sigmoid_derivative_exact(n - 1))

    return ActivationDescriptor(
        "swish",
        lambda x: x * _sigmoid_eval(beta * x),
        True,
        d,
        SERIES_MAX_ORDER + 1,
        {"beta": beta},
    )


def _make_exp(params):
    def d(n):
        _check_order(n, None, "exp")
        return 1.0

    return ActivationDescriptor("exp", np.exp, True, d)


def _make_negsin2(params):
    c = float(params.get("c", 1.0))
    # -sin^2(x - c) = -1/2 + cos(2x - 2c) / 2
    cycle = (math.cos(2 * c), math.sin(2 * c), -math.cos(2 * c), -math.sin(2 * c))

    def d(n):
        _check_order(n, None, "negsin2")
        if n == 0:
            return -math.sin(c) ** 2
        return 2.0 ** (n - 1) * cycle[n % 4]

    return ActivationDescriptor(
        "negsin2", lambda x: -np.sin(x - c) ** 2, True, d, None, {"c": c}
    )


_BUILDERS = {
    "relu": _make_relu,
    "leaky_relu": _make_leaky_relu,
    "sigmoid": _make_sigmoid,
    "tanh": _make_tanh,
    "softplus": _make_softplus,
    "swish": _make_swish,
    "exp": _make_exp,
    "negsin2": _make_negsin2,
}


def builtin(name: str, params: Mapping[str, float] | None = None) -> ActivationDescriptor:
    try:
        make = _BUILDERS[name]
    except KeyError:
        raise PreconditionError(
            f"unknown activation {name!r}; expected one of {', '.join(BUILTIN_NAMES)}"
        ) from None
    return make(dict(params or {}))


def constant(value: float) -> ActivationDescriptor:
    """Degenerate constant activation, handy as a counterexample."""
    value = float(value)
    return ActivationDescriptor(
        "constant",
        lambda x: np.full_like(np.asarray(x, dtype=np.float64), value),
        True,
        lambda n: value if n == 0 else 0.0,
        None,
        {"value": value},
    )


# -- operations --------------------------------------------------------------


def apply_elementwise(sigma: ActivationDescriptor, a) -> np.ndarray:
    a = as_matrix(a)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.asarray(sigma.evaluate(a), dtype=np.float64)
    bad = ~np.isfinite(out)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NumericOverflowError(
            f"{sigma.name} produced a non-finite value at index {idx} "
            f"(input {a[idx]!r})",
            idx,
        )
    return as_matrix(out)


def _central_difference(f: Callable, order: int, h: float) -> float:
    if order == 0:
        return float(f(0.0))
    if order == 1:
        return float((f(h) - f(-h)) / (2 * h))
    if order == 2:
        return float((f(h) - 2 * f(0.0) + f(-h)) / h**2)
    return float((f(2 * h) - 2 * f(h) + 2 * f(-h) - f(-2 * h)) / (2 * h**3))


def finite_difference_at_zero(sigma: ActivationDescriptor, order: int, step: float = FD_STEP) -> float:
    """Central difference with one Richardson level."""
    if not 0 <= order <= FD_MAX_ORDER:
        raise UnsupportedOrderError(f"finite differences only up to order {FD_MAX_ORDER}")
    f = lambda t: float(sigma.evaluate(np.asarray(t, dtype=np.float64)))
    coarse = _central_difference(f, order, step)
    fine = _central_difference(f, order, step / 2)
    return (4 * fine - coarse) / 3


def derivative_at_zero(sigma: ActivationDescriptor, order: int) -> Derivative:
    if order < 0:
        raise PreconditionError("derivative order must be non-negative")
    if sigma.has_taylor:
        if not sigma.supports_order(order):
            raise UnsupportedOrderError(
                f"{sigma.name}: Taylor data only up to order {sigma.max_order}"
            )
        return Derivative(float(sigma.derivative(order)), approximate=False)
    return Derivative(finite_difference_at_zero(sigma, order), approximate=True)


def check_assumption2(sigma: ActivationDescriptor, n: int) -> DerivativeCheck:
    """Are the derivatives of orders ``0..n-1`` at zero all non-zero?

    Only closed-form Taylor data is accepted; activations without it raise
    :class:`UnsupportedOrderError` instead of falling back to finite
    differences.
    """
    if n < 1:
        raise PreconditionError("n must be at least 1")
    if not sigma.is_analytic or not sigma.has_taylor:
        raise UnsupportedOrderError(f"{sigma.name} has no closed-form Taylor data")
    for j, value in enumerate(sigma.taylor_at_zero(n)):
        if not abs(value) > 0:
            return DerivativeCheck(False, j)
    return DerivativeCheck(True, None)
