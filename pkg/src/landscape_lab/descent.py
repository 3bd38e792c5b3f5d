"""Perturb-then-solve descent to the global infimum.

1. Perturb the hidden-layer weights inside a sup-norm ball of radius
   ``delta`` until the last hidden output ``T_H`` has full column rank.
2. With the hidden layers frozen the loss is convex in the output weights;
   solve that convex problem.
3. The straight segment from the perturbed output weights to the solution
   is a path along which the loss never increases. It is sampled and
   audited.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from landscape_lab.errors import AssumptionViolation, NumericOverflowError, PreconditionError
from landscape_lab.linalg import as_matrix, least_squares_right_solve, numerical_rank
from landscape_lab.activations import ActivationDescriptor
from landscape_lab.network import (
    Dataset,
    LossDescriptor,
    NetSpec,
    Weights,
    hidden_output,
    random_dataset,
    random_weights,
    require_distinct,
)
from landscape_lab.seeding import INSTANCE, PERTURB, stream

MONOTONE_SLACK = 1e-12
CONVEXITY_SLACK = 1e-10


@dataclass(frozen=True)
class DescentConfig:
    max_tries: int = 16
    seed: int = 0
    rel_tol: float | None = None
    # success threshold is tol * (1 + ||Y||_F^2) above the infimum
    tol: float = 1e-8
    samples: int = 1000
    solver_tol: float = 1e-10
    max_iters: int = 10_000


@dataclass(frozen=True, eq=False)
class PerturbResult:
    weights: Weights
    rank: int
    tries_used: int
    success: bool


def _check_overparameterized(spec: NetSpec, data: Dataset) -> None:
    if spec.last_hidden_width < data.n_samples:
        raise AssumptionViolation(
            f"last hidden width {spec.last_hidden_width} is smaller than "
            f"the number of samples {data.n_samples}"
        )


def _rank_of(spec, hidden, X, rel_tol) -> int:
    try:
        return numerical_rank(hidden_output(spec, hidden, X), rel_tol)
    except NumericOverflowError:
        return 0


def _safe_radius(delta: float, mats: Sequence[np.ndarray]) -> float:
    # shrink by a few ulps so rounding in w0 + u never leaves the ball
    top = max(float(np.max(np.abs(m))) for m in mats) + delta
    radius = delta - 4 * np.spacing(top)
    if radius <= 0:
        raise PreconditionError(f"delta={delta} is below floating-point resolution of the weights")
    return radius


def perturb_to_full_rank(
    spec: NetSpec,
    data: Dataset,
    w0: Weights,
    delta: float,
    max_tries: int = 16,
    seed: int = 0,
    rel_tol: float | None = None,
) -> PerturbResult:
    """Find hidden weights within ``delta`` (sup norm) of ``w0`` with ``rank(T_H) = N``.

    Try 0 is ``w0`` itself. Try ``i >= 1`` adds an independent uniform draw
    from stream ``(seed, PERTURB, i)`` to every hidden matrix; the output
    layer is never touched. Exhausting ``max_tries`` is reported through
    ``success=False`` together with the best rank seen.
    """
    _check_overparameterized(spec, data)
    require_distinct(data.X)
    if not delta > 0:
        raise PreconditionError("delta must be positive")
    w0.check(spec)
    n = data.n_samples

    rank = _rank_of(spec, w0.hidden, data.X, rel_tol)
    if rank == n:
        return PerturbResult(w0, rank, 0, True)

    radius = _safe_radius(delta, w0.hidden)
    best = (rank, w0, 0)
    for attempt in range(1, max_tries + 1):
        rng = stream(seed, PERTURB, attempt)
        hidden = [m + rng.uniform(-radius, radius, m.shape) for m in w0.hidden]
        rank = _rank_of(spec, hidden, data.X, rel_tol)
        if rank > best[0]:
            best = (rank, w0.replace_hidden(hidden), attempt)
        if rank == n:
            return PerturbResult(w0.replace_hidden(hidden), rank, attempt, True)
    return PerturbResult(best[1], best[0], max_tries, False)


@dataclass(frozen=True, eq=False)
class LastLayerSolution:
    w: np.ndarray
    loss: float
    infimum: float
    rank: int
    full_rank: bool
    converged: bool
    iterations: int


def _gradient_descent(t, y, loss, w, tol, max_iters):
    """Gradient descent with Armijo backtracking on ``W -> loss(Y, W T)``."""
    f = loss.eval(y, w @ t)
    step = 1.0
    for it in range(1, max_iters + 1):
        g = loss.gradient(y, w @ t) @ t.T
        gg = float(np.sum(g * g))
        if gg == 0.0:
            return w, f, True, it
        while True:
            cand = w - step * g
            fc = loss.eval(y, cand @ t)
            if fc <= f - 1e-4 * step * gg:
                break
            step *= 0.5
            if step < 1e-300:
                return w, f, True, it
        improvement = f - fc
        w, f = cand, fc
        if improvement < tol:
            return w, f, True, it
        step *= 2.0
    return w, f, False, max_iters


def solve_last_layer(
    t_h,
    y,
    loss: LossDescriptor,
    tol: float = 1e-10,
    max_iters: int = 10_000,
    rel_tol: float | None = None,
    w_init=None,
) -> LastLayerSolution:
    """Minimise ``loss(Y, W T_H)`` over the output weights ``W``.

    The quadratic loss is solved in closed form by least squares. Any other
    convex loss goes through backtracking gradient descent, stopping once
    one step improves the loss by less than ``tol``.
    """
    t_h = as_matrix(t_h, name="T_H")
    y = as_matrix(y, name="Y")
    rank = numerical_rank(t_h, rel_tol)
    full = rank == t_h.shape[1]
    inf = float(loss.infimum(y))
    if loss.name == "quadratic":
        sol = least_squares_right_solve(t_h, y, rel_tol)
        return LastLayerSolution(sol.w, loss.eval(y, sol.w @ t_h), inf, rank, full, True, 0)
    w = np.zeros((y.shape[0], t_h.shape[0])) if w_init is None else np.array(w_init, dtype=float)
    w, value, converged, iters = _gradient_descent(t_h, y, loss, w, tol, max_iters)
    return LastLayerSolution(as_matrix(w), value, inf, rank, full, converged, iters)


@dataclass(frozen=True, eq=False)
class PathAudit:
    non_increasing: bool
    endpoint_strict: bool
    strictly_decreasing: bool
    max_convexity_violation: float

    @property
    def monotone(self) -> bool:
        return self.non_increasing and self.endpoint_strict


def audit_path(
    losses: Sequence[float],
    infimum: float,
    tol: float,
    slack: float = MONOTONE_SLACK,
) -> PathAudit:
    """Check a loss profile sampled at uniformly spaced ``lambda``.

    ``non_increasing`` allows ``slack * |E(0)|`` of float noise per step.
    ``endpoint_strict`` requires ``E(1) < E(0)`` unless ``E(0)`` is already
    within ``tol`` of the infimum. ``strictly_decreasing`` demands a strict
    drop at every step that starts above ``infimum + tol``. Midpoint
    convexity is measured on every equally spaced triple.
    """
    e = np.asarray(losses, dtype=np.float64)
    guard = slack * abs(e[0])
    non_inc = bool(np.all(e[1:] <= e[:-1] + guard))
    endpoint = bool(e[0] <= infimum + tol or e[-1] < e[0])
    above = e[:-1] > infimum + tol
    strict = bool(np.all(e[1:][above] < e[:-1][above]))
    worst = 0.0
    n = len(e)
    for m in range(1, (n - 1) // 2 + 1):
        gap = e[m : n - m] - 0.5 * (e[: n - 2 * m] + e[2 * m :])
        worst = max(worst, float(np.max(gap)))
    return PathAudit(non_inc, endpoint, strict, worst)


@dataclass(frozen=True, eq=False)
class DescentTrace:
    delta: float
    tries_used: int
    w_perturbed: Weights
    rank_T_H: int
    w_star_last: np.ndarray
    path: tuple[tuple[float, float], ...]
    initial_loss: float
    final_loss: float
    infimum: float
    monotone: bool
    condition_T_H: float = 1.0
    status: str = "ok"
    audit: PathAudit | None = field(default=None, repr=False)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p[0] for p in self.path])

    @property
    def losses(self) -> np.ndarray:
        return np.array([p[1] for p in self.path])

    def reached(self, y, tol: float) -> bool:
        scale = 1.0 + float(np.sum(np.asarray(y) ** 2))
        return self.final_loss <= self.infimum + tol * scale

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "delta": self.delta,
            "tries_used": self.tries_used,
            "rank_T_H": self.rank_T_H,
            "initial_loss": self.initial_loss,
            "final_loss": self.final_loss,
            "infimum": self.infimum,
            "monotone": self.monotone,
            "condition_T_H": self.condition_T_H,
            "w_perturbed": self.w_perturbed.to_lists(),
            "w_star_last": self.w_star_last.tolist(),
            "path_samples": len(self.path),
        }


def build_decreasing_path(
    spec: NetSpec,
    data: Dataset,
    w_perturbed: Weights,
    w_star_last,
    samples: int = 1000,
    *,
    tol: float = 1e-8,
    delta: float = 0.0,
    tries_used: int = 0,
    rel_tol: float | None = None,
) -> DescentTrace:
    """Sample the loss along ``(1 - lam) W_out^p + lam W_out^*`` with hidden layers frozen."""
    if samples < 2:
        raise PreconditionError("need at least two path samples")
    w_star_last = as_matrix(w_star_last, name="W_out*")
    t_h = hidden_output(spec, w_perturbed.hidden, data.X)
    y = data.Y
    infimum = float(spec.loss.infimum(y))
    w_p = w_perturbed.last
    lams = np.arange(samples) / (samples - 1)
    losses = [spec.loss.eval(y, ((1.0 - lam) * w_p + lam * w_star_last) @ t_h) for lam in lams]
    goal = tol * (1.0 + float(np.sum(y**2)))
    audit = audit_path(losses, infimum, goal)
    return DescentTrace(
        delta=delta,
        tries_used=tries_used,
        w_perturbed=w_perturbed,
        rank_T_H=numerical_rank(t_h, rel_tol),
        w_star_last=w_star_last,
        path=tuple((float(a), float(b)) for a, b in zip(lams, losses)),
        initial_loss=float(losses[0]),
        final_loss=float(losses[-1]),
        infimum=infimum,
        monotone=audit.monotone,
        condition_T_H=float(np.linalg.cond(t_h)),
        audit=audit,
    )


def global_descent(
    spec: NetSpec,
    data: Dataset,
    w0: Weights,
    delta: float,
    config: DescentConfig = DescentConfig(),
) -> DescentTrace:
    """Perturb, solve the output layer, then audit the connecting path.

    A failed perturbation does not raise: the solve and the path are still
    produced from the best weights found and ``status`` says what went
    wrong. ``tolerance_not_met`` means ``T_H`` had full numerical rank but
    the solve stopped above ``infimum + tol (1 + ||Y||^2)``; in double
    precision this happens once ``cond(T_H)`` passes roughly ``1e12``,
    because the interpolating ``W`` then has norm near ``||Y|| / sigma_min``.
    """
    _check_overparameterized(spec, data)
    pert = perturb_to_full_rank(
        spec, data, w0, delta, config.max_tries, config.seed, config.rel_tol
    )
    t_h = hidden_output(spec, pert.weights.hidden, data.X)
    sol = solve_last_layer(
        t_h, data.Y, spec.loss, config.solver_tol, config.max_iters, config.rel_tol,
        w_init=pert.weights.last,
    )
    trace = build_decreasing_path(
        spec,
        data,
        pert.weights,
        sol.w,
        config.samples,
        tol=config.tol,
        delta=delta,
        tries_used=pert.tries_used,
        rel_tol=config.rel_tol,
    )
    if not pert.success:
        status = "perturbation_failed"
    elif not sol.converged:
        status = "not_converged"
    elif not trace.reached(data.Y, config.tol):
        status = "tolerance_not_met"
    else:
        status = "ok"
    return DescentTrace(**{**trace.__dict__, "status": status})


def run_descent_batch(jobs: Sequence[tuple], workers: int = 1) -> list[DescentTrace]:
    """Run ``global_descent(*job)`` for each job; results keep job order."""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda job: global_descent(*job), jobs))
    return [global_descent(*job) for job in jobs]


def random_instance(
    activation: ActivationDescriptor,
    seed: int,
    index: int,
    *,
    max_width: int = 8,
    w0_scale: float = 0.5,
) -> tuple[NetSpec, Dataset, Weights]:
    """Random over-parameterised instance between ``[1, 3, 1]`` and ``[3, w, w, 2]``.

    Depth is one or two hidden layers, the last hidden width is at least
    the sample count, and everything is drawn from streams keyed by
    ``(seed, index)``.
    """
    rng = stream(seed, INSTANCE, index)
    d_in = int(rng.integers(1, 4))
    d_out = int(rng.integers(1, 3))
    n_hidden = int(rng.integers(1, 3))
    widths = [int(rng.integers(3, max_width + 1)) for _ in range(n_hidden)]
    n = int(rng.integers(1, widths[-1] + 1))
    spec = NetSpec((d_in, *widths, d_out), activation)
    data = random_dataset(d_in, d_out, n, seed, stream_id=index)
    w0 = random_weights(spec, seed, w0_scale, stream_id=index)
    return spec, data, w0
