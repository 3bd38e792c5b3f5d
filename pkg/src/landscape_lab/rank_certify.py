"""Monte Carlo evidence for the measure-zero rank claims.

Sampling cannot prove that a set has measure zero. Every result here is a
count over seeded trials, reported with the trial budget and tolerances
it was obtained under.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from landscape_lab.activations import ActivationDescriptor, check_assumption2
from landscape_lab.errors import AssumptionViolation, NumericOverflowError, PreconditionError
from landscape_lab.linalg import (
    EPS,
    determinant,
    numerical_rank,
    scaled_vandermonde,
    singular_values,
    vandermonde_product,
)
from landscape_lab.network import Dataset, NetSpec, hidden_output, require_distinct
from landscape_lab.seeding import TRIALS, stream

DEFAULT_SCALE = 0.5
DEFAULT_COLLISION_TOL = 1e-12


class Verdict(str, enum.Enum):
    CERTIFIED_FULL_RANK_AE = "CERTIFIED_FULL_RANK_AE"
    DEFICIENCY_OBSERVED = "DEFICIENCY_OBSERVED"


@dataclass(frozen=True, eq=False)
class RankCertificate:
    spec: NetSpec
    n_samples: int
    trials: int
    full_rank_count: int
    rel_tol: float
    min_smallest_singular: float
    seed: int
    scale: float
    overflow_count: int
    smallest_singular: tuple[float, ...]

    @property
    def verdict(self) -> Verdict:
        if self.full_rank_count == self.trials:
            return Verdict.CERTIFIED_FULL_RANK_AE
        return Verdict.DEFICIENCY_OBSERVED

    @property
    def deficiency_frequency(self) -> float:
        return 1.0 - self.full_rank_count / self.trials

    def summary(self) -> dict:
        return {
            "dims": list(self.spec.dims),
            "activation": self.spec.activation.name,
            "activation_params": dict(self.spec.activation.params),
            "n_samples": self.n_samples,
            "trials": self.trials,
            "full_rank_count": self.full_rank_count,
            "deficiency_frequency": self.deficiency_frequency,
            "rel_tol": self.rel_tol,
            "min_smallest_singular": self.min_smallest_singular,
            "overflow_count": self.overflow_count,
            "seed": self.seed,
            "scale": self.scale,
            "verdict": self.verdict.value,
            "evidence": "monte-carlo",
        }


def draw_hidden(spec: NetSpec, seed: int, trial: int, scale: float) -> list[np.ndarray]:
    rng = stream(seed, TRIALS, trial)
    return [
        scale * rng.standard_normal((spec.dims[i + 1], spec.dims[i]))
        for i in range(spec.n_hidden)
    ]


def _trial(spec, X, seed, trial, scale, rel_tol, target):
    try:
        t = hidden_output(spec, draw_hidden(spec, seed, trial, scale), X)
    except NumericOverflowError:
        return False, 0.0, True
    s = singular_values(t)
    rel = 0.0 if s[0] == 0 else float(s[target - 1] / s[0])
    return numerical_rank(t, rel_tol) >= target, rel, False


def certify_full_rank_measure(
    spec: NetSpec,
    data: Dataset,
    trials: int,
    seed: int,
    rel_tol: float | None = None,
    scale: float = DEFAULT_SCALE,
    *,
    workers: int = 1,
) -> RankCertificate:
    """Count draws of hidden-layer weights for which ``T_H`` has rank ``min(d_H, N)``.

    Trial ``i`` draws from the stream ``(seed, TRIALS, i)``, so the certificate does
    not depend on ``workers``.
    """
    require_distinct(data.X)
    if trials < 1:
        raise PreconditionError("trials must be at least 1")
    n = data.n_samples
    target = min(spec.last_hidden_width, n)
    if rel_tol is None:
        rel_tol = max(spec.last_hidden_width, n) * EPS

    def run(i):
        return _trial(spec, data.X, seed, i, scale, rel_tol, target)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(trials), chunksize=64))
    else:
        results = [run(i) for i in range(trials)]

    full = sum(1 for ok, _, _ in results if ok)
    rels = tuple(r for _, r, _ in results)
    return RankCertificate(
        spec=spec,
        n_samples=n,
        trials=trials,
        full_rank_count=full,
        rel_tol=rel_tol,
        min_smallest_singular=min(rels),
        seed=seed,
        scale=scale,
        overflow_count=sum(1 for *_, o in results if o),
        smallest_singular=rels,
    )


def _distinct(xs: Sequence[float]) -> None:
    if len(set(float(x) for x in xs)) != len(xs):
        raise PreconditionError("nodes must be pairwise distinct")


def prop1_det_check(
    x: Sequence[float], sigma: ActivationDescriptor, trials: int, seed: int, tol: float
) -> float:
    """Fraction of ``w ~ N(0, I)`` with ``|det s(w x^T)| <= tol``."""
    x = np.asarray(x, dtype=np.float64)
    _distinct(x)
    if not 1 <= x.size <= 8:
        raise PreconditionError("need 1 <= len(x) <= 8")
    w = stream(seed, TRIALS, 0).standard_normal((trials, x.size))
    with np.errstate(over="ignore"):
        mats = sigma.evaluate(w[:, :, None] * x[None, None, :])
        dets = np.linalg.det(mats)
    return float(np.mean(np.abs(dets) <= tol))


def lemma3_collision_rate(
    a: Sequence[float],
    b: Sequence[float],
    sigma: ActivationDescriptor,
    trials: int,
    seed: int,
    tol: float = DEFAULT_COLLISION_TOL,
) -> float:
    """Fraction of ``w ~ N(0, I)`` with ``|s(a.w) - s(b.w)| <= tol``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise PreconditionError("a and b must be vectors of the same length")
    if np.array_equal(a, b):
        raise PreconditionError("a and b must differ")
    w = stream(seed, TRIALS, 0).standard_normal((trials, a.size))
    with np.errstate(over="ignore", invalid="ignore"):
        diff = np.abs(sigma.evaluate(w @ a) - sigma.evaluate(w @ b))
    return float(np.mean(diff <= tol))


@dataclass(frozen=True)
class VandermondeCheck:
    abs_det: float
    product_formula: float
    condition_number: float


def vandermonde_nonsingularity(
    xs: Sequence[float], sigma: ActivationDescriptor, n: int
) -> VandermondeCheck:
    """``|det|`` of the derivative-scaled Vandermonde matrix on ``xs``.

    The condition number is returned alongside: a determinant that is
    non-zero in exact arithmetic can still be numerically tiny.
    """
    if len(xs) != n:
        raise PreconditionError("need exactly n nodes")
    check = check_assumption2(sigma, n)
    if not check.ok:
        err = AssumptionViolation(
            f"{sigma.name} has a vanishing derivative at zero of order {check.failing_order}"
        )
        err.failing_order = check.failing_order
        raise err
    coeffs = sigma.taylor_at_zero(n)
    a = scaled_vandermonde(xs, coeffs)
    expected = abs(float(np.prod(coeffs)) * vandermonde_product([float(x) for x in xs]))
    return VandermondeCheck(
        abs_det=abs(determinant(a)),
        product_formula=expected,
        condition_number=float(np.linalg.cond(a)),
    )
