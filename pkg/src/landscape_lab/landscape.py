"""Setwise local minima on 2-D grids and a non-strict bad local minimum.

A grid scan is evidence at one resolution, never a proof. Cells are
compared with their 8 neighbours. Connected local-minimum cells with
matching values form a component. A component is setwise strict when
every cell in its one-cell collar is larger by more than the margin.
Components that touch the edge of the box never count as strict,
because their collar is cut off.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from landscape_lab.activations import ActivationDescriptor, builtin
from landscape_lab.errors import PreconditionError
from landscape_lab.network import Dataset, NetSpec, Weights, loss_eval
from landscape_lab.seeding import BALL, stream

CAVEAT = "grid evidence at finite resolution; not a proof"

_NEIGHBOURS = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]

Box = tuple[tuple[float, float], tuple[float, float]]


@dataclass(frozen=True)
class Component:
    cells: frozenset[tuple[int, int]]
    value: float
    value_max: float
    boundary_min: float
    setwise_strict: bool
    is_global: bool
    touches_box: bool

    def to_dict(self, axes) -> dict:
        idx = np.array(sorted(self.cells))
        u, v = axes[0][idx[:, 0]], axes[1][idx[:, 1]]
        return {
            "n_cells": len(self.cells),
            "value": self.value,
            "value_max": self.value_max,
            "boundary_min": self.boundary_min if math.isfinite(self.boundary_min) else None,
            "setwise_strict": self.setwise_strict,
            "is_global": self.is_global,
            "touches_box": self.touches_box,
            "u_range": [float(u.min()), float(u.max())],
            "v_range": [float(v.min()), float(v.max())],
        }


@dataclass(eq=False)
class PlateauReport:
    box: Box
    resolution: int
    value_tol: float
    strict_margin: float
    global_tol: float
    components: list[Component]
    grid_global_min: float
    values: np.ndarray = field(repr=False)
    local_min: np.ndarray = field(repr=False)
    warnings: list[str] = field(default_factory=list)
    weakly_global: bool | None = None
    caveat: str = CAVEAT

    @property
    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        (a, b), (c, d) = self.box
        return np.linspace(a, b, self.resolution), np.linspace(c, d, self.resolution)

    def cell_of(self, u: float, v: float) -> tuple[int, int]:
        au, av = self.axes
        return int(np.argmin(np.abs(au - u))), int(np.argmin(np.abs(av - v)))

    def strict_components(self) -> list[Component]:
        return [c for c in self.components if c.setwise_strict]

    def strict_bad_components(self) -> list[Component]:
        return [c for c in self.components if c.setwise_strict and not c.is_global]

    def to_dict(self) -> dict:
        axes = self.axes
        return {
            "box": [list(self.box[0]), list(self.box[1])],
            "resolution": self.resolution,
            "value_tol": self.value_tol,
            "strict_margin": self.strict_margin,
            "global_tol": self.global_tol,
            "grid_global_min": self.grid_global_min,
            "n_components": len(self.components),
            "n_strict": len(self.strict_components()),
            "n_strict_bad": len(self.strict_bad_components()),
            "weakly_global": self.weakly_global,
            "warnings": list(self.warnings),
            "caveat": self.caveat,
            "components": [c.to_dict(axes) for c in self.components],
        }


def _evaluate_grid(f, au, av) -> np.ndarray:
    U, V = np.meshgrid(au, av, indexing="ij")
    try:
        with np.errstate(all="ignore"):
            out = np.asarray(f(U, V), dtype=np.float64)
        if out.shape == U.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([[float(f(u, v)) for v in av] for u in au])


def _local_min_mask(vals: np.ndarray, tol: float) -> np.ndarray:
    finite = np.isfinite(vals)
    padded = np.pad(np.where(finite, vals, np.inf), 1, constant_values=np.inf)
    n, m = vals.shape
    mask = finite.copy()
    for di, dj in _NEIGHBOURS:
        mask &= vals <= padded[1 + di : 1 + di + n, 1 + dj : 1 + dj + m] + tol
    return mask


def grid_scan_2d(
    f: Callable[[float, float], float],
    box: Box,
    resolution: int,
    value_tol: float = 1e-9,
    strict_margin: float = 1e-9,
    global_tol: float | None = None,
) -> PlateauReport:
    """Scan ``f`` on a ``resolution x resolution`` grid over ``box``.

    ``value_tol`` and ``strict_margin`` are relative to ``max(1, max|f|)``
    on the grid. ``global_tol`` is absolute and defaults to the scaled
    ``value_tol``; pass the grid's discretisation error when the true
    minimum may fall between grid points.
    """
    if resolution < 3:
        raise PreconditionError("resolution must be at least 3")
    (a, b), (c, d) = box
    au, av = np.linspace(a, b, resolution), np.linspace(c, d, resolution)
    vals = _evaluate_grid(f, au, av)
    warnings = []
    finite = np.isfinite(vals)
    if not finite.all():
        warnings.append(f"{int((~finite).sum())} non-finite cells excluded")
    if not finite.any():
        raise PreconditionError("f is non-finite on the whole grid")
    scale = max(1.0, float(np.max(np.abs(vals[finite]))))
    vt, sm = value_tol * scale, strict_margin * scale
    gt = vt if global_tol is None else float(global_tol)
    gmin = float(np.min(vals[finite]))

    mask = _local_min_mask(vals, vt)
    seen = np.zeros_like(mask)
    n = resolution
    components = []
    for start in zip(*np.nonzero(mask)):
        if seen[start]:
            continue
        ref = vals[start]
        cells = {start}
        seen[start] = True
        queue = deque([start])
        while queue:
            i, j = queue.popleft()
            for di, dj in _NEIGHBOURS:
                p = (i + di, j + dj)
                if 0 <= p[0] < n and 0 <= p[1] < n and mask[p] and not seen[p]:
                    if abs(vals[p] - ref) <= vt:
                        seen[p] = True
                        cells.add(p)
                        queue.append(p)
        collar = set()
        for i, j in cells:
            for di, dj in _NEIGHBOURS:
                p = (i + di, j + dj)
                if 0 <= p[0] < n and 0 <= p[1] < n and p not in cells and finite[p]:
                    collar.add(p)
        cell_vals = np.array([vals[p] for p in cells])
        bmin = min((vals[p] for p in collar), default=math.inf)
        touches = any(i in (0, n - 1) or j in (0, n - 1) for i, j in cells)
        vmin, vmax = float(cell_vals.min()), float(cell_vals.max())
        components.append(
            Component(
                cells=frozenset((int(i), int(j)) for i, j in cells),
                value=vmin,
                value_max=vmax,
                boundary_min=float(bmin),
                setwise_strict=bool(collar) and not touches and bmin > vmax + sm,
                is_global=vmin <= gmin + gt,
                touches_box=touches,
            )
        )
    return PlateauReport(
        box=((float(a), float(b)), (float(c), float(d))),
        resolution=resolution,
        value_tol=value_tol,
        strict_margin=strict_margin,
        global_tol=gt,
        components=components,
        grid_global_min=gmin,
        values=vals,
        local_min=mask,
        warnings=warnings,
    )


def weakly_global_verdict(report: PlateauReport, tol: float) -> bool:
    """Every setwise-strict component sits within ``tol`` of the grid minimum."""
    return all(c.value <= report.grid_global_min + tol for c in report.strict_components())


# -- named surfaces --------------------------------------------------------


def uv_objective(u, v):
    return (u * v - 1.0) ** 2


def bowl(u, v):
    return u**2 + v**2


def tilted_double_well(u, v):
    # strict local minimum near u = 1 sits about 0.6 above the global one near u = -1
    return (u**2 - 1.0) ** 2 + 0.3 * u + v**2


def flat(u, v):
    return np.zeros(np.broadcast(u, v).shape) if np.ndim(u) else 0.0


SURFACES = {
    "uv": uv_objective,
    "bowl": bowl,
    "double_well": tilted_double_well,
    "flat": flat,
}


def loss_slice(
    spec: NetSpec,
    data: Dataset,
    w: Weights,
    first: tuple[int, int, int],
    second: tuple[int, int, int],
) -> Callable[[float, float], float]:
    """Loss as a function of two weight entries ``(layer, row, col)``, others held at ``w``."""
    base = [np.array(m) for m in w.mats]

    def f(u, v):
        mats = [m.copy() for m in base]
        mats[first[0]][first[1], first[2]] = u
        mats[second[0]][second[1], second[2]] = v
        return loss_eval(spec, Weights(tuple(mats)), data)

    return f


# -- uv demo ---------------------------------------------------------------

UV_BOX: Box = ((-3.0, 3.0), (-3.0, 3.0))
UV_RESOLUTION = 401
# a grid local minimum of (uv - 1)^2 lies within half a spacing h/2 of the
# curve uv = 1 along its row and column, so its value is at most (h/2)^2 ~ 5.6e-5
UV_GLOBAL_TOL = 1e-4


def uv_demo(resolution: int = UV_RESOLUTION) -> PlateauReport:
    report = grid_scan_2d(uv_objective, UV_BOX, resolution, global_tol=UV_GLOBAL_TOL)
    report.weakly_global = weakly_global_verdict(report, UV_GLOBAL_TOL)
    return report


# -- non-strict bad local minimum ------------------------------------------

BUMP_ZERO = 1.0  # -sin^2(t - 1) vanishes at t = 1 and is <= 0 everywhere


@dataclass(frozen=True)
class VerificationRecord:
    target: float
    loss_at_star: float
    radius: float
    samples: int
    min_sampled_loss: float
    ray_alphas: tuple[float, ...]
    ray_losses: tuple[float, ...]
    tol: float = 1e-12

    @property
    def star_ok(self) -> bool:
        return abs(self.loss_at_star - self.target) <= self.tol

    @property
    def neighbourhood_ok(self) -> bool:
        return self.min_sampled_loss >= self.target - self.tol

    @property
    def plateau_ok(self) -> bool:
        return all(abs(v - self.target) <= self.tol for v in self.ray_losses)

    @property
    def all_ok(self) -> bool:
        return self.star_ok and self.neighbourhood_ok and self.plateau_ok

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "loss_at_star": self.loss_at_star,
            "radius": self.radius,
            "samples": self.samples,
            "min_sampled_loss": self.min_sampled_loss,
            "ray_alphas": list(self.ray_alphas),
            "ray_losses": list(self.ray_losses),
            "tol": self.tol,
            "star_ok": self.star_ok,
            "neighbourhood_ok": self.neighbourhood_ok,
            "plateau_ok": self.plateau_ok,
            "all_ok": self.all_ok,
        }


def two_layer_losses(w1: np.ndarray, w2: np.ndarray, x: float, y: float, sigma: ActivationDescriptor) -> np.ndarray:
    """Batched ``(y - w2 . s(w1 x))^2`` for rows of ``w1`` and ``w2``."""
    pred = np.sum(w2 * sigma.evaluate(w1 * x), axis=-1)
    return (y - pred) ** 2


def sample_ball(rng: np.random.Generator, n: int, dim: int, radius: float) -> np.ndarray:
    z = rng.standard_normal((n, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return z * (radius * rng.uniform(size=(n, 1)) ** (1.0 / dim))


def prop3_counterexample(
    d: int = 4,
    x: float = 1.0,
    y: float = 1.0,
    *,
    radius: float = 0.05,
    samples: int = 100_000,
    seed: int = 0,
    chunk: int = 10_000,
    ray_alphas: Sequence[float] = (0.5, 2.0, 10.0),
) -> tuple[NetSpec, Weights, VerificationRecord]:
    """One-input, ``d``-hidden, one-output net with a flat bad local minimum.

    With ``s(t) = -sin^2(t - 1)`` the star point puts every hidden unit at
    the zero ``t = 1`` of ``s``. Near it the prediction ``w2 . s(w1 x)``
    has the opposite sign to ``y`` (or vanishes), so the loss cannot drop
    below ``y^2``. Scaling ``w2`` keeps the loss at exactly ``y^2``.
    """
    if d < 1:
        raise PreconditionError("d must be at least 1")
    if x == 0 or y == 0:
        raise PreconditionError("x and y must be non-zero")
    if not 0 < radius < 1:
        raise PreconditionError("radius must lie in (0, 1) so w2 keeps the sign of y")
    sigma = builtin("negsin2", {"c": BUMP_ZERO})
    spec = NetSpec((1, d, 1), sigma)
    w1 = np.full(d, BUMP_ZERO / x)
    w2 = np.full(d, math.copysign(1.0, y))
    star = Weights((w1.reshape(d, 1), w2.reshape(1, d)))
    data = Dataset([[x]], [[y]])

    at_star = loss_eval(spec, star, data)
    lowest = math.inf
    for c, start in enumerate(range(0, samples, chunk)):
        m = min(chunk, samples - start)
        step = sample_ball(stream(seed, BALL, c), m, 2 * d, radius)
        vals = two_layer_losses(w1 + step[:, :d], w2 + step[:, d:], x, y, sigma)
        lowest = min(lowest, float(vals.min()))
    ray = tuple(
        loss_eval(spec, Weights((w1.reshape(d, 1), (a * w2).reshape(1, d))), data) for a in ray_alphas
    )
    record = VerificationRecord(
        target=y * y,
        loss_at_star=at_star,
        radius=radius,
        samples=samples,
        min_sampled_loss=lowest,
        ray_alphas=tuple(float(a) for a in ray_alphas),
        ray_losses=ray,
    )
    return spec, star, record
