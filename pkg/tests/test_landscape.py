import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from landscape_lab.activations import builtin
from landscape_lab.errors import PreconditionError
from landscape_lab.landscape import (
    SURFACES,
    UV_GLOBAL_TOL,
    Component,
    grid_scan_2d,
    loss_slice,
    prop3_counterexample,
    two_layer_losses,
    uv_demo,
    weakly_global_verdict,
)
from landscape_lab.network import Dataset, NetSpec, Weights, loss_eval, random_dataset, random_weights

UNIT = ((-1.0, 1.0), (-1.0, 1.0))


def test_bowl_has_one_strict_global_component():
    rep = grid_scan_2d(SURFACES["bowl"], UNIT, 101)
    assert len(rep.components) == 1
    (c,) = rep.components
    assert c.setwise_strict and c.is_global and not c.touches_box
    assert c.cells == frozenset({rep.cell_of(0.0, 0.0)})


def test_constant_surface_is_one_non_strict_component():
    rep = grid_scan_2d(SURFACES["flat"], UNIT, 21)
    (c,) = rep.components
    assert len(c.cells) == 21 * 21
    assert not c.setwise_strict and c.is_global
    assert weakly_global_verdict(rep, 1e-9)


def test_double_well_has_strict_bad_component():
    rep = grid_scan_2d(SURFACES["double_well"], ((-2.0, 2.0), (-2.0, 2.0)), 201)
    bad = rep.strict_bad_components()
    assert len(bad) == 1
    u, _ = rep.axes
    assert min(u[i] for i, _ in bad[0].cells) > 0.5
    assert not weakly_global_verdict(rep, 1e-6)


def test_non_finite_cells_are_excluded_with_warning():
    rep = grid_scan_2d(lambda u, v: np.where(u > 0.9, np.nan, u**2 + v**2), UNIT, 21)
    assert rep.warnings and "non-finite" in rep.warnings[0]
    assert any(c.is_global and c.setwise_strict for c in rep.components)


def test_scalar_only_function_is_supported():
    rep = grid_scan_2d(lambda u, v: float(u * u + v * v), UNIT, 11)
    assert len(rep.strict_components()) == 1


def test_resolution_too_small_rejected():
    with pytest.raises(PreconditionError):
        grid_scan_2d(SURFACES["bowl"], UNIT, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(-1000, 1000), st.sampled_from(["bowl", "double_well", "uv"]))
def test_constant_shift_keeps_component_structure(shift, name):
    f = SURFACES[name]
    box = ((-2.0, 2.0), (-2.0, 2.0))

    def scan(g):
        # zero relative tolerances, so the max|f| scaling cannot differ between the two scans
        return grid_scan_2d(g, box, 41, value_tol=0.0, strict_margin=0.0, global_tol=1e-3)

    a, b = scan(f), scan(lambda u, v: f(u, v) + shift)
    key = lambda rep: sorted((sorted(c.cells), c.setwise_strict, c.is_global) for c in rep.components)
    assert key(a) == key(b)
    assert b.grid_global_min == pytest.approx(a.grid_global_min + shift, abs=1e-9)


def _report_with(components, gmin):
    rep = grid_scan_2d(SURFACES["bowl"], UNIT, 5)
    rep.components = components
    rep.grid_global_min = gmin
    return rep


def test_verdict_examples():
    strict_bad = Component(frozenset({(1, 1)}), 2.0, 2.0, 3.0, True, False, False)
    loose = Component(frozenset({(2, 2)}), 2.0, 2.0, 2.0, False, False, False)
    assert not weakly_global_verdict(_report_with([strict_bad], 0.0), 1e-9)
    assert weakly_global_verdict(_report_with([loose], 0.0), 1e-9)
    assert weakly_global_verdict(_report_with([], 0.0), 1e-9)


def test_uv_demo():
    rep = uv_demo()
    assert rep.weakly_global is True
    assert rep.strict_bad_components() == []
    origin = rep.cell_of(0.0, 0.0)
    assert not rep.local_min[origin]
    au, av = rep.axes
    assert au[origin[0]] == 0.0 and av[origin[1]] == 0.0
    # diagonal neighbour along u = v is strictly lower than the origin value 1
    assert rep.values[origin[0] + 1, origin[1] + 1] < rep.values[origin]
    for c in rep.components:
        if c.is_global and not c.touches_box:
            assert c.value <= UV_GLOBAL_TOL


def test_bump_minimum_default_instance():
    spec, star, rec = prop3_counterexample()
    assert spec.dims == (1, 4, 1)
    assert rec.loss_at_star == 1.0
    assert rec.min_sampled_loss >= 1.0 - 1e-12
    assert rec.ray_losses == (1.0, 1.0, 1.0)
    assert rec.all_ok


@pytest.mark.parametrize("x, y", [(2.0, -3.0), (-0.5, 0.25), (1.0, 1.0)])
def test_bump_minimum_other_instances(x, y):
    _, _, rec = prop3_counterexample(3, x, y, samples=20_000, chunk=5_000)
    assert rec.target == y * y
    assert rec.all_ok


def test_bump_minimum_point_is_not_global():
    # the network can fit y exactly, so y^2 > 0 is a bad value
    spec, star, _ = prop3_counterexample(samples=10)
    w1 = np.full((4, 1), 1.0 - np.pi / 2)  # sigma = -1 on every hidden unit
    w2 = np.full((1, 4), -0.25)
    assert loss_eval(spec, Weights((w1, w2)), Dataset([[1.0]], [[1.0]])) == pytest.approx(0.0, abs=1e-24)


def test_bump_minimum_hidden_permutation_symmetry():
    spec, star, rec = prop3_counterexample(samples=10)
    data = Dataset([[1.0]], [[1.0]])
    rng = np.random.default_rng(0)
    w1 = star.mats[0] + rng.uniform(-0.05, 0.05, (4, 1))
    w2 = star.mats[1] + rng.uniform(-0.05, 0.05, (1, 4))
    base = loss_eval(spec, Weights((w1, w2)), data)
    for perm in itertools.permutations(range(4)):
        p = list(perm)
        assert loss_eval(spec, Weights((w1[p], w2[:, p])), data) == pytest.approx(base, rel=1e-14)


def test_two_layer_losses_matches_loss_eval():
    spec, _, _ = prop3_counterexample(samples=10)
    rng = np.random.default_rng(1)
    w1, w2 = rng.standard_normal((5, 4)), rng.standard_normal((5, 4))
    batched = two_layer_losses(w1, w2, 0.7, -1.2, spec.activation)
    data = Dataset([[0.7]], [[-1.2]])
    for i in range(5):
        w = Weights((w1[i].reshape(4, 1), w2[i].reshape(1, 4)))
        assert batched[i] == pytest.approx(loss_eval(spec, w, data), rel=1e-12)


def test_bump_minimum_rejects_bad_parameters():
    with pytest.raises(PreconditionError):
        prop3_counterexample(0)
    with pytest.raises(PreconditionError):
        prop3_counterexample(2, 0.0, 1.0)
    with pytest.raises(PreconditionError):
        prop3_counterexample(2, 1.0, 1.0, radius=1.5)


def test_loss_slice_of_overparameterised_exp_net_is_weakly_global():
    spec = NetSpec((1, 3, 1), builtin("exp"))
    data = random_dataset(1, 1, 2, seed=0)
    w = random_weights(spec, seed=0, scale=0.5)
    f = loss_slice(spec, data, w, (1, 0, 0), (1, 0, 1))
    rep = grid_scan_2d(f, ((-4.0, 4.0), (-4.0, 4.0)), 61)
    assert weakly_global_verdict(rep, 1e-6)
    assert rep.to_dict()["caveat"]
