"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from landscape_lab.activations import builtin, check_assumption2, constant
from landscape_lab.approximation import (
    f_k,
    loss_compact_convergence,
    make_sequence,
    sample_weights_in_box,
    uniform_distance,
)
from landscape_lab.cli import dumps_report, run
from landscape_lab.descent import DescentConfig, random_instance, run_descent_batch
from landscape_lab.landscape import prop3_counterexample, uv_demo
from landscape_lab.network import Dataset, NetSpec, random_dataset
from landscape_lab.rank_certify import certify_full_rank_measure, vandermonde_nonsingularity

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SEED = 0


def record(number: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def rank_instance():
    return NetSpec((2, 4, 5, 1), builtin("exp")), random_dataset(2, 1, 5, seed=7)


def descent_jobs():
    exp = builtin("exp")
    return [(*random_instance(exp, SEED, i), 1e-2, DescentConfig(seed=i)) for i in range(100)]


@pytest.fixture(scope="module")
def descent_run():
    jobs = descent_jobs()
    start = time.perf_counter()
    traces = run_descent_batch(jobs, workers=1)
    return jobs, traces, time.perf_counter() - start


def test_criterion_01_rank_certification():
    spec, data = rank_instance()
    start = time.perf_counter()
    cert = certify_full_rank_measure(spec, data, 1000, seed=SEED)
    elapsed = time.perf_counter() - start
    ok = cert.full_rank_count == 1000 and elapsed < 10
    record(1, ok, f"full_rank_count={cert.full_rank_count}/1000 in {elapsed:.2f}s "
                  f"(min rel sigma {cert.min_smallest_singular:.2e})")


def test_criterion_02_relu_contrast():
    spec = NetSpec((1, 3, 1), builtin("relu"))
    X = np.array([[1.0, 2.0, 3.0]])
    data = Dataset(X, np.zeros((1, 3)))
    trials = 10_000
    # oracle: independent draws, rank from numpy's SVD-based matrix_rank
    rng = np.random.default_rng(2024)
    deficient = sum(
        np.linalg.matrix_rank(np.maximum(rng.standard_normal((3, 1)) @ X, 0.0)) < 3 for _ in range(trials)
    )
    pinned = deficient / trials
    cert = certify_full_rank_measure(spec, data, trials, seed=SEED)
    freq = cert.deficiency_frequency
    ok = freq > 0 and 0.5 * pinned <= freq <= 1.5 * pinned
    record(2, ok, f"deficiency frequency {freq:.4f}, oracle {pinned:.4f}, band [{0.5 * pinned:.4f}, {1.5 * pinned:.4f}]")


def test_criterion_03_global_descent(descent_run):
    jobs, traces, elapsed = descent_run
    dims = sorted({job[0].dims for job in jobs})
    failures = [
        i for i, ((spec, data, *_), t) in enumerate(zip(jobs, traces))
        if t.status != "ok" or not t.final_loss <= 1e-8 * (1 + float(np.sum(data.Y**2)))
    ]
    assert all(job[0].last_hidden_width >= job[1].n_samples for job in jobs)
    ok = not failures and elapsed < 30
    record(3, ok, f"{100 - len(failures)}/100 reached the infimum in {elapsed:.2f}s "
                  f"({len(dims)} distinct architectures, {dims[0]} .. {dims[-1]})")


def test_criterion_04_path_audit(descent_run):
    _, traces, _ = descent_run
    bad = []
    worst_convexity = 0.0
    for i, t in enumerate(traces):
        e = t.losses
        non_inc = np.all(e[1:] <= e[:-1] + 1e-12 * abs(e[0]))
        endpoint = e[0] <= t.infimum + 1e-8 or e[-1] < e[0]
        n = len(e)
        conv = max(
            float(np.max(e[m : n - m] - 0.5 * (e[: n - 2 * m] + e[2 * m :]))) for m in range(1, (n - 1) // 2 + 1)
        )
        worst_convexity = max(worst_convexity, conv)
        if len(e) != 1000 or not (non_inc and endpoint and conv <= 1e-10):
            bad.append(i)
    record(4, not bad, f"{100 - len(bad)}/100 paths pass; worst midpoint-convexity excess {worst_convexity:.2e}")


def test_criterion_05_approximation_bound():
    grid = np.linspace(-10, 10, 2001)
    details, ok = [], True
    for g, expected_s in ((builtin("exp"), 2.0), (constant(0.0), 1.0)):
        seq = make_sequence(g, 6)
        sups = [uniform_distance(f_k(seq, k), g, grid) for k in range(10)]
        within = all(s <= math.sqrt(2) / (seq.s * (k + 1)) + 1e-12 for k, s in enumerate(sups))
        decreasing = all(b < a for a, b in zip(sups, sups[1:]))
        ok &= seq.s == expected_s and within and decreasing
        details.append(f"{g.name}: s={seq.s:g} bound={within} strict_decrease={decreasing}")
    record(5, ok, "; ".join(details))


def test_criterion_06_derivative_repair():
    sigmoid = builtin("sigmoid")
    base = check_assumption2(sigmoid, 6)
    seq = make_sequence(sigmoid, 6)
    repaired = [check_assumption2(f_k(seq, k), 6).ok for k in range(10)]
    ok = not base.ok and base.failing_order == 2 and all(repaired)
    record(6, ok, f"sigmoid fails at order {base.failing_order}; f_k passes for {sum(repaired)}/10 k (s={seq.s:g})")


def test_criterion_07_compact_convergence():
    spec = NetSpec((1, 4, 1), builtin("exp"))
    data = random_dataset(1, 1, 3, seed=SEED)
    samples = sample_weights_in_box(spec, 1000, 2.0, seed=SEED)
    rows = loss_compact_convergence(spec, spec.activation, samples, data, range(10))
    c = rows[0].gap
    ratios = [r.gap * (r.k + 1) / c for r in rows[1:]]
    ok = c > 0 and all(r <= 1.0 for r in ratios)
    record(7, ok, f"C={c:.4g}; max gap_k (k+1)/C over k=1..9 = {max(ratios):.4f}")


def test_criterion_08_flat_bad_minimum():
    _, _, rec = prop3_counterexample(4, 1.0, 1.0, radius=0.05, samples=100_000, seed=SEED, ray_alphas=(2.0,))
    ok = (
        abs(rec.loss_at_star - 1.0) <= 1e-12
        and rec.min_sampled_loss >= 1.0 - 1e-12
        and abs(rec.ray_losses[0] - 1.0) <= 1e-12
    )
    record(8, ok, f"loss*={rec.loss_at_star!r}, min over 1e5 ball samples={rec.min_sampled_loss:.12f}, "
                  f"ray(2 w2*)={rec.ray_losses[0]!r}")


def test_criterion_09_vandermonde():
    exp = builtin("exp")
    worst, ok = 0.0, True
    for n in range(2, 7):
        xs = [float(x) for x in range(-(n // 2), n - n // 2)]
        product = math.prod(xs[j] - xs[i] for i in range(n) for j in range(i + 1, n))
        check = vandermonde_nonsingularity(xs, exp, n)
        rel = abs(check.abs_det - abs(product)) / abs(product)
        worst = max(worst, rel)
        ok &= check.abs_det > 0 and rel <= 1e-8
    record(9, ok, f"n=2..6 on consecutive integer nodes, worst relative error {worst:.2e}")


def test_criterion_10_uv_demo():
    rep = uv_demo()
    origin = rep.cell_of(0.0, 0.0)
    bad = rep.strict_bad_components()
    ok = rep.resolution == 401 and not bad and rep.weakly_global is True and not rep.local_min[origin]
    record(10, ok, f"{len(rep.components)} components, {len(bad)} strict non-global, verdict={rep.weakly_global}, "
                   f"origin local-min cell={bool(rep.local_min[origin])}")


def test_criterion_11_determinism(tmp_path):
    same = {}
    for name, command in (("certify_exp.json", "certify-rank"), ("counterexample.json", "counterexample")):
        config = json.loads((CONFIGS / name).read_text())
        reports = []
        for threads in (1, 8):
            _, report = run(command, {**config, "seed": SEED}, SEED, tmp_path / f"{command}-{threads}", threads)
            on_disk = (tmp_path / f"{command}-{threads}" / "report.json").read_bytes()
            assert on_disk == dumps_report(report).encode()
            reports.append(on_disk)
        same[command] = reports[0] == reports[1]
    jobs = descent_jobs()
    batch = [
        dumps_report({"traces": [t.to_dict() for t in run_descent_batch(jobs, workers=w)]}).encode()
        for w in (1, 8)
    ]
    same["descent-batch"] = batch[0] == batch[1]
    record(11, all(same.values()), ", ".join(f"{k} identical={v}" for k, v in same.items()))
