"""Acceptance suite: every stated criterion at full scale.

Each test prints one ``[criterion N] PASS/FAIL`` line (visible with
``pytest -s`` or on failure) and asserts both the statistical check and
the runtime budget.
"""

import math
import time

import numpy as np

from poureg.estimator import FittedFunction, fit
from poureg.experiments import ExperimentConfig, exp_bernstein, exp_rate, exp_tail, exp_variance
from poureg.metrics import approx_error, estimate_expected_error, exact_expected_error
from poureg.partition import make_dyadic, make_hat, validate_partition
from poureg.problems import (
    AffineFunction,
    Dataset,
    get_problem,
    sample_dataset,
    uniform,
)
from poureg.reporting import render_csv


def _verdict(n: int, ok: bool, detail: str, elapsed: float, budget: float) -> bool:
    print(f"[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail} ({elapsed:.1f}s / budget {budget:.0f}s)")
    return ok and elapsed < budget


def test_criterion_1_partition_validity():
    budget, start = 10.0, time.perf_counter()
    families = []
    for dim in (1, 2, 3):
        families += [make_dyadic(dim, level) for level in range(5)]
    families += [make_hat(1, k) for k in range(2, 18)]
    for dim in (2, 3):
        families += [make_hat(dim, k) for k in range(2, 18)]
    worst = 0.0
    ok = True
    for fam in families:
        report = validate_partition(fam, probes=10_000, seed=0)
        ok = ok and report.passed
        worst = max(worst, report.max_sum_deviation)
    elapsed = time.perf_counter() - start
    assert _verdict(
        1, ok, f"{len(families)} families, max unity deviation {worst:.2e}", elapsed, budget
    )


def test_criterion_2_variance_scaling():
    budget, start = 300.0, time.perf_counter()
    report = exp_variance(
        ExperimentConfig(
            experiment="exp-variance",
            problem="lipschitz-1d",
            family="dyadic",
            dim=1,
            m_values=tuple(2**k for k in range(8, 15)),
            sizes=(4, 16, 64),
            replications=2000,
            seed=20250810,
        )
    )
    slope = report.fits["scaling"].slope
    spread = report.meta["ratio_spread"]
    ok = report.passed and abs(slope - 1.0) <= 0.15 and spread <= 5.0
    elapsed = time.perf_counter() - start
    assert _verdict(
        2, ok, f"slope {slope:.3f} (target 1.00+-0.15), ratio spread {spread:.2f} (<=5)",
        elapsed, budget,
    )


def test_criterion_3_convergence_rate():
    budget, start = 600.0, time.perf_counter()
    report = exp_rate(
        ExperimentConfig(
            experiment="exp-rate",
            problem="lipschitz-1d",
            family="dyadic",
            dim=1,
            m_values=tuple(2**k for k in range(8, 17)),
            replications=1000,
            seed=20250810,
        )
    )
    slope = report.fits["rate"].slope
    target = report.meta["slope_target"]
    dominated = all(r["dominated"] for r in report.rows)
    ok = report.passed and abs(slope - target) <= 0.15 and dominated
    elapsed = time.perf_counter() - start
    assert _verdict(
        3, ok, f"slope {slope:.3f} (target {target:.3f}+-0.15), bias dominated: {dominated}",
        elapsed, budget,
    )


def test_criterion_4_tail_validity():
    budget, start = 300.0, time.perf_counter()
    report = exp_tail(
        ExperimentConfig(
            experiment="exp-tail",
            problem="lipschitz-1d",
            family="dyadic",
            dim=1,
            level=4,  # family size 16
            m_values=(4096,),
            replications=10_000,
            seed=20250810,
        )
    )
    violations = sum(not r["pass"] for r in report.rows)
    r2 = report.fits["decay"].r_squared
    decaying = report.fits["decay"].slope < 0
    ok = report.passed and violations == 0 and r2 >= 0.8 and decaying
    elapsed = time.perf_counter() - start
    assert _verdict(
        4, ok,
        f"{len(report.rows)} thresholds, {violations} bound violations, decay r^2 {r2:.3f} (>=0.8)",
        elapsed, budget,
    )


def test_criterion_5_bernstein_validity():
    budget, start = 300.0, time.perf_counter()
    details = []
    ok = True
    for name in ("lipschitz-1d", "beta-skew-1d"):
        report = exp_bernstein(
            ExperimentConfig(
                experiment="exp-bernstein",
                problem=name,
                family="dyadic",
                dim=1,
                level=2,
                m_values=(1024,),
                cell="all",
                replications=10_000,
                seed=20250810,
            )
        )
        cells = len({r["cell"] for r in report.rows})
        bad = sum((not r["response_pass"]) + (not r["mass_pass"]) for r in report.rows)
        details.append(f"{name}: {cells} cells x 5 thresholds, {bad} violations")
        ok = ok and report.passed and bad == 0
    elapsed = time.perf_counter() - start
    assert _verdict(5, ok, "; ".join(details), elapsed, budget)


def test_criterion_6_oracle_equivalence():
    budget, start = 120.0, time.perf_counter()
    fam = make_dyadic(1, 1)
    ok = True
    details = []
    for name in ("two-atom", "two-atom-noisy"):
        problem = get_problem(name)
        worst = 0.0
        for m in (1, 2, 3, 4):
            exact = exact_expected_error(problem, fam, m)
            est = estimate_expected_error(
                problem, fam, m, replications=10_000, seed=20250810 + m
            )
            gap_sigmas = abs(est.mean_sq - exact) / est.std_err
            worst = max(worst, gap_sigmas)
            ok = ok and gap_sigmas <= 3.0
        details.append(f"{name}: worst gap {worst:.2f} se (<=3)")
    constant = get_problem("two-atom-constant")
    single_cell = make_dyadic(1, 0)
    zeros = [exact_expected_error(constant, single_cell, m) for m in (1, 2, 3, 4)]
    ok = ok and all(v == 0.0 for v in zeros)
    details.append(f"constant truth exact values {zeros}")
    elapsed = time.perf_counter() - start
    assert _verdict(6, ok, "; ".join(details), elapsed, budget)


def test_criterion_7_estimator_invariants():
    budget, start = 60.0, time.perf_counter()
    rng = np.random.default_rng(314)
    checks = {}

    # constant reproduction on indicators (exact for a dyadic-rational level)
    fam = make_dyadic(1, 2)
    x = rng.random((128, 1))
    co = fit(Dataset(x=x, y=np.full(128, 0.5)), fam, y_bound=1.0)
    grid = rng.random((10_000, 1))
    checks["constant"] = bool(np.all(FittedFunction(fam, co.values)(grid) == 0.5))
    hat = make_hat(1, 7)
    co_h = fit(Dataset(x=x, y=np.full(128, 0.37)), hat, y_bound=1.0)
    checks["constant"] &= bool(
        np.abs(FittedFunction(hat, co_h.values)(grid) - 0.37).max() <= 1e-12
    )

    # fitted values never exceed the bound on 10^4 probes
    bounded = True
    for family in (make_dyadic(1, 3), make_hat(1, 9), make_hat(2, 4)):
        xs = rng.random((300, family.dim))
        ys = rng.uniform(-1.0, 1.0, 300)
        cf = fit(Dataset(x=xs, y=ys), family, y_bound=1.0)
        vals = FittedFunction(family, cf.values)(rng.random((10_000, family.dim)))
        bounded &= bool(np.abs(vals).max() <= 1.0 + 1e-12)
    checks["bounded"] = bounded

    # indices with zero empirical mass contribute nothing
    left = Dataset(x=rng.random((50, 1)) * 0.5, y=rng.uniform(-1, 1, 50))
    cz = fit(left, fam, y_bound=1.0)
    right_probes = 0.75 + rng.random((1000, 1)) * 0.25
    checks["zero-cell"] = bool(np.all(FittedFunction(fam, cz.values)(right_probes) == 0.0))

    # permutation invariance of the fit
    xs = rng.random((200, 1))
    ys = rng.uniform(-1, 1, 200)
    perm = rng.permutation(200)
    a = fit(Dataset(x=xs, y=ys), hat, y_bound=1.0).values
    b = fit(Dataset(x=np.ascontiguousarray(xs[perm]), y=ys[perm]), hat, y_bound=1.0).values
    checks["permutation"] = bool(np.allclose(a, b, rtol=1e-12, atol=1e-15))

    # identical reports regardless of worker count, byte for byte
    base = dict(
        experiment="exp-tail",
        problem="lipschitz-1d",
        family="dyadic",
        dim=1,
        level=2,
        m_values=(512,),
        replications=400,
        seed=271828,
    )
    serial = render_csv(exp_tail(ExperimentConfig(**base, threads=1)))
    threaded = render_csv(exp_tail(ExperimentConfig(**base, threads=8)))
    repeat = render_csv(exp_tail(ExperimentConfig(**base, threads=1)))
    checks["determinism"] = serial == threaded == repeat

    # datasets are reproducible bit for bit from their seed
    p = get_problem("lipschitz-1d")
    d1, d2 = sample_dataset(p, 256, seed=99), sample_dataset(p, 256, seed=99)
    checks["seed"] = bool(np.array_equal(d1.x, d2.x) and np.array_equal(d1.y, d2.y))

    ok = all(checks.values())
    elapsed = time.perf_counter() - start
    assert _verdict(
        7, ok, ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()),
        elapsed, budget,
    )


def test_criterion_8_approximation_order():
    budget, start = 10.0, time.perf_counter()
    f = AffineFunction([1.0], 0.0)
    measure = uniform(1)
    values = {}
    ok = True
    for level in range(1, 6):
        got = approx_error(f, make_dyadic(1, level), measure, n_mc=200_000, seed=level)
        exact = 2.0**-level / math.sqrt(12.0)
        values[level] = got
        ok = ok and abs(got - exact) <= 0.05 * exact
    ratios = [values[l + 1] / values[l] for l in range(1, 5)]
    ok = ok and all(abs(r - 0.5) <= 0.025 for r in ratios)
    elapsed = time.perf_counter() - start
    assert _verdict(
        8, ok,
        "halving ratios " + ", ".join(f"{r:.4f}" for r in ratios) + " (0.5+-0.025)",
        elapsed, budget,
    )
