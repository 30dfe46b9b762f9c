"""Exit criteria, one test per criterion.

Each test gathers its sub-items, records a one-line summary (printed in the
"acceptance criteria" section at the end of the run) and then asserts that
every sub-item held.  Tolerances are the stated ones; nothing is relaxed.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import beta

from riesz_lab.atoms import br_moment_check, cube_bump, make_atom
from riesz_lab.config import ExperimentConfig
from riesz_lab.grid import Box, Cube, GridFunction, make_grid
from riesz_lab.kernel import BRParams, decay_envelope_estimate, phi_radial
from riesz_lab.operators import br_apply_convolution, br_apply_spectral
from riesz_lab.report import emit_report
from riesz_lab.specfun import bessel_j, gamma_fn
from riesz_lab.verify import check_superposition, run_checks
from riesz_lab.weights import (
    CubeFamily,
    Weight,
    a_1_constant,
    a_q_constant,
    check_doubling,
    check_measure_comparison,
    refine_a_q,
)

pytestmark = pytest.mark.acceptance

P = 2.0 / 3.0


def conclude(record_property, number, items, elapsed, budget):
    """Record the criterion line and fail with the list of unmet sub-items."""
    items = dict(items)
    items[f"runtime < {budget:g} s"] = elapsed < budget
    failed = [k for k, ok in items.items() if not ok]
    detail = f"{len(items) - len(failed)}/{len(items)} sub-items, {elapsed:.1f} s"
    if failed:
        detail += "; unmet: " + "; ".join(failed)
    record_property("criterion", number)
    record_property("detail", detail)
    print(f"criterion {number}: {'PASS' if not failed else 'FAIL'}  {detail}")
    assert not failed, detail


# -- heavy runs shared by criteria 7, 9 and 10 ---------------------------------------------------


def _config(weight, out):
    return ExperimentConfig(weight=weight, output=str(out))


@pytest.fixture(scope="module")
def ensemble_runs(tmp_path_factory):
    out = {}
    for name, weight in (("lebesgue", {"kind": "constant", "c": 1.0}), ("root", {"kind": "power", "a": -0.5})):
        cfg = _config(weight, tmp_path_factory.mktemp(name))
        t = time.perf_counter()
        rep = run_checks(cfg, ["lemma43", "thm11"])
        out[name] = (cfg, rep, time.perf_counter() - t)
        emit_report(rep, cfg.output)
    return out


# -- 1 -----------------------------------------------------------------------------------------


def test_criterion_01_special_functions(record_property):
    t0 = time.perf_counter()
    t = np.linspace(0.1, 50.0, 2000)
    closed = np.sqrt(2 / (np.pi * t)) * np.sin(t)
    half = float(np.max(np.abs(bessel_j(0.5, t) - closed) / np.abs(closed)))
    rng = np.random.default_rng(1)
    worst = 0.0
    for mu, x in zip(rng.uniform(1.0, 6.0, 200), rng.uniform(0.5, 200.0, 200)):
        rhs = 2 * mu / x * bessel_j(mu, x)
        worst = max(worst, abs(bessel_j(mu - 1, x) + bessel_j(mu + 1, x) - rhs) / max(1.0, abs(rhs)))
    spot = max(
        abs(gamma_fn(1.0) - 1.0),
        abs(gamma_fn(0.5) / math.sqrt(math.pi) - 1.0),
        abs(gamma_fn(2.5) / (0.75 * math.sqrt(math.pi)) - 1.0),
    )
    conclude(
        record_property,
        1,
        {
            f"J_1/2 closed form rel err {half:.1e} <= 1e-8": half <= 1e-8,
            f"recurrence residual {worst:.1e} <= 1e-7": worst <= 1e-7,
            f"Gamma spot values err {spot:.1e} <= 1e-10": spot <= 1e-10,
        },
        time.perf_counter() - t0,
        5,
    )


# -- 2 -----------------------------------------------------------------------------------------


def _oscillatory(rho, dim, delta):
    if dim == 1:
        f, c = (lambda s: (1 - s * s) ** delta), 1.0
    else:
        f, c = (lambda s: (1 - s * s) ** (delta + 0.5)), beta(0.5, delta + 1)
    return 2 * c * quad(f, 0, 1, weight="cos", wvar=2 * math.pi * rho, epsabs=1e-14, epsrel=1e-13, limit=400)[0]


def test_criterion_02_kernel(record_property):
    t0 = time.perf_counter()
    oracle0 = quad(lambda x: 1 - x * x, -1, 1)[0]
    origin = abs(phi_radial(0.0, BRParams(dim=1, delta=1.0)) - oracle0)
    rho = np.random.default_rng(2).uniform(0.05, 10.0, 50)
    worst = 0.0
    for dim, delta in ((1, 0.5), (1, 1.0), (2, 0.75)):
        got = phi_radial(rho, BRParams(dim=dim, delta=delta))
        want = np.array([_oscillatory(r, dim, delta) for r in rho])
        worst = max(worst, float(np.max(np.abs(got - want) / np.maximum(np.abs(want), 1e-300))))
    conclude(
        record_property,
        2,
        {
            f"phi(0) n=1 delta=1 err {origin:.1e} vs 4/3 <= 1e-6": origin <= 1e-6 and abs(oracle0 - 4 / 3) < 1e-12,
            f"Bessel vs oscillatory integral rel err {worst:.1e} <= 1e-6 at 50 points": worst <= 1e-6,
        },
        time.perf_counter() - t0,
        30,
    )


# -- 3 -----------------------------------------------------------------------------------------


def test_criterion_03_kernel_decay_envelope(record_property):
    t0 = time.perf_counter()
    params = BRParams.at_critical_index(1, P)
    c100 = decay_envelope_estimate(params, 2, 100.0)
    c200 = decay_envelope_estimate(params, 2, 200.0)
    change = abs(c200 / c100 - 1)
    conclude(
        record_property,
        3,
        {f"envelope change 100 -> 200 is {change:.2%} < 5% (C = {c200:.4g})": math.isfinite(change) and change < 0.05},
        time.perf_counter() - t0,
        60,
    )


# -- 4 -----------------------------------------------------------------------------------------


def test_criterion_04_operator_routes(record_property):
    t0 = time.perf_counter()
    box = Box(1, 16.0)
    rng = np.random.default_rng(4)
    worst_excess = 0.0
    worst_rel = 0.0
    for _ in range(10):
        c, width, R = rng.uniform(-2, 2), rng.uniform(0.5, 2.0), rng.uniform(0.5, 8.0)
        f = GridFunction.from_function(
            box, 4096, lambda x: np.where(np.abs(x - c) < width, np.exp(-1 / np.maximum(1 - ((x - c) / width) ** 2, 1e-300)), 0.0)
        )
        params = BRParams.at_critical_index(1, P, R=R)
        s = br_apply_spectral(f, params)
        v = br_apply_convolution(f, params)
        rel = float(np.linalg.norm(s.values - v.values) / np.linalg.norm(s.values))
        bound = max(1e-3, v.meta["tail_estimate"] + s.meta["wrap_bound"])
        worst_rel = max(worst_rel, rel)
        worst_excess = max(worst_excess, rel / bound)
    g = make_grid(box, 512)
    x = g.axis()
    mode_err = 0.0
    for k, R in ((8, 4.0), (64, 4.0), (70, 4.0), (3, 0.1)):
        xi0 = k / (2 * box.half_width)
        f = g.with_values(np.cos(2 * np.pi * xi0 * x))
        out = br_apply_spectral(f, BRParams(dim=1, delta=0.5, R=R)).values
        mode_err = max(mode_err, float(np.max(np.abs(out - max(0.0, 1 - xi0**2 / R**2) ** 0.5 * f.values))))
    conclude(
        record_property,
        4,
        {
            f"routes agree, worst rel L2 {worst_rel:.1e} within bound": worst_excess <= 1.0,
            f"single-mode action err {mode_err:.1e} <= 1e-12": mode_err <= 1e-12,
        },
        time.perf_counter() - t0,
        60,
    )


# -- 5 -----------------------------------------------------------------------------------------


def test_criterion_05_weights(record_property):
    t0 = time.perf_counter()
    unit = Box(1, 1.0)
    flat = Weight.constant(unit, 256)
    a1_flat = abs(a_1_constant(flat) - 1.0)
    w_pos = Weight.power(unit, 256, 0.5)
    scale_err = max(abs(a_q_constant(w_pos.scaled(c), q) / a_q_constant(w_pos, q) - 1) for c in (1e-3, 7.0, 1e3) for q in (1.5, 2.0, 3.0))
    nesting = True
    for a in (-0.5, 0.5, 1.5):
        w = Weight.power(unit, 256, a)
        vals = [a_q_constant(w, q) for q in (1.5, 2.0, 3.0, 4.0)]
        nesting &= all(x >= y * (1 - 1e-12) for x, y in zip(vals, vals[1:]))
    neg = refine_a_q(Weight.power(unit, 256, -0.5), None, 16)
    pos = refine_a_q(Weight.power(unit, 256, 0.5), None, 16)

    box = Box(1, 4.0)
    w = Weight.power(box, 1024, -0.5)
    F = CubeFamily.for_weight(w)
    rng = np.random.default_rng(5)
    x = w.samples.axis()
    draws_ok = 0
    for _ in range(100):
        side, lam = rng.uniform(0.05, 1.0), rng.uniform(1.0, 3.0)
        c = rng.uniform(-(4 - lam * side / 2) + 0.01, 4 - lam * side / 2 - 0.01)
        Q = Cube((c,), side)
        qmask = Q.mask(w.samples)
        E = qmask & (rng.random(x.size) < rng.uniform(0.05, 1.0))
        E = E if E.any() else qmask
        draws_ok += check_doubling(w, Q, lam, F, tol=1e-6).passed and check_measure_comparison(w, E, Q, F, tol=1e-6).passed
    conclude(
        record_property,
        5,
        {
            f"A_1(1) - 1 = {a1_flat:.1e} <= 1e-12": a1_flat <= 1e-12,
            f"A_q scale invariance err {scale_err:.1e}": scale_err <= 1e-12,
            "A_q nonincreasing over q in {1.5, 2, 3, 4}": nesting,
            f"|x|^-1/2 A_1 stable ({neg.coarse:.3f} -> {neg.fine:.3f})": math.isfinite(neg.fine) and neg.ratio < 2,
            f"|x|^1/2 A_1 grows >= 10x under 16x refinement (measured {pos.ratio:.2f}x)": pos.ratio >= 10,
            f"doubling and measure comparison hold on {draws_ok}/100 draws": draws_ok == 100,
        },
        time.perf_counter() - t0,
        60,
    )


# -- 6 -----------------------------------------------------------------------------------------


def test_criterion_06_atoms(record_property):
    t0 = time.perf_counter()
    box = Box(1, 16.0)
    support = size = moments = eq6 = True
    worst_fraction = 0.0
    neg_factor = math.inf
    count = 0
    for w in (Weight.constant(box, 4096), Weight.power(box, 4096, -0.5)):
        for r in (1.0, 0.5, 0.25):
            for seed in range(4):
                a = make_atom(Cube((0.37 * seed - 0.5,), r), w, P, 2.0, 0, seed=seed)
                v = a.validation
                support &= v.support_slack == 0.0
                size &= abs(v.size_ratio - 1.0) <= 1e-9
                moments &= v.moments_ok
                count += 1
                for R in 2.0 ** (np.arange(-4, 12) / 2) / r:
                    rep = br_moment_check(a, BRParams.at_critical_index(1, P, R=R), 0)
                    eq6 &= rep.passed
                    worst_fraction = max(worst_fraction, rep.max_abs / rep.tolerance)
                if seed == 0:
                    bump = cube_bump(a.samples, a.Q)
                    control = a.samples.with_values(bump / (bump.sum() * a.samples.cell_volume))
                    neg = br_moment_check(control, BRParams.at_critical_index(1, P, R=1 / r), 0)
                    neg_factor = min(neg_factor, neg.max_abs / neg.tolerance)
    conclude(
        record_property,
        6,
        {
            f"(a) exact on {count} atoms": support,
            "(b) equality to 1e-9": size,
            "(c) moments to 1e-10": moments,
            f"moments of T_R a within tolerance over 16 R (worst {worst_fraction:.2f} of tol)": eq6,
            f"negative control {neg_factor:.2e} x tol >= 1e3": neg_factor >= 1e3,
        },
        time.perf_counter() - t0,
        120,
    )


# -- 7 -----------------------------------------------------------------------------------------


def test_criterion_07_decay_ratio(record_property, ensemble_runs):
    items = {}
    elapsed = 0.0
    for name, (cfg, rep, secs) in ensemble_runs.items():
        c = rep.checks["lemma43"]
        ens, sens = c["ensemble"], c["sensitivity"]
        items[f"{name}: max/median {ens['max_over_median']:.2f} < 10"] = ens["finite"] and ens["max_over_median"] < 10
        items[f"{name}: R refinement {sens['R_refinement']:.3f} < 2"] = sens["R_refinement"] < 2
        items[f"{name}: 20 atoms x 3 r"] = rep.derived["atoms"] == 60
        elapsed += secs
    conclude(record_property, 7, items, elapsed, 300)


# -- 8 -----------------------------------------------------------------------------------------


def test_criterion_08_superposition(record_property):
    t0 = time.perf_counter()
    items = {}
    for w in (Weight.constant(Box(1, 16.0), 4096), Weight.power(Box(1, 16.0), 4096, -0.5)):
        for p in (0.3, 0.5, 0.6, 2 / 3):
            rep = check_superposition(p, w, members=8, seed=0)
            ok = rep.status == "pass" and rep.constant == (2 - p) / (1 - p) and rep.max_ratio <= 1 + 1e-9
            items[f"{w.kind} p={p:.3g}: C={rep.constant:.4g}, ratio {rep.max_ratio:.3f}"] = ok
    items["C = 3 at p = 1/2"] = (2 - 0.5) / (1 - 0.5) == 3.0
    conclude(record_property, 8, items, time.perf_counter() - t0, 30)


# -- 9 -----------------------------------------------------------------------------------------


def test_criterion_09_weak_type_experiment(record_property, ensemble_runs):
    items = {}
    elapsed = 0.0
    for name, (cfg, rep, secs) in ensemble_runs.items():
        c = rep.checks["thm11"]
        ens, sens = c["ensemble"], c["sensitivity"]
        items[f"{name}: S max {ens['max']:.4g} finite, max/median {ens['max_over_median']:.2f} < 10"] = (
            ens["finite"] and ens["max_over_median"] < 10
        )
        items[f"{name}: homogeneity err {c['homogeneity_error']:.1e} <= 1e-9"] = c["homogeneity_error"] <= 1e-9
        worst = max(sens["R_refinement"], sens["family_doubling"])
        items[f"{name}: refinement sensitivity {worst:.3f} < 2"] = worst < 2
        items[f"{name}: status {c['status']}"] = c["status"] == "pass"
        elapsed += secs
    try:
        ExperimentConfig(p=0.5)
        rejected = False
    except ValueError:
        rejected = True
    items["integer case n(1/p - 1) = 1 rejected"] = rejected
    conclude(record_property, 9, items, elapsed, 600)


# -- 10 ----------------------------------------------------------------------------------------


def test_criterion_10_determinism(record_property, ensemble_runs, tmp_path):
    t0 = time.perf_counter()
    cfg, _, _ = ensemble_runs["lebesgue"]
    again = run_checks(cfg, ["lemma43", "thm11"])
    emit_report(again, tmp_path)
    first = (Path(cfg.output) / "report.json").read_bytes()
    second = (tmp_path / "report.json").read_bytes()
    conclude(
        record_property,
        10,
        {f"report.json byte-identical ({len(first)} bytes)": first == second},
        time.perf_counter() - t0,
        600,
    )

