"""Acceptance suite.

Each test verifies one headline guarantee of the package at its stated
tolerance and prints a one-line verdict; run with ``pytest -s`` to see
them.  Long transient runs are shared through the in-process cache of
``harness.canonical_run``, so the whole suite stays in the minutes
range on a laptop-class machine.
"""

import math
import time

import numpy as np
import pytest

from dropspread import asymptotics as asy
from dropspread import harness, selfsimilar as ss
from dropspread.core import ProblemParams, integrate


def report(label, detail=""):
    print(f"[PASS] {label}" + (f"  ({detail})" if detail else ""))


def params(n, alpha):
    return ProblemParams(n=n, alpha=alpha, D=1.0)


# --------------------------------------------------------------------------
def test_c01_selfsimilar_solver_matches_closed_form_oracle():
    """n = 1 shooting solve vs the explicit balanced solution."""
    xs = np.linspace(0.0, 1.0, 1001)
    worst_db = worst_sup = 0.0
    for D in (0.0, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0):
        t0 = time.time()
        sol = ss.solve(1.0, D)
        elapsed = time.time() - t0
        ref = ss.explicit_n1(D)
        db = abs(sol.B - ref.B)
        sup = float(np.max(np.abs(sol.evaluate(xs) - ref.evaluate(xs))))
        assert db <= 1e-8, f"D={D}: |dB|={db}"
        assert sup <= 1e-6, f"D={D}: sup={sup}"
        assert elapsed < 30.0
        worst_db = max(worst_db, db)
        worst_sup = max(worst_sup, sup)
    report("C01 closed-form oracle, D in {0..100}",
           f"max |dB|={worst_db:.2e}, max sup={worst_sup:.2e}")


# --------------------------------------------------------------------------
def test_c02_correction_constants_and_profiles():
    """Quadrature constants and strong-friction correction profiles."""
    c1_1 = asy.C1_constant(1.0)
    assert abs(c1_1 - 0.1) <= 1e-10
    # closed form for n = 2 is (5 - 6 log 2)/6, the value consistent with
    # the n = 2 correction profile having zero mass
    c1_2 = asy.C1_constant(2.0)
    assert abs(c1_2 - (5.0 - 6.0 * math.log(2.0)) / 6.0) <= 1e-10
    xs = np.linspace(0.0, 1.0, 257)
    sups = []
    for n in (1.0, 2.0):
        quad = np.array([asy._strong_h1_quadrature(n, x, asy.C1_constant(n))
                         for x in xs])
        closed = asy.strong_h1_closed_form(n)(xs)
        sup = float(np.max(np.abs(quad - closed)))
        assert sup <= 1e-8
        sups.append(sup)
    report("C02 correction constants and closed-form profiles",
           f"C1 errors {abs(c1_1-0.1):.1e}/{abs(c1_2-(5-6*math.log(2))/6):.1e}, "
           f"H1 sup {max(sups):.1e}")


# --------------------------------------------------------------------------
def test_c03_wedge_limit_of_the_balanced_family():
    """D B_D^alpha -> 3 and H_D(0) -> 3/2 as D grows."""
    for n in (1.0, 2.0):
        alpha = 4.0 / (n + 3.0)
        err2 = abs(1e2 * ss.solve(n, 1e2).B ** alpha - 3.0)
        sol3 = ss.solve(n, 1e3)
        err3 = abs(1e3 * sol3.B ** alpha - 3.0)
        assert err3 <= 1e-2
        assert err3 < err2
        assert abs(sol3.evaluate(0.0) - 1.5) <= 1e-3
    report("C03 wedge limit of the balanced family",
           f"n=2: |D B^a - 3| = {err3:.1e} at D=1e3")


# --------------------------------------------------------------------------
def test_c04_structural_transient_suite():
    """Energy descent, mass conservation and symmetry over a full run."""
    res = harness.canonical_run("fig1")
    assert res.stats["energy_violations"] == 0
    assert res.stats["mass_drift_rel"] <= 1e-6
    assert res.stats["max_asymmetry"] <= 1e-10
    report("C04 structural transient suite",
           f"violations=0, mass drift {res.stats['mass_drift_rel']:.1e}, "
           f"asymmetry {res.stats['max_asymmetry']:.1e}")


# --------------------------------------------------------------------------
def test_c05_convergence_to_the_balanced_profile():
    """Rescaled transient profiles approach the exact balanced solution."""
    res = harness.canonical_run("balanced_n1")
    assert res.s[-1] / res.s[0] >= 10.0
    exact = ss.solve(1.0, 1.0)
    times, dists, _ = harness.distance_series(res.snapshots, exact.evaluate)
    last = times >= times[-1] / 10.0
    d = dists[last]
    assert np.all(np.diff(d) <= 1e-6 * (1.0 + d[:-1])), "distance not decreasing"
    assert d[-1] < 0.02
    report("C05 convergence to the balanced profile",
           f"final sup distance {d[-1]:.2e}, s grew {res.s[-1]/res.s[0]:.1f}x")


# --------------------------------------------------------------------------
def test_c06_spreading_exponents_and_prefactor():
    """Fitted front exponents against alpha/(alpha+4) and 1/(n+4)."""
    targets = {
        "strong_n1": 0.5 / 4.5,
        "strong_n2": 0.5 / 4.5,
        "weak_n1": 1.0 / 5.0,
        "weak_n2": 1.0 / 6.0,
    }
    details = []
    for name, gamma in targets.items():
        res = harness.canonical_run(name)
        m = res.times > 0.0
        fit = harness.fit_spreading_exponent(res.times[m], res.s[m])
        rel = abs(fit.gamma_hat - gamma) / gamma
        assert rel <= 0.02, f"{name}: gamma_hat={fit.gamma_hat} vs {gamma}"
        details.append(f"{name} {100*rel:.2f}%")
        if name == "weak_n1":
            pref = 225.0 ** 0.2
            rel_p = abs(fit.prefactor_hat - pref) / pref
            assert rel_p <= 0.05, f"weak prefactor off by {rel_p}"
            details.append(f"prefactor {100*rel_p:.1f}%")
    report("C06 spreading exponents and weak prefactor", ", ".join(details))


# --------------------------------------------------------------------------
def test_c07_front_correction_decay():
    """Decay exponent of t^(-gamma) s(t) against the predicted order."""
    res = harness.canonical_run("strong_n1")
    m = res.times > 0.0
    d_strong = harness.correction_rate(res.times[m], res.s[m], 0.5 / 4.5)
    assert abs(d_strong - 4.0 / 9.0) <= 0.10 * (4.0 / 9.0)
    res = harness.canonical_run("weak_n1")
    m = res.times > 0.0
    d_weak = harness.correction_rate(res.times[m], res.s[m], 0.2)
    assert abs(d_weak - 0.4) <= 0.15 * 0.4
    report("C07 front correction decay",
           f"strong {d_strong:.3f} vs 4/9, weak {d_weak:.3f} vs 2/5")


# --------------------------------------------------------------------------
def test_c08_correction_shapes():
    """Normalized late-time corrections match the predicted profiles."""
    cases = [
        ("strong_n1", asy.strong_prediction(params(1.0, 0.5))),
        ("strong_n2", asy.strong_prediction(params(2.0, 0.5))),
        ("weak_n1", asy.weak_prediction(params(1.0, 2.0))),
    ]
    details = []
    for name, pred in cases:
        res = harness.canonical_run(name)
        t, raw = harness.shape_snapshot(res)
        rec = harness.correction_record(t, raw, pred.H0_dense, pred.H1_dense)
        assert rec.shape_error <= 0.1, f"{name}: L2 {rec.shape_error}"
        details.append(f"{name} L2={rec.shape_error:.3f}")
    report("C08 correction shapes", ", ".join(details))


# --------------------------------------------------------------------------
def test_c09_inner_traveling_wave():
    """Front traveling wave for n = 2 at unit speed."""
    tw = asy.inner_traveling_wave(2.0, 2.0, 1.0)
    assert tw.Fpp_at_end <= 1e-6
    xs = np.geomspace(tw.xi_max / 1000.0, tw.xi_max / 100.0, 80)
    slope = np.polyfit(np.log(xs), np.log(tw.dense(xs)[0]), 1)[0]
    assert abs(slope - 1.5) <= 0.02 * 1.5
    pred = asy.weak_prediction(params(2.0, 2.0), xi_max=1e5)
    gap = max(asy.matching_identity_gap(pred, t) for t in (1e2, 1e6))
    assert gap <= 1e-10
    report("C09 inner traveling wave",
           f"F''(end)={tw.Fpp_at_end:.1e}, exponent {slope:.4f}, "
           f"matching gap {gap:.1e}")


# --------------------------------------------------------------------------
def test_c10_weak_correction_for_fractional_mobility():
    """Global weak-friction correction for n = 5/4, alpha = 2."""
    pred = asy.weak_prediction(params(1.25, 2.0))
    kappa = pred.B0 ** (-2.0)
    slope_gap = abs(pred.parts["slope_at_contact"] + kappa)
    assert slope_gap <= 1e-6
    mass = abs(integrate(pred.H1_dense, 0.0, 1.0, cells=96, order=12))
    assert mass <= 1e-8
    n = pred.n
    w = pred.parts["w"]
    v = pred.parts["v"]
    f = pred.parts["f"]
    f_n = lambda s: np.maximum(f(s), 1e-300) ** -n
    lhs = integrate(lambda s: (1 - n) * s ** 2 * f_n(s) * w(s) * v(s),
                    0.0, 1.0, cells=64, order=8)
    wp = np.gradient(w.values, w.grid.nodes)
    rhs = (n - 1) * integrate(lambda s: s ** 2 * f_n(s) * w(s) ** 2,
                              0.0, 1.0, cells=64, order=8) \
        + 1.5 * np.trapezoid(wp ** 2, w.grid.nodes)
    assert lhs > 0.0 and rhs > 0.0
    report("C10 weak fractional-mobility correction",
           f"slope gap {slope_gap:.1e}, mass {mass:.1e}, "
           f"coercive form {lhs:.3e} ~ {rhs:.3e} > 0")
