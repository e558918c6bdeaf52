"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are printed
outside pytest's capture) or directly with ``python3 tests/test_acceptance.py``.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from freedecay import (
    Method,
    check_decay_bound,
    fit_power_law,
    g_apply,
    g_inner,
    g_inner_direct,
    g_inner_products,
    gamma_half,
    make_gaussian_family,
    make_momentum_bump,
    moments,
    remainder_diagnostic,
    survival_amplitude,
    survival_series,
    t0_norm,
)
from freedecay.moments import g_kernel_scale

ORDERS = (0, 1, 2, 3, 4)
WIDTHS = (0.25, 0.5, 2.0)
SWEEP = [(m, a0) for m in ORDERS for a0 in WIDTHS]


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return emit


def exact_abs2(m, a0, t):
    return (1 + (t / (2 * a0)) ** 2) ** -(m + 0.5)


def test_criterion_1_gaussian_closed_form(report):
    worst = 0.0
    start = time.perf_counter()
    for m, a0 in SWEEP:
        t = np.logspace(-1, 4, 32) * 2 * a0
        s = survival_series(make_gaussian_family(m, a0), t, Method.MOMENTUM_QUADRATURE)
        rel = np.abs(s.abs2 / exact_abs2(m, a0, t) - 1)
        worst = max(worst, float(np.max(rel)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed <= 10.0
    report(1, ok, f"quadrature |A|^2 vs closed form, worst rel err {worst:.2e} (<= 1e-6), {elapsed:.2f} s (<= 10 s)")


def test_criterion_2_leading_constant(report):
    worst = 0.0
    for m, a0 in SWEEP:
        psi = make_gaussian_family(m, a0)
        t = 1e3 * 2 * a0
        a = survival_amplitude(psi, t, Method.MOMENTUM_QUADRATURE)
        d = abs(psi.deriv_at_zero(m))
        law = gamma_half(m) ** 2 * d ** 4 / math.factorial(m) ** 4
        worst = max(worst, abs(abs(a) ** 2 * t ** (2 * m + 1) / law - 1))
    report(2, worst <= 0.01, f"|A|^2 t^(2m+1) vs leading constant at t = 1e3 (2 a0), worst rel err {worst:.2e} (<= 1e-2)")


def test_criterion_3_exponent_recovery(report):
    worst = 0.0
    for m, a0 in SWEEP:
        lo, hi = 1e2 * 2 * a0, 1e4 * 2 * a0
        s = survival_series(make_gaussian_family(m, a0), np.logspace(math.log10(lo), math.log10(hi), 32),
                            Method.MOMENTUM_QUADRATURE)
        worst = max(worst, abs(fit_power_law(s, (lo, hi)).exponent + 2 * m + 1))
    report(3, worst <= 0.05, f"fitted slope vs -(2m+1), worst deviation {worst:.2e} (<= 0.05)")


def _vanishing_checks_gaussian(m, a0):
    psi = make_gaussian_family(m, a0)
    j_max = max(2 * m, 2)
    mom = moments(psi, j_max, method="quadrature")
    gip = g_inner_products(psi, m, mom)
    # (i) moment form vs derivative form
    d = psi.deriv_at_zero(m)
    deriv_form = (-1) ** (m + 1) * math.pi * abs(d) ** 2 / math.factorial(m) ** 2
    rel_i = abs(g_inner(psi, m, mom) / deriv_form - 1)
    # (ii) vanish together below m, both nonzero at m
    mu_scale = 1 + np.sum(np.abs(mom.values[: m + 1]))
    g_scale = 1 + np.sum(np.abs(gip.values))
    mu_zero = np.abs(mom.values[: m + 1]) < 1e-10 * mu_scale
    g_zero = np.abs(gip.values) < 1e-10 * g_scale
    ok_ii = bool(np.all(mu_zero[:m]) and np.all(g_zero[:m]) and not mu_zero[m] and not g_zero[m])
    # (iii) G_2j psi = 0 when mu_0..mu_2j vanish, i.e. 2j <= m - 1
    x = np.linspace(-4, 4, 9) * math.sqrt(a0)
    ratio = 0.0
    for j in range((m - 1) // 2 + 1 if m else 0):
        out = g_apply(psi, 2 * j, x)
        ratio = max(ratio, float(np.max(np.abs(out) / g_kernel_scale(psi, 2 * j, x))))
    return rel_i, ok_ii, ratio


def _vanishing_checks_bump():
    psi = make_momentum_bump(2.0, 1.0)
    # derivatives at 0 vanish identically; position quadrature is
    # feasible for the lowest order only (|x|^j amplifies transform noise)
    exact = moments(psi, 12)
    gip = g_inner_products(psi, 6, exact)
    ok_exact = bool(np.all(exact.values == 0) and np.all(gip.values == 0))
    mq = moments(psi, 0, method="quadrature")
    ok_quad = abs(mq.values[0]) < 1e-10 * (1 + abs(mq.values[0]))
    x = np.linspace(-4, 4, 9)
    ratio = float(np.max(np.abs(g_apply(psi, 0, x)) / g_kernel_scale(psi, 0, x)))
    return ok_exact and ok_quad, ratio


def test_criterion_4_moment_operator_equivalence(report):
    worst_i, all_ii, worst_iii = 0.0, True, 0.0
    for m, a0 in SWEEP:
        rel_i, ok_ii, ratio = _vanishing_checks_gaussian(m, a0)
        worst_i = max(worst_i, rel_i)
        all_ii &= ok_ii
        worst_iii = max(worst_iii, ratio)
    ok_bump, ratio_bump = _vanishing_checks_bump()
    all_ii &= ok_bump
    worst_iii = max(worst_iii, ratio_bump)
    ok = worst_i <= 1e-9 and all_ii and worst_iii < 1e-10
    report(4, ok, f"(i) moment vs derivative form worst rel {worst_i:.2e} (<= 1e-9); "
                  f"(ii) joint vanishing {'holds' if all_ii else 'violated'}; "
                  f"(iii) |G_2j psi| / kernel scale worst {worst_iii:.2e} (< 1e-10)")


def test_criterion_5_partial_sum_remainder(report):
    psi = make_gaussian_family(0, 0.5)
    t = np.logspace(1, 4, 16)
    r = remainder_diagnostic(psi, 0, t)
    oracle = np.abs((1 + 1j * t) ** -0.5 - (1j * t) ** -0.5) * np.sqrt(t)
    dev = float(np.max(np.abs(r - oracle)))
    decreasing = bool(np.all(np.diff(r) < 0))
    ok = decreasing and r[-1] < 1e-2 and dev <= 1e-10
    report(5, ok, f"remainder strictly decreasing: {decreasing}, last {r[-1]:.2e} (< 1e-2), "
                  f"max deviation from closed form {dev:.2e} (<= 1e-10)")


def test_criterion_6_super_polynomial(report):
    psi = make_momentum_bump(2.0, 1.0)
    slopes = []
    for lo in (1e2, 1e3, 1e4):
        s = survival_series(psi, np.logspace(math.log10(lo), math.log10(10 * lo), 16), Method.MOMENTUM_QUADRATURE)
        slopes.append(-fit_power_law(s, (lo, 10 * lo)).exponent)
    ok = slopes[0] < slopes[1] < slopes[2] and all(p > q for p, q in zip(slopes, (5, 7, 9)))
    report(6, ok, "bump exponent magnitudes " + ", ".join(f"{p:.1f}" for p in slopes)
                  + " (increasing, > 5, 7, 9)")


def test_criterion_7_time_operator(report):
    classes_ok = True
    finite_states = [make_momentum_bump(2.0, 1.0)]
    for m, a0 in SWEEP:
        psi = make_gaussian_family(m, a0)
        rep = t0_norm(psi)
        classes_ok &= rep.finite == (m >= 2)
        if rep.finite:
            finite_states.append(psi)
    norm_err = abs(t0_norm(make_gaussian_family(2, 0.5)).norm_value - 1 / math.sqrt(2))
    bound_ok, points = True, 0
    for psi in finite_states:
        t = np.logspace(-1, 4, 32) * psi.time_scale
        s = survival_series(psi, t)
        ok = check_decay_bound(psi, s)
        bound_ok &= bool(ok.all())
        points += ok.size
    ok = classes_ok and norm_err <= 1e-8 and bound_ok
    report(7, ok, f"classification {'correct' if classes_ok else 'wrong'}; m=2 norm error {norm_err:.2e} (<= 1e-8); "
                  f"bound {'holds' if bound_ok else 'violated'} at {points} points over {len(finite_states)} states")


def test_criterion_8_oracle_cross_checks(report):
    worst_amp = 0.0
    for m, a0 in SWEEP:
        psi = make_gaussian_family(m, a0)
        for t in (1.0, 10.0, 100.0):
            vals = [survival_amplitude(psi, t, meth) for meth in Method]
            worst_amp = max(worst_amp, max(abs(a - b) for a in vals for b in vals))
    worst_g = 0.0
    for m, a0 in SWEEP:
        psi = make_gaussian_family(m, a0)
        for j in range(4):
            worst_g = max(worst_g, abs(g_inner(psi, j) - g_inner_direct(psi, j)))
    ok = worst_amp <= 1e-6 and worst_g <= 1e-8
    report(8, ok, f"pairwise amplitude spread {worst_amp:.2e} (<= 1e-6 abs); "
                  f"moment identity vs double quadrature {worst_g:.2e} (<= 1e-8 abs)")


def test_criterion_9_determinism(report, tmp_path):
    runs = [
        ["survival", "--state", "gaussian", "--m", "1", "--a0", "0.5", "--t-count", "16"],
        ["survival", "--state", "bump", "--t-count", "8", "--t-hi", "1e3", "--format", "json"],
        ["asymptotics", "--state", "gaussian", "--m", "2", "--order", "3"],
        ["timeop", "--state", "gaussian", "--m", "3", "--t-count", "8"],
    ]
    identical = 0
    for i, argv in enumerate(runs):
        outs = []
        for k in range(2):
            path = tmp_path / f"run{i}_{k}"
            subprocess.run([sys.executable, "-m", "freedecay", *argv, "--out", str(path)], check=True)
            outs.append(path.read_bytes())
        identical += outs[0] == outs[1]
    report(9, identical == len(runs), f"{identical}/{len(runs)} CLI configurations byte-identical across two runs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
