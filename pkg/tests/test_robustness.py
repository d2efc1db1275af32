import math

import numpy as np
import pytest
from scipy.integrate import quad

from appersist.robustness import hull_demo, recurrence_scan
from appersist.signals import QuasiPeriodicSignal as Q
from appersist.signals import conley_miller, eval_signal, integral, translate


def test_controls_exact():
    assert recurrence_scan(Q.sin(), 100.0, 50, seed=3).recurrent_fraction == 1.0
    assert recurrence_scan(Q.const(1.0), 100.0, 50, seed=3).recurrent_fraction == 0.0
    for T in (2 * math.pi, 50.0, 1e4):
        assert recurrence_scan(Q.sin(), T, 20, seed=0).recurrent_fraction == 1.0
        assert recurrence_scan(Q.const(0.5), T, 20, seed=0).recurrent_fraction == 0.0


def test_const_control_minima_are_linear():
    rep = hull_demo(1, 40.0, [0.0, 1.3, 7.0], f=Q.const(0.5))
    assert [r.min_F for r in rep.translates] == pytest.approx([10.0] * 3, abs=1e-12)
    assert rep.recurrent_fraction == 0.0


def test_closed_form_matches_quadrature(rng):
    f = conley_miller(6)
    for _ in range(100):
        sigma, t = rng.uniform(0, 2 * math.pi * 64), rng.uniform(0, 200)
        g = translate(f, sigma)
        ref, _ = quad(lambda s: float(eval_signal(f, s + sigma)), 0.0, t, limit=400,
                      epsabs=1e-11, epsrel=1e-11)
        assert abs(integral(g, 0.0, t) - ref) < 1e-8


def test_base_profile_nonnegative_with_exact_zeros():
    N = 6
    period = 2 * math.pi * 2**N
    rep = hull_demo(N, 2 * period, [])
    assert min(rep.base_F) >= -1e-9
    assert rep.base_min_after_one > 0
    # every term of F_0 vanishes at multiples of the slow period
    assert abs(integral(conley_miller(N), 0.0, period)) < 1e-9
    assert rep.base_F[0] == 0.0 and len(rep.base_F) == len(rep.base_times)


def test_scan_reports_minima_and_fraction():
    rep = recurrence_scan(conley_miller(4), 1e4, 200, seed=7)
    assert len(rep.shifts) == len(rep.minima) == 200
    assert 0.0 <= rep.recurrent_fraction <= 1.0
    assert all(0.0 <= s <= 2 * math.pi * 16 for s in rep.shifts)
    assert rep.recurrent == tuple(m < rep.tol for m in rep.minima)


def test_scan_deterministic():
    a = recurrence_scan(conley_miller(4), 2000.0, 30, seed=11)
    b = recurrence_scan(conley_miller(4), 2000.0, 30, seed=11)
    c = recurrence_scan(conley_miller(4), 2000.0, 30, seed=12)
    assert a == b
    assert a.shifts != c.shifts


def test_argument_checks():
    with pytest.raises(ValueError):
        hull_demo(3, 0.0, [0.0])
    with pytest.raises(ValueError):
        hull_demo(3, 10.0, [math.nan])
    with pytest.raises(ValueError):
        recurrence_scan(Q.sin(), 10.0, 0, seed=1)
    with pytest.raises(ValueError):
        conley_miller(0)


def test_second_half_min_against_dense_grid(rng):
    f = conley_miller(3)
    T = 500.0
    shifts = rng.uniform(0, 50, 5)
    rep = hull_demo(3, T, shifts)
    fine = np.linspace(T / 2, T, 200001)
    for r in rep.translates:
        ref = np.min(integral(translate(f, r.shift), 0.0, fine))
        assert r.min_F >= ref - 1e-9
        assert r.min_F - ref < 1e-3
