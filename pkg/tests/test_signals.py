import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import simpson

from appersist.signals import (
    COSINE,
    QuasiPeriodicSignal as Q,
    Term,
    ZERO,
    conley_miller,
    conley_miller_integral_bound,
    eval_signal,
    hull_sup,
    integral,
    is_identically_zero,
    random_signal,
    translate,
)

terms = st.builds(
    Term,
    amplitude=st.floats(-2, 2),
    frequency=st.floats(0.05, 5),
    phase=st.floats(-10, 10),
    waveform=st.sampled_from(["sine", "cosine"]),
)
signals = st.builds(Q, constant=st.floats(-2, 2), terms=st.lists(terms, max_size=4).map(tuple))


def test_eval_examples():
    assert eval_signal(ZERO, 5.0) == 0.0
    s = Q.sin(0.5, 1.0, constant=1.0)
    assert eval_signal(s, 0.0) == 1.0
    assert eval_signal(s, math.pi / 2) == pytest.approx(1.5, abs=1e-15)


def test_eval_vectorized_matches_scalar(rng):
    s = random_signal(rng)
    t = rng.uniform(-50, 50, 20)
    assert np.allclose(eval_signal(s, t), [eval_signal(s, x) for x in t], atol=1e-14)


def test_term_rejects_bad_frequency():
    with pytest.raises(ValueError):
        Term(1.0, 0.0)
    with pytest.raises(ValueError):
        Term(1.0, math.inf)
    with pytest.raises(ValueError):
        Term(1.0, 1.0, 0.0, "square")


def test_integral_constant_and_full_period():
    assert integral(Q.const(0.7), 0.0, 3.0) == pytest.approx(2.1, abs=1e-15)
    assert abs(integral(Q.sin(), 0.0, 2 * math.pi)) < 1e-15


def test_integral_cosine_against_simpson():
    w, T = 0.3, 10.0
    s = Q.cos(1.0, w)
    exact = math.sin(w * T) / w
    assert integral(s, 0.0, T) == pytest.approx(exact, abs=1e-14)
    grid = np.linspace(0.0, T, 20001)
    quad = simpson(eval_signal(s, grid), x=grid)
    assert abs(integral(s, 0.0, T) - quad) < 1e-8


def test_integral_random_against_simpson(rng):
    for _ in range(5):
        s = random_signal(rng)
        a, b = sorted(rng.uniform(-20, 20, 2))
        grid = np.linspace(a, b, 40001)
        assert abs(integral(s, a, b) - simpson(eval_signal(s, grid), x=grid)) < 1e-8


@given(signals, st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
def test_integral_additive(s, a, b, c):
    lhs = integral(s, a, b) + integral(s, b, c)
    assert abs(lhs - integral(s, a, c)) < 1e-12 * max(1.0, abs(lhs)) + 1e-11


def test_time_average_tends_to_constant(rng):
    for _ in range(20):
        s = random_signal(rng)
        bound = s.amplitude_sum / s.min_frequency * 2
        for T in (1.0, 10.0, 1e3, 1e5):
            assert abs(integral(s, 0.0, T) / T - s.constant) < bound / T + 1e-12


def test_hull_sup_examples_and_grid_oracle():
    assert hull_sup(ZERO) == 0.0
    s1 = Q.sin(0.25, 1.0, constant=0.5)
    s2 = Q(1.0, (Term(0.3, 1.0), Term(0.2, math.sqrt(2.0), 0.0, COSINE)))
    assert hull_sup(s1) == 0.75
    assert hull_sup(s2) == pytest.approx(1.5)
    grid = np.arange(0.0, 1e4, 0.01)
    for s in (s1, s2):
        approx = eval_signal(s, grid).max()
        assert approx <= hull_sup(s) + 1e-12
        assert hull_sup(s) - approx < 5e-3


def test_hull_sup_dominates_samples(rng):
    t = rng.uniform(-1e4, 1e4, 10**5)
    for _ in range(10):
        s = random_signal(rng, n_terms=4)
        assert np.all(eval_signal(s, t) <= hull_sup(s) + 1e-12)


def test_is_identically_zero():
    assert is_identically_zero(ZERO)
    assert not is_identically_zero(Q.const(1e-300))
    assert is_identically_zero(Q(0.0, (Term(0.0, 1.0),)))


def test_translate_examples(rng):
    s = random_signal(rng)
    assert translate(s, 0.0) == s
    grid = np.linspace(0, 20, 101)
    assert np.allclose(eval_signal(translate(Q.sin(), math.pi), grid), -np.sin(grid), atol=1e-14)
    t = rng.uniform(-100, 100, 1000)
    assert np.max(np.abs(eval_signal(translate(s, 1.7), t) - eval_signal(s, t + 1.7))) < 1e-12


@settings(max_examples=50)
@given(signals, st.floats(-20, 20), st.floats(-20, 20))
def test_translate_is_a_flow(s, a, b):
    grid = np.linspace(-10, 10, 57)
    lhs = eval_signal(translate(translate(s, a), b), grid)
    rhs = eval_signal(translate(s, a + b), grid)
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, s.amplitude_sum) * 100


def test_conley_miller_terms():
    f1 = conley_miller(1)
    assert f1.constant == 0.0 and f1.terms == (Term(1.0, 0.5),)
    f2 = conley_miller(2)
    assert f2.terms[1] == Term(0.25, 0.25)
    with pytest.raises(ValueError):
        conley_miller(0)


def test_conley_miller_integral_sup():
    # N = 1: int = 2 (1 - cos(t/2)), maximum 4
    t = np.linspace(0, 4 * math.pi, 200001)
    assert np.max(integral(conley_miller(1), 0.0, t)) == pytest.approx(4.0, abs=1e-9)
    # N = 2: commensurate modes; 4 sin^2 u + 1 - cos u peaks at cos u = -1/8 with value 81/16
    t = np.linspace(0, 8 * math.pi, 400001)
    sup2 = np.max(integral(conley_miller(2), 0.0, t))
    assert sup2 == pytest.approx(81 / 16, abs=1e-8)
    assert sup2 < conley_miller_integral_bound(2) == 6.0


def test_conley_miller_bound_grows():
    bounds = [conley_miller_integral_bound(N) for N in range(1, 15)]
    assert all(b2 > b1 for b1, b2 in zip(bounds, bounds[1:]))
    assert bounds[-1] > 100
    # the top mode alone reaches 2^(N+1)/N^2 at t = pi 2^N, so the true sup is unbounded too
    for N in (4, 8, 12):
        assert integral(conley_miller(N), 0.0, math.pi * 2**N) >= 2 ** (N + 1) / N**2 - 1e-9


def test_conley_miller_zero_mean():
    T = 1e5
    assert abs(integral(conley_miller(6), 0.0, T) / T) < 0.01


def test_signal_literal_roundtrip():
    s = Q(0.5, (Term(0.1, 2.0, 0.3), Term(-0.2, 1.5, 0.0, COSINE)))
    assert Q.from_dict(s.to_dict()) == s
    assert Q.from_dict(3) == Q.const(3.0)
    assert Q.from_dict({"constant": 1, "terms": [{"kind": "sin", "amplitude": 1, "frequency": 2}]}) == Q.sin(1, 2, constant=1)
    with pytest.raises(ValueError):
        Q.from_dict({"constant": 1, "trems": []})
    with pytest.raises(ValueError):
        Q.from_dict({"terms": [{"amplitude": 1, "frequency": 1, "phse": 0}]})
