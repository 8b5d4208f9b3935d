import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaynet.measures import DelayMeasure, Path
from delaynet.phase_space import History, distance_gamma
from delaynet.set_valued import (
    Box,
    Interval,
    aumann_chi_integral,
    b_of,
    box_dist,
    chi,
    cloud_dist,
    hausdorff,
    hausdorff_box,
    hausdorff_cloud,
    hausdorff_sym,
    sigmoid,
)

G, h = 0.1, 0.1
eps_st = st.floats(1e-3, 0.2)


def test_sigmoid_values():
    assert sigmoid(0.1, 0.0) == 0.5
    assert sigmoid(0.1, 1e4) == 1.0
    assert sigmoid(0.1, -1e4) == 0.0
    assert sigmoid(0.5, 0.3) + sigmoid(0.5, -0.3) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        sigmoid(0.0, 1.0)


def test_band_half_width():
    assert b_of(0.0) == 0.0
    assert b_of(0.5) == 0.0
    assert b_of(0.1) == pytest.approx(0.1 * math.log(9.0))
    for e in (0.01, 0.1, 0.2):
        b = b_of(e)
        assert sigmoid(e, b) == pytest.approx(1 - e, rel=1e-13)
        assert sigmoid(e, -b) == pytest.approx(e, rel=1e-12)


def test_chi_cases():
    assert chi(0.1, -1.0) == Interval(0.0, 0.1)
    assert chi(0.1, 1.0) == Interval(0.9, 1.0)
    assert chi(0.1, b_of(0.1)) == Interval(0.0, 1.0)
    assert chi(0.0, 0.0) == Interval(0.0, 1.0)
    assert chi(0.0, 1e-300) == Interval(1.0, 1.0)
    with pytest.raises(ValueError):
        chi(0.3, 0.0)


@settings(max_examples=300, deadline=None)
@given(eps_st, st.floats(-5, 5))
def test_sigmoid_selects_from_chi(eps, s):
    assert sigmoid(eps, s) in chi(eps, s)


@settings(max_examples=300, deadline=None)
@given(eps_st, eps_st, st.floats(-1, 1))
def test_chi_nests_in_eps(e1, e2, s):
    lo, hi = sorted((e1, e2))
    assert chi(lo, s).issubset(chi(hi, s))
    assert chi(0.0, s).issubset(chi(lo, s))


def test_interval_arithmetic():
    a = Interval(1.0, 2.0)
    assert a + Interval(-1.0, 0.5) == Interval(0.0, 2.5)
    assert -2.0 * a == Interval(-4.0, -2.0)
    assert a.clip(5.0) == 2.0
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)


intervals = st.tuples(st.floats(-10, 10), st.floats(0, 5)).map(lambda t: Interval(t[0], t[0] + t[1]))


@settings(max_examples=300, deadline=None)
@given(intervals, intervals, intervals)
def test_one_sided_distance_properties(A, B, C):
    # oracle: sup over endpoints of the distance to B (convexity makes this exact)
    to_b = lambda v: max(0.0, B.lo - v, v - B.hi)
    assert hausdorff(A, B) == pytest.approx(max(to_b(A.lo), to_b(A.hi)), abs=1e-12)
    assert (hausdorff(A, B) == 0) == A.issubset(B)
    assert hausdorff(A, C) <= hausdorff(A, B) + hausdorff(B, C) + 1e-12
    assert hausdorff_sym(A, B) == hausdorff_sym(B, A)


def test_box_distances():
    A = Box([0.0, 0.0], [1.0, 1.0])
    B = Box([0.0, -1.0], [2.0, 0.5])
    assert box_dist(A, B) == 0.5
    assert box_dist(B, A) == 1.0
    assert hausdorff_box(A, B) == 1.0
    assert A.contains([0.5, 1.0]) and not A.contains([0.5, 1.1])
    np.testing.assert_allclose(A.excess([2.0, -0.5]), [1.0, 0.5])


def test_cloud_distance_matches_pairwise(rng):
    geom = dict(gamma=G, window=1.0, step=0.25)
    P = [History(**geom, samples=rng.normal(size=(5, 2))) for _ in range(7)]
    Q = [History(**geom, samples=rng.normal(size=(5, 2))) for _ in range(5)]
    oracle = max(min(distance_gamma(p, q) for q in Q) for p in P)
    assert cloud_dist(P, Q, chunk=3) == pytest.approx(oracle, rel=1e-14)
    assert cloud_dist(P, P) == 0.0
    assert hausdorff_cloud(P, Q) == max(oracle, cloud_dist(Q, P))
    assert cloud_dist(P[:2], P) == 0.0


def reference_path(shift=0.0, H=4.0):
    t = -H + h * np.arange(int(round(H / h)) + 1)
    return Path(0.2 + 0.5 * np.sin(2.0 * t) + shift, h, G)


MU = DelayMeasure.exponential(1.0, 1.0) + DelayMeasure.atom(-1.0, 0.5)


def test_aumann_nests_in_eps():
    x = reference_path()
    grid = [0.2, 0.15, 0.1, 0.05, 0.01, 0.0]
    sets = [aumann_chi_integral(e, x, 0.2, MU) for e in grid]
    for big, small in zip(sets, sets[1:]):
        assert small.issubset(big, tol=1e-12)


def test_limit_in_eps_for_fixed_path():
    x = reference_path()
    for e0 in (0.0, 0.05):
        target = aumann_chi_integral(e0, x, 0.2, MU)
        d = [hausdorff(aumann_chi_integral(e0 + 0.1 / 2**m, x, 0.2, MU), target) for m in range(12)]
        assert all(b <= a + 1e-12 for a, b in zip(d, d[1:]))
        assert d[-1] < 1e-3


def test_limit_in_path_for_fixed_eps():
    eps = 0.1
    x = reference_path()
    target = aumann_chi_integral(eps, x, 0.2, MU)
    d = [hausdorff(aumann_chi_integral(eps, reference_path(2.0**-m), 0.2, MU), target) for m in range(1, 20)]
    assert d[-1] < 1e-4


def test_limit_at_a_threshold_touch_is_one_sided():
    # the limit path sits on the band edge at the atom; approximants lie strictly above
    eps, threshold = 0.1, 0.2
    mu = DelayMeasure.atom(-1.0)
    edge = threshold + b_of(eps)
    x = Path(np.full(41, edge), h, G)
    target = aumann_chi_integral(eps, x, threshold, mu)
    assert target == Interval(0.0, 1.0)
    for m in range(1, 30):
        xm = Path(np.full(41, edge + 2.0**-m), h, G)
        Am = aumann_chi_integral(eps, xm, threshold, mu)
        assert hausdorff(Am, target) == 0.0
        # the reverse excess stays at 1 - eps
        assert hausdorff_sym(Am, target) == pytest.approx(1.0 - eps)


def test_band_examples():
    assert b_of(0.2) == pytest.approx(0.2 * math.log(4.0), rel=1e-15)
    grid = np.linspace(0.0, 0.2, 1000)
    vals = [b_of(e) for e in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_chi_examples():
    assert chi(0.0, -1.0) == Interval(0.0, 0.0)
    assert chi(0.0, 0.0) == Interval(0.0, 1.0)
    assert chi(0.0, 1.0) == Interval(1.0, 1.0)
    assert b_of(0.1) == pytest.approx(0.21972, abs=1e-5)
    assert chi(0.1, -0.5) == Interval(0.0, 0.1)
    assert chi(0.1, 0.2) == Interval(0.0, 1.0)


def test_aumann_examples():
    x = Path(np.ones(21), h, G)
    I = aumann_chi_integral(0.1, x, 0.0, DelayMeasure.atom(-1.0))
    assert (I.lo, I.hi) == pytest.approx((0.9, 1.0))
    mu = DelayMeasure.atom(-1.0, 2.0) + DelayMeasure.atom(-0.5, 0.5)
    I = aumann_chi_integral(0.05, Path(np.full(21, 0.3), h, G), 0.3, mu)
    assert (I.lo, I.hi) == (0.0, 2.5)
    pm = Path([0.2 - 1.0, 0.2 + 1.0, 0.0], 1.0, G)
    I = aumann_chi_integral(0.0, pm, 0.2, DelayMeasure.atom(-1.0) + DelayMeasure.atom(-2.0))
    assert (I.lo, I.hi) == (1.0, 1.0)


def test_hausdorff_examples():
    assert hausdorff(Interval(0, 1), Interval(0, 1)) == 0.0
    A, B = Interval(0.0, 2.0), Interval(0.0, 1.0)
    assert hausdorff(A, B) == 1.0 and hausdorff(B, A) == 0.0
    # brute force over dense samples of A
    pts = np.linspace(A.lo, A.hi, 2001)
    assert np.max(np.maximum(0, np.maximum(B.lo - pts, pts - B.hi))) == pytest.approx(1.0)


def test_singleton_clouds(rng):
    geom = dict(gamma=G, window=1.0, step=0.25)
    u = History(**geom, samples=rng.normal(size=(5, 2)))
    v = History(**geom, samples=rng.normal(size=(5, 2)))
    assert cloud_dist([u], [v]) == distance_gamma(u, v)
    assert hausdorff_cloud([u], [v]) == distance_gamma(u, v)
