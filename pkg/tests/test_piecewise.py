import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftoptics.errors import NonIntegrableDifference
from ftoptics.piecewise import (
    PiecewiseConstantFn,
    cell_averages,
    combine,
    integral,
    l1_distance,
    linf_distance,
    quantize_to_grid,
    support,
    total_variation,
)


def test_total_variation_indicator():
    f = PiecewiseConstantFn.indicator(0.0, 1.0, height=0.7)
    assert total_variation(f) == pytest.approx(1.4)
    f = PiecewiseConstantFn.indicator(0.0, 1.0, height=-0.7)
    assert total_variation(f) == pytest.approx(1.4)


def test_total_variation_constant_and_staircase():
    assert total_variation(PiecewiseConstantFn.constant(3.0)) == 0.0
    stair = PiecewiseConstantFn([0.0, 1.0], [[0.0], [0.25], [0.5]])
    assert total_variation(stair) == pytest.approx(0.5)


def test_l1_distance_identity_and_boxes():
    f = PiecewiseConstantFn.indicator(0.0, 1.0)
    g = PiecewiseConstantFn.indicator(0.5, 1.5)
    assert l1_distance(f, f) == 0.0
    assert l1_distance(f, PiecewiseConstantFn.constant(0.0)) == pytest.approx(1.0)
    assert l1_distance(f, g) == pytest.approx(1.0)  # symmetric difference


def test_l1_distance_window_and_error():
    f = PiecewiseConstantFn([0.0], [[0.0], [1.0]])  # step up, not integrable
    g = PiecewiseConstantFn.constant(0.0)
    with pytest.raises(NonIntegrableDifference):
        l1_distance(f, g)
    assert l1_distance(f, g, window=(-1.0, 2.0)) == pytest.approx(2.0)


def test_quantize_examples():
    f = PiecewiseConstantFn.constant(0.3)
    assert quantize_to_grid(f, 2).values[0, 0] == pytest.approx(0.25)
    # tie rounds away from zero
    f = PiecewiseConstantFn.constant(0.125)
    assert quantize_to_grid(f, 2).values[0, 0] == pytest.approx(0.25)
    f = PiecewiseConstantFn.constant(-0.125)
    assert quantize_to_grid(f, 2).values[0, 0] == pytest.approx(-0.25)
    # grid points are fixed exactly
    for j in (-5, -1, 0, 3, 17):
        f = PiecewiseConstantFn.constant(j * 2.0**-4)
        assert quantize_to_grid(f, 4).values[0, 0] == j * 2.0**-4


def test_canonicalization_merges_and_drops():
    # redundant breakpoint: equal adjacent values merged bit-exactly
    f = PiecewiseConstantFn([0.0, 1.0], [[2.0], [2.0], [3.0]])
    assert f.breakpoints.tolist() == [1.0]
    # zero-width interval dropped
    g = PiecewiseConstantFn([0.0, 0.0, 1.0], [[0.0], [5.0], [1.0], [0.0]])
    assert g.breakpoints.tolist() == [0.0, 1.0]
    assert g.values[:, 0].tolist() == [0.0, 1.0, 0.0]
    # idempotent, bit-exact
    h = PiecewiseConstantFn(g.breakpoints, g.values)
    assert h == g


def test_immutability_and_eval():
    f = PiecewiseConstantFn.indicator(0.0, 1.0)
    with pytest.raises(AttributeError):
        f.breakpoints = np.array([])
    with pytest.raises(ValueError):
        f.values[0] = 9.0
    # right-continuity
    assert f(0.0)[0] == 1.0
    assert f(1.0)[0] == 0.0
    assert f(-1e-12)[0] == 0.0
    np.testing.assert_array_equal(f(np.array([-1.0, 0.5, 2.0]))[:, 0], [0.0, 1.0, 0.0])


def test_validation_errors():
    with pytest.raises(ValueError):
        PiecewiseConstantFn([0.0, -1.0], [[0.0], [1.0], [0.0]])
    with pytest.raises(ValueError):
        PiecewiseConstantFn([0.0], [[np.nan], [1.0]])
    with pytest.raises(ValueError):
        PiecewiseConstantFn([np.inf], [[0.0], [1.0]])
    with pytest.raises(ValueError):
        PiecewiseConstantFn([0.0], [[1.0]])


def test_json_round_trip():
    f = PiecewiseConstantFn([0.0, 0.5], [[0.0, 1.0], [2.0, -1.0], [0.0, 1.0]])
    blob = json.dumps(f.to_json())
    g = PiecewiseConstantFn.from_json(blob)
    assert g == f
    assert g.dim == 2


def test_combine_and_shift():
    f = PiecewiseConstantFn.indicator(0.0, 1.0)
    g = PiecewiseConstantFn.indicator(0.5, 2.0)
    s = combine([f, g], lambda a, b: a + 2.0 * b)
    assert s(0.25)[0] == 1.0
    assert s(0.75)[0] == 3.0
    assert s(1.5)[0] == 2.0
    assert f.shift(3.0)(3.5)[0] == 1.0


def test_integral_and_support():
    f = PiecewiseConstantFn([0.0, 2.0], [[1.0], [4.0], [1.0]])
    np.testing.assert_allclose(integral(f), [6.0])  # deviation (4-1)*2
    np.testing.assert_allclose(integral(f, window=(0.0, 1.0)), [4.0])
    assert support(f) == (0.0, 2.0)
    assert support(PiecewiseConstantFn.constant(5.0)) is None


def test_cell_averages_exact():
    f = PiecewiseConstantFn([0.25], [[1.0], [3.0]])
    edges = np.array([0.0, 0.5, 1.0])
    avg = cell_averages(f, edges)
    np.testing.assert_allclose(avg[:, 0], [2.0, 3.0])


# hypothesis generators restricted to dyadic rationals so that every product
# and partial sum below is exactly representable: the invariants then hold
# with zero tolerance, as stated.
dyadic = st.integers(min_value=-256, max_value=256).map(lambda k: k / 64.0)


def _fn(xs, vs):
    return PiecewiseConstantFn(sorted(xs), [[v] for v in vs])


pcf = st.tuples(
    st.lists(dyadic, min_size=0, max_size=6, unique=True),
    st.lists(dyadic, min_size=7, max_size=7),
).map(lambda t: _fn(t[0], t[1][: len(t[0]) + 1]))


@settings(max_examples=200, deadline=None)
@given(pcf, pcf, pcf)
def test_triangle_inequality_exact(f, g, h):
    w = (-8.0, 8.0)
    assert l1_distance(f, h, w) <= l1_distance(f, g, w) + l1_distance(g, h, w)


@settings(max_examples=200, deadline=None)
@given(pcf, st.integers(min_value=1, max_value=6))
def test_quantize_bounds(f, nu):
    q = quantize_to_grid(f, nu)
    jumps = f.breakpoints.size
    assert total_variation(q) <= total_variation(f) + 2.0 ** (1 - nu) * jumps + 1e-15
    assert linf_distance(q, f) <= 2.0 ** (-nu - 1)
    # values land on the grid exactly
    h = math.ldexp(1.0, -nu)
    assert np.all(q.values / h == np.round(q.values / h))


@settings(max_examples=200, deadline=None)
@given(pcf)
def test_canonical_idempotent(f):
    g = PiecewiseConstantFn(f.breakpoints, f.values)
    assert g.breakpoints.tobytes() == f.breakpoints.tobytes()
    assert g.values.tobytes() == f.values.tobytes()
