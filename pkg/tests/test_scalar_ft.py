import math

import numpy as np
import pytest

from ftoptics.errors import OutOfSpan, RangeNotOnGrid, ValueOffGrid
from ftoptics.piecewise import PiecewiseConstantFn, integral, l1_distance, total_variation
from ftoptics.scalar_ft import (
    affine_flux,
    lipschitz_time_bound,
    scalar_evolve,
    scalar_riemann,
)


def burgers(u):
    return 0.5 * u * u


def make_flux(nu, lo=-2.0, hi=2.0):
    return affine_flux(burgers, nu, (lo, hi))


# ---------------------------------------------------------------- AffineFlux

def test_affine_flux_nodes_and_interp():
    fl = make_flux(1)
    # node coincidence, bit exact
    for j in range(fl.j_min, fl.j_max + 1):
        assert fl(fl.value(j)) == burgers(fl.value(j))
    # midpoint of f(0)=0 and f(0.5)=0.125
    assert fl(0.25) == pytest.approx(0.0625, abs=0)
    # secant slope on [0, 0.5]
    assert fl.secant(0, 1) == pytest.approx(0.25, abs=0)


def test_affine_flux_range_errors():
    with pytest.raises(RangeNotOnGrid):
        affine_flux(burgers, 2, (-1.1, 1.0))
    with pytest.raises(ValueError):
        affine_flux(lambda u: -u * u, 2, (-1.0, 1.0))  # concave


# ------------------------------------------------------------ scalar_riemann

def test_riemann_shock():
    fl = make_flux(4)
    fan = scalar_riemann(1.0, 0.0, fl)
    assert len(fan) == 1
    assert fan[0].kind == "shock"
    assert fan[0].speed == pytest.approx(0.5)


def test_riemann_rarefaction_nu1():
    fl = make_flux(1)
    fan = scalar_riemann(0.0, 1.0, fl)
    assert [f.kind for f in fan] == ["rarefaction", "rarefaction"]
    assert [f.speed for f in fan] == pytest.approx([0.25, 0.75])
    # each front jumps exactly one grid cell
    for f in fan:
        assert f.right_value - f.left_value == pytest.approx(2.0**-1)


def test_riemann_trivial_and_off_grid():
    fl = make_flux(3)
    assert scalar_riemann(0.25, 0.25, fl) == []
    with pytest.raises(ValueOffGrid):
        scalar_riemann(0.3, 0.0, fl)


# -------------------------------------------------------------- scalar_evolve

def box(height=1.0):
    return PiecewiseConstantFn.indicator(0.0, 1.0, height)


def test_evolve_conservation():
    fl = make_flux(4)
    traj = scalar_evolve(box(), fl, 3.0)
    m = integral(traj.snapshot(3.0))[0]
    assert abs(m - 1.0) <= 1e-10 * 4.0


def test_first_interaction_point():
    # shock from x=1 at speed 1/2 meets the rarefaction head moving at 1 - h/2
    nu = 8
    h = 2.0**-nu
    fl = make_flux(nu)
    traj = scalar_evolve(box(), fl, 3.0)
    e = traj.events[0]
    t_exact = 2.0 / (1.0 - h)
    assert e.t == pytest.approx(t_exact, abs=1e-9)
    assert e.x == pytest.approx(1.0 + t_exact / 2.0, abs=1e-9)
    assert (e.t, e.x) == pytest.approx((2.0, 2.0), abs=0.02)


def test_shock_position_long_time():
    # exact Burgers: shock at sqrt(2 t) once the rarefaction is absorbed
    fl = make_flux(8)
    traj = scalar_evolve(box(), fl, 8.0)
    fronts = traj.fronts_at(8.0)
    assert fronts[-1].kind == "shock"
    assert fronts[-1].position == pytest.approx(math.sqrt(16.0), abs=0.05)


def test_tv_monotone_and_grid_closure():
    fl = make_flux(5)
    init = PiecewiseConstantFn(
        [0.0, 0.5, 1.0, 1.75], [[0.0], [0.5], [-0.25], [0.75], [0.0]]
    )
    traj = scalar_evolve(init, fl, 6.0)
    tvs = [tv for (_, tv) in traj.tv_series]
    assert all(b <= a + 1e-13 for a, b in zip(tvs, tvs[1:]))
    h = fl.h
    for t in np.linspace(0.0, 6.0, 13):
        vals = traj.snapshot(t).values[:, 0]
        assert np.all(vals / h == np.round(vals / h))
        assert traj.tv(t) <= traj.tv(0.0) + 1e-13
        assert np.max(np.abs(vals)) <= np.max(np.abs(init.values)) + 1e-13


def test_riemann_data_matches_fan_for_all_t():
    fl = make_flux(3)
    init = PiecewiseConstantFn([0.0], [[1.0], [-0.5]])
    traj = scalar_evolve(init, fl, 5.0)
    fan = scalar_riemann(1.0, -0.5, fl)
    for t in (0.5, 2.0, 5.0):
        snap = traj.snapshot(t)
        xs = [f.position + f.speed * t for f in fan]
        vals = [fan[0].left_value] + [f.right_value for f in fan]
        expect = PiecewiseConstantFn(xs, np.asarray(vals)[:, None])
        assert l1_distance(snap, expect) == 0.0


def test_finite_propagation():
    fl = make_flux(4)
    init = PiecewiseConstantFn([0.0, 1.0], [[0.25], [-0.5], [0.25]])
    traj = scalar_evolve(init, fl, 4.0)
    lam = fl.lipschitz()
    snap = traj.snapshot(4.0)
    a, b = -4.0 * lam - 1e-9, 1.0 + 4.0 * lam + 1e-9
    assert np.all((snap.breakpoints >= a) & (snap.breakpoints <= b))


def test_lipschitz_time_bound():
    fl = make_flux(6)
    traj = scalar_evolve(box(), fl, 2.0)
    assert lipschitz_time_bound(traj, 1.0, 1.0) == 0.0
    d = lipschitz_time_bound(traj, 0.0, 0.5)
    L = fl.lipschitz()
    assert d <= L * total_variation(box()) * 0.5 + 1e-12
    assert d <= 1.0 + 1e-9  # spec example: <= 1*2*0.5
    # constant data: no fronts at all
    traj2 = scalar_evolve(PiecewiseConstantFn.constant(0.5), fl, 2.0)
    assert lipschitz_time_bound(traj2, 0.3, 1.7) == 0.0


def test_out_of_span():
    fl = make_flux(3)
    traj = scalar_evolve(box(), fl, 1.0)
    with pytest.raises(OutOfSpan):
        traj.snapshot(1.5)
    with pytest.raises(OutOfSpan):
        lipschitz_time_bound(traj, 0.0, 2.0)


def test_merging_shocks():
    # two approaching shocks merge into one; events strictly reduce fronts
    fl = make_flux(3)
    init = PiecewiseConstantFn([0.0, 1.0], [[1.0], [0.0], [-1.0]])
    traj = scalar_evolve(init, fl, 10.0)
    assert traj.interaction_count == 1
    assert len(traj.fronts_at(10.0)) == 1
    assert traj.fronts_at(10.0)[0].speed == pytest.approx(0.0)
