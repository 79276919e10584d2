"""Exact piecewise-constant functions on the real line.

The class below is the universal state representation of the package: scalar
profiles, system snapshots, initial data and correction fields are all stored
as step functions with finitely many jumps.  All arithmetic on them (total
variation, L1 metrics, grid quantization, merged-grid combination) is exact
up to floating-point rounding; nothing is sampled.

Conventions: ``values[i]`` holds on ``[breakpoints[i-1], breakpoints[i])``
(right-continuous), with ``values[0]`` and ``values[-1]`` filling the two
unbounded end intervals.  Functions are immutable after construction and
always canonical: breakpoints strictly increasing, adjacent values distinct.
"""

from __future__ import annotations

import json
import math
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NonIntegrableDifference

__all__ = [
    "PiecewiseConstantFn",
    "total_variation",
    "l1_distance",
    "linf_distance",
    "quantize_to_grid",
    "combine",
    "integral",
    "support",
    "cell_averages",
]


class PiecewiseConstantFn:
    """A right-continuous step function R -> R^d with finitely many jumps.

    Parameters
    ----------
    breakpoints : array_like, shape (k,)
        Jump positions, sorted nondecreasing.  Repeated positions collapse
        (the zero-width interval between them is dropped).
    values : array_like, shape (k + 1, d) or (k + 1,)
        One value per interval, including the two unbounded end intervals.
        A 1-d array is promoted to column shape (d = 1).

    The constructor canonicalizes: zero-width intervals are removed and
    adjacent bit-identical values are merged, so ``PiecewiseConstantFn(f.breakpoints,
    f.values)`` reproduces ``f`` exactly.
    """

    __slots__ = ("breakpoints", "values")

    def __init__(self, breakpoints, values):
        xs = np.asarray(breakpoints, dtype=np.float64).reshape(-1)
        vals = np.asarray(values, dtype=np.float64)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2:
            raise ValueError("values must be a (k+1, d) array")
        if vals.shape[0] != xs.size + 1:
            raise ValueError(
                f"got {xs.size} breakpoints but {vals.shape[0]} values; need k+1 values"
            )
        if xs.size and not np.all(np.isfinite(xs)):
            raise ValueError("breakpoints must be finite")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        if xs.size > 1 and np.any(np.diff(xs) < 0):
            raise ValueError("breakpoints must be sorted")

        # Drop zero-width intervals (value i+1 lives on [xs[i], xs[i+1])).
        if xs.size > 1 and np.any(np.diff(xs) == 0):
            keep_val = np.ones(vals.shape[0], dtype=bool)
            keep_val[1:-1] = np.diff(xs) > 0
            xs = np.unique(xs)
            vals = vals[keep_val]
        # Merge adjacent equal values (bit-exact only).
        if xs.size:
            differs = np.any(vals[1:] != vals[:-1], axis=1)
            if not np.all(differs):
                xs = xs[differs]
                keep_val = np.ones(vals.shape[0], dtype=bool)
                keep_val[1:] = differs
                vals = vals[keep_val]

        xs.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "breakpoints", xs)
        object.__setattr__(self, "values", vals)

    # -- basic protocol -------------------------------------------------

    def __setattr__(self, name, value):
        raise AttributeError("PiecewiseConstantFn is immutable")

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __call__(self, x):
        """Evaluate at x (scalar or array); returns shape (..., d)."""
        idx = np.searchsorted(self.breakpoints, x, side="right")
        return self.values[idx]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PiecewiseConstantFn):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self):
        return hash((self.breakpoints.tobytes(), self.values.tobytes()))

    def __repr__(self) -> str:
        return (
            f"PiecewiseConstantFn(dim={self.dim}, jumps={self.breakpoints.size}, "
            f"tv={total_variation(self):.6g})"
        )

    # -- convenience ----------------------------------------------------

    def shift(self, dx: float) -> "PiecewiseConstantFn":
        """Translate: returns x -> f(x - dx)."""
        return PiecewiseConstantFn(self.breakpoints + dx, self.values)

    def end_values(self):
        """(value at -inf, value at +inf)."""
        return self.values[0], self.values[-1]

    @staticmethod
    def constant(value, dim: int | None = None) -> "PiecewiseConstantFn":
        v = np.atleast_1d(np.asarray(value, dtype=np.float64))
        if dim is not None and v.size != dim:
            raise ValueError("constant value has wrong dimension")
        return PiecewiseConstantFn(np.empty(0), v[None, :])

    @staticmethod
    def indicator(a: float, b: float, height=1.0) -> "PiecewiseConstantFn":
        """height * 1_{[a, b)} (vector heights allowed)."""
        h = np.atleast_1d(np.asarray(height, dtype=np.float64))
        zero = np.zeros_like(h)
        return PiecewiseConstantFn([a, b], np.stack([zero, h, zero]))

    @staticmethod
    def from_steps(breakpoints, values) -> "PiecewiseConstantFn":
        return PiecewiseConstantFn(breakpoints, values)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "breakpoints": self.breakpoints.tolist(),
            "values": self.values.tolist(),
        }

    @staticmethod
    def from_json(obj: dict | str) -> "PiecewiseConstantFn":
        if isinstance(obj, str):
            obj = json.loads(obj)
        f = PiecewiseConstantFn(obj["breakpoints"], obj["values"])
        if "dim" in obj and int(obj["dim"]) != f.dim:
            raise ValueError(f"declared dim {obj['dim']} != actual {f.dim}")
        return f


def total_variation(f: PiecewiseConstantFn) -> float:
    """Sum of 1-norms of consecutive value jumps; 0 iff f is constant."""
    if f.breakpoints.size == 0:
        return 0.0
    return float(np.sum(np.abs(np.diff(f.values, axis=0))))


def _merged_grid(fns: Sequence[PiecewiseConstantFn]) -> np.ndarray:
    arrays = [f.breakpoints for f in fns if f.breakpoints.size]
    if not arrays:
        return np.empty(0)
    return np.unique(np.concatenate(arrays))


def _values_on_grid(f: PiecewiseConstantFn, grid: np.ndarray) -> np.ndarray:
    """Values of f on the k+1 intervals cut by a superset grid of breakpoints."""
    if grid.size == 0:
        return f.values
    idx = np.empty(grid.size + 1, dtype=np.intp)
    idx[0] = 0
    # interval i+1 is [grid[i], grid[i+1]): sample just right of grid[i]
    idx[1:] = np.searchsorted(f.breakpoints, grid, side="right")
    return f.values[idx]


def l1_distance(
    f: PiecewiseConstantFn,
    g: PiecewiseConstantFn,
    window: tuple[float, float] | None = None,
) -> float:
    """Exact integral of |f - g|_1, over a window or over the whole line.

    Without a window the difference must have compact support (both end
    values agree), otherwise :class:`NonIntegrableDifference` is raised.
    """
    if f.dim != g.dim:
        raise ValueError("dimension mismatch")
    if window is None:
        lo_f, hi_f = f.end_values()
        lo_g, hi_g = g.end_values()
        if not (np.array_equal(lo_f, lo_g) and np.array_equal(hi_f, hi_g)):
            raise NonIntegrableDifference(
                "end values differ; pass an explicit window to integrate over"
            )
    grid = _merged_grid((f, g))
    if window is not None:
        a, b = float(window[0]), float(window[1])
        if not b > a:
            return 0.0
        grid = np.concatenate(([a], grid[(grid > a) & (grid < b)], [b]))
    elif grid.size < 2:
        return 0.0
    vf = _values_on_grid(f, grid)
    vg = _values_on_grid(g, grid)
    diffs = np.sum(np.abs(vf - vg), axis=1)
    widths = np.diff(grid)
    # end intervals are unbounded: difference there is zero (checked above)
    return float(np.dot(widths, diffs[1:-1]))


def linf_distance(f: PiecewiseConstantFn, g: PiecewiseConstantFn) -> float:
    """sup over x of |f(x) - g(x)|_1 (helper; the main metric is L1)."""
    if f.dim != g.dim:
        raise ValueError("dimension mismatch")
    grid = _merged_grid((f, g))
    vf = _values_on_grid(f, grid)
    vg = _values_on_grid(g, grid)
    return float(np.max(np.sum(np.abs(vf - vg), axis=1)))


def quantize_to_grid(f: PiecewiseConstantFn, nu: int) -> PiecewiseConstantFn:
    """Round each value to the nearest multiple of 2**-nu (ties away from zero)."""
    if f.dim != 1:
        raise ValueError("quantize_to_grid is defined for scalar functions")
    if nu < 1:
        raise ValueError("nu must be a positive integer")
    h = math.ldexp(1.0, -nu)
    v = f.values
    q = np.copysign(np.floor(np.abs(v) / h + 0.5), v) * h
    return PiecewiseConstantFn(f.breakpoints, q)


def combine(
    fns: Sequence[PiecewiseConstantFn],
    builder: Callable[..., np.ndarray],
) -> PiecewiseConstantFn:
    """Combine several step functions on their merged breakpoint set.

    ``builder`` receives one (k+1, d_i) value matrix per input function and
    must return the combined (k+1, d_out) matrix; it is called once.
    """
    grid = _merged_grid(fns)
    mats = [_values_on_grid(f, grid) for f in fns]
    out = np.asarray(builder(*mats), dtype=np.float64)
    return PiecewiseConstantFn(grid, out)


def integral(
    f: PiecewiseConstantFn, window: tuple[float, float] | None = None
) -> np.ndarray:
    """Exact integral of f (vector valued) over a window.

    Without a window, integrates f minus its end-value constant, which must
    be the same at both ends (compact-support deviation).
    """
    grid = f.breakpoints
    if window is None:
        lo, hi = f.end_values()
        if not np.array_equal(lo, hi):
            raise NonIntegrableDifference("end values differ")
        if grid.size < 2:
            return np.zeros(f.dim)
        widths = np.diff(grid)
        return (f.values[1:-1] - lo[None, :]).T @ widths
    a, b = float(window[0]), float(window[1])
    pts = np.concatenate(([a], grid[(grid > a) & (grid < b)], [b]))
    vals = _values_on_grid(f, pts)[1:-1]
    return vals.T @ np.diff(pts)


def support(f: PiecewiseConstantFn) -> tuple[float, float] | None:
    """Smallest [a, b] outside which f equals its (common) end value.

    Returns None for a constant function.  Raises if the end values differ
    (no compact deviation).
    """
    lo, hi = f.end_values()
    if not np.array_equal(lo, hi):
        raise NonIntegrableDifference("function does not settle to one constant")
    if f.breakpoints.size == 0:
        return None
    dev = np.any(f.values != lo[None, :], axis=1)
    if not np.any(dev):
        return None
    idx = np.nonzero(dev)[0]
    # value i deviates on [x_{i-1}, x_i)
    a = f.breakpoints[idx[0] - 1]
    b = f.breakpoints[min(idx[-1], f.breakpoints.size - 1)]
    return float(a), float(b)


def cell_averages(f: PiecewiseConstantFn, edges: np.ndarray) -> np.ndarray:
    """Exact averages of f over the cells of an edge array, shape (m-1, d)."""
    edges = np.asarray(edges, dtype=np.float64)
    inner = f.breakpoints
    out = np.empty((edges.size - 1, f.dim))
    cuts = np.concatenate((edges, inner[(inner > edges[0]) & (inner < edges[-1])]))
    cuts = np.unique(cuts)
    vals = _values_on_grid(f, cuts)[1:-1]
    widths = np.diff(cuts)
    cell_of = np.searchsorted(edges, cuts[:-1], side="right") - 1
    for i in range(edges.size - 1):
        m = cell_of == i
        out[i] = (vals[m].T @ widths[m]) / (edges[i + 1] - edges[i])
    return out
