"""Front tracking for 1D hyperbolic systems and weakly nonlinear geometric optics."""

from .piecewise import (
    PiecewiseConstantFn,
    l1_distance,
    quantize_to_grid,
    total_variation,
)

__version__ = "0.1.0"

__all__ = [
    "PiecewiseConstantFn",
    "l1_distance",
    "quantize_to_grid",
    "total_variation",
]
