"""Exact Riemann solver for small-amplitude data via Lax wave curves.

The wave map ``psi`` composes, family by family in ascending order, the
rarefaction integral curve (positive strengths of genuinely nonlinear
families), the Hugoniot locus (negative strengths), and the integral surface
of a constant-multiplicity group (contacts, any sign).  Genuinely nonlinear
curves are parameterized so the family eigenvalue grows exactly linearly in
the strength, which joins the shock and rarefaction branches with
second-order contact at zero.

All kernels are batched: states have shape (N, n) and strengths (N,) or
(N, n); single Riemann problems run through the same code with N = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CurveRadiusExceeded,
    NewtonDivergence,
    OutsideSmallAmplitude,
    XiOutsideFan,
)
from .models import SystemModel

__all__ = [
    "RiemannParams",
    "Wave",
    "WaveFan",
    "lax_curve_point",
    "group_curve_point",
    "riemann_solve",
    "strength_decompose",
    "strength_decompose_batch",
    "rarefaction_sample",
    "fan_state_batch",
]


@dataclass(frozen=True)
class RiemannParams:
    """Tolerances and radii of the wave-curve machinery."""

    delta: float = 0.05          # small-amplitude radius, state 1-norm
    curve_radius: float = 0.25   # largest |beta| a single curve accepts
    newton_tol: float = 1e-11    # residual 1-norm of the outer decomposition
    newton_maxiter: int = 50
    fd_step: float = 1e-7        # forward-difference step, scaled by 1+|beta|
    curve_step: float = 0.0125   # target RK4 parameter step
    max_curve_steps: int = 32
    hugoniot_tol: float = 1e-13
    hugoniot_maxiter: int = 40
    wave_drop_tol: float = 1e-10  # strengths below this are decomposition noise


DEFAULT_PARAMS = RiemannParams()


# ---------------------------------------------------------------------------
# batched curve kernels


def _integral_curve(model, U, j, beta, params) -> np.ndarray:
    """RK4 integration of U' = r_j(U) over parameter length beta (batched)."""
    bmax = float(np.max(np.abs(beta))) if beta.size else 0.0
    if bmax == 0.0:
        return U.copy()
    steps = min(params.max_curve_steps, max(1, math.ceil(bmax / params.curve_step)))
    db = (beta / steps)[:, None]
    V = U
    for _ in range(steps):
        k1 = model.r(V, j)
        k2 = model.r(V + 0.5 * db * k1, j)
        k3 = model.r(V + 0.5 * db * k2, j)
        k4 = model.r(V + db * k3, j)
        V = V + db / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return V


def _grad_lambda(model, U, j) -> np.ndarray:
    """Gradient of lambda_j by coordinate central differences (batched)."""
    N, n = U.shape
    g = np.empty((N, n))
    for i in range(n):
        h = 1e-6 * (1.0 + np.abs(U[:, i]))
        e = np.zeros((N, n))
        e[:, i] = h
        g[:, i] = (
            model.eigenvalues(U + e)[:, j] - model.eigenvalues(U - e)[:, j]
        ) / (2.0 * h)
    return g


def _hugoniot(model, U, j, beta, params):
    """Hugoniot point of family j at parameter beta (batched Newton).

    Solves the n Rankine-Hugoniot equations plus the parameterization
    constraint lambda_j(V) - lambda_j(U) = beta; returns (V, shock speed).
    """
    N, n = U.shape
    FU = model.flux(U)
    lamU = model.eigenvalues(U)[:, j]
    glam = _grad_lambda(model, U, j)

    V = U + beta[:, None] * model.r(U, j)
    s = lamU + 0.5 * beta
    scale = 1.0 + np.max(np.abs(FU))
    eye = np.eye(n)
    for _ in range(params.hugoniot_maxiter):
        FV = model.flux(V)
        res_rh = FV - FU - s[:, None] * (V - U)
        res_lam = model.eigenvalues(V)[:, j] - lamU - beta
        err = max(float(np.max(np.abs(res_rh))), float(np.max(np.abs(res_lam))))
        if err <= params.hugoniot_tol * scale:
            break
        J = np.zeros((N, n + 1, n + 1))
        J[:, :n, :n] = model.jacobian(V) - s[:, None, None] * eye
        J[:, :n, n] = -(V - U)
        J[:, n, :n] = glam
        rhs = np.concatenate([-res_rh, -res_lam[:, None]], axis=1)
        step = np.linalg.solve(J, rhs[:, :, None])[:, :, 0]
        V = V + step[:, :n]
        s = s + step[:, n]
    else:
        raise NewtonDivergence(f"Hugoniot solve stalled at residual {err:.3e}")
    return V, s


def _psi(model, U0, betas, params) -> np.ndarray:
    """Composite wave map: apply every slot's curve in ascending family order."""
    V = U0
    for group in model.groups:
        if len(group) == 1 and model.classification[group[0]] == "gnl":
            j = group[0]
            b = betas[:, j]
            neg = b < 0.0
            if np.any(neg):
                out = np.empty_like(V)
                if np.any(~neg):
                    out[~neg] = _integral_curve(
                        model, V[~neg], j, b[~neg], params
                    )
                out[neg], _ = _hugoniot(model, V[neg], j, b[neg], params)
                V = out
            else:
                V = _integral_curve(model, V, j, b, params)
        else:
            for j in group:
                V = _integral_curve(model, V, j, betas[:, j], params)
    return V


# ---------------------------------------------------------------------------
# strength decomposition (inverse wave map)


def strength_decompose_batch(
    model: SystemModel,
    U_minus: np.ndarray,
    U_plus: np.ndarray,
    params: RiemannParams = DEFAULT_PARAMS,
) -> np.ndarray:
    """Newton inversion of the wave map for a batch of state pairs."""
    UL = np.atleast_2d(np.asarray(U_minus, dtype=np.float64))
    UR = np.atleast_2d(np.asarray(U_plus, dtype=np.float64))
    N, n = UL.shape
    gap = np.max(np.sum(np.abs(UR - UL), axis=1))
    if gap > params.delta:
        raise OutsideSmallAmplitude(
            f"|U+ - U-|_1 = {gap:.3g} exceeds small-amplitude radius {params.delta}"
        )
    L = model.left_eigenvectors(UL)
    betas = np.einsum("sij,sj->si", L, UR - UL)

    tiled = np.tile(UL, (n + 1, 1))
    for _ in range(params.newton_maxiter):
        steps = params.fd_step * (1.0 + np.abs(betas))
        stack = [betas]
        for k in range(n):
            bk = betas.copy()
            bk[:, k] += steps[:, k]
            stack.append(bk)
        out = _psi(model, tiled, np.concatenate(stack, axis=0), params)
        res = out[:N] - UR
        if float(np.max(np.sum(np.abs(res), axis=1))) <= params.newton_tol:
            return betas
        J = np.empty((N, n, n))
        for k in range(n):
            J[:, :, k] = (out[N * (k + 1) : N * (k + 2)] - out[:N]) / steps[:, k, None]
        try:
            betas = betas + np.linalg.solve(J, -res[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError as exc:
            raise NewtonDivergence(f"singular wave-map Jacobian: {exc}") from exc
    raise NewtonDivergence("strength decomposition did not converge")


def strength_decompose(
    model: SystemModel,
    U_minus: np.ndarray,
    U_plus: np.ndarray,
    params: RiemannParams = DEFAULT_PARAMS,
) -> np.ndarray:
    """Wave strengths beta_1..beta_n connecting two nearby states."""
    return strength_decompose_batch(
        model, np.asarray(U_minus)[None, :], np.asarray(U_plus)[None, :], params
    )[0]


# ---------------------------------------------------------------------------
# public curve evaluation


def lax_curve_point(
    model: SystemModel,
    U: np.ndarray,
    family: int,
    beta: float,
    params: RiemannParams = DEFAULT_PARAMS,
) -> np.ndarray:
    """Point at parameter beta on the family's wave curve through U.

    Genuinely nonlinear families follow the rarefaction integral curve for
    beta >= 0 and the Hugoniot locus for beta < 0; linearly degenerate
    families follow the integral curve for either sign.
    """
    if abs(beta) > params.curve_radius:
        raise CurveRadiusExceeded(f"|beta| = {abs(beta)} > {params.curve_radius}")
    U = np.asarray(U, dtype=np.float64)[None, :]
    b = np.array([float(beta)])
    if model.classification[family] == "gnl" and beta < 0.0:
        V, _ = _hugoniot(model, U, family, b, params)
    else:
        V = _integral_curve(model, U, family, b, params)
    return V[0]


def group_curve_point(
    model: SystemModel,
    U: np.ndarray,
    group: tuple[int, ...],
    betas,
    params: RiemannParams = DEFAULT_PARAMS,
) -> np.ndarray:
    """Composite contact map of a multiplicity group (fixed ascending order)."""
    V = np.asarray(U, dtype=np.float64)[None, :]
    for j, b in zip(group, betas):
        if abs(b) > params.curve_radius:
            raise CurveRadiusExceeded(f"|beta| = {abs(b)} > {params.curve_radius}")
        V = _integral_curve(model, V, j, np.array([float(b)]), params)
    return V[0]


# ---------------------------------------------------------------------------
# wave fans


@dataclass(frozen=True)
class Wave:
    """One elementary wave of a Riemann fan."""

    families: tuple[int, ...]
    kind: str                      # "shock" | "rarefaction" | "contact"
    beta: tuple[float, ...]
    left_state: np.ndarray
    right_state: np.ndarray
    speed: float | None = None           # shock / contact
    lam_left: float | None = None        # rarefaction edges
    lam_right: float | None = None

    @property
    def strength(self) -> float:
        return float(sum(abs(b) for b in self.beta))

    def speed_range(self) -> tuple[float, float]:
        if self.kind == "rarefaction":
            return self.lam_left, self.lam_right
        return self.speed, self.speed


@dataclass(frozen=True)
class WaveFan:
    """Ordered solution of a Riemann problem: states and elementary waves."""

    model: SystemModel
    left: np.ndarray
    right: np.ndarray
    betas: np.ndarray
    waves: tuple[Wave, ...]
    residual: float
    params: RiemannParams = DEFAULT_PARAMS

    def sample(self, xi: float) -> np.ndarray:
        """Self-similar state at x/t = xi."""
        state = self.left
        for w in self.waves:
            if w.kind == "rarefaction":
                if xi <= w.lam_left:
                    return state
                if xi < w.lam_right:
                    return rarefaction_sample(self, w.families[0], xi)
                state = w.right_state
            else:
                if xi < w.speed:
                    return state
                state = w.right_state
        return state


def riemann_solve(
    model: SystemModel,
    U_minus,
    U_plus,
    params: RiemannParams = DEFAULT_PARAMS,
) -> WaveFan:
    """Unique small-amplitude wave fan connecting two nearby states."""
    UL = np.asarray(U_minus, dtype=np.float64)
    UR = np.asarray(U_plus, dtype=np.float64)
    model.require_admissible(UL)
    model.require_admissible(UR)
    betas = strength_decompose(model, UL, UR, params)

    waves: list[Wave] = []
    left = UL
    for group in model.groups:
        b = betas[list(group)]
        if np.sum(np.abs(b)) <= params.wave_drop_tol:
            continue
        if len(group) == 1 and model.classification[group[0]] == "gnl":
            j = group[0]
            beta = float(b[0])
            if beta < 0.0:
                V, s = _hugoniot(
                    model, left[None, :], j, np.array([beta]), params
                )
                waves.append(
                    Wave((j,), "shock", (beta,), left, V[0], speed=float(s[0]))
                )
                left = V[0]
            else:
                V = _integral_curve(model, left[None, :], j, np.array([beta]), params)[0]
                waves.append(
                    Wave(
                        (j,),
                        "rarefaction",
                        (beta,),
                        left,
                        V,
                        lam_left=float(model.eigenvalues(left)[j]),
                        lam_right=float(model.eigenvalues(V)[j]),
                    )
                )
                left = V
        else:
            V = left[None, :]
            for j in group:
                V = _integral_curve(model, V, j, np.array([float(betas[j])]), params)
            V = V[0]
            waves.append(
                Wave(
                    tuple(group),
                    "contact",
                    tuple(float(betas[j]) for j in group),
                    left,
                    V,
                    speed=float(model.eigenvalues(left)[group[0]]),
                )
            )
            left = V

    residual = float(np.sum(np.abs(left - UR)))
    return WaveFan(model, UL, UR, betas, tuple(waves), residual, params)


def rarefaction_sample(fan: WaveFan, family: int, xi: float) -> np.ndarray:
    """State inside a rarefaction wave where lambda_family equals xi."""
    wave = next(
        (w for w in fan.waves if w.kind == "rarefaction" and w.families[0] == family),
        None,
    )
    if wave is None:
        raise XiOutsideFan(f"no rarefaction of family {family} in this fan")
    tol = 1e-9 * (1.0 + abs(xi))
    if not (wave.lam_left - tol <= xi <= wave.lam_right + tol):
        raise XiOutsideFan(
            f"xi={xi} outside [{wave.lam_left}, {wave.lam_right}] of family {family}"
        )
    # lambda grows exactly linearly in the curve parameter, so Newton with
    # unit slope converges in a couple of steps
    beta = min(max(xi - wave.lam_left, 0.0), wave.beta[0])
    params = fan.params
    for _ in range(8):
        V = _integral_curve(
            model=fan.model,
            U=wave.left_state[None, :],
            j=family,
            beta=np.array([beta]),
            params=params,
        )
        err = float(fan.model.eigenvalues(V[0])[family] - xi)
        if abs(err) <= 1e-12:
            break
        beta -= err
        beta = min(max(beta, 0.0), wave.beta[0])
    return V[0]


# ---------------------------------------------------------------------------
# batched fan evaluation (Godunov interface states)


def fan_state_batch(
    model: SystemModel,
    U_minus: np.ndarray,
    U_plus: np.ndarray,
    xi: float = 0.0,
    params: RiemannParams = DEFAULT_PARAMS,
) -> np.ndarray:
    """States at x/t = xi of the fans of many Riemann problems at once."""
    UL = np.asarray(U_minus, dtype=np.float64)
    UR = np.asarray(U_plus, dtype=np.float64)
    N, n = UL.shape
    betas = strength_decompose_batch(model, UL, UR, params)

    state = UL.copy()
    done = np.zeros(N, dtype=bool)
    left = UL.copy()
    for group in model.groups:
        if len(group) == 1 and model.classification[group[0]] == "gnl":
            j = group[0]
            b = betas[:, j]
            V = np.empty_like(left)
            cross = np.zeros(N, dtype=bool)
            neg = b < 0.0
            if np.any(neg):
                Vn, s = _hugoniot(model, left[neg], j, b[neg], params)
                V[neg] = Vn
                cross[neg] = xi >= s
            pos = ~neg
            if np.any(pos):
                Vp = _integral_curve(model, left[pos], j, b[pos], params)
                V[pos] = Vp
                lamL = model.eigenvalues(left[pos])[:, j]
                lamR = model.eigenvalues(Vp)[:, j]
                crossed = xi >= lamR
                inside = (~crossed) & (xi > lamL)
                cross[pos] = crossed
                if np.any(inside):
                    rows = np.where(pos)[0][inside]
                    bstar = np.clip(xi - lamL[inside], 0.0, b[rows])
                    mid = _integral_curve(model, left[rows], j, bstar, params)
                    upd = rows[~done[rows]]
                    state[upd] = mid[~done[rows]]
                    done[rows] = True
        else:
            V = left
            for j in group:
                V = _integral_curve(model, V, j, betas[:, j], params)
            lam = model.eigenvalues(left)[:, group[0]]
            cross = xi >= lam
        move = cross & ~done
        state[move] = V[move]
        left = np.where(cross[:, None], V, left)
    return state
