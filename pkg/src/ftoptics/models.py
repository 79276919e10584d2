"""Built-in n x n conservation-law models with closed-form eigensystems.

Every model exposes flux, Jacobian, eigenvalues and eigenvectors as explicit
formulas evaluated with numpy broadcasting over a leading batch axis; no
generic numeric eigensolver is involved, so repeated eigenvalues stay exact
and eigenvectors vary smoothly over the admissible region.

Eigenvector scaling: genuinely nonlinear (gnl) fields are normalized so the
directional derivative of the eigenvalue along the eigenvector equals one;
linearly degenerate (ld) fields carry unit Euclidean norm with the first
nonzero component positive.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InadmissibleState, NoAdmissibleSamples

__all__ = [
    "SystemModel",
    "Burgers",
    "PSystem",
    "Euler1D",
    "SteadyEuler2D",
    "MODELS",
    "make_model",
    "eigen_decompose",
    "model_lint",
    "LintReport",
    "directional_r_derivative",
    "b_coefficient",
]


class SystemModel:
    """Common interface of the built-in models.

    Attributes
    ----------
    n : state dimension.
    classification : tuple of "gnl" / "ld", one entry per characteristic family.
    groups : tuple of tuples of family indices; families sharing a group share
        one eigenvalue (constant multiplicity), singleton groups are strict.
    background : default constant state U0 used by the expansion machinery.
    """

    name: str = "?"
    n: int = 0
    classification: tuple[str, ...] = ()
    groups: tuple[tuple[int, ...], ...] = ()

    def flux(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def eigenvalues(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def r(self, U: np.ndarray, j: int) -> np.ndarray:
        """Right eigenvector of family j at U, batched over leading axes."""
        raise NotImplementedError

    def admissible(self, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample_states(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Pseudo-random admissible states from the model's sampling box."""
        raise NotImplementedError

    # -- derived, shared --------------------------------------------------

    def right_eigenvectors(self, U: np.ndarray) -> np.ndarray:
        """Matrix with columns r_1 .. r_n, shape (..., n, n)."""
        cols = [self.r(U, j) for j in range(self.n)]
        return np.stack(cols, axis=-1)

    def left_eigenvectors(self, U: np.ndarray) -> np.ndarray:
        """Rows l_1 .. l_n, biorthonormal to the right set (exact inverse)."""
        return np.linalg.inv(self.right_eigenvectors(U))

    def require_admissible(self, U: np.ndarray) -> None:
        ok = self.admissible(U)
        if not np.all(ok):
            raise InadmissibleState(f"state outside admissible region of {self.name}")

    def group_of(self, family: int) -> tuple[int, ...]:
        for g in self.groups:
            if family in g:
                return g
        raise ValueError(f"no family {family}")

    @property
    def wave_slots(self) -> tuple[tuple[int, ...], ...]:
        """Alias: one slot per elementary wave of a Riemann fan (n-p+1 slots)."""
        return self.groups

    def speed_bound(self) -> float:
        """Upper bound for |lambda| over the sampling box (cached)."""
        cached = getattr(self, "_speed_bound", None)
        if cached is None:
            rng = np.random.default_rng(12345)
            states = self.sample_states(rng, 512)
            lam = self.eigenvalues(states)
            cached = float(np.max(np.abs(lam)) * 1.05)
            self._speed_bound = cached
        return cached


# ---------------------------------------------------------------------------
# Burgers, n = 1


class Burgers(SystemModel):
    """u_t + (u^2/2)_x = 0 wrapped as a 1x1 system (single gnl family)."""

    name = "burgers"
    n = 1
    classification = ("gnl",)
    groups = ((0,),)

    def __init__(self):
        self.background = np.array([0.0])
        self.eps_gap = np.inf

    def flux(self, U):
        U = np.asarray(U, dtype=np.float64)
        return 0.5 * U * U

    def jacobian(self, U):
        U = np.asarray(U, dtype=np.float64)
        return U[..., None, :].copy()

    def eigenvalues(self, U):
        return np.asarray(U, dtype=np.float64).copy()

    def r(self, U, j):
        U = np.asarray(U, dtype=np.float64)
        return np.ones_like(U)

    def admissible(self, U):
        U = np.asarray(U)
        return np.isfinite(U[..., 0])

    def sample_states(self, rng, count):
        return rng.uniform(-1.0, 1.0, size=(count, 1))


# ---------------------------------------------------------------------------
# p-system, n = 2


class PSystem(SystemModel):
    """v_t - u_x = 0, u_t + p(v)_x = 0 with p(v) = k v^-gamma (both fields gnl)."""

    name = "psystem"
    n = 2
    classification = ("gnl", "gnl")
    groups = ((0,), (1,))

    def __init__(self, gamma: float = 1.4, k: float = 1.0):
        if gamma <= 1.0 or k <= 0.0:
            raise ValueError("need gamma > 1 and k > 0")
        self.gamma = gamma
        self.k = k
        self.background = np.array([1.0, 0.0])
        self.eps_gap = 0.5  # 2c at v = 2, conservative for the sampling box

    def sound_speed(self, v):
        return math.sqrt(self.gamma * self.k) * v ** (-(self.gamma + 1) / 2)

    def flux(self, U):
        U = np.asarray(U, dtype=np.float64)
        v, u = U[..., 0], U[..., 1]
        return np.stack([-u, self.k * v**-self.gamma], axis=-1)

    def jacobian(self, U):
        U = np.asarray(U, dtype=np.float64)
        v = U[..., 0]
        J = np.zeros(U.shape[:-1] + (2, 2))
        J[..., 0, 1] = -1.0
        J[..., 1, 0] = -self.gamma * self.k * v ** (-self.gamma - 1)
        return J

    def eigenvalues(self, U):
        U = np.asarray(U, dtype=np.float64)
        c = self.sound_speed(U[..., 0])
        return np.stack([-c, c], axis=-1)

    def r(self, U, j):
        U = np.asarray(U, dtype=np.float64)
        v = U[..., 0]
        c = self.sound_speed(v)
        pdd = self.gamma * (self.gamma + 1) * self.k * v ** (-self.gamma - 2)
        alpha = 2.0 * c / pdd
        first = alpha if j == 0 else -alpha
        return np.stack([first, alpha * c], axis=-1)

    def admissible(self, U):
        U = np.asarray(U)
        return U[..., 0] > 0.05

    def sample_states(self, rng, count):
        v = rng.uniform(0.5, 2.0, size=count)
        u = rng.uniform(-1.0, 1.0, size=count)
        return np.stack([v, u], axis=-1)


# ---------------------------------------------------------------------------
# compressible Euler, n = 3


class Euler1D(SystemModel):
    """1D Euler in conserved variables (rho, rho u, E); middle field is the contact."""

    name = "euler1d"
    n = 3
    classification = ("gnl", "ld", "gnl")
    groups = ((0,), (1,), (2,))

    def __init__(self, gamma: float = 1.4):
        if gamma <= 1.0:
            raise ValueError("need gamma > 1")
        self.gamma = gamma
        self.background = self.prim_to_cons(np.array([1.0, 0.0, 1.0]))
        self.eps_gap = 0.4

    def prim_to_cons(self, W):
        W = np.asarray(W, dtype=np.float64)
        rho, u, p = W[..., 0], W[..., 1], W[..., 2]
        return np.stack([rho, rho * u, p / (self.gamma - 1) + 0.5 * rho * u * u], axis=-1)

    def cons_to_prim(self, U):
        U = np.asarray(U, dtype=np.float64)
        rho, m, E = U[..., 0], U[..., 1], U[..., 2]
        u = m / rho
        p = (self.gamma - 1) * (E - 0.5 * m * u)
        return np.stack([rho, u, p], axis=-1)

    def flux(self, U):
        U = np.asarray(U, dtype=np.float64)
        rho, m, E = U[..., 0], U[..., 1], U[..., 2]
        u = m / rho
        p = (self.gamma - 1) * (E - 0.5 * m * u)
        return np.stack([m, m * u + p, u * (E + p)], axis=-1)

    def jacobian(self, U):
        U = np.asarray(U, dtype=np.float64)
        g = self.gamma
        rho, m, E = U[..., 0], U[..., 1], U[..., 2]
        u = m / rho
        J = np.zeros(U.shape[:-1] + (3, 3))
        J[..., 0, 1] = 1.0
        J[..., 1, 0] = 0.5 * (g - 3.0) * u * u
        J[..., 1, 1] = (3.0 - g) * u
        J[..., 1, 2] = g - 1.0
        J[..., 2, 0] = (g - 1.0) * u**3 - g * u * E / rho
        J[..., 2, 1] = g * E / rho - 1.5 * (g - 1.0) * u * u
        J[..., 2, 2] = g * u
        return J

    def eigenvalues(self, U):
        W = self.cons_to_prim(U)
        rho, u, p = W[..., 0], W[..., 1], W[..., 2]
        c = np.sqrt(self.gamma * p / rho)
        return np.stack([u - c, u, u + c], axis=-1)

    def r(self, U, j):
        g = self.gamma
        W = self.cons_to_prim(U)
        rho, u, p = W[..., 0], W[..., 1], W[..., 2]
        if j == 1:
            v = np.stack([np.ones_like(u), u, 0.5 * u * u], axis=-1)
            return v / np.linalg.norm(v, axis=-1, keepdims=True)
        c = np.sqrt(g * p / rho)
        sgn = 1.0 if j == 2 else -1.0
        w = sgn * 2.0 * rho / ((g + 1.0) * c)
        # primitive eigenvector w*(1, +-c/rho, c^2) mapped through dU/dW
        p1 = w
        p2 = sgn * w * c / rho
        p3 = w * c * c
        return np.stack(
            [p1, u * p1 + rho * p2, 0.5 * u * u * p1 + rho * u * p2 + p3 / (g - 1.0)],
            axis=-1,
        )

    def admissible(self, U):
        W = self.cons_to_prim(np.asarray(U, dtype=np.float64))
        return (W[..., 0] > 1e-2) & (W[..., 2] > 1e-2)

    def sample_states(self, rng, count):
        rho = rng.uniform(0.5, 2.0, size=count)
        u = rng.uniform(-1.0, 1.0, size=count)
        p = rng.uniform(0.5, 2.0, size=count)
        return self.prim_to_cons(np.stack([rho, u, p], axis=-1))


# ---------------------------------------------------------------------------
# steady supersonic 2D Euler in x1-evolution form, n = 4


class SteadyEuler2D(SystemModel):
    """Steady 2D Euler for supersonic flow, evolved in x1 (plays the role of time).

    Conserved vector U = (rho v1, rho v1^2 + p, rho v1 v2, rho v1 H) with
    total enthalpy H = |v|^2/2 + gamma p / ((gamma-1) rho); the x2-flux is
    F = (rho v2, rho v1 v2, rho v2^2 + p, rho v2 H).  The streamline field
    v2/v1 has multiplicity two and is linearly degenerate; the two Mach
    fields are genuinely nonlinear.  Admissibility requires v1 > c.
    """

    name = "steady-euler2d"
    n = 4
    classification = ("gnl", "ld", "ld", "gnl")
    groups = ((0,), (1, 2), (3,))

    def __init__(self, gamma: float = 1.4):
        if gamma <= 1.0:
            raise ValueError("need gamma > 1")
        self.gamma = gamma
        self.background = self.prim_to_cons(np.array([1.0, 2.4, 0.0, 1.0]))
        self.eps_gap = 0.2

    # primitive W = (rho, v1, v2, p)

    def prim_to_cons(self, W):
        W = np.asarray(W, dtype=np.float64)
        rho, v1, v2, p = (W[..., i] for i in range(4))
        g = self.gamma
        H = 0.5 * (v1 * v1 + v2 * v2) + g * p / ((g - 1.0) * rho)
        return np.stack([rho * v1, rho * v1 * v1 + p, rho * v1 * v2, rho * v1 * H], axis=-1)

    def cons_to_prim(self, U):
        U = np.asarray(U, dtype=np.float64)
        g = self.gamma
        b = g / (g - 1.0)
        v2 = U[..., 2] / U[..., 0]
        A = U[..., 3] / U[..., 0] - 0.5 * v2 * v2
        qb = -b * U[..., 1] / U[..., 0]
        disc = qb * qb - 4.0 * (b - 0.5) * A
        # supersonic root of the v1 quadratic
        v1 = (-qb + np.sqrt(np.maximum(disc, 0.0))) / (2.0 * (b - 0.5))
        rho = U[..., 0] / v1
        p = U[..., 1] - U[..., 0] * v1
        return np.stack([rho, v1, v2, p], axis=-1)

    def flux(self, U):
        W = self.cons_to_prim(U)
        rho, v1, v2, p = (W[..., i] for i in range(4))
        g = self.gamma
        H = 0.5 * (v1 * v1 + v2 * v2) + g * p / ((g - 1.0) * rho)
        return np.stack([rho * v2, rho * v1 * v2, rho * v2 * v2 + p, rho * v2 * H], axis=-1)

    def _dU_dW(self, W):
        rho, v1, v2, p = (W[..., i] for i in range(4))
        g = self.gamma
        q2 = v1 * v1 + v2 * v2
        M = np.zeros(W.shape[:-1] + (4, 4))
        M[..., 0, 0] = v1
        M[..., 0, 1] = rho
        M[..., 1, 0] = v1 * v1
        M[..., 1, 1] = 2.0 * rho * v1
        M[..., 1, 3] = 1.0
        M[..., 2, 0] = v1 * v2
        M[..., 2, 1] = rho * v2
        M[..., 2, 2] = rho * v1
        M[..., 3, 0] = 0.5 * v1 * q2
        M[..., 3, 1] = 0.5 * rho * q2 + rho * v1 * v1 + g * p / (g - 1.0)
        M[..., 3, 2] = rho * v1 * v2
        M[..., 3, 3] = g * v1 / (g - 1.0)
        return M

    def _dF_dW(self, W):
        rho, v1, v2, p = (W[..., i] for i in range(4))
        g = self.gamma
        q2 = v1 * v1 + v2 * v2
        A = np.zeros(W.shape[:-1] + (4, 4))
        A[..., 0, 0] = v2
        A[..., 0, 2] = rho
        A[..., 1, 0] = v1 * v2
        A[..., 1, 1] = rho * v2
        A[..., 1, 2] = rho * v1
        A[..., 2, 0] = v2 * v2
        A[..., 2, 2] = 2.0 * rho * v2
        A[..., 2, 3] = 1.0
        A[..., 3, 0] = 0.5 * v2 * q2
        A[..., 3, 1] = rho * v1 * v2
        A[..., 3, 2] = 0.5 * rho * q2 + rho * v2 * v2 + g * p / (g - 1.0)
        A[..., 3, 3] = g * v2 / (g - 1.0)
        return A

    def jacobian(self, U):
        W = self.cons_to_prim(U)
        M = self._dU_dW(W)
        A = self._dF_dW(W)
        # dF/dU = A M^-1, via a solve on the transposed system
        return np.swapaxes(
            np.linalg.solve(np.swapaxes(M, -1, -2), np.swapaxes(A, -1, -2)), -1, -2
        )

    def eigenvalues(self, U):
        W = self.cons_to_prim(U)
        rho, v1, v2, p = (W[..., i] for i in range(4))
        c2 = self.gamma * p / rho
        q2 = v1 * v1 + v2 * v2
        disc = np.sqrt(c2 * np.maximum(q2 - c2, 0.0))
        den = v1 * v1 - c2
        lam0 = v2 / v1
        return np.stack(
            [(v1 * v2 - disc) / den, lam0, lam0, (v1 * v2 + disc) / den], axis=-1
        )

    def r(self, U, j):
        g = self.gamma
        W = self.cons_to_prim(U)
        rho, v1, v2, p = (W[..., i] for i in range(4))
        M = self._dU_dW(W)
        if j in (1, 2):
            if j == 1:
                prim = np.stack([np.ones_like(rho), 0 * rho, 0 * rho, 0 * rho], axis=-1)
            else:
                prim = np.stack([0 * rho, v1, v2, 0 * rho], axis=-1)
            v = np.einsum("...ij,...j->...i", M, prim)
            return v / np.linalg.norm(v, axis=-1, keepdims=True)
        lam = self.eigenvalues(U)[..., j]
        c2 = g * p / rho
        mu = v2 - lam * v1
        one = 1.0 + lam * lam
        w = np.stack([rho * one, lam * mu, -mu, g * p * one], axis=-1)
        # closed-form grad(lambda) . w from the characteristic polynomial
        G_lam = -2.0 * (v1 * mu + c2 * lam)
        dot = c2 * one * one * (g + 1.0) / G_lam
        prim = w / dot[..., None]
        return np.einsum("...ij,...j->...i", M, prim)

    def admissible(self, U):
        U = np.asarray(U, dtype=np.float64)
        g = self.gamma
        b = g / (g - 1.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            v2 = U[..., 2] / U[..., 0]
            A = U[..., 3] / U[..., 0] - 0.5 * v2 * v2
            disc = (b * U[..., 1] / U[..., 0]) ** 2 - 4.0 * (b - 0.5) * A
            W = self.cons_to_prim(U)
            rho, v1, _, p = (W[..., i] for i in range(4))
            c = np.sqrt(np.maximum(g * p / rho, 0.0))
        ok = (U[..., 0] > 0) & (disc > 0) & (rho > 1e-2) & (p > 1e-2)
        return ok & (v1 > c * 1.001) & np.isfinite(v1)

    def sample_states(self, rng, count):
        rho = rng.uniform(0.8, 1.2, size=count)
        v1 = rng.uniform(2.2, 3.0, size=count)
        v2 = rng.uniform(-0.4, 0.4, size=count)
        p = rng.uniform(0.8, 1.2, size=count)
        return self.prim_to_cons(np.stack([rho, v1, v2, p], axis=-1))


MODELS = {
    "burgers": Burgers,
    "psystem": PSystem,
    "euler1d": Euler1D,
    "steady-euler2d": SteadyEuler2D,
}


def make_model(name: str, **params) -> SystemModel:
    try:
        cls = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; known: {sorted(MODELS)}") from None
    return cls(**params)


def eigen_decompose(model: SystemModel, U: np.ndarray):
    """(eigenvalues, right matrix R, left matrix L) at an admissible state."""
    U = np.asarray(U, dtype=np.float64)
    model.require_admissible(U)
    lam = model.eigenvalues(U)
    R = model.right_eigenvectors(U)
    L = np.linalg.inv(R)
    return lam, R, L


def directional_r_derivative(
    model: SystemModel, U: np.ndarray, along: int, of: int, h: float | None = None
) -> np.ndarray:
    """(r_along . grad) r_of at U by a central difference along r_along."""
    U = np.asarray(U, dtype=np.float64)
    if h is None:
        h = 1e-5 * (1.0 + float(np.sum(np.abs(U))))
    d = model.r(U, along)
    return (model.r(U + h * d, of) - model.r(U - h * d, of)) / (2.0 * h)


def b_coefficient(model: SystemModel, U: np.ndarray, j: int, h: float = 1e-4) -> float:
    """0.5 * l_j . grad^2 F (r_j, r_j): 1/2 for gnl fields, 0 for ld fields."""
    U = np.asarray(U, dtype=np.float64)
    r = model.r(U, j)
    lam, R, L = eigen_decompose(model, U)
    d2 = (model.flux(U + h * r) - 2.0 * model.flux(U) + model.flux(U - h * r)) / (h * h)
    return 0.5 * float(L[j] @ d2)


@dataclass
class LintReport:
    """Worst observed violations of the eigenstructure invariants."""

    model: str
    samples: int
    seed: int
    max_biorth: float
    max_eig_residual: float
    max_gnl_deviation: float
    max_ld_deviation: float
    max_jacobian_rel: float
    min_group_gap: float
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        t = self.tolerances
        return (
            self.max_biorth <= t["biorth"]
            and self.max_eig_residual <= t["eig_residual"]
            and self.max_gnl_deviation <= t["field"]
            and self.max_ld_deviation <= t["field"]
            and self.max_jacobian_rel <= t["jacobian_rel"]
            and self.min_group_gap > 0.0
        )

    def format(self) -> str:
        lines = [
            f"model lint: {self.model} ({self.samples} samples, seed {self.seed})",
            f"  biorthonormality  max |l.r - delta| = {self.max_biorth:.3e}",
            f"  eigen residual    max |dF r - lam r| = {self.max_eig_residual:.3e}",
            f"  gnl normalization max |grad(lam).r - 1| = {self.max_gnl_deviation:.3e}",
            f"  ld degeneracy     max |grad(lam).r| = {self.max_ld_deviation:.3e}",
            f"  jacobian check    max rel dev = {self.max_jacobian_rel:.3e}",
            f"  ordering          min inter-group gap = {self.min_group_gap:.3e}",
            f"  => {'PASS' if self.passed else 'FAIL'}",
        ]
        return "\n".join(lines)


def model_lint(model: SystemModel, sample_count: int = 200, seed: int = 0) -> LintReport:
    """Numerically verify the eigenstructure invariants on seeded samples."""
    rng = np.random.default_rng(seed)
    states = model.sample_states(rng, sample_count)
    states = states[model.admissible(states)]
    if states.shape[0] == 0:
        raise NoAdmissibleSamples(f"{model.name} produced no admissible samples")

    n = model.n
    lam = model.eigenvalues(states)
    R = model.right_eigenvectors(states)
    L = np.linalg.inv(R)
    J = model.jacobian(states)

    eye = np.eye(n)
    max_biorth = float(np.max(np.abs(np.einsum("sij,sjk->sik", L, R) - eye)))

    res = np.einsum("sij,sjk->sik", J, R) - lam[:, None, :] * R
    jnorm = np.max(np.abs(J), axis=(1, 2))
    max_eig_residual = float(
        np.max(np.sum(np.abs(res), axis=1) / (1.0 + jnorm)[:, None])
    )

    max_gnl = 0.0
    max_ld = 0.0
    for j in range(n):
        h = 1e-6 * (1.0 + np.sum(np.abs(states), axis=-1))
        d = R[..., j]
        lp = model.eigenvalues(states + h[:, None] * d)[..., j]
        lm = model.eigenvalues(states - h[:, None] * d)[..., j]
        dlam = (lp - lm) / (2.0 * h)
        if model.classification[j] == "gnl":
            max_gnl = max(max_gnl, float(np.max(np.abs(dlam - 1.0))))
        else:
            max_ld = max(max_ld, float(np.max(np.abs(dlam))))

    # central finite differences of the flux against the closed-form Jacobian
    Jfd = np.empty_like(J)
    for i in range(n):
        h = 1e-6 * (1.0 + np.abs(states[:, i]))
        e = np.zeros((states.shape[0], n))
        e[:, i] = h
        Jfd[:, :, i] = (model.flux(states + e) - model.flux(states - e)) / (2.0 * h[:, None])
    max_jac = float(np.max(np.abs(Jfd - J) / (1.0 + np.abs(J))))

    # ordering: equality inside groups is exact by construction; check gaps
    min_gap = np.inf
    for ga, gb in itertools.pairwise(model.groups):
        gap = lam[..., gb[0]] - lam[..., ga[0]]
        min_gap = min(min_gap, float(np.min(gap)))
    if len(model.groups) == 1:
        min_gap = np.inf

    return LintReport(
        model=model.name,
        samples=int(states.shape[0]),
        seed=seed,
        max_biorth=max_biorth,
        max_eig_residual=max_eig_residual,
        max_gnl_deviation=max_gnl,
        max_ld_deviation=max_ld,
        max_jacobian_rel=max_jac,
        min_group_gap=min_gap,
        tolerances={
            "biorth": 1e-9,
            "eig_residual": 1e-8,
            "field": 1e-8,
            "jacobian_rel": 1e-6,
        },
    )
