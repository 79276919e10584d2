"""Geometric-optics expansions: profiles, assembly, and correction fields.

The expansion writes the solution as a background state plus, per
characteristic family, a small scalar profile advected in the family's frame
and scaled by the family eigenvector.  Genuinely nonlinear profiles evolve
under the inviscid Burgers equation in slow time (the normalized quadratic
coefficient is exactly one half); linearly degenerate profiles are frozen.

Two correction constructions sharpen the expansion to second order: per
linearly-degenerate group, a time-independent field anchored at the
separation time, built by recomposing profile jumps through the group's
contact curves; and, for non-compact data, a time-dependent field whose
jumps collect the quadratic interaction terms of all families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    KindMismatch,
    NoSeparation,
    SpanExceeded,
    OutOfSpan,
    SupportsNotSeparated,
)
from .models import SystemModel, directional_r_derivative, eigen_decompose
from .piecewise import (
    PiecewiseConstantFn,
    combine,
    quantize_to_grid,
    support,
)
from .scalar_ft import AffineFlux, ScalarTrajectory, affine_flux, scalar_evolve

__all__ = [
    "ExpansionProfiles",
    "CorrectionField",
    "project_initial",
    "evolve_profiles",
    "assemble_expansion",
    "assemble_auxiliary",
    "build_correction_compact",
    "build_correction_noncompact",
    "front_slope_xt",
    "separation_time",
]


@dataclass(frozen=True)
class ExpansionProfiles:
    """Per-family scalar profiles plus the frozen background eigenstructure."""

    U0: np.ndarray
    eps: float
    nu: int
    lam0: np.ndarray                      # (n,) eigenvalues at U0
    r0: np.ndarray                        # (n, n), columns are eigenvectors
    l0: np.ndarray                        # (n, n), rows
    classification: tuple[str, ...]
    groups: tuple[tuple[int, ...], ...]
    sigma0: tuple[PiecewiseConstantFn, ...]
    trajectories: tuple[ScalarTrajectory | None, ...] | None = None
    tau_final: float = 0.0

    @property
    def n(self) -> int:
        return self.U0.size

    def sigma(self, j: int, tau: float) -> PiecewiseConstantFn:
        """Profile of family j at slow time tau (frozen for ld families)."""
        if self.classification[j] == "ld":
            return self.sigma0[j]
        if self.trajectories is None or tau > self.tau_final:
            raise SpanExceeded(
                f"profiles evolved to tau={self.tau_final}, requested {tau}"
            )
        try:
            return self.trajectories[j].snapshot(tau)
        except OutOfSpan as exc:
            raise SpanExceeded(str(exc)) from exc

    def sigma_xframe(self, j: int, t: float) -> PiecewiseConstantFn:
        """sigma_j(eps*t, x - lam_j t) as a function of x."""
        return self.sigma(j, self.eps * t).shift(self.lam0[j] * t)

    def sup_norm(self, j: int) -> float:
        return float(np.max(np.abs(self.sigma0[j].values)))

    def ld_groups(self) -> tuple[tuple[int, ...], ...]:
        return tuple(
            g for g in self.groups if self.classification[g[0]] == "ld"
        )


@dataclass(frozen=True)
class CorrectionField:
    """Second-order correction: a vector-valued step function of one frame."""

    kind: str                      # "compact" | "noncompact"
    E: PiecewiseConstantFn
    anchor_time: float             # T0 (compact) or t (noncompact)
    group: tuple[int, ...] | None = None

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.sum(np.abs(self.E.values), axis=1)))

    @property
    def end_value_norm(self) -> float:
        """|E(+inf)|_1; zero up to accumulation tolerance for L1 profiles."""
        return float(np.sum(np.abs(self.E.values[-1])))


def project_initial(
    model: SystemModel, U1: PiecewiseConstantFn, nu: int, eps: float
) -> ExpansionProfiles:
    """Quantized initial profiles sigma_j(0, y) = l_j(U0) . U1(y)."""
    if U1.dim != model.n:
        raise ValueError(f"U1 has dim {U1.dim}, model needs {model.n}")
    U0 = np.asarray(model.background, dtype=np.float64)
    lam0, R, L = eigen_decompose(model, U0)
    sig = []
    for j in range(model.n):
        raw = PiecewiseConstantFn(U1.breakpoints, U1.values @ L[j])
        sig.append(quantize_to_grid(raw, nu))
    return ExpansionProfiles(
        U0=U0,
        eps=float(eps),
        nu=int(nu),
        lam0=lam0,
        r0=R,
        l0=L,
        classification=model.classification,
        groups=model.groups,
        sigma0=tuple(sig),
    )


def _burgers_flux_for(profiles: ExpansionProfiles, j: int) -> AffineFlux:
    h = math.ldexp(1.0, -profiles.nu)
    m = profiles.sup_norm(j) + h
    k = math.ceil(m / h)
    return affine_flux(lambda u: 0.5 * u * u, profiles.nu, (-k * h, k * h))


def evolve_profiles(
    profiles: ExpansionProfiles, tau_final: float
) -> ExpansionProfiles:
    """Evolve gnl profiles by Burgers front tracking up to slow time tau_final."""
    trajs: list[ScalarTrajectory | None] = []
    for j in range(profiles.n):
        if profiles.classification[j] == "ld":
            trajs.append(None)
        else:
            flux = _burgers_flux_for(profiles, j)
            trajs.append(scalar_evolve(profiles.sigma0[j], flux, tau_final))
    return replace(profiles, trajectories=tuple(trajs), tau_final=float(tau_final))


def _quadratic_dirs(model: SystemModel, profiles: ExpansionProfiles) -> dict:
    out = {}
    for j in range(profiles.n):
        if profiles.classification[j] == "gnl":
            out[j] = directional_r_derivative(model, profiles.U0, j, j)
    return out


def assemble_expansion(profiles: ExpansionProfiles, t: float) -> PiecewiseConstantFn:
    """First-order expansion U0 + eps * sum_j sigma_j(eps t, x - lam_j t) r_j."""
    fns = [profiles.sigma_xframe(j, t) for j in range(profiles.n)]
    U0, eps, r0 = profiles.U0, profiles.eps, profiles.r0

    def build(*mats):
        acc = np.tile(U0, (mats[0].shape[0], 1))
        for j, m in enumerate(mats):
            acc = acc + eps * m[:, [0]] * r0[:, j][None, :]
        return acc

    return combine(fns, build)


def assemble_auxiliary(
    profiles: ExpansionProfiles,
    t: float,
    corrections=None,
    model: SystemModel | None = None,
    quad_dirs: dict | None = None,
) -> PiecewiseConstantFn:
    """Auxiliary approximation: expansion plus quadratic and correction terms.

    Adds (eps^2/2) sigma_j^2 (r_j . grad) r_j over the genuinely nonlinear
    families; ``corrections`` may be per-group compact fields (shifted along
    their group's frame relative to the anchor time) or one non-compact field
    built at this very time t.
    """
    if quad_dirs is None:
        if model is None:
            raise ValueError("need model or precomputed quad_dirs")
        quad_dirs = _quadratic_dirs(model, profiles)

    fields: list[CorrectionField] = []
    if corrections is not None:
        fields = [corrections] if isinstance(corrections, CorrectionField) else list(corrections)
    kinds = {f.kind for f in fields}
    if len(kinds) > 1:
        raise KindMismatch(f"mixed correction kinds {kinds}")
    if fields and fields[0].kind == "noncompact":
        if len(fields) > 1:
            raise KindMismatch("exactly one noncompact correction field expected")
        if abs(fields[0].anchor_time - t) > 1e-12:
            raise KindMismatch(
                f"noncompact correction built at t={fields[0].anchor_time}, "
                f"assembly requested at t={t}"
            )
    if fields and fields[0].kind == "compact" and t < min(f.anchor_time for f in fields) - 1e-12:
        raise KindMismatch("compact corrections apply from the anchor time onwards")

    fns = [profiles.sigma_xframe(j, t) for j in range(profiles.n)]
    shifted_E = []
    for f in fields:
        if f.kind == "compact":
            lam = profiles.lam0[f.group[0]]
            shifted_E.append(f.E.shift(lam * (t - f.anchor_time)))
        else:
            shifted_E.append(f.E)

    U0, eps, r0 = profiles.U0, profiles.eps, profiles.r0
    n = profiles.n

    def build(*mats):
        acc = np.tile(U0, (mats[0].shape[0], 1))
        for j in range(n):
            acc = acc + eps * mats[j][:, [0]] * r0[:, j][None, :]
            if j in quad_dirs:
                acc = acc + 0.5 * eps * eps * mats[j][:, [0]] ** 2 * quad_dirs[j][None, :]
        for m in mats[n:]:
            acc = acc + eps * eps * m
        return acc

    return combine(fns + shifted_E, build)


def separation_time(profiles: ExpansionProfiles) -> float:
    """First time after which distinct-speed family supports stay disjoint.

    Uses the exact Burgers support enclosure: family j's profile lives inside
    [a_j, b_j] widened by ||sigma_j||_inf * eps * t on both sides (no widening
    for frozen ld profiles), all translated at lam_j t.
    """
    spans = []
    for j in range(profiles.n):
        s = support(profiles.sigma0[j])
        if s is None:
            spans.append(None)
            continue
        spread = profiles.sup_norm(j) if profiles.classification[j] == "gnl" else 0.0
        spans.append((s[0], s[1], spread))

    t0 = 0.0
    for j in range(profiles.n):
        for k in range(profiles.n):
            if spans[j] is None or spans[k] is None:
                continue
            if profiles.lam0[k] <= profiles.lam0[j]:
                continue  # handle each pair once, k the faster family
            aj, bj, sj = spans[j]
            ak, bk, sk = spans[k]
            coef = (profiles.lam0[k] - profiles.lam0[j]) - (sj + sk) * profiles.eps
            gap0 = ak - bj
            if coef <= 0.0:
                if gap0 > 0.0 and coef == 0.0:
                    continue
                raise NoSeparation(
                    f"families {j} and {k}: spread outruns the speed gap"
                )
            t0 = max(t0, max(0.0, -gap0) / coef)
    return t0


def front_slope_xt(
    lam0: float,
    eps: float,
    sigma_left: float,
    sigma_jump: float,
    classification: str,
) -> float:
    """Physical-frame speed of one profile front.

    A genuinely nonlinear front of the Burgers profile moves at
    lam0 + (sigma_left + sigma_jump/2) eps; degenerate fronts travel at lam0
    regardless of the profile values.
    """
    if classification == "ld":
        return lam0
    return lam0 + (sigma_left + 0.5 * sigma_jump) * eps


def build_correction_compact(
    model: SystemModel, profiles: ExpansionProfiles, T0: float
) -> list[CorrectionField]:
    """Per linearly-degenerate group: the second-order contact correction.

    At the anchor time the group's profiles must be separated from every
    other family.  Walking the group's jump points left to right, each
    profile jump is decomposed into wave strengths and recomposed using only
    the group's components, which keeps the auxiliary state exactly on the
    contact surface through the background; the correction is the second
    order gap between that state and the first-order expansion.
    """
    needed = separation_time(profiles)
    if T0 < needed - 1e-12:
        raise SupportsNotSeparated(
            f"supports overlap until t={needed:.6g}, got T0={T0}"
        )
    from .piecewise import _values_on_grid
    from .system_riemann import DEFAULT_PARAMS, group_curve_point, strength_decompose

    U0, eps = profiles.U0, profiles.eps
    fields = []
    for group in profiles.ld_groups():
        sigs = [profiles.sigma0[j] for j in group]
        arrays = [s.breakpoints for s in sigs if s.breakpoints.size]
        if not arrays:
            zero = PiecewiseConstantFn.constant(np.zeros(profiles.n))
            fields.append(CorrectionField("compact", zero, float(T0), tuple(group)))
            continue
        breaks = np.unique(np.concatenate(arrays))
        # interval values aligned to the merged grid; left limit at breaks[i]
        # is vals[.][i], right limit is vals[.][i+1]
        vals = [_values_on_grid(s, breaks)[:, 0] for s in sigs]
        W = U0.copy()
        e_vals = [np.zeros(profiles.n)]
        for i in range(breaks.size):
            left = U0 + eps * sum(
                vals[g][i] * profiles.r0[:, j] for g, j in enumerate(group)
            )
            right = U0 + eps * sum(
                vals[g][i + 1] * profiles.r0[:, j] for g, j in enumerate(group)
            )
            betas = strength_decompose(model, left, right, DEFAULT_PARAMS)
            W = group_curve_point(
                model, W, tuple(group), [float(betas[j]) for j in group], DEFAULT_PARAMS
            )
            e_vals.append((W - right) / (eps * eps))
        e_vals[-1] = np.zeros(profiles.n)  # pin W = U0 beyond the support
        lam = profiles.lam0[group[0]]
        E = PiecewiseConstantFn(breaks + lam * T0, np.stack(e_vals))
        fields.append(CorrectionField("compact", E, float(T0), tuple(group)))
    return fields


def build_correction_noncompact(
    model: SystemModel, profiles: ExpansionProfiles, t: float
) -> CorrectionField:
    """Time-t correction field accumulating quadratic interaction jumps.

    At each profile jump of family k the field jumps by the cross terms
    sigma_j (dsigma_k) (r_j . grad) r_k over j != k plus the half square
    difference along (r_k . grad) r_k, anchored at zero at minus infinity.
    """
    n = profiles.n
    fns = [profiles.sigma_xframe(j, t) for j in range(n)]
    D = {
        (j, k): directional_r_derivative(model, profiles.U0, j, k)
        for j in range(n)
        for k in range(n)
    }
    arrays = [f.breakpoints for f in fns if f.breakpoints.size]
    if not arrays:
        return CorrectionField(
            "noncompact", PiecewiseConstantFn.constant(np.zeros(n)), float(t)
        )
    breaks = np.unique(np.concatenate(arrays))
    # family values on the merged intervals, shape (len(breaks)+1,) each
    vals = []
    for f in fns:
        idx = np.empty(breaks.size + 1, dtype=np.intp)
        idx[0] = 0
        idx[1:] = np.searchsorted(f.breakpoints, breaks, side="right")
        vals.append(f.values[idx, 0])
    e = np.zeros((breaks.size + 1, n))
    for i in range(breaks.size):
        jump = np.zeros(n)
        for k in range(n):
            sk_m, sk_p = vals[k][i], vals[k][i + 1]
            if sk_m == sk_p:
                continue
            ds = sk_p - sk_m
            for j in range(n):
                if j == k:
                    continue
                sj = vals[j][i]
                if sj != 0.0:
                    jump += sj * ds * D[(j, k)]
            jump += 0.5 * (sk_p**2 - sk_m**2) * D[(k, k)]
        e[i + 1] = e[i] + jump
    return CorrectionField("noncompact", PiecewiseConstantFn(breaks, e), float(t))
