"""Boundary-value solvers for the five solution families.

All solvers return a `Solution` on [0, 1] with sonic boundary densities.
Shooting-based constructions integrate exact sonic departures/landings in
the density chart, so no endpoint is ever approximated by a series cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .errors import (
    BracketFailure,
    GlueMismatch,
    LastCrossingMissing,
    NewtonDivergence,
    NoSolutionInRegime,
    NotConstantDoping,
    NotSonicDoping,
    PreconditionViolation,
    RegimeRejection,
    ShootingDivergence,
)
from .integrator import (
    DomainEnd,
    IntegratorConfig,
    TargetDensity,
    TrajectorySegment,
    integrate,
    integrate_from_sonic,
)
from .model_core import (
    ModelParams,
    ShockData,
    State,
    rh_jump,
    supersonic_min_density_bracket,
    tau0_bound,
    undamped_energy_potential,
    c1_transition_slope,
)
from .solution import Solution, TransitionData, graded_grid, grid_derivative

DEFAULT_J_SCHEDULE = (0.5, 0.9, 0.99, 0.999, 0.9999)
DEFAULT_DELTA_SCHEDULE = (1e-2, 1e-3, 1e-4)

# sentinel residual magnitude for shots that leave the admissible region
_OVERSHOOT = 10.0


def _fine(cfg: IntegratorConfig) -> IntegratorConfig:
    """Output-resolution variant of a config for final reconstructions.

    Shooting probes run at the default step cap for speed; the accepted
    trajectory is re-integrated with small steps and tight tolerances so
    that the stored arrays support interpolation, and per-interval defect
    checks, at the accuracy of the solve itself.
    """
    return replace(
        cfg,
        max_step=min(cfg.max_step, 5e-4),
        rel_tol=min(cfg.rel_tol, 1e-11),
        abs_tol=min(cfg.abs_tol, 1e-13),
    )


def _require_subsonic_regime(p: ModelParams) -> None:
    if p.doping.b_lower <= 1.0:
        raise PreconditionViolation(
            "subsonic solutions require inf b > 1; for sup b <= 1 none exists",
            theorem_ref="Theorem 3.1",
        )


def solve_sonic(p: ModelParams) -> Solution:
    """Closed-form solution (rho, E) = (1, 1/tau) for sonic doping."""
    if not p.doping.is_sonic:
        raise NotSonicDoping("the constant sonic solution needs doping identically 1")
    x = graded_grid()
    rho = np.ones_like(x)
    e = np.full_like(x, p.inv_tau)
    return Solution(
        kind="sonic",
        x=x,
        rho=rho,
        e=e,
        diagnostics={"construction": "closed_form", "boundary_residual": 0.0},
    )


# ---------------------------------------------------------------------------
# subsonic: shooting form
# ---------------------------------------------------------------------------


def _subsonic_shot(q: float, p: ModelParams, cfg: IntegratorConfig):
    """Launch from the left sonic boundary; residual is landing abscissa - 1."""
    seg = integrate_from_sonic(
        0.0, "subsonic", p.inv_tau + q, "forward", [DomainEnd(3.0)], p, cfg
    )
    kind = seg.terminator.kind if seg.terminator is not None else None
    if kind == "sonic_arrival":
        return seg.last.x - 1.0, seg
    if kind == "step_failure":
        # the arc stalled at its in-band turning point: too shallow to leave
        # the sonic band, hence far too short.  The stall abscissa keeps the
        # residual sign-correct either way.
        return seg.last.x - 1.0, None
    # blow-up or domain end: the arc never returns, steer shorter
    return _OVERSHOOT, None


def solve_subsonic_shooting(
    p: ModelParams, cfg: IntegratorConfig | None = None
) -> Solution:
    """Subsonic solution by bisection on the launch field E(0).

    The arc length of the sonic-to-sonic excursion grows monotonically with
    the launch excess q = E(0) - 1/tau, so a sign change of (landing - 1)
    brackets the solution.
    """
    _require_subsonic_regime(p)
    cfg = cfg or IntegratorConfig()

    q_lo, q_hi = 1e-4, 0.05
    r_lo, _ = _subsonic_shot(q_lo, p, cfg)
    while r_lo >= 0.0:
        # the arc shrinks with the launch excess; probe smaller q, staying
        # clear of the degenerate-launch guard at 1e-6
        q_lo *= 0.5
        if q_lo < 4e-6:
            raise BracketFailure(
                "arc length does not shrink below 1 at vanishing launch excess",
                diagnostics={"q_lo": q_lo, "residual": r_lo},
            )
        r_lo, _ = _subsonic_shot(q_lo, p, cfg)
    r_hi, _ = _subsonic_shot(q_hi, p, cfg)
    grow = 0
    while r_hi < 0.0:
        q_lo, r_lo = q_hi, r_hi
        q_hi *= 2.0
        grow += 1
        if grow > 60:
            raise BracketFailure(
                "no launch field produces an arc reaching x = 1",
                diagnostics={"q_hi": q_hi, "residual": r_hi},
            )
        r_hi, _ = _subsonic_shot(q_hi, p, cfg)

    best = None
    iterations = 0
    while q_hi - q_lo > 1e-15 * max(1.0, q_hi):
        q_mid = 0.5 * (q_lo + q_hi)
        r_mid, seg = _subsonic_shot(q_mid, p, cfg)
        iterations += 1
        if seg is not None:
            if best is None or abs(r_mid) < abs(best[0]):
                best = (r_mid, q_mid, seg)
        if r_mid < 0.0:
            q_lo = q_mid
        else:
            q_hi = q_mid
        if best is not None and abs(best[0]) < 1e-11:
            break
        if iterations > 200:
            break
    if best is None or abs(best[0]) > 1e-7:
        raise ShootingDivergence(
            "bisection on the launch field failed to land at x = 1",
            diagnostics={"bracket": (q_lo, q_hi), "iterations": iterations},
        )
    residual, q_star, _ = best
    fine = _fine(cfg)
    residual, seg = _subsonic_shot(q_star, p, fine)
    # the bisection tuned q against probe-resolution arcs, so the fine arc
    # lands offset by the probes' own integration error, and the square-root
    # endpoint amplifies an abscissa miss eps into a sqrt(q*eps) density gap.
    # Polish at output resolution with secant steps.
    q_old = r_old = None
    for _ in range(6):
        if seg is None or abs(residual) <= 1e-10:
            break
        if q_old is None:
            q_next = q_star * (1.0 + 1e-4)
        else:
            denom = residual - r_old
            if denom == 0.0:
                break
            q_next = q_star - residual * (q_star - q_old) / denom
        r_next, seg_next = _subsonic_shot(q_next, p, fine)
        if seg_next is None:
            break
        q_old, r_old = q_star, residual
        q_star, residual, seg = q_next, r_next, seg_next
    return Solution(
        kind="subsonic",
        x=seg.xs,
        rho=seg.rhos,
        e=seg.es,
        diagnostics={
            "construction": "ode_trajectory",
            "g0": p.inv_tau + q_star,
            "launch_excess": q_star,
            "boundary_residual": abs(residual),
            "shooting_iterations": iterations,
            "rho_max": float(seg.rhos.max()),
        },
    )


# ---------------------------------------------------------------------------
# subsonic: current-relaxed elliptic form
# ---------------------------------------------------------------------------


def _elliptic_flux_coef(rho: np.ndarray, j: float, gamma: float) -> np.ndarray:
    return rho ** (gamma - 2.0) - j * j * rho ** (-3.0)


def _elliptic_flux_coef_d(rho: np.ndarray, j: float, gamma: float) -> np.ndarray:
    return (gamma - 2.0) * rho ** (gamma - 3.0) + 3.0 * j * j * rho ** (-4.0)


def _elliptic_residual(u, x, h, bx, j, p):
    um = 0.5 * (u[1:] + u[:-1])
    flux = _elliptic_flux_coef(um, j, p.gamma) * np.diff(u) / h + j * p.inv_tau / um
    cell = 0.5 * (h[1:] + h[:-1])
    return flux[1:] - flux[:-1] - (u[1:-1] - bx[1:-1]) * cell


def _elliptic_jacobian_bands(u, x, h, bx, j, p):
    """Tridiagonal Jacobian of the interior residual in solve_banded layout."""
    um = 0.5 * (u[1:] + u[:-1])
    du = np.diff(u)
    dcoef = _elliptic_flux_coef_d(um, j, p.gamma)
    coef = _elliptic_flux_coef(um, j, p.gamma)
    # flux_k depends on u_k (right node) and u_{k-1} (left node)
    df_right = 0.5 * dcoef * du / h + coef / h - 0.5 * j * p.inv_tau / um**2
    df_left = 0.5 * dcoef * du / h - coef / h - 0.5 * j * p.inv_tau / um**2
    cell = 0.5 * (h[1:] + h[:-1])
    n = len(u) - 2
    ab = np.zeros((3, n))
    ab[1, :] = df_left[1:] - df_right[:-1] - cell  # d R_i / d u_i
    ab[0, 1:] = df_right[1:-1]  # superdiagonal: d R_i / d u_{i+1}
    ab[2, :-1] = -df_left[1:-1]  # subdiagonal: d R_i / d u_{i-1}
    return ab


def solve_subsonic_elliptic(
    p: ModelParams,
    j_schedule: tuple[float, ...] = DEFAULT_J_SCHEDULE,
    newton_tol: float = 1e-10,
    max_newton: int = 60,
) -> Solution:
    """Subsonic solution via the current-relaxed divergence form.

    For current j < 1 the quasilinear flux (rho^(gamma-2) - j^2 rho^-3) rho_x
    + j/(tau rho) stays uniformly elliptic on rho >= 1, so a damped Newton
    iteration on a boundary-graded finite-volume grid converges.  The sonic
    limit is recovered by Richardson extrapolation in (1 - j), which is
    first-order accurate in the relaxation parameter.
    """
    _require_subsonic_regime(p)
    js = tuple(float(j) for j in j_schedule)
    if len(js) < 3 or any(not 0.0 < j < 1.0 for j in js) or any(
        b <= a for a, b in zip(js, js[1:])
    ):
        # three levels minimum: the extrapolation-gap diagnostic compares two
        # consecutive Richardson pairs
        raise ValueError("j_schedule must be strictly increasing inside (0, 1)")
    if js[-1] < 1.0 - 1e-4:
        raise ValueError("j_schedule must approach the sonic current: last j >= 0.9999")

    x = graded_grid()
    h = np.diff(x)
    bx = p.b(x)
    cell = 0.5 * (h[1:] + h[:-1])

    u = 1.0 + 0.5 * np.clip(bx - 1.0, 0.0, None) * np.sin(np.pi * x)
    u[0] = u[-1] = 1.0

    profiles = []
    fields = []
    newton_iters = []
    eps = np.finfo(float).eps
    for j in js:
        converged = False
        for it in range(max_newton):
            r = _elliptic_residual(u, x, h, bx, j, p)
            # row scale: residuals integrate a density over a cell, plus the
            # roundoff floor of the flux differences D * drho / h
            um = 0.5 * (u[1:] + u[:-1])
            d_over_h = _elliptic_flux_coef(um, j, p.gamma) / h
            noise = 16.0 * eps * (d_over_h[:-1] + d_over_h[1:])
            scale = newton_tol * cell + noise
            if np.all(np.abs(r) <= scale):
                converged = True
                newton_iters.append(it)
                break
            ab = _elliptic_jacobian_bands(u, x, h, bx, j, p)
            step = solve_banded((1, 1), ab, -r)
            lam = 1.0
            norm0 = float(np.abs(r / scale).max())
            # iterates must keep rho > j, where the relaxed flux stays elliptic
            floor = max(0.5, j + 1e-8)
            while lam > 2.0**-24:
                trial = u.copy()
                trial[1:-1] = u[1:-1] + lam * step
                if trial[1:-1].min() > floor:
                    r_trial = _elliptic_residual(trial, x, h, bx, j, p)
                    if float(np.abs(r_trial / scale).max()) < norm0 * (1.0 - 0.25 * lam):
                        u = trial
                        break
                lam *= 0.5
            else:
                raise NewtonDivergence(
                    "damped Newton stalled in the relaxed elliptic solve",
                    diagnostics={"j": j, "residual": norm0},
                )
        if not converged:
            raise NewtonDivergence(
                "relaxed elliptic solve did not converge",
                diagnostics={"j": j, "residual": float(np.abs(r / scale).max())},
            )
        rho_x = grid_derivative(x, u)
        e_j = _elliptic_flux_coef(u, j, p.gamma) * rho_x + j * p.inv_tau / u
        profiles.append(u.copy())
        fields.append(e_j)

    # linear Richardson in s = 1 - j from the last two relaxation levels
    s_prev, s_last = 1.0 - js[-2], 1.0 - js[-1]
    w = s_last / (s_prev - s_last)
    rho_star = profiles[-1] + w * (profiles[-1] - profiles[-2])
    e_star = fields[-1] + w * (fields[-1] - fields[-2])
    rho_star[0] = rho_star[-1] = 1.0
    rho_star = np.maximum(rho_star, 1.0)

    # extrapolation from the previous pair gauges the remaining j-error
    w2 = (1.0 - js[-2]) / ((1.0 - js[-3]) - (1.0 - js[-2]))
    rho_alt = profiles[-2] + w2 * (profiles[-2] - profiles[-3])
    extrap_gap = float(np.abs(rho_star - rho_alt).max())

    return Solution(
        kind="subsonic",
        x=x,
        rho=rho_star,
        e=e_star,
        diagnostics={
            "construction": "relaxed_elliptic",
            "j_schedule": list(js),
            "newton_iterations": newton_iters,
            "extrapolation_gap": extrap_gap,
            "boundary_residual": 0.0,
            "rho_max": float(rho_star.max()),
        },
    )


# ---------------------------------------------------------------------------
# supersonic
# ---------------------------------------------------------------------------


def _supersonic_arcs(x_min: float, rho_min: float, p: ModelParams, cfg: IntegratorConfig):
    """Both half-arcs from the interior minimum on the critical locus."""
    start = State(x_min, rho_min, 1.0 / (p.tau * rho_min))
    fwd = integrate(start, "forward", [DomainEnd(x_min + 8.0)], p, cfg)
    bwd = integrate(start, "backward", [DomainEnd(x_min - 8.0)], p, cfg)
    ok = (
        fwd.terminator is not None
        and fwd.terminator.kind == "sonic_arrival"
        and bwd.terminator is not None
        and bwd.terminator.kind == "sonic_arrival"
    )
    return ok, fwd, bwd


def _compose_supersonic(fwd: TrajectorySegment, bwd: TrajectorySegment, shift: float):
    xs = np.concatenate([bwd.xs[::-1] + shift, fwd.xs[1:] + shift])
    rhos = np.concatenate([bwd.rhos[::-1], fwd.rhos[1:]])
    es = np.concatenate([bwd.es[::-1], fwd.es[1:]])
    return xs, rhos, es


def _check_regime_for_supersonic(p: ModelParams, want: str) -> None:
    """Raise when a non-existence theorem rules the family out."""
    b_up = p.doping.b_upper
    if b_up <= 1.0:
        if b_up * (1.0 + math.sqrt(2.0 * b_up)) < 1.0:
            raise NoSolutionInRegime(
                f"doping below the sonic level excludes {want} solutions",
                theorem_ref="Theorem 3.2",
            )
        if p.tau < 1.0 / 3.0:
            raise NoSolutionInRegime(
                f"strong relaxation with subsonic doping excludes {want} solutions",
                theorem_ref="Theorem 3.3",
            )


def solve_supersonic(
    p: ModelParams,
    cfg: IntegratorConfig | None = None,
    bracket: tuple[float, float] | None = None,
) -> Solution:
    """Supersonic solution shot from its interior density minimum.

    The minimum sits on the critical locus rho E = 1/tau, where the profile
    is regular; both half-arcs are integrated out to their sonic landings
    and the minimum density is tuned until the landings are one unit apart.
    """
    _check_regime_for_supersonic(p, "supersonic")
    cfg = cfg or IntegratorConfig()

    if bracket is None:
        # for x-dependent doping the mean value seeds the same bracket shape;
        # the two-parameter polish below absorbs the difference
        b_ref = (
            p.doping.constant_value
            if p.doping.is_constant
            else 0.5 * (p.doping.b_lower + p.doping.b_upper)
        )
        beta, gam = supersonic_min_density_bracket(1.0, b_ref)
        bracket = (beta, min(gam, 1.0 - 2.0 * cfg.sonic_band))
    lo, hi = bracket

    def length_residual(rho_min: float) -> float:
        ok, fwd, bwd = _supersonic_arcs(0.0, rho_min, p, cfg)
        if not ok:
            raise ShootingDivergence(
                "supersonic half-arc failed to land on the sonic line",
                diagnostics={
                    "rho_min": rho_min,
                    "forward": fwd.terminator.kind if fwd.terminator else None,
                    "backward": bwd.terminator.kind if bwd.terminator else None,
                },
            )
        return (fwd.last.x - bwd.last.x) - 1.0

    r_lo, r_hi = length_residual(lo), length_residual(hi)
    if r_lo * r_hi > 0.0:
        raise BracketFailure(
            "total arc length does not change sign over the minimum-density bracket",
            diagnostics={"bracket": [lo, hi], "residuals": [r_lo, r_hi]},
        )
    rho_min = brentq(length_residual, lo, hi, xtol=1e-14, rtol=8.9e-16)

    if p.doping.is_constant:
        # constant doping is translation invariant: slide the composite so
        # the backward landing sits at x = 0
        fine = _fine(cfg)
        ok, fwd, bwd = _supersonic_arcs(0.0, rho_min, p, fine)
        if not ok:
            raise ShootingDivergence("supersonic reconstruction lost its landing")
        resid = (fwd.last.x - bwd.last.x) - 1.0
        # brentq matched the probe-resolution arcs; polish the minimum density
        # against the fine arcs so the sonic landings sit one unit apart to
        # well inside the boundary tolerance
        rm_old = r_old = None
        for _ in range(6):
            if abs(resid) <= 1e-10:
                break
            if rm_old is None:
                rm_next = rho_min * (1.0 - 1e-5)
            else:
                denom = resid - r_old
                if denom == 0.0:
                    break
                rm_next = rho_min - resid * (rho_min - rm_old) / denom
            ok2, fwd2, bwd2 = _supersonic_arcs(0.0, rm_next, p, fine)
            if not ok2:
                break
            rm_old, r_old = rho_min, resid
            rho_min, fwd, bwd = rm_next, fwd2, bwd2
            resid = (fwd.last.x - bwd.last.x) - 1.0
        xs, rhos, es = _compose_supersonic(fwd, bwd, -bwd.last.x)
    else:
        ok, fwd, bwd = _supersonic_arcs(0.0, rho_min, p, cfg)
        if not ok:
            raise ShootingDivergence("supersonic reconstruction lost its landing")
        rho_min, x_min, fwd, bwd = _variable_doping_supersonic(
            p, cfg, rho_min, -bwd.last.x
        )
        ok, fwd, bwd = _supersonic_arcs(x_min, rho_min, p, _fine(cfg))
        if not ok:
            raise ShootingDivergence("supersonic reconstruction lost its landing")
        xs, rhos, es = _compose_supersonic(fwd, bwd, 0.0)
    total = xs[-1] - xs[0]
    if abs(total - 1.0) > 1e-6:
        raise ShootingDivergence(
            "supersonic landings are not one unit apart after tuning",
            diagnostics={"total_length": total, "rho_min": rho_min},
        )
    return Solution(
        kind="supersonic",
        x=xs,
        rho=rhos,
        e=es,
        diagnostics={
            "construction": "ode_trajectory",
            "rho_min": float(rho_min),
            "x_min": float(xs[int(np.argmin(rhos))]),
            "boundary_residual": abs(total - 1.0),
            "e_left": float(es[0]),
            "e_right": float(es[-1]),
        },
    )


def _variable_doping_supersonic(p, cfg, rho_min0, shift0):
    """Newton polish in (rho_min, x_min) for x-dependent doping."""

    def residuals(v):
        rho_min, x_min = v
        ok, fwd, bwd = _supersonic_arcs(x_min, rho_min, p, cfg)
        if not ok:
            return None, fwd, bwd
        return np.array([bwd.last.x, fwd.last.x - 1.0]), fwd, bwd

    v = np.array([rho_min0, shift0])
    r, fwd, bwd = residuals(v)
    if r is None:
        raise ShootingDivergence("supersonic arcs invalid at the Newton start")
    for _ in range(40):
        if np.abs(r).max() < 1e-11:
            break
        jac = np.empty((2, 2))
        for k in range(2):
            dv = np.zeros(2)
            dv[k] = 1e-7 * max(1.0, abs(v[k]))
            r2, _, _ = residuals(v + dv)
            if r2 is None:
                raise ShootingDivergence(
                    "finite-difference probe left the admissible region",
                    diagnostics={"point": list(v)},
                )
            jac[:, k] = (r2 - r) / dv[k]
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise ShootingDivergence("singular shooting Jacobian") from exc
        lam = 1.0
        while lam > 2.0**-20:
            r_new, fwd_new, bwd_new = residuals(v + lam * step)
            if r_new is not None and np.abs(r_new).max() < np.abs(r).max():
                v = v + lam * step
                r, fwd, bwd = r_new, fwd_new, bwd_new
                break
            lam *= 0.5
        else:
            raise ShootingDivergence(
                "two-parameter supersonic Newton stalled",
                diagnostics={"residual": list(map(float, r))},
            )
    else:
        raise ShootingDivergence(
            "two-parameter supersonic Newton did not converge",
            diagnostics={"residual": list(map(float, r))},
        )
    return v[0], v[1], fwd, bwd


def solve_supersonic_all(
    p: ModelParams, cfg: IntegratorConfig | None = None, scan_points: int = 40
) -> list[Solution]:
    """All supersonic solutions found by a sign-change scan in rho_min."""
    _check_regime_for_supersonic(p, "supersonic")
    cfg = cfg or IntegratorConfig()
    lo, hi = 0.05, 1.0 - 2.0 * cfg.sonic_band
    grid = np.linspace(lo, hi, scan_points)

    def residual_or_nan(rho_min: float) -> float:
        ok, fwd, bwd = _supersonic_arcs(0.0, rho_min, p, cfg)
        if not ok:
            return math.nan
        return (fwd.last.x - bwd.last.x) - 1.0

    vals = np.array([residual_or_nan(r) for r in grid])
    out = []
    for a, b, ra, rb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if math.isnan(ra) or math.isnan(rb) or ra * rb > 0.0:
            continue
        out.append(solve_supersonic(p, cfg, bracket=(float(a), float(b))))
    out.sort(key=lambda s: s.diagnostics["rho_min"])
    return out


@dataclass(frozen=True)
class SweepSample:
    """One probe of the supersonic shooting residual."""

    rho_min: float
    residual: float
    status: str


def supersonic_residual_sweep(
    p: ModelParams,
    samples: int = 200,
    bounds: tuple[float, float] = (0.01, 0.99),
    cfg: IntegratorConfig | None = None,
) -> list[SweepSample]:
    """Exhaustive scan of the shooting residual over launch densities.

    Unlike the solvers this never rejects on regime: its purpose is to
    witness non-existence numerically, so it probes even where no solution
    can exist.  Arcs that fail to land on the sonic line (spirals, blow-ups,
    window exits) get a NaN residual and a status naming both stop reasons.
    Constant doping only, since launches are pinned at x = 0 and translated.
    """
    if not p.doping.is_constant:
        raise NotConstantDoping("residual sweep requires constant doping")
    cfg = cfg or IntegratorConfig(rel_tol=1e-8, abs_tol=1e-10, max_step=2e-2)
    out = []
    for rho_min in np.linspace(bounds[0], bounds[1], samples):
        ok, fwd, bwd = _supersonic_arcs(0.0, float(rho_min), p, cfg)
        if ok:
            res = (fwd.last.x - bwd.last.x) - 1.0
            out.append(SweepSample(float(rho_min), float(res), "ok"))
        else:
            f_kind = fwd.terminator.kind if fwd.terminator else "exhausted"
            b_kind = bwd.terminator.kind if bwd.terminator else "exhausted"
            out.append(
                SweepSample(float(rho_min), math.nan, f"{f_kind}/{b_kind}")
            )
    return out


def residual_sign_change(sweep: list[SweepSample]) -> bool:
    """True when two consecutive valid samples bracket a root."""
    prev = None
    for s in sweep:
        if math.isnan(s.residual):
            prev = None
            continue
        if prev is not None and prev * s.residual <= 0.0:
            return True
        prev = s.residual
    return False


# ---------------------------------------------------------------------------
# transonic shock
# ---------------------------------------------------------------------------


def _check_regime_for_shock(p: ModelParams) -> None:
    if p.doping.is_constant and p.doping.constant_value > 1.0:
        b = p.doping.constant_value
        if p.tau < tau0_bound(b):
            raise RegimeRejection(
                "strong relaxation with supersonic doping forbids entropic shocks",
                theorem_ref="Theorem 2.23",
            )
    b_up = p.doping.b_upper
    if b_up <= 1.0:
        if b_up * (1.0 + math.sqrt(2.0 * b_up)) < 1.0:
            raise RegimeRejection(
                "doping below the sonic level excludes transonic shock solutions",
                theorem_ref="Theorem 3.2",
            )
        if p.tau < 1.0 / 3.0:
            raise RegimeRejection(
                "strong relaxation with subsonic doping excludes transonic shocks",
                theorem_ref="Theorem 3.3",
            )


def _shock_shot(e0: float, delta: float, rho_l: float, p: ModelParams, cfg):
    """One interior-layer shot: supersonic dive, jump, subsonic climb.

    Returns (landing_x - 1, parts) where parts is None for invalid shots.
    """
    launch = State(0.0, 1.0 - delta, e0)
    sup = integrate(
        launch,
        "forward",
        [TargetDensity(rho_l, direction=+1), DomainEnd(4.0)],
        p,
        cfg,
    )
    if sup.terminator is None or sup.terminator.kind != "target_density":
        # arc never rose back through rho_l: too shallow (returned to the
        # sonic band first) or blown up; both mean "not this launch field"
        if sup.terminator is not None and sup.terminator.kind in (
            "sonic_arrival",
            "step_failure",
        ):
            return -_OVERSHOOT, None
        return _OVERSHOOT, None
    left = sup.last
    rho_r, e_r = rh_jump(left.rho, left.e)
    sub = integrate(
        State(left.x, rho_r, e_r),
        "forward",
        [TargetDensity(1.0 + delta, direction=-1), DomainEnd(left.x + 4.0)],
        p,
        cfg,
    )
    if sub.terminator is None or sub.terminator.kind != "target_density":
        return _OVERSHOOT, None
    return sub.last.x - 1.0, (sup, sub)


def _shock_bracket(delta: float, rho_l: float, p: ModelParams):
    """Launch-field bracket seeded by the frictionless energy integral."""
    psi = lambda r: undamped_energy_potential(r, p.doping.b_upper)
    psi_lo = undamped_energy_potential(rho_l, p.doping.b_lower)
    e_touch = math.sqrt(max(2.0 * (psi(1.0 - delta) - psi_lo), 0.0))
    beta_deep, _ = supersonic_min_density_bracket(1.0, max(p.doping.b_lower, 1.0 + 1e-9))
    e_deep = math.sqrt(max(2.0 * (psi(1.0) - psi(beta_deep)), 1e-6))
    return max(e_touch * (1.0 + 1e-6), p.inv_tau / (1.0 - delta) + 1e-9), e_deep


def solve_transonic_shock(
    p: ModelParams,
    rho_l: float,
    delta_schedule: tuple[float, ...] = DEFAULT_DELTA_SCHEDULE,
    cfg: IntegratorConfig | None = None,
) -> Solution:
    """Transonic solution with one entropic jump at density rho_l.

    Sonic endpoints are approached through a vanishing offset delta: each
    member of the schedule launches at rho = 1 - delta, dives through the
    supersonic branch, jumps at its last upward crossing of rho_l, climbs
    the subsonic branch to rho = 1 + delta at x = 1, and the family is
    extrapolated linearly in delta on shock-aligned grids.
    """
    if not 0.0 < rho_l < 1.0:
        raise PreconditionViolation("the pre-shock density must lie in (0, 1)")
    _check_regime_for_shock(p)
    cfg = cfg or IntegratorConfig()
    deltas = tuple(sorted(set(float(d) for d in delta_schedule), reverse=True))
    if len(deltas) < 2 or deltas[0] > cfg.sonic_band:
        raise ValueError("delta schedule must contain >= 2 offsets inside the sonic band")
    if rho_l >= 1.0 - deltas[0]:
        raise PreconditionViolation("rho_l must sit below the largest launch offset")

    runs = []
    for delta in deltas:
        e_lo, e_hi = _shock_bracket(delta, rho_l, p)
        r_lo, _ = _shock_shot(e_lo, delta, rho_l, p, cfg)
        grow = 0
        while r_lo >= 0.0:
            # seed sits past the solution: pull toward the touching energy
            e_lo = 0.5 * (e_lo + p.inv_tau)
            grow += 1
            if grow > 60:
                raise BracketFailure(
                    "no launch field keeps the shock construction short of x = 1",
                    diagnostics={"delta": delta, "e_lo": e_lo},
                )
            r_lo, _ = _shock_shot(e_lo, delta, rho_l, p, cfg)
        r_hi, _ = _shock_shot(e_hi, delta, rho_l, p, cfg)
        grow = 0
        while r_hi <= 0.0:
            e_hi *= 1.5
            grow += 1
            if grow > 60:
                raise BracketFailure(
                    "no launch field pushes the shock construction past x = 1",
                    diagnostics={"delta": delta, "e_hi": e_hi},
                )
            r_hi, _ = _shock_shot(e_hi, delta, rho_l, p, cfg)

        def residual(e0: float) -> float:
            r, _ = _shock_shot(e0, delta, rho_l, p, cfg)
            return r

        e_star = brentq(residual, e_lo, e_hi, xtol=1e-13, rtol=8.9e-16)
        r_star, parts = _shock_shot(e_star, delta, rho_l, p, _fine(cfg))
        if parts is None or abs(r_star) > 1e-7:
            raise ShootingDivergence(
                "shock shooting failed to land at x = 1",
                diagnostics={"delta": delta, "residual": r_star},
            )
        sup, sub = parts
        if abs(sup.last.rho - rho_l) > 1e-9:
            raise LastCrossingMissing(
                "supersonic branch did not terminate on the required crossing",
                diagnostics={"delta": delta, "rho_end": sup.last.rho},
            )
        # the upward crossing is the last one only if the dive is unimodal;
        # along rho E = 1/tau the excess decays, so exactly one interior
        # minimum may occur.  Verify rather than assume.
        q = sup.rhos * sup.es - p.inv_tau
        crossings = int(np.count_nonzero(np.diff(np.sign(q)) != 0))
        if crossings != 1:
            raise LastCrossingMissing(
                "supersonic branch is not unimodal; the jump point is ambiguous",
                diagnostics={"delta": delta, "sign_changes": crossings},
            )
        runs.append({"delta": delta, "e0": e_star, "parts": parts})

    # --- extrapolate the offset family to delta = 0 ------------------------
    # Lagrange weights at delta = 0 over the last (up to) three runs remove
    # the delta and delta^2 components of the offset error; shock-aligned
    # normalized coordinates keep the branches aligned across runs.
    use = runs[-3:]
    ds = [r["delta"] for r in use]
    weights = []
    for i, di in enumerate(ds):
        w = 1.0
        for k, dk in enumerate(ds):
            if k != i:
                w *= dk / (dk - di)
        weights.append(w)

    sup_segs = [r["parts"][0] for r in use]
    sub_segs = [r["parts"][1] for r in use]
    x0s = [s.last.x for s in sup_segs]
    x5s = [s.last.x for s in sub_segs]
    x0 = sum(w * v for w, v in zip(weights, x0s))
    x5 = sum(w * v for w, v in zip(weights, x5s))

    def branch_extrapolate(segs, starts, ends):
        """Combine runs on the finest run's normalized abscissa."""
        fine = segs[-1]
        xi = (fine.xs - starts[-1]) / (ends[-1] - starts[-1])
        rho = np.zeros_like(xi)
        e = np.zeros_like(xi)
        for w, seg, a, b in zip(weights, segs, starts, ends):
            xq = a + xi * (b - a)
            rho += w * np.interp(xq, seg.xs, seg.rhos)
            e += w * np.interp(xq, seg.xs, seg.es)
        return xi, rho, e

    xi_l, rho_l_arr, e_l_arr = branch_extrapolate(
        sup_segs, [0.0] * len(use), x0s
    )
    xi_r, rho_r_arr, e_r_arr = branch_extrapolate(sub_segs, x0s, x5s)

    x_left = xi_l * x0
    x_right = x0 + xi_r * (x5 - x0)
    rho_l_arr[0] = 1.0  # launch offsets extrapolate to the exact sonic value
    rho_r_arr[-1] = 1.0
    rho_l_arr[-1] = rho_l
    rho_r_arr[0] = 1.0 / rho_l

    e_jump = e_l_arr[-1]
    e_r_arr[0] = e_jump
    shock = ShockData(x0=float(x0), rho_l=rho_l, rho_r=1.0 / rho_l, e_jump=float(e_jump))

    xs = np.concatenate([x_left, x_right])
    rhos = np.concatenate([rho_l_arr, rho_r_arr])
    es = np.concatenate([e_l_arr, e_r_arr])

    # the plain two-run linear extrapolation gauges the remaining delta error
    if len(use) >= 3:
        w2 = ds[-1] / (ds[-2] - ds[-1])
        x0_alt = x0s[-1] + w2 * (x0s[-1] - x0s[-2])
        extrap_gap = abs(x0 - x0_alt)
    else:
        extrap_gap = math.nan

    return Solution(
        kind="transonic_shock",
        x=xs,
        rho=rhos,
        e=es,
        shock=shock,
        diagnostics={
            "construction": "delta_extrapolated",
            "delta_schedule": list(deltas),
            "x0_per_delta": [float(r["parts"][0].last.x) for r in runs],
            "e0_per_delta": [float(r["e0"]) for r in runs],
            "x0_extrapolation_gap": float(extrap_gap),
            "boundary_residual": float(abs(x5 - 1.0)),
            "rho_l": rho_l,
        },
    )


# ---------------------------------------------------------------------------
# C1 transonic
# ---------------------------------------------------------------------------


def _tangential_landing_shot(
    side: str, q_launch: float, p: ModelParams, cfg: IntegratorConfig, n_stop: float
):
    """Integrate one branch from its square-root end toward its C1 landing.

    side "supersonic": launch at x = 0, land from below somewhere interior.
    side "subsonic": launch backward from x = 1, land from above.
    Returns (segment, None) on success, (None, "short"/"long") otherwise.
    """
    if side == "supersonic":
        target = TargetDensity(1.0 - n_stop, direction=+1)
        seg = integrate_from_sonic(
            0.0, "supersonic", p.inv_tau + q_launch, "forward",
            [target, DomainEnd(3.0)], p, cfg,
        )
    else:
        target = TargetDensity(1.0 + n_stop, direction=+1)
        seg = integrate_from_sonic(
            1.0, "subsonic", p.inv_tau + q_launch, "backward",
            [target, DomainEnd(-2.0)], p, cfg,
        )
    kind = seg.terminator.kind if seg.terminator is not None else None
    if kind == "target_density":
        return seg, None
    if kind in ("step_failure", "sonic_arrival"):
        # stalled at an in-band turning point or slid back onto the sonic
        # line before reaching the stop offset: the excursion is too shallow
        return None, "short"
    return None, "long"


def _landing_fit(seg: TrajectorySegment, side: str, p: ModelParams, n_stop: float):
    """Extrapolate the tangential landing point, slope and field from the tail.

    Samples with n_stop <= |rho - 1| <= 10 n_stop lie on the final density
    leg, where the landing approach x(n) is smooth; a cubic fit in the
    rescaled offset gives x(0), dx/dn(0) and F(0) = E - 1/(tau rho) at 0.
    """
    n = seg.rhos - 1.0
    absn = np.abs(n)
    win = (absn >= n_stop * (1.0 - 1e-12)) & (absn <= 10.0 * n_stop)
    # keep only the landing end of the arc
    half = (seg.xs >= seg.xs[len(seg.xs) // 2]) if side == "supersonic" else (
        seg.xs <= seg.xs[len(seg.xs) // 2]
    )
    win &= half
    if np.count_nonzero(win) < 8:
        return None
    t = n[win] / n_stop
    x_fit = np.polynomial.polynomial.polyfit(t, seg.xs[win], 3)
    f_vals = seg.es[win] - p.inv_tau / seg.rhos[win]
    f_fit = np.polynomial.polynomial.polyfit(t, f_vals[:], 3)
    x_hat = float(x_fit[0])
    dx_dn = float(x_fit[1]) / n_stop
    slope = 1.0 / dx_dn
    e_hat = p.inv_tau + float(f_fit[0])
    return x_hat, slope, e_hat


def solve_c1_transonic(
    p: ModelParams,
    x0: float,
    cfg: IntegratorConfig | None = None,
    n_stop: float = 1e-4,
) -> Solution:
    """Continuously differentiable transonic solution through rho(x0) = 1.

    Each branch leaves its square-root sonic endpoint (x = 0 supersonic,
    x = 1 subsonic) and lands tangentially on the sonic line with the slope
    theta1/2 fixed by the degenerate transition; the launch excess is tuned
    until the fitted landing abscissa equals x0.  Tangential landings form a
    one-parameter family, which is what makes an interior matching point
    adjustable at all.
    """
    if not 0.0 < x0 < 1.0:
        raise PreconditionViolation("the transition point must be interior")
    if not (p.doping.is_constant and p.doping.constant_value > 1.0):
        raise PreconditionViolation(
            "smooth transonic profiles need constant doping above the sonic level"
        )
    b = p.doping.constant_value
    if p.tau >= tau0_bound(b):
        raise RegimeRejection(
            "relaxation is too weak for a degenerate sonic transition",
            theorem_ref="Theorem 2.22",
        )
    cfg = cfg or IntegratorConfig()
    slope_ref = c1_transition_slope(b, p.tau)

    def solve_branch(side: str):
        sign = 1.0 if side == "supersonic" else -1.0

        def residual(q_mag: float):
            seg, fail = _tangential_landing_shot(side, sign * q_mag, p, cfg, n_stop)
            if seg is None:
                return (-_OVERSHOOT if fail == "short" else _OVERSHOOT), None
            fit = _landing_fit(seg, side, p, n_stop)
            if fit is None:
                return -_OVERSHOOT, None  # excursion too shallow to fit a tail
            x_hat, slope, e_hat = fit
            # both residuals grow with the launch magnitude: longer arcs land
            # farther from their launch wall
            r = (x_hat - x0) if side == "supersonic" else (x0 - x_hat)
            return r, (seg, x_hat, slope, e_hat)

        # bracket: landing distance from the launch wall grows with |q|
        q_lo, q_hi = 1e-4, 0.05
        r_lo, _ = residual(q_lo)
        grow = 0
        while r_lo >= 0.0:
            q_lo *= 0.5
            grow += 1
            if grow > 60:
                raise BracketFailure(
                    "no launch excess lands short of the transition point",
                    diagnostics={"side": side, "x0": x0},
                )
            r_lo, _ = residual(q_lo)
        r_hi, _ = residual(q_hi)
        grow = 0
        while r_hi <= 0.0:
            q_hi *= 2.0
            grow += 1
            if grow > 60:
                raise BracketFailure(
                    "no launch excess lands beyond the transition point",
                    diagnostics={"side": side, "x0": x0},
                )
            r_hi, _ = residual(q_hi)

        best = None
        for _ in range(200):
            q_mid = 0.5 * (q_lo + q_hi)
            r_mid, data = residual(q_mid)
            if data is not None:
                if best is None or abs(r_mid) < abs(best[0]):
                    best = (r_mid, q_mid, data)
            if r_mid < 0.0:
                q_lo = q_mid
            else:
                q_hi = q_mid
            if (best is not None and abs(best[0]) < 1e-11) or q_hi - q_lo < 1e-16:
                break
        if best is None or abs(best[0]) > 1e-7:
            raise ShootingDivergence(
                "branch shooting failed to place the tangential landing",
                diagnostics={"side": side, "x0": x0},
            )
        _, q_best, _ = best
        seg, fail = _tangential_landing_shot(side, sign * q_best, p, _fine(cfg), n_stop)
        if seg is None:
            raise ShootingDivergence(
                "accepted branch lost its landing on re-integration",
                diagnostics={"side": side, "x0": x0, "failure": fail},
            )
        fit = _landing_fit(seg, side, p, n_stop)
        if fit is None:
            raise ShootingDivergence(
                "accepted branch lost its landing window on re-integration",
                diagnostics={"side": side, "x0": x0},
            )
        x_hat, slope, e_hat = fit
        if abs(x_hat - x0) > 1e-7:
            raise ShootingDivergence(
                "re-integrated landing moved away from the transition point",
                diagnostics={"side": side, "x0": x0, "x_hat": x_hat},
            )
        return seg, sign * q_best, x_hat, slope, e_hat

    sup_seg, q_sup, x_sup, m_sup, e_sup = solve_branch("supersonic")
    sub_seg, q_sub, x_sub, m_sub, e_sub = solve_branch("subsonic")

    slope_gap = max(abs(m_sup - slope_ref), abs(m_sub - slope_ref)) / slope_ref
    e_gap = abs(e_sup - e_sub)
    x_gap = abs(x_sup - x_sub)
    if slope_gap > 1e-2 or e_gap > 1e-6 or x_gap > 1e-6:
        raise GlueMismatch(
            "branch landings disagree at the sonic transition",
            diagnostics={
                "slope_gap": slope_gap,
                "e_gap": e_gap,
                "x_gap": x_gap,
            },
        )

    e0 = 0.5 * (e_sup + e_sub)
    # supersonic branch runs 0 -> x0; subsonic was integrated backward from 1
    xs = np.concatenate([sup_seg.xs, [x0], sub_seg.xs[::-1]])
    rhos = np.concatenate([sup_seg.rhos, [1.0], sub_seg.rhos[::-1]])
    es = np.concatenate([sup_seg.es, [e0], sub_seg.es[::-1]])

    return Solution(
        kind="c1_transonic",
        x=xs,
        rho=rhos,
        e=es,
        transition=TransitionData(x0=x0, slope=0.5 * (m_sup + m_sub)),
        diagnostics={
            "construction": "ode_trajectory_glued",
            "sup_launch_field": p.inv_tau + q_sup,
            "sub_launch_field": p.inv_tau + q_sub,
            "slope_reference": slope_ref,
            "slope_fitted": [float(m_sup), float(m_sub)],
            "x_hat": [float(x_sup), float(x_sub)],
            "transition_field_gap": float(e_gap),
            "boundary_residual": float(max(abs(x_sup - x0), abs(x_sub - x0))),
            "n_stop": n_stop,
        },
    )
