"""Adaptive integration of the steady-flow ODE with event detection.

The system

    (rho^(gamma-1) - rho^-2) rho_x = rho*E - 1/tau,
    E_x = rho - b(x),

degenerates on the sonic line rho = 1, so no single chart can both cross the
bulk of the domain and resolve sonic approaches.  The driver here stitches two
charts:

* the x-chart, integrating (rho, E) over x away from the sonic line, and
* the rho-chart, integrating (E, x) over rho inside a narrow band around
  rho = 1, where dx/drho = (rho^(gamma-1) - rho^-2)/(rho*E - 1/tau) vanishes
  at the sonic line and the square-root behaviour of rho(x) becomes a
  perfectly regular initial value problem.

Termination is reported through events (sonic arrival, target density,
critical point rho*E = 1/tau, blow-up, domain end, step failure).  Sonic
arrivals, blow-ups and step failures always terminate: the trajectory cannot
be continued through them within one chart run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DegenerateLaunch,
    IntegrationFailure,
    SonicSingularity,
)
from .model_core import (
    CRITICAL_GUARD,
    SONIC_COEF_GUARD,
    ModelParams,
    State,
    c1_transition_slope,
    tau0_bound,
)

# event kind labels
SONIC_ARRIVAL = "sonic_arrival"
TARGET_DENSITY = "target_density"
CRITICAL_POINT = "critical_point"
BLOW_UP = "blow_up"
DOMAIN_END = "domain_end"
STEP_FAILURE = "step_failure"

# band-entry events fire slightly inside the nominal band so a leg that just
# exited at the band edge does not re-trigger them immediately
_BAND_INSET = 1.0 - 1e-9
_CHART_INSET = 1.0 - 1e-10
_MAX_LEGS = 256
_MIN_GRADED = 1e-6  # finest |rho - 1| resolved by the rho-leg sample grid


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and thresholds for the chart-switching driver."""

    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_step: float = 1e-2
    sonic_band: float = 1e-2
    blow_up_density: float = 1e4
    blow_up_field: float = 1e4
    max_arc_length: float = 1e3

    def __post_init__(self):
        for name in (
            "rel_tol",
            "abs_tol",
            "max_step",
            "sonic_band",
            "blow_up_density",
            "blow_up_field",
            "max_arc_length",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        # the x-chart must stay clear of the degenerate coefficient
        if self.sonic_band <= SONIC_COEF_GUARD:
            raise ValueError("sonic_band must exceed the sonic coefficient guard")


class EventSpec:
    """Base for stop-event requests passed to integrate()."""


@dataclass(frozen=True)
class SonicArrival(EventSpec):
    pass


@dataclass(frozen=True)
class TargetDensity(EventSpec):
    """Stop (or record, if terminal=False) when rho crosses `value`.

    `direction` is the sign of drho/dx at the crossing: +1 fires only on
    upward crossings, -1 only on downward ones, 0 on either.
    """

    value: float
    direction: int = 0
    terminal: bool = True

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("target density must be positive")
        if self.direction not in (-1, 0, 1):
            raise ValueError("direction must be -1, 0 or 1")


@dataclass(frozen=True)
class CriticalPoint(EventSpec):
    pass


@dataclass(frozen=True)
class DomainEnd(EventSpec):
    x: float


@dataclass(frozen=True)
class Event:
    kind: str
    state: State
    value: float | None = None


@dataclass
class TrajectorySegment:
    """One integrated arc: sample arrays plus the event that ended it.

    `xs` is strictly monotone (increasing for forward runs, decreasing for
    backward ones); `events` collects non-terminal occurrences (recorded
    critical points and non-terminal target crossings) in traversal order.
    """

    xs: np.ndarray
    rhos: np.ndarray
    es: np.ndarray
    terminator: Event
    events: list[Event] = field(default_factory=list)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.rhos = np.asarray(self.rhos, dtype=float)
        self.es = np.asarray(self.es, dtype=float)
        if not (len(self.xs) == len(self.rhos) == len(self.es)):
            raise ValueError("coordinate arrays must share a length")
        if len(self.xs) == 0:
            raise ValueError("empty trajectory segment")
        if len(self.xs) > 1:
            steps = np.diff(self.xs)
            if not (np.all(steps > 0) or np.all(steps < 0)):
                raise ValueError("trajectory abscissae must be strictly monotone")

    @property
    def direction(self) -> str:
        if len(self.xs) < 2 or self.xs[-1] > self.xs[0]:
            return "forward"
        return "backward"

    @property
    def first(self) -> State:
        return State(float(self.xs[0]), float(self.rhos[0]), float(self.es[0]))

    @property
    def last(self) -> State:
        return State(float(self.xs[-1]), float(self.rhos[-1]), float(self.es[-1]))

    @property
    def states(self) -> list[State]:
        return [
            State(float(x), float(r), float(e))
            for x, r, e in zip(self.xs, self.rhos, self.es)
        ]

    def critical_events(self, merge_tol: float = 1e-9) -> list[Event]:
        """Recorded critical-point events, deduplicated by abscissa."""
        out: list[Event] = []
        for ev in self.events:
            if ev.kind != CRITICAL_POINT:
                continue
            if out and abs(ev.state.x - out[-1].state.x) <= merge_tol:
                continue
            out.append(ev)
        return out

    def midpoint_defect(self, p: ModelParams) -> float:
        """Worst midpoint-rule consistency defect over x-chart intervals.

        For each consecutive sample pair the finite-difference slope is
        compared against the ODE right-hand side at the interval midpoint,
        normalized by 1 + |rhs|.  Pairs inside the sonic band or close to the
        critical locus are skipped; there the comparison is ill-conditioned
        by construction and the rho-chart owns the accuracy story.
        """
        rhs = _make_rhs_x(p)
        worst = 0.0
        for k in range(len(self.xs) - 1):
            dx = self.xs[k + 1] - self.xs[k]
            if dx == 0.0:
                continue
            rm = 0.5 * (self.rhos[k] + self.rhos[k + 1])
            em = 0.5 * (self.es[k] + self.es[k + 1])
            if abs(rm - 1.0) < 1.5e-2 or abs(rm * em - p.inv_tau) < 1e-3:
                continue
            xm = 0.5 * (self.xs[k] + self.xs[k + 1])
            fr, fe = rhs(xm, (rm, em))
            dr = (self.rhos[k + 1] - self.rhos[k]) / dx
            de = (self.es[k + 1] - self.es[k]) / dx
            defect = max(
                abs(dr - fr) / (1.0 + abs(fr)), abs(de - fe) / (1.0 + abs(fe))
            )
            worst = max(worst, defect)
        return worst


def _make_rhs_x(p: ModelParams):
    inv_tau = p.inv_tau
    gamma = p.gamma
    if p.doping.is_constant:
        bc = p.doping.constant_value

        def bfun(x):
            return bc

    else:
        prof = p.doping

        def bfun(x):
            return float(prof(x))

    if gamma == 1.0:

        def rhs(x, y):
            r, e = y
            r2 = r * r
            return ((r * e - inv_tau) * r2 / (r2 - 1.0), r - bfun(x))

    else:

        def rhs(x, y):
            r, e = y
            coef = r ** (gamma - 1.0) - r ** (-2.0)
            return ((r * e - inv_tau) / coef, r - bfun(x))

    return rhs


def _make_rhs_rho(p: ModelParams):
    inv_tau = p.inv_tau
    gamma = p.gamma
    if p.doping.is_constant:
        bc = p.doping.constant_value

        def bfun(x):
            return bc

    else:
        prof = p.doping

        def bfun(x):
            return float(prof(x))

    if gamma == 1.0:

        def rhs(r, y):
            e, x = y
            dxdr = (1.0 - 1.0 / (r * r)) / (r * e - inv_tau)
            return ((r - bfun(x)) * dxdr, dxdr)

    else:

        def rhs(r, y):
            e, x = y
            dxdr = (r ** (gamma - 1.0) - r ** (-2.0)) / (r * e - inv_tau)
            return ((r - bfun(x)) * dxdr, dxdr)

    return rhs


def _mark(fn, terminal, direction):
    fn.terminal = terminal
    fn.direction = direction
    return fn


@dataclass
class _LegResult:
    xs: np.ndarray
    rhos: np.ndarray
    es: np.ndarray
    terminator: Event | None
    recorded: list[Event]


def _point_leg(x, rho, e, terminator):
    return _LegResult(
        np.array([x]), np.array([rho]), np.array([e]), terminator, []
    )


def _x_leg(x, rho, e, dsign, span_limit, targets, domain, want_critical, p, cfg):
    inv_tau = p.inv_tau
    band_in = cfg.sonic_band * _BAND_INSET
    rhs = _make_rhs_x(p)

    events = []
    meta = []  # (kind, value) per event function

    def add(fn, terminal, direction, kind, value=None):
        events.append(_mark(fn, terminal, direction))
        meta.append((kind, value))

    # band entry means |rho - 1| shrinking along the traversal, an x-order
    # agnostic notion: the upper threshold is always crossed downward and the
    # lower one upward in integration order
    hi, lo = 1.0 + band_in, 1.0 - band_in
    add(lambda t, y: y[0] - hi, True, -1, "_band")
    add(lambda t, y: y[0] - lo, True, 1, "_band")
    for tg in targets:
        add(
            (lambda v: lambda t, y: y[0] - v)(tg.value),
            tg.terminal,
            tg.direction * dsign,
            TARGET_DENSITY,
            tg.value,
        )
    add(lambda t, y: y[0] * y[1] - inv_tau, want_critical, 0, CRITICAL_POINT)
    add(lambda t, y: y[0] - cfg.blow_up_density, True, 0, BLOW_UP)
    add(lambda t, y: y[0] - 1.0 / cfg.blow_up_density, True, 0, BLOW_UP)
    add(lambda t, y: y[1] - cfg.blow_up_field, True, 0, BLOW_UP)
    add(lambda t, y: y[1] + cfg.blow_up_field, True, 0, BLOW_UP)

    x_end = x + dsign * span_limit
    ends_at_domain = False
    if domain is not None:
        ahead = dsign * (domain.x - x)
        if ahead == 0.0:
            return _point_leg(x, rho, e, Event(DOMAIN_END, State(x, rho, e), domain.x))
        if 0.0 < ahead < span_limit:
            x_end = domain.x
            ends_at_domain = True

    sol = solve_ivp(
        rhs,
        (x, x_end),
        [rho, e],
        method="RK45",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
        events=events,
    )

    xs, rs, es = sol.t, sol.y[0], sol.y[1]
    recorded = []
    for i, (kind, value) in enumerate(meta):
        if kind in (CRITICAL_POINT, TARGET_DENSITY) and not events[i].terminal:
            for t_ev, y_ev in zip(sol.t_events[i], sol.y_events[i]):
                recorded.append(
                    Event(kind, State(float(t_ev), float(y_ev[0]), float(y_ev[1])), value)
                )
    recorded.sort(key=lambda ev: dsign * ev.state.x)

    if sol.status == -1:
        term = Event(STEP_FAILURE, State(float(xs[-1]), float(rs[-1]), float(es[-1])))
        return _LegResult(xs, rs, es, term, recorded)
    if sol.status == 0:
        end = State(float(xs[-1]), float(rs[-1]), float(es[-1]))
        if ends_at_domain:
            return _LegResult(xs, rs, es, Event(DOMAIN_END, end, x_end), recorded)
        raise IntegrationFailure(
            "arc length budget exhausted before any stop event",
            diagnostics={"x": end.x, "rho": end.rho, "e": end.e},
        )

    # a terminal event fired; identify the chronologically first one
    fired = None
    for i, fn in enumerate(events):
        if fn.terminal and len(sol.t_events[i]):
            te = sol.t_events[i][0]
            key = dsign * (te - x)
            if fired is None or key < fired[0]:
                fired = (key, i, te, sol.y_events[i][0])
    _, idx, te, ye = fired
    kind, value = meta[idx]
    end = State(float(te), float(ye[0]), float(ye[1]))
    term = None if kind == "_band" else Event(kind, end, value)
    return _LegResult(xs, rs, es, term, recorded)


def _rho_grid(r_a, r_b, inserts=()):
    """Sample densities from r_a to r_b, log-graded in |rho - 1|."""
    n_a, n_b = abs(r_a - 1.0), abs(r_b - 1.0)
    branch = math.copysign(1.0, (r_a - 1.0) if r_a != 1.0 else (r_b - 1.0))
    lo = max(min(n_a, n_b), _MIN_GRADED)
    hi = max(n_a, n_b)
    mags = set()
    if hi > lo:
        num = min(400, max(24, int(40 * math.log10(hi / lo)) + 1))
        mags.update(np.geomspace(lo, hi, num).tolist())
    mags.update((n_a, n_b))
    mags.update(abs(v - 1.0) for v in inserts)
    lo_lim, hi_lim = min(n_a, n_b), max(n_a, n_b)
    kept = sorted(m for m in mags if lo_lim <= m <= hi_lim)
    rhos = [1.0 + branch * m for m in kept]
    if abs(r_b - 1.0) > abs(r_a - 1.0):
        pts = np.array(rhos)
    else:
        pts = np.array(rhos[::-1])
    pts[0], pts[-1] = r_a, r_b
    return pts


def _rho_leg(x, rho, e, dsign, side, targets, domain, p, cfg):
    inv_tau = p.inv_tau
    q = rho * e - inv_tau
    here = State(x, rho, e)
    if abs(q) <= CRITICAL_GUARD:
        # simultaneously near-sonic and near-critical: no chart applies
        return _point_leg(x, rho, e, Event(STEP_FAILURE, here))

    if rho == 1.0:
        if side not in ("supersonic", "subsonic"):
            raise SonicSingularity(
                "a run starting on the sonic line needs an explicit branch"
            )
        branch = -1.0 if side == "supersonic" else 1.0
        s_rho = branch  # departure is always away from the sonic line
        if (1.0 if q > 0 else -1.0) != dsign:
            raise ValueError(
                "sonic departure direction is set by sign(E - 1/tau); "
                f"requested {'forward' if dsign > 0 else 'backward'} conflicts"
            )
    else:
        branch = math.copysign(1.0, rho - 1.0)
        drho_dx_sign = math.copysign(1.0, q) * branch  # sign of q/coef
        s_rho = dsign * drho_dx_sign

    r_b = 1.0 if s_rho == -branch else 1.0 + branch * cfg.sonic_band
    cross_dir = int(s_rho * dsign)  # sign of drho/dx while traversing

    def matches(tg):
        if tg.direction not in (0, cross_dir):
            return False
        return (tg.value - rho) * s_rho > 0 and (r_b - tg.value) * s_rho >= 0

    live = sorted((tg for tg in targets if matches(tg)), key=lambda tg: s_rho * tg.value)
    term_target = next((tg for tg in live if tg.terminal), None)
    if term_target is not None:
        r_b = term_target.value
        live = [tg for tg in live if (r_b - tg.value) * s_rho > 0 and not tg.terminal]
    record_values = [tg.value for tg in live if not tg.terminal]

    rhs = _make_rhs_rho(p)
    events = []
    meta = []

    def add(fn, terminal, direction, kind, value=None):
        events.append(_mark(fn, terminal, direction))
        meta.append((kind, value))

    add(
        lambda r, y: (r * y[0] - inv_tau) ** 2 - CRITICAL_GUARD**2,
        True,
        -1,
        STEP_FAILURE,
    )
    add(lambda r, y: y[0] - cfg.blow_up_field, True, 0, BLOW_UP)
    add(lambda r, y: y[0] + cfg.blow_up_field, True, 0, BLOW_UP)
    if domain is not None and dsign * (domain.x - x) > 0:
        add(
            (lambda xd: lambda r, y: y[1] - xd)(domain.x),
            True,
            dsign,
            DOMAIN_END,
            domain.x,
        )

    t_eval = _rho_grid(rho, r_b, inserts=record_values)
    sol = solve_ivp(
        rhs,
        (rho, r_b),
        [e, x],
        method="RK45",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=cfg.max_step,
        events=events,
        t_eval=t_eval,
        dense_output=True,
    )

    rs, es, xs = sol.t, sol.y[0], sol.y[1]

    terminator = None
    if sol.status == -1:
        terminator = Event(
            STEP_FAILURE, State(float(xs[-1]), float(rs[-1]), float(es[-1]))
        )
    elif sol.status == 1:
        fired = None
        for i, fn in enumerate(events):
            if fn.terminal and len(sol.t_events[i]):
                te = sol.t_events[i][0]
                key = s_rho * (te - rho)
                if fired is None or key < fired[0]:
                    fired = (key, i, te, sol.y_events[i][0])
        _, idx, te, ye = fired
        kind, value = meta[idx]
        end = State(float(ye[1]), float(te), float(ye[0]))
        terminator = Event(kind, end, value)
        if len(rs) == 0 or rs[-1] != te:
            rs = np.append(rs, te)
            es = np.append(es, ye[0])
            xs = np.append(xs, ye[1])
    else:
        end = State(float(xs[-1]), float(rs[-1]), float(es[-1]))
        if r_b == 1.0:
            terminator = Event(SONIC_ARRIVAL, end)
        elif term_target is not None:
            terminator = Event(TARGET_DENSITY, end, term_target.value)
        # otherwise: clean band exit, caller continues in the x-chart

    # the rho grid can be coarse in x near a tangential crossing; densify
    # so the stored abscissas respect the step cap like every other leg
    for _ in range(3):
        if len(rs) < 2:
            break
        gaps = np.abs(np.diff(xs))
        wide = np.nonzero(gaps > cfg.max_step)[0]
        if not len(wide):
            break
        fill = [
            np.linspace(rs[i], rs[i + 1], int(math.ceil(gaps[i] / cfg.max_step)) + 1)[1:-1]
            for i in wide
        ]
        extra = np.concatenate(fill)
        ye = sol.sol(extra)
        rs = np.concatenate([rs, extra])
        es = np.concatenate([es, ye[0]])
        xs = np.concatenate([xs, ye[1]])
        order = np.argsort(s_rho * rs)
        rs, es, xs = rs[order], es[order], xs[order]
        keep = np.concatenate([[True], np.diff(xs) != 0.0])
        rs, es, xs = rs[keep], es[keep], xs[keep]

    recorded = []
    for v in record_values:
        hit = np.nonzero(rs == v)[0]
        if len(hit):
            k = int(hit[0])
            recorded.append(
                Event(TARGET_DENSITY, State(float(xs[k]), float(rs[k]), float(es[k])), v)
            )
    recorded.sort(key=lambda ev: dsign * ev.state.x)
    return _LegResult(xs, rs, es, terminator, recorded)


def _run(x, rho, e, direction, stop_events, p, cfg, sonic_side=None):
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    dsign = 1.0 if direction == "forward" else -1.0

    specs = []
    for s in stop_events or ():
        if isinstance(s, type):
            s = s()
        if not isinstance(s, EventSpec):
            raise TypeError(f"not an event spec: {s!r}")
        specs.append(s)
    targets = [s for s in specs if isinstance(s, TargetDensity)]
    domains = [s for s in specs if isinstance(s, DomainEnd)]
    if len(domains) > 1:
        raise ValueError("at most one DomainEnd stop is supported")
    domain = domains[0] if domains else None
    want_critical = any(isinstance(s, CriticalPoint) for s in specs)

    xs_parts: list[np.ndarray] = []
    r_parts: list[np.ndarray] = []
    e_parts: list[np.ndarray] = []
    recorded: list[Event] = []
    x_origin = x
    side = sonic_side
    terminator = None

    for _ in range(_MAX_LEGS):
        in_band = rho == 1.0 or abs(rho - 1.0) < cfg.sonic_band * _CHART_INSET
        if in_band:
            leg = _rho_leg(x, rho, e, dsign, side, targets, domain, p, cfg)
        else:
            remaining = cfg.max_arc_length - abs(x - x_origin)
            leg = _x_leg(
                x, rho, e, dsign, remaining, targets, domain, want_critical, p, cfg
            )
        side = None
        skip = 1 if xs_parts and len(leg.xs) > 1 else 0
        if len(leg.xs) > skip:
            xs_parts.append(leg.xs[skip:])
            r_parts.append(leg.rhos[skip:])
            e_parts.append(leg.es[skip:])
        recorded.extend(leg.recorded)
        if leg.terminator is not None:
            terminator = leg.terminator
            break
        x = float(leg.xs[-1])
        rho = float(leg.rhos[-1])
        e = float(leg.es[-1])
        if abs(x - x_origin) >= cfg.max_arc_length:
            raise IntegrationFailure(
                "arc length budget exhausted while switching charts",
                diagnostics={"x": x, "rho": rho, "e": e},
            )
    else:
        raise IntegrationFailure("chart switch limit exceeded")

    xs = np.concatenate(xs_parts)
    rs = np.concatenate(r_parts)
    es = np.concatenate(e_parts)

    # enforce strictly monotone abscissae; x can stall by roundoff only in
    # the last few rho-chart samples hugging the sonic line, where dropping
    # the earlier of two coincident points loses nothing
    keep_x = [xs[0]]
    keep_r = [rs[0]]
    keep_e = [es[0]]
    for k in range(1, len(xs)):
        if dsign * (xs[k] - keep_x[-1]) > 0:
            keep_x.append(xs[k])
            keep_r.append(rs[k])
            keep_e.append(es[k])
        else:
            keep_x[-1], keep_r[-1], keep_e[-1] = xs[k], rs[k], es[k]

    return TrajectorySegment(
        np.array(keep_x), np.array(keep_r), np.array(keep_e), terminator, recorded
    )


def integrate(
    start: State,
    direction: str,
    stop_events,
    p: ModelParams,
    cfg: IntegratorConfig | None = None,
) -> TrajectorySegment:
    """Integrate from an off-sonic state until the first stop event.

    Sonic arrival, blow-up and step failure terminate whether or not they
    were requested; `TargetDensity`, `CriticalPoint` and `DomainEnd` stops
    come from `stop_events`.  Starts exactly on the sonic line are rejected:
    the outgoing branch is ambiguous there, use `integrate_from_sonic` or
    `launch_from_sonic` instead.
    """
    cfg = cfg or IntegratorConfig()
    if abs(start.rho - 1.0) < 1e-12:
        raise SonicSingularity(
            "integrate() cannot start on the sonic line; launch explicitly"
        )
    return _run(start.x, start.rho, start.e, direction, stop_events, p, cfg)


def integrate_from_sonic(
    x0: float,
    side: str,
    e0: float,
    direction: str,
    stop_events,
    p: ModelParams,
    cfg: IntegratorConfig | None = None,
) -> TrajectorySegment:
    """Integrate an arc leaving the sonic line at (x0, rho=1, E=e0) exactly.

    The departure is computed in the rho-chart, where the sonic point is a
    regular initial condition, so no local-expansion truncation enters.  The
    departure direction is dictated by sign(e0 - 1/tau): the density offset
    grows like (e0 - 1/tau)*(x - x0) on either branch, so e0 > 1/tau leaves
    forward and e0 < 1/tau leaves backward; `direction` must agree.
    """
    cfg = cfg or IntegratorConfig()
    if side not in ("supersonic", "subsonic"):
        raise ValueError("side must be 'supersonic' or 'subsonic'")
    q = e0 - p.inv_tau
    if abs(q) <= CRITICAL_GUARD:
        raise DegenerateLaunch(
            "sonic departure requires E(x0) != 1/tau; tangential launches "
            "have no square-root branch"
        )
    return _run(x0, 1.0, e0, direction, stop_events, p, cfg, sonic_side=side)


def launch_from_sonic(
    x0: float,
    side: str,
    e0: float,
    p: ModelParams,
    cfg: IntegratorConfig | None = None,
) -> State:
    """Leading-order off-sonic state at |rho - 1| = sonic_band/2.

    With q = e0 - 1/tau != 0, w = (rho-1)^2 grows linearly, w_x = 2q/(gamma+1)
    at the sonic point, giving the square-root branches rho = 1 +- sqrt(w).
    With q = 0 the only admissible departure is the smooth transition branch
    rho - 1 = slope*(x - x0), available for constant doping b > 1 with tau
    below tau0_bound(b); anything else is a degenerate launch.

    The expansion is trusted only out to half the sonic band; integrate from
    the returned state to go further.
    """
    cfg = cfg or IntegratorConfig()
    if side not in ("supersonic", "subsonic"):
        raise ValueError("side must be 'supersonic' or 'subsonic'")
    q = e0 - p.inv_tau
    offset = cfg.sonic_band / 2.0
    sgn = -1.0 if side == "supersonic" else 1.0

    if abs(q) > 1e-12:
        w_off = offset * offset
        dx = w_off * (p.gamma + 1.0) / (2.0 * q)
        rho = 1.0 + sgn * offset
        e = e0 + (1.0 - p.b(x0)) * dx
        return State(x0 + dx, rho, e)

    # tangential branch: E == 1/tau at the sonic point
    if not (p.doping.is_constant and p.doping.constant_value > 1.0):
        raise DegenerateLaunch(
            "a tangential sonic departure exists only for constant doping "
            "above the sonic level"
        )
    b = p.doping.constant_value
    if p.tau >= tau0_bound(b):
        raise DegenerateLaunch(
            f"tangential departure needs tau < {tau0_bound(b):.6g}; got {p.tau}"
        )
    slope = c1_transition_slope(b, p.tau)
    dx = sgn * offset / slope  # supersonic side lies before x0, subsonic after
    rho = 1.0 + sgn * offset
    # E - 1/(tau*rho) grows with rate 2*slope in (rho - 1) along this branch
    e = 1.0 / (p.tau * rho) + 2.0 * slope * (rho - 1.0)
    return State(x0 + dx, rho, e)
