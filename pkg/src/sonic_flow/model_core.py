"""Model data types and closed-form quantities for steady Euler-Poisson flow.

The model is the steady 1-D hydrodynamic semiconductor system in normalised
form (momentum J = 1, temperature such that the sonic density is 1):

    (rho^(gamma-1) - rho^-2) rho_x = rho*E - 1/tau,
    E_x = rho - b(x),            x in [0, 1],

with sonic boundary conditions rho(0) = rho(1) = 1.  ``gamma = 1`` is the
isothermal case.  The density chart, the transformed (n, F) chart with
n = rho - 1 and F = E - 1/(tau*rho), and the rho-parametrised chart used near
the sonic line are all provided here as plain right-hand-side evaluators;
integration lives in :mod:`sonic_flow.integrator`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ComplexSlope,
    CriticalLocus,
    EntropyViolation,
    NotConstantDoping,
    SonicDoping,
    SonicSingularity,
)

# Guard half-widths for the singular sets of each chart.
SONIC_COEF_GUARD = 1e-3     # on |rho^(gamma-1) - rho^-2| in the x-chart
TRANSFORMED_GUARD = 1e-9    # on |n| in the (n, F) chart
CRITICAL_GUARD = 1e-6       # on |rho*E - 1/tau| in the rho-chart
SONIC_DOPING_TOL = 1e-12


# ---------------------------------------------------------------------------
# doping profiles


class DopingProfile:
    """Background charge density b(x) on [0, 1].

    Construct through one of the factory methods: :meth:`constant`,
    :meth:`sine_perturbed`, :meth:`piecewise_constant`, :meth:`tabulated`.
    Profiles are callable and vectorised; ``b_lower``/``b_upper`` cache the
    essential bounds used by the regime classifier.
    """

    def __init__(self, kind: str, params: dict, b_lower: float, b_upper: float):
        if b_lower <= 0:
            raise ValueError("doping must be strictly positive")
        if b_lower > b_upper:
            raise ValueError("lower doping bound exceeds upper bound")
        self.kind = kind
        self.params = params
        self.b_lower = float(b_lower)
        self.b_upper = float(b_upper)

    # -- factories ----------------------------------------------------------

    @classmethod
    def constant(cls, value: float) -> "DopingProfile":
        value = float(value)
        return cls("constant", {"value": value}, value, value)

    @classmethod
    def sine_perturbed(cls, base: float, amplitude: float, frequency: float = 1.0) -> "DopingProfile":
        """b(x) = base + amplitude * sin(2*pi*frequency*x)."""
        base, amplitude, frequency = float(base), float(amplitude), float(frequency)
        xs = np.linspace(0.0, 1.0, 4097)
        vals = base + amplitude * np.sin(2.0 * math.pi * frequency * xs)
        return cls(
            "sine",
            {"base": base, "amplitude": amplitude, "frequency": frequency},
            float(vals.min()),
            float(vals.max()),
        )

    @classmethod
    def piecewise_constant(cls, breakpoints, values) -> "DopingProfile":
        breakpoints = [float(p) for p in breakpoints]
        values = [float(v) for v in values]
        if len(values) != len(breakpoints) + 1:
            raise ValueError("need exactly one more value than breakpoints")
        if any(not 0.0 < p < 1.0 for p in breakpoints):
            raise ValueError("breakpoints must lie strictly inside (0, 1)")
        if sorted(breakpoints) != breakpoints:
            raise ValueError("breakpoints must be sorted")
        return cls(
            "piecewise",
            {"breakpoints": breakpoints, "values": values},
            min(values),
            max(values),
        )

    @classmethod
    def tabulated(cls, knots, values) -> "DopingProfile":
        """Piecewise-linear interpolation of (knots, values); knots span [0, 1]."""
        knots = [float(k) for k in knots]
        values = [float(v) for v in values]
        if len(knots) != len(values) or len(knots) < 2:
            raise ValueError("knots and values must match and have length >= 2")
        if sorted(knots) != knots:
            raise ValueError("knots must be sorted")
        if knots[0] != 0.0 or knots[-1] != 1.0:
            raise ValueError("knots must span [0, 1]")
        return cls(
            "tabulated",
            {"knots": knots, "values": values},
            min(values),
            max(values),
        )

    # -- evaluation ----------------------------------------------------------

    def __call__(self, x):
        if self.kind == "constant":
            v = self.params["value"]
            if np.isscalar(x):
                return v
            return np.full_like(np.asarray(x, dtype=float), v)
        if self.kind == "sine":
            p = self.params
            return p["base"] + p["amplitude"] * np.sin(2.0 * math.pi * p["frequency"] * np.asarray(x, dtype=float))
        if self.kind == "piecewise":
            p = self.params
            idx = np.searchsorted(p["breakpoints"], np.asarray(x, dtype=float), side="right")
            out = np.asarray(p["values"], dtype=float)[idx]
            return float(out) if np.isscalar(x) else out
        if self.kind == "tabulated":
            p = self.params
            out = np.interp(np.asarray(x, dtype=float), p["knots"], p["values"])
            return float(out) if np.isscalar(x) else out
        raise ValueError(f"unknown doping kind {self.kind!r}")

    # -- predicates ----------------------------------------------------------

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant" or self.b_upper - self.b_lower <= 1e-15

    @property
    def constant_value(self) -> float:
        if not self.is_constant:
            raise NotConstantDoping("doping profile is not constant")
        if self.kind == "constant":
            return self.params["value"]
        return 0.5 * (self.b_lower + self.b_upper)

    @property
    def is_sonic(self) -> bool:
        """True when b(x) == 1 everywhere, to within 1e-12."""
        return abs(self.b_lower - 1.0) <= SONIC_DOPING_TOL and abs(self.b_upper - 1.0) <= SONIC_DOPING_TOL

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        return {"type": self.kind, **self.params}

    @classmethod
    def from_dict(cls, data: dict) -> "DopingProfile":
        kind = data.get("type")
        if kind == "constant":
            return cls.constant(data["value"])
        if kind == "sine":
            return cls.sine_perturbed(data["base"], data["amplitude"], data.get("frequency", 1.0))
        if kind == "piecewise":
            return cls.piecewise_constant(data["breakpoints"], data["values"])
        if kind == "tabulated":
            return cls.tabulated(data["knots"], data["values"])
        raise ValueError(f"unknown doping type {kind!r}")

    def __repr__(self) -> str:
        return f"DopingProfile({self.kind}, {self.params})"


# ---------------------------------------------------------------------------
# parameter bundle and state types


@dataclass(frozen=True)
class ModelParams:
    """Relaxation time, doping profile and adiabatic exponent."""

    tau: float
    doping: DopingProfile
    gamma: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.gamma >= 1.0:
            raise ValueError("gamma must be >= 1")
        if not isinstance(self.doping, DopingProfile):
            raise TypeError("doping must be a DopingProfile")

    def b(self, x):
        return self.doping(x)

    @property
    def inv_tau(self) -> float:
        return 1.0 / self.tau


@dataclass(frozen=True)
class State:
    """Point on a trajectory in the primal chart: position, density, field."""

    x: float
    rho: float
    e: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("density must be positive")

    def regime(self, tol: float = 1e-9) -> str:
        if abs(self.rho - 1.0) <= tol:
            return "sonic"
        return "subsonic" if self.rho > 1.0 else "supersonic"


@dataclass(frozen=True)
class TransformedState:
    """Point in the (n, F) chart: n = rho - 1, F = E - 1/(tau*rho)."""

    n: float
    f: float

    def __post_init__(self):
        if not self.n > -1.0:
            raise ValueError("n must exceed -1 (density positive)")

    @classmethod
    def from_state(cls, state: State, p: ModelParams) -> "TransformedState":
        return cls(state.rho - 1.0, state.e - 1.0 / (p.tau * state.rho))

    def to_state(self, x: float, p: ModelParams) -> State:
        rho = 1.0 + self.n
        return State(x, rho, self.f + 1.0 / (p.tau * rho))


@dataclass(frozen=True)
class ShockData:
    """Entropy jump data: rho_l < 1 < rho_r with rho_l*rho_r = 1, E continuous."""

    x0: float
    rho_l: float
    rho_r: float
    e_jump: float

    def __post_init__(self):
        if not 0.0 < self.x0 < 1.0:
            raise ValueError("shock position must be interior")
        if not 0.0 < self.rho_l < 1.0 < self.rho_r:
            raise EntropyViolation("shock must jump from supersonic to subsonic")
        if abs(self.rho_l * self.rho_r - 1.0) > 1e-12:
            raise ValueError("jump densities must be reciprocal")
        momentum = self.rho_l + 1.0 / self.rho_l - (self.rho_r + 1.0 / self.rho_r)
        if abs(momentum) > 1e-12:
            raise ValueError("momentum flux not conserved across jump")


# ---------------------------------------------------------------------------
# right-hand sides


def sonic_coefficient(rho: float, gamma: float = 1.0):
    """Coefficient rho^(gamma-1) - rho^-2 multiplying rho_x; vanishes at rho = 1."""
    rho = np.asarray(rho, dtype=float) if not np.isscalar(rho) else rho
    if gamma == 1.0:
        return 1.0 - rho ** -2
    return rho ** (gamma - 1.0) - rho ** -2


def rhs_primal(state: State, p: ModelParams, guard: float = SONIC_COEF_GUARD) -> tuple[float, float]:
    """(d rho/dx, d E/dx) in the x-parametrised chart.

    Raises :class:`SonicSingularity` when the sonic coefficient is within
    ``guard`` of zero; step through that band with the rho-chart instead.
    """
    coef = sonic_coefficient(state.rho, p.gamma)
    if abs(coef) < guard:
        raise SonicSingularity(
            f"sonic coefficient {coef:.3e} below guard {guard:.1e} at rho={state.rho}"
        )
    d_rho = (state.rho * state.e - p.inv_tau) / coef
    d_e = state.rho - p.b(state.x)
    return d_rho, d_e


def rhs_transformed(ts: TransformedState, x: float, p: ModelParams, guard: float = TRANSFORMED_GUARD) -> tuple[float, float]:
    """(dn/dx, dF/dx) in the transformed chart; isothermal only.

    n_x = (1+n)^3 F / ((2+n) n),
    F_x = n + 1 - b(x) + (1+n) F / (tau (2+n) n).
    """
    if p.gamma != 1.0:
        raise ValueError("transformed chart is defined for gamma = 1 only")
    n, f = ts.n, ts.f
    if abs(n) < guard:
        raise SonicSingularity(f"|n| = {abs(n):.3e} below guard {guard:.1e}")
    d_n = (1.0 + n) ** 3 * f / ((2.0 + n) * n)
    d_f = n + 1.0 - p.b(x) + (1.0 + n) * f / (p.tau * (2.0 + n) * n)
    return d_n, d_f


def rhs_rho_independent(rho: float, e: float, p: ModelParams, x: float | None = None,
                        guard: float = CRITICAL_GUARD) -> tuple[float, float]:
    """(dE/d rho, dx/d rho) with density as the independent variable.

    dx/d rho = (rho^(gamma-1) - rho^-2) / (rho E - 1/tau) tends to zero at the
    sonic line, which is what makes this chart regular there.  The chart is
    singular on the critical locus rho*E = 1/tau (guarded).  For variable
    doping the current position ``x`` must be supplied.
    """
    denom = rho * e - p.inv_tau
    if abs(denom) < guard:
        raise CriticalLocus(
            f"|rho*E - 1/tau| = {abs(denom):.3e} below guard {guard:.1e}"
        )
    if x is None:
        if not p.doping.is_constant:
            raise NotConstantDoping("supply x for variable doping in the rho-chart")
        b = p.doping.constant_value
    else:
        b = p.b(x)
    dxdrho = sonic_coefficient(rho, p.gamma) / denom
    dedrho = (rho - b) * dxdrho
    return dedrho, dxdrho


# ---------------------------------------------------------------------------
# critical point of the autonomous system


@dataclass(frozen=True)
class CriticalPointInfo:
    point: tuple[float, float]             # (rho, E) = (b, 1/(tau*b))
    eigenvalues: tuple[complex, complex]
    kind: str                              # saddle | stable_focus | stable_node | other


def critical_point_analysis(p: ModelParams) -> CriticalPointInfo:
    """Locate and classify the interior equilibrium (b, 1/(tau*b)).

    The linearisation has characteristic equation

        lambda^2 - b/(tau (b^2-1)) lambda - b^3/(b^2-1) = 0,

    a saddle for b > 1 and a stable focus or node for b < 1.
    """
    if not p.doping.is_constant:
        raise NotConstantDoping("critical point analysis needs constant doping")
    b = p.doping.constant_value
    if abs(b - 1.0) <= SONIC_DOPING_TOL:
        raise SonicDoping("critical point merges with the sonic line at b = 1")
    trace = b / (p.tau * (b * b - 1.0))
    det = -b ** 3 / (b * b - 1.0)
    disc = trace * trace - 4.0 * det
    if disc >= 0.0:
        root = math.sqrt(disc)
        lam = (0.5 * (trace + root), 0.5 * (trace - root))
        if det < 0.0:
            kind = "saddle"
        elif trace < 0.0:
            kind = "stable_node"
        else:
            kind = "other"
        eigs = (complex(lam[0]), complex(lam[1]))
    else:
        root = math.sqrt(-disc)
        eigs = (complex(0.5 * trace, 0.5 * root), complex(0.5 * trace, -0.5 * root))
        kind = "stable_focus" if trace < 0.0 else "other"
    return CriticalPointInfo((b, 1.0 / (p.tau * b)), eigs, kind)


# ---------------------------------------------------------------------------
# trajectory geometry in the (n, F) chart


def xi_curve(n, p: ModelParams):
    """Nullcline Xi(n) = -tau (n+1-b)(2+n) n / (1+n) of the F-equation.

    Zeros at n = 0 and n = b - 1; strictly concave for b > 0.  Constant
    doping only.
    """
    if not p.doping.is_constant:
        raise NotConstantDoping("Xi is defined for constant doping")
    b = p.doping.constant_value
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr <= -1.0):
        raise ValueError("n must exceed -1")
    out = -p.tau * (n_arr + 1.0 - b) * (2.0 + n_arr) * n_arr / (1.0 + n_arr)
    return float(out) if np.isscalar(n) else out


def rh_jump(rho_l: float, e_l: float) -> tuple[float, float]:
    """Rankine-Hugoniot jump from a supersonic left state: (1/rho_l, e_l).

    Conserves the momentum flux rho + 1/rho and the field; admissible only
    for 0 < rho_l < 1 (entropy increases across the jump).
    """
    if not 0.0 < rho_l < 1.0:
        raise EntropyViolation(f"left density {rho_l} must lie in (0, 1)")
    return 1.0 / rho_l, e_l


def c1_transition_slope(b: float, tau: float) -> float:
    """Density slope of a C^1 sonic transition for constant doping b > 1.

    rho_x(x0) = (1/tau - sqrt(1/tau^2 - 8(b-1))) / 4; real only when
    tau <= 1/sqrt(8(b-1)).
    """
    if not b > 1.0:
        raise ValueError("C^1 transitions require constant doping b > 1")
    disc = tau ** -2 - 8.0 * (b - 1.0)
    if disc < 0.0:
        raise ComplexSlope(
            f"1/tau^2 = {tau**-2:.6g} < 8(b-1) = {8*(b-1):.6g}: no real slope"
        )
    return 0.25 * (1.0 / tau - math.sqrt(disc))


def c1_trajectory_slope(b: float, tau: float) -> float:
    """Slope dF/dn at the origin of the (n, F) chart; twice the density slope."""
    return 2.0 * c1_transition_slope(b, tau)


def tau0_bound(b: float) -> float:
    """Smallness threshold tau_0(b) under which the C^1 transonic regime holds.

    Minimum of 1/(3 sqrt(b^3+b)) (upper trajectory barrier), 1/(4 sqrt(b-1))
    (real slope with margin) and 1/(3 sqrt(b)) (lower barrier).
    """
    if not b > 1.0:
        raise ValueError("tau0 bound is defined for b > 1")
    terms = [1.0 / (3.0 * math.sqrt(b ** 3 + b)), 1.0 / (3.0 * math.sqrt(b))]
    terms.append(1.0 / (4.0 * math.sqrt(b - 1.0)))
    return min(terms)


# ---------------------------------------------------------------------------
# frictionless (tau = infinity) energy relation, used to seed shock shooting


def undamped_energy_potential(rho, b: float):
    """Potential Psi with E^2/2 - Psi(rho) conserved when tau = infinity.

    Psi(rho) = (2 rho - b)/(2 rho^2) + rho - b log(rho).
    """
    r = np.asarray(rho, dtype=float)
    out = (2.0 * r - b) / (2.0 * r * r) + r - b * np.log(r)
    return float(out) if np.isscalar(rho) else out


def supersonic_min_density_bracket(length: float, b_lower: float) -> tuple[float, float]:
    """Bracket [beta, gamma] for the minimum density of a supersonic arc.

    beta(L) = 1/(2 + sqrt(2 sqrt(2) b) L) and
    gamma(L) = 1 - L^2 / (2^4 (2 + sqrt(2 sqrt(2) b) L)^3), valid for the
    frictionless profile of span L and sharp enough for large tau.
    """
    s = math.sqrt(2.0 * math.sqrt(2.0) * b_lower) * length
    beta = 1.0 / (2.0 + s)
    gamma_up = 1.0 - length ** 2 / (16.0 * (2.0 + s) ** 3)
    return beta, gamma_up


def launch_energy_lower_bound(length: float, b_lower: float) -> float:
    """Lower bound on E(0) for a frictionless supersonic arc of span ``length``.

    Evaluates f(s) = 1 + ((2-b)(s-1)^2 + (2-2b)(s-1))/(2 s^2) - s + b log(s)
    at the upper density bound gamma(length).
    """
    _, s = supersonic_min_density_bracket(length, b_lower)
    f = 1.0 + ((2.0 - b_lower) * (s - 1.0) ** 2 + (2.0 - 2.0 * b_lower) * (s - 1.0)) / (2.0 * s * s) \
        - s + b_lower * math.log(s)
    return math.sqrt(max(f, 0.0))
