"""Command-line entry point and artifact serialization.

Commands: solve, classify, portrait, sweep, verify.  All artifacts are
byte-deterministic: CSV numbers use shortest round-trip decimals, JSON is
key-sorted, SVG carries no timestamps.

Exit codes: 0 success, 1 usage or configuration error, 2 regime rejection,
3 numerical failure.  Solver rejections also print a machine-readable JSON
object {"code", "message", "theoremRef"} to stdout.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .analysis import classify_regime, fit_holder_exponent, residual_norm
from .errors import (
    InsufficientWindow,
    NumericalError,
    PreconditionViolation,
    RegimeError,
    SonicFlowError,
)
from .integrator import DomainEnd, IntegratorConfig, integrate
from .model_core import (
    DopingProfile,
    ModelParams,
    ShockData,
    State,
    critical_point_analysis,
)
from .solution import Solution, TransitionData
from .solvers import (
    solve_c1_transonic,
    solve_sonic,
    solve_subsonic_elliptic,
    solve_subsonic_shooting,
    solve_supersonic,
    solve_transonic_shock,
)
from .svg import render_portrait, render_profile

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REGIME = 2
EXIT_NUMERICAL = 3

SOLVE_KINDS = (
    "sonic",
    "subsonic",
    "supersonic",
    "transonic_shock",
    "c1_transonic",
)


class UsageError(Exception):
    """Bad command line or configuration content."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage problems; the contract here
    # reserves 2 for regime rejections, so remap to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# configuration


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise UsageError(f"missing required key {key!r} in {context}")
    return mapping[key]


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config root must be a JSON object")
    return cfg


def model_from_config(cfg: dict) -> ModelParams:
    model = _require(cfg, "model", "config")
    doping_spec = _require(model, "doping", "model")
    try:
        doping = DopingProfile.from_dict(doping_spec)
        return ModelParams(
            tau=float(_require(model, "tau", "model")),
            doping=doping,
            gamma=float(model.get("gamma", 1.0)),
        )
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"invalid model section: {exc}") from exc


def integrator_from_config(cfg: dict) -> IntegratorConfig:
    spec = cfg.get("integrator", {})
    known = {
        "rel_tol",
        "abs_tol",
        "max_step",
        "sonic_band",
        "blow_up_density",
        "blow_up_field",
        "max_arc_length",
    }
    extra = set(spec) - known
    if extra:
        raise UsageError(f"unknown integrator options: {sorted(extra)}")
    try:
        return IntegratorConfig(**{k: float(v) for k, v in spec.items()})
    except ValueError as exc:
        raise UsageError(f"invalid integrator section: {exc}") from exc


def _dispatch_solve(p: ModelParams, solver: dict, icfg: IntegratorConfig) -> Solution:
    kind = _require(solver, "kind", "solver")
    if kind not in SOLVE_KINDS:
        raise UsageError(f"unknown solver kind {kind!r}; expected one of {SOLVE_KINDS}")
    if kind == "sonic":
        return solve_sonic(p)
    if kind == "subsonic":
        method = solver.get("method", "shooting")
        if method == "shooting":
            return solve_subsonic_shooting(p, cfg=icfg)
        if method == "elliptic":
            kwargs = {}
            if "j_schedule" in solver:
                kwargs["j_schedule"] = tuple(float(j) for j in solver["j_schedule"])
            return solve_subsonic_elliptic(p, **kwargs)
        raise UsageError(f"unknown subsonic method {method!r}")
    if kind == "supersonic":
        bracket = solver.get("bracket")
        if bracket is not None:
            bracket = (float(bracket[0]), float(bracket[1]))
        return solve_supersonic(p, cfg=icfg, bracket=bracket)
    if kind == "transonic_shock":
        rho_l = float(_require(solver, "rho_l", "solver"))
        kwargs = {}
        if "delta_schedule" in solver:
            kwargs["delta_schedule"] = tuple(float(d) for d in solver["delta_schedule"])
        return solve_transonic_shock(p, rho_l, cfg=icfg, **kwargs)
    rho_x0 = float(_require(solver, "x0", "solver"))
    kwargs = {}
    if "n_stop" in solver:
        kwargs["n_stop"] = float(solver["n_stop"])
    return solve_c1_transonic(p, rho_x0, cfg=icfg, **kwargs)


# ---------------------------------------------------------------------------
# artifact writers


def _row_regime(rho: float, tol: float = 1e-9) -> str:
    if abs(rho - 1.0) <= tol:
        return "sonic"
    return "subsonic" if rho > 1.0 else "supersonic"


def write_solution_csv(sol: Solution, path: Path) -> None:
    lines = ["x,rho,e,regime"]
    for x, rho, e in zip(sol.x.tolist(), sol.rho.tolist(), sol.e.tolist()):
        lines.append(f"{x!r},{rho!r},{e!r},{_row_regime(rho)}")
    path.write_text("\n".join(lines) + "\n")


def read_solution_csv(path: Path):
    lines = path.read_text().strip().splitlines()
    if not lines or lines[0] != "x,rho,e,regime":
        raise UsageError(f"{path} is not a solution CSV (bad header)")
    cols = [line.split(",") for line in lines[1:]]
    x = np.array([float(c[0]) for c in cols])
    rho = np.array([float(c[1]) for c in cols])
    e = np.array([float(c[2]) for c in cols])
    return x, rho, e


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def _dump_json(payload: dict, path: Path) -> None:
    path.write_text(json.dumps(_json_ready(payload), sort_keys=True, indent=2) + "\n")


def solution_json_payload(
    sol: Solution, p: ModelParams, icfg: IntegratorConfig, solver_echo: dict
) -> dict:
    residual, location = residual_norm(sol, p)
    payload = {
        "kind": sol.kind,
        "model": {
            "tau": p.tau,
            "gamma": p.gamma,
            "doping": p.doping.to_dict(),
        },
        "integrator": asdict(icfg),
        "solver": solver_echo,
        "shock": None,
        "transition": None,
        "diagnostics": dict(sol.diagnostics),
        "residual_norm": residual,
        "residual_location": location,
        "boundary": {"rho_left": float(sol.rho[0]), "rho_right": float(sol.rho[-1])},
        "points": int(len(sol.x)),
    }
    if sol.shock is not None:
        payload["shock"] = {
            "x0": sol.shock.x0,
            "rho_l": sol.shock.rho_l,
            "rho_r": sol.shock.rho_r,
            "e_jump": sol.shock.e_jump,
        }
    if sol.transition is not None:
        payload["transition"] = {
            "x0": sol.transition.x0,
            "slope": sol.transition.slope,
        }
    return payload


def reconstruct_solution(out_dir: Path):
    """Rebuild (Solution, ModelParams) from solution.csv + solution.json."""
    meta_path = out_dir / "solution.json"
    csv_path = out_dir / "solution.csv"
    if not meta_path.exists() or not csv_path.exists():
        raise UsageError(f"no solution artifacts in {out_dir}")
    meta = json.loads(meta_path.read_text())
    x, rho, e = read_solution_csv(csv_path)
    shock = None
    if meta.get("shock"):
        shock = ShockData(**meta["shock"])
    transition = None
    if meta.get("transition"):
        transition = TransitionData(**meta["transition"])
    sol = Solution(
        kind=meta["kind"],
        x=x,
        rho=rho,
        e=e,
        shock=shock,
        transition=transition,
        diagnostics=meta.get("diagnostics", {}),
    )
    m = meta["model"]
    p = ModelParams(
        tau=float(m["tau"]),
        doping=DopingProfile.from_dict(m["doping"]),
        gamma=float(m.get("gamma", 1.0)),
    )
    return sol, p, meta


# ---------------------------------------------------------------------------
# commands


def run_solve(cfg: dict, out_dir: Path) -> int:
    p = model_from_config(cfg)
    icfg = integrator_from_config(cfg)
    solver = cfg.get("solver", {})
    sol = _dispatch_solve(p, solver, icfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_solution_csv(sol, out_dir / "solution.csv")
    _dump_json(
        solution_json_payload(sol, p, icfg, solver_echo=solver),
        out_dir / "solution.json",
    )
    (out_dir / "profile.svg").write_text(
        render_profile(sol, title=f"{sol.kind} solution")
    )
    return EXIT_OK


def run_classify(cfg: dict, out_dir: Path) -> int:
    p = model_from_config(cfg)
    report = classify_regime(p)
    out_dir.mkdir(parents=True, exist_ok=True)
    _dump_json(report.to_dict(), out_dir / "classify.json")
    return EXIT_OK


def _portrait_launches(p: ModelParams, spec: dict):
    """Deterministic fan around the critical point unless given explicitly."""
    if "launches" in spec:
        return [(float(r), float(e)) for r, e in spec["launches"]]
    a_rho, a_e = critical_point_analysis(p).point
    count = int(spec.get("count", 12))
    radius_rho = float(spec.get("radius_rho", 0.4 * a_rho))
    radius_e = float(spec.get("radius_e", max(0.5 * abs(a_e), 0.05)))
    out = []
    for k in range(count):
        ang = 2.0 * math.pi * k / count
        rho0 = a_rho + radius_rho * math.cos(ang)
        e0 = a_e + radius_e * math.sin(ang)
        if rho0 > 0.05:
            out.append((rho0, e0))
    return out


def run_portrait(cfg: dict, out_dir: Path) -> int:
    p = model_from_config(cfg)
    if not p.doping.is_constant:
        raise UsageError("portrait requires constant doping")
    icfg = integrator_from_config(cfg)
    spec = cfg.get("portrait", {})
    mode = spec.get("mode", "primal")
    span = float(spec.get("span", 4.0))
    launches = _portrait_launches(p, spec)

    segments = []
    for rho0, e0 in launches:
        for direction, limit in (("forward", span), ("backward", -span)):
            seg = integrate(
                State(0.0, rho0, e0), direction, [DomainEnd(limit)], p, icfg
            )
            segments.append(seg)

    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["trajectory,x,rho,e"]
    for i, seg in enumerate(segments):
        for x, rho, e in zip(seg.xs.tolist(), seg.rhos.tolist(), seg.es.tolist()):
            lines.append(f"{i},{x!r},{rho!r},{e!r}")
    (out_dir / "portrait.csv").write_text("\n".join(lines) + "\n")

    curves = [(seg.rhos, seg.es) for seg in segments]
    title = f"phase portrait ({mode}), tau={p.tau:g}, b={p.doping.constant_value:g}"
    (out_dir / "portrait.svg").write_text(
        render_portrait(curves, p, mode=mode, title=title)
    )
    return EXIT_OK


SWEEP_VARIABLES = ("rhoL", "x0", "tau", "bConstant")


def _sweep_values(spec: dict) -> list[float]:
    if "values" in spec:
        return [float(v) for v in spec["values"]]
    start = float(_require(spec, "start", "sweep"))
    stop = float(_require(spec, "stop", "sweep"))
    count = int(_require(spec, "count", "sweep"))
    if count < 1:
        raise UsageError("sweep count must be positive")
    return [float(v) for v in np.linspace(start, stop, count)]


def _sweep_one(cfg: dict, variable: str, value: float):
    local = json.loads(json.dumps(cfg))  # deep copy; samples mutate independently
    solver = local.setdefault("solver", {})
    if variable == "rhoL":
        solver["rho_l"] = value
    elif variable == "x0":
        solver["x0"] = value
    elif variable == "tau":
        local["model"]["tau"] = value
    else:
        local["model"]["doping"] = {"type": "constant", "value": value}
    try:
        p = model_from_config(local)
        icfg = integrator_from_config(local)
        sol = _dispatch_solve(p, solver, icfg)
    except UsageError:
        raise
    except RegimeError as exc:
        return {"success": False, "error": type(exc).__name__,
                "theorem": exc.theorem_ref or "", "message": str(exc)}
    except SonicFlowError as exc:
        return {"success": False, "error": type(exc).__name__, "theorem": "",
                "message": str(exc)}
    residual, _ = residual_norm(sol, p)
    row = {
        "success": True,
        "kind": sol.kind,
        "residual": float(residual),
        "x0": "",
        "rho_l": "",
        "rho_r": "",
        "e_jump": "",
        "slope": "",
    }
    if sol.shock is not None:
        row.update(x0=sol.shock.x0, rho_l=sol.shock.rho_l,
                   rho_r=sol.shock.rho_r, e_jump=sol.shock.e_jump)
    if sol.transition is not None:
        row.update(x0=sol.transition.x0, slope=sol.transition.slope)
    return row


def run_sweep(cfg: dict, out_dir: Path) -> int:
    spec = cfg.get("sweep")
    if not spec:
        raise UsageError("sweep command needs a 'sweep' config section")
    variable = _require(spec, "variable", "sweep")
    if variable not in SWEEP_VARIABLES:
        raise UsageError(f"sweep variable must be one of {SWEEP_VARIABLES}")
    values = _sweep_values(spec)
    workers = min(8, max(1, len(values)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda v: _sweep_one(cfg, variable, v), values))

    header = (
        "index,variable,value,success,kind,x0,rho_l,rho_r,e_jump,slope,"
        "residual,error,theorem,message"
    )
    lines = [header]
    for i, (value, row) in enumerate(zip(values, rows)):
        if row["success"]:
            lines.append(
                f"{i},{variable},{value!r},true,{row['kind']},"
                f"{_csv_num(row['x0'])},{_csv_num(row['rho_l'])},"
                f"{_csv_num(row['rho_r'])},{_csv_num(row['e_jump'])},"
                f"{_csv_num(row['slope'])},{row['residual']!r},,,"
            )
        else:
            msg = row["message"].replace(",", ";").replace("\n", " ")
            lines.append(
                f"{i},{variable},{value!r},false,,,,,,,,"
                f"{row['error']},{row['theorem']},{msg}"
            )
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sweep.csv").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def _csv_num(v) -> str:
    return "" if v == "" else repr(float(v))


def run_verify(cfg: dict, out_dir: Path) -> int:
    sol, p, meta = reconstruct_solution(out_dir)
    residual, location = residual_norm(sol, p)
    recorded = meta.get("residual_norm")
    gap = abs(residual - recorded) if recorded is not None else math.inf
    checks = {
        "residual_recomputed": residual,
        "residual_recorded": recorded,
        "residual_gap": gap,
        "residual_location": location,
        "boundary_left": float(abs(sol.rho[0] - 1.0)),
        "boundary_right": float(abs(sol.rho[-1] - 1.0)),
        "kind": sol.kind,
        "points": int(len(sol.x)),
    }
    exponents = {}
    if sol.kind in ("subsonic", "supersonic", "transonic_shock"):
        for endpoint in (0, 1):
            try:
                fit = fit_holder_exponent(sol, endpoint)
                exponents[str(endpoint)] = fit.to_dict()
            except (InsufficientWindow, PreconditionViolation) as exc:
                exponents[str(endpoint)] = {"skipped": str(exc)}
    checks["holder_fits"] = exponents
    ok = gap <= 1e-12
    checks["match"] = bool(ok)
    _dump_json(checks, out_dir / "verify.json")
    return EXIT_OK if ok else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sonic-flow",
        description="Steady Euler-Poisson flows with sonic boundaries",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "classify", "portrait", "sweep", "verify"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=(name != "verify"))
        cmd.add_argument("--out", default=".")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        cfg = load_config(args.config) if args.config else {}
        out_dir = Path(args.out)
        runner = {
            "solve": run_solve,
            "classify": run_classify,
            "portrait": run_portrait,
            "sweep": run_sweep,
            "verify": run_verify,
        }[args.command]
        return runner(cfg, out_dir)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RegimeError as exc:
        print(json.dumps({
            "code": type(exc).__name__,
            "message": str(exc),
            "theoremRef": exc.theorem_ref,
        }, sort_keys=True))
        return EXIT_REGIME
    except NumericalError as exc:
        print(json.dumps({
            "code": type(exc).__name__,
            "message": str(exc),
            "theoremRef": None,
        }, sort_keys=True))
        return EXIT_NUMERICAL
    except SonicFlowError as exc:
        print(json.dumps({
            "code": type(exc).__name__,
            "message": str(exc),
            "theoremRef": None,
        }, sort_keys=True))
        return EXIT_NUMERICAL


def entry() -> None:
    """Console-script shim: translate main()'s return code into an exit."""
    sys.exit(main())


if __name__ == "__main__":
    entry()
