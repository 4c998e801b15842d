"""Residual checks of the drivetrain's governing relations.

Every registered check recomputes one velocity or torque identity directly
from a recorded trajectory and reports its worst residual.  The registered
set is a spanning one: relations it does not list (per-branch speed maps,
per-output torque formulas, and similar) follow from chained substitution
of the listed ones, so a clean report covers them too.

Checks are conditional on the operating regime.  Speed/torque equality
across branches holds only under identical output loading; the
zero-speed-sum and its torque companion hold only with the input pinned.
The report marks inapplicable checks instead of failing them.

Torque identities are stated for ideal massless intermediate bodies, but
the integrator substitutes a small epsilon inertia for them, so each
torque check subtracts the exactly-attributable epsilon slack (epsilon
times the relevant accelerations) before comparing against tolerance.
The raw residual is still reported.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import MissingTorqueSeries
from .mechanism import AppliedTorque, ConstantResistive, Locked, Viscous
from .dynamics import Trajectory

KINEMATIC_RTOL = 1e-8
TORQUE_RTOL = 1e-6
POWER_RTOL = 1e-6


@dataclass
class CheckResult:
    check: str
    anchor: str
    applicable: bool
    max_abs_residual: float
    max_rel_residual: float
    tolerance: float
    passed: bool

    def to_json_entry(self) -> dict:
        return {
            "check": self.check,
            "anchor_quote": self.anchor,
            "max_rel_residual": self.max_rel_residual,
            "pass": self.passed,
        }


@dataclass
class VerificationReport:
    results: list[CheckResult]
    note: str = ""

    def all_passed(self) -> bool:
        return all(r.passed for r in self.results if r.applicable)

    def applicable(self) -> list[CheckResult]:
        return [r for r in self.results if r.applicable]

    def failed(self) -> list[CheckResult]:
        return [r for r in self.results if r.applicable and not r.passed]

    def to_json(self) -> str:
        return json.dumps([r.to_json_entry() for r in self.applicable()], indent=2)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    def summary_lines(self) -> list[str]:
        out = []
        for r in self.results:
            if not r.applicable:
                out.append(f"  -    {r.check}: not applicable in this regime")
            else:
                mark = "PASS" if r.passed else "FAIL"
                out.append(
                    f"  {mark} {r.check}: max rel residual {r.max_rel_residual:.3e} "
                    f"(tol {r.tolerance:.0e})"
                )
        return out


class _Ctx:
    """Column access helpers bound to one trajectory."""

    def __init__(self, traj: Trajectory):
        self.traj = traj
        self.meta = traj.meta
        g = self.meta.get("graph", {})
        self.g = g
        self.k = float(g.get("ratio_k", 0.0) or 0.0)
        self.j = float(g.get("ratio_j", 0.0) or 0.0)
        self.mode = self.meta.get("drive", {}).get("mode", "")
        self.equal_loads = bool(self.meta.get("equal_output_loads")) and self.mode != "input_locked"

    def w(self, name: str) -> np.ndarray:
        return self.traj.omega_of(name)

    def a(self, name: str) -> np.ndarray:
        return self.traj.alpha_of(name)

    def tau(self, element: str, port: str) -> np.ndarray:
        return self.traj.port_torque(element, port)

    def shaft_of(self, element: str, port: str) -> str:
        return self.traj.element_shafts[element][port]

    def inertia(self, name: str) -> float:
        return float(self.meta["inertias"][name])

    def eps_alpha(self, name: str) -> np.ndarray:
        """Epsilon-inertia slack |eps * alpha| of a declared-massless shaft."""
        if self.inertia(name) > 0.0:
            return np.zeros(len(self.traj.t))
        return float(self.meta["epsilon_inertia"]) * np.abs(self.a(name))

    def input_torque(self) -> np.ndarray:
        """Torque the input shaft feeds into the worm set (recovered)."""
        total = 0.0
        for wname in self.g["worms"]:
            total = total - self.tau(wname, "worm")
        return total

    def outputs(self) -> list[str]:
        return list(self.g["outputs"])


def _rel(abs_res: float, scale: float) -> float:
    return abs_res / max(1.0, scale)


# --- kinematic checks -------------------------------------------------------


def _chk_worm_speed_ratio(c: _Ctx):
    w_in = c.w(c.g["input"])
    target = w_in / c.k
    res = max(float(np.max(np.abs(c.w(r) - target))) for r in c.g["first_rings"])
    return res, _rel(res, float(np.max(np.abs(target))))


def _chk_ring_speed_average(c: _Ctx):
    res = 0.0
    scale = 0.0
    for dname in c.g["first_diffs"] + c.g["second_diffs"]:
        ring = c.w(c.shaft_of(dname, "ring"))
        sa = c.w(c.shaft_of(dname, "side_a"))
        sb = c.w(c.shaft_of(dname, "side_b"))
        res = max(res, float(np.max(np.abs(2.0 * ring - sa - sb))))
        scale = max(scale, float(np.max(np.abs(ring))))
    return res, _rel(res, 2.0 * scale)


def _chk_coupling_match(c: _Ctx):
    res = 0.0
    scale = 0.0
    for cname in c.g["couplings"]:
        wa, wb = c.w(c.shaft_of(cname, "a")), c.w(c.shaft_of(cname, "b"))
        aa, ab = c.a(c.shaft_of(cname, "a")), c.a(c.shaft_of(cname, "b"))
        res = max(res, float(np.max(np.abs(wa - wb))), float(np.max(np.abs(aa - ab))))
        scale = max(scale, float(np.max(np.abs(wa))), float(np.max(np.abs(aa))))
    return res, _rel(res, scale)


def _chk_output_ratio_speed(c: _Ctx):
    res = 0.0
    scale = 0.0
    for out, ring in zip(c.outputs(), c.g["second_rings"]):
        r = float(np.max(np.abs(c.w(out) - c.j * c.w(ring))))
        res = max(res, r)
        scale = max(scale, float(np.max(np.abs(c.w(out)))))
    return res, _rel(res, scale)


def _chk_output_speed_sum(c: _Ctx):
    w_in = c.w(c.g["input"])
    total = sum(c.w(o) for o in c.outputs())
    res_t = np.abs(total - 3.0 * c.j * w_in / c.k)
    den_t = np.maximum(1.0, np.abs(w_in))
    return float(np.max(res_t)), float(np.max(res_t / den_t))


def _chk_equal_load_side_speeds(c: _Ctx):
    target = c.w(c.g["input"]) / c.k
    sides = c.g["first_sides"] + c.g["second_sides"]
    res = max(float(np.max(np.abs(c.w(s) - target))) for s in sides)
    return res, _rel(res, float(np.max(np.abs(target))))


def _chk_equal_load_output_speeds(c: _Ctx):
    target = c.j * c.w(c.g["input"]) / c.k
    res = max(float(np.max(np.abs(c.w(o) - target))) for o in c.outputs())
    return res, _rel(res, float(np.max(np.abs(target))))


def _chk_locked_speed_sum(c: _Ctx):
    total = sum(c.w(o) for o in c.outputs())
    scale = max(float(np.max(np.abs(c.w(o)))) for o in c.outputs())
    res = float(np.max(np.abs(total)))
    return res, _rel(res, scale)


# --- torque checks ----------------------------------------------------------


def _chk_ring_torque_split(c: _Ctx):
    tau_in = c.input_torque()
    target = c.k * tau_in / 3.0
    res = max(float(np.max(np.abs(c.tau(w, "wheel") - target))) for w in c.g["worms"])
    return res, _rel(res, float(np.max(np.abs(target))))


def _chk_side_torque_half_ring(c: _Ctx):
    sides = []
    res = 0.0
    net = 0.0
    scale = 0.0
    for dname, wname in zip(c.g["first_diffs"], c.g["worms"]):
        half_ring = 0.5 * c.tau(wname, "wheel")
        allow = 0.5 * c.eps_alpha(c.shaft_of(dname, "ring"))
        scale = max(scale, float(np.max(np.abs(half_ring))))
        for port in ("side_a", "side_b"):
            s = c.tau(dname, port)
            sides.append(s)
            r_t = np.abs(s - half_ring)
            res = max(res, float(np.max(r_t)))
            net = max(net, float(np.max(np.maximum(r_t - allow, 0.0))))
    for s in sides[1:]:
        r = float(np.max(np.abs(s - sides[0])))
        res = max(res, r)
        net = max(net, r)
    return res, _rel(net, scale)


def _chk_input_torque_from_sides(c: _Ctx):
    tau_in = c.input_torque()
    first = c.g["first_diffs"][0]
    tau_side = c.tau(first, "side_a")
    allow = (3.0 / c.k) * c.eps_alpha(c.shaft_of(first, "ring"))
    res_t = np.abs(tau_in - 6.0 * tau_side / c.k)
    net = float(np.max(np.maximum(res_t - allow, 0.0)))
    return float(np.max(res_t)), _rel(net, float(np.max(np.abs(tau_in))))


def _chk_output_ratio_torque(c: _Ctx):
    res = 0.0
    net = 0.0
    scale = 0.0
    for rname, dname in zip(c.g["ratios"], c.g["second_diffs"]):
        r_t = np.abs(c.tau(rname, "b") - c.tau(dname, "ring") / c.j)
        allow = c.eps_alpha(c.shaft_of(dname, "ring")) / c.j
        res = max(res, float(np.max(r_t)))
        net = max(net, float(np.max(np.maximum(r_t - allow, 0.0))))
        scale = max(scale, float(np.max(np.abs(c.tau(rname, "b")))))
    return res, _rel(net, scale)


def _feeding_coupling(c: _Ctx, side: str) -> tuple[str, str]:
    """Coupling element and port attached to a second-stage side gear."""
    for cname in c.g["couplings"]:
        for port in ("a", "b"):
            if c.shaft_of(cname, port) == side:
                return cname, port
    raise KeyError(f"no coupling feeds side gear {side!r}")


def _side_feed_torque(c: _Ctx, side: str) -> np.ndarray:
    """Torque passed onward by a side gear: coupling input minus inertia."""
    cname, port = _feeding_coupling(c, side)
    return c.tau(cname, port) - c.inertia(side) * c.a(side)


def _chk_ring_torque_sum_sides(c: _Ctx):
    res = 0.0
    scale = 0.0
    for dname in c.g["second_diffs"]:
        ring = c.tau(dname, "ring")
        feed = sum(
            _side_feed_torque(c, c.shaft_of(dname, port)) for port in ("side_a", "side_b")
        )
        res = max(res, float(np.max(np.abs(ring - feed))))
        scale = max(scale, float(np.max(np.abs(ring))))
    return res, _rel(res, scale)


def _output_torque_sum_residual(c: _Ctx):
    tau_in = c.input_torque()
    total_out = sum(c.tau(r, "b") for r in c.g["ratios"])
    inertial = sum(c.inertia(s) * c.a(s) for s in c.g["second_sides"])
    rhs = (c.k * tau_in - inertial) / c.j
    res_t = np.abs(total_out - rhs)
    allow = (
        sum(c.eps_alpha(s) for s in c.g["first_rings"] + c.g["first_sides"] + c.g["second_rings"])
        / c.j
    )
    net = float(np.max(np.maximum(res_t - allow, 0.0)))
    scale = max(float(np.max(np.abs(total_out))), float(np.max(np.abs(rhs))))
    return float(np.max(res_t)), _rel(net, scale)


def _chk_equal_load_output_torques(c: _Ctx):
    taus = [c.tau(r, "b") for r in c.g["ratios"]]
    scale = max(float(np.max(np.abs(t))) for t in taus)
    res = max(float(np.max(np.abs(t - taus[0]))) for t in taus[1:])
    return res, _rel(res, scale)


# --- power balance ----------------------------------------------------------


def _power_terms(traj: Trajectory):
    """Per-step source power, load power, kinetic-energy rate, and the
    allowance for energy parked in epsilon-substituted inertias."""
    meta = traj.meta
    dt = float(meta["dt"])
    names = traj.shaft_names
    inertias = np.array([meta["inertias"][n] for n in names])
    eps = float(meta["epsilon_inertia"])
    euler = meta.get("integrator", "semi_implicit_euler") == "semi_implicit_euler"

    v0 = traj.omega[:-1]
    v1 = traj.omega[1:]
    vm = 0.5 * (v0 + v1)
    acc = traj.alpha[:-1]
    t0 = traj.t[:-1]

    d_ke = ((v1**2 - v0**2) @ inertias) * 0.5 / dt

    idx = {n: i for i, n in enumerate(names)}
    p_src = traj.drive_torque[:-1] * vm[:, idx[meta["drive"]["shaft"]]]
    if traj.aux_torque is not None and meta["drive"]["source_shaft"]:
        p_src = p_src + traj.aux_torque[:-1] * vm[:, idx[meta["drive"]["source_shaft"]]]

    p_load = np.zeros_like(p_src)
    omega_eps = float(meta["omega_eps"])
    for name, load in meta.get("loads_obj", {}).items():
        i = idx[name]
        if isinstance(load, Viscous):
            at = v1[:, i] if euler else vm[:, i]
            tau_series = -load.b * at
        elif isinstance(load, ConstantResistive):
            tau_series = -load.tau * np.tanh(v0[:, i] / omega_eps)
        elif isinstance(load, AppliedTorque):
            tau_series = np.array([load.value(t) for t in t0])
        elif isinstance(load, Locked):
            continue  # held at zero speed; no work done
        else:
            continue
        p_load = p_load + tau_series * vm[:, i]

    eps_vec = np.where(inertias > 0.0, 0.0, eps)
    allowance = (np.abs(acc) * np.abs(vm)) @ eps_vec
    return p_src, p_load, d_ke, allowance


def power_balance(traj: Trajectory) -> np.ndarray:
    """Per-step residual of source power + load power - d(KE)/dt, in watts.

    Length is one less than the number of recorded rows.  Shafts running
    on the epsilon-inertia substitute contribute a small spillover term;
    :func:`check_invariants` reports it as an allowance instead of a
    failure.
    """
    p_src, p_load, d_ke, _ = _power_terms(traj)
    return p_src + p_load - d_ke


def _chk_power_balance(c: _Ctx):
    p_src, p_load, d_ke, allowance = _power_terms(c.traj)
    residual = np.abs(p_src + p_load - d_ke)
    net = np.maximum(residual - allowance, 0.0)
    scale = max(
        1.0,
        float(np.max(np.abs(p_src))),
        float(np.max(np.abs(p_load))),
        float(np.max(np.abs(d_ke))),
    )
    return float(np.max(residual)), float(np.max(net)) / scale


# --- registry ---------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    regime: str  # "always" | "equal_loads" | "input_locked"
    needs_torques: bool
    tolerance: float
    fn: Callable[[_Ctx], tuple[float, float]]


_THREE_OUTPUT_CHECKS = [
    Check(
        "worm_speed_ratio",
        "w_R[n] = w_in / k for each of the three first-stage rings",
        "always", False, KINEMATIC_RTOL, _chk_worm_speed_ratio,
    ),
    Check(
        "ring_speed_average",
        "2*w_ring = w_side_a + w_side_b at all six differentials",
        "always", False, KINEMATIC_RTOL, _chk_ring_speed_average,
    ),
    Check(
        "coupling_speed_match",
        "coupled side gears share speed and acceleration",
        "always", False, KINEMATIC_RTOL, _chk_coupling_match,
    ),
    Check(
        "output_ratio_speed",
        "w_O[n] = j * w_R[3+n] at each output gear pair",
        "always", False, KINEMATIC_RTOL, _chk_output_ratio_speed,
    ),
    Check(
        "output_speed_sum",
        "w_O1 + w_O2 + w_O3 = 3*j*w_in/k at every step",
        "always", False, KINEMATIC_RTOL, _chk_output_speed_sum,
    ),
    Check(
        "equal_load_side_speeds",
        "equal loads: all twelve side gears turn at w_in/k",
        "equal_loads", False, KINEMATIC_RTOL, _chk_equal_load_side_speeds,
    ),
    Check(
        "equal_load_output_speeds",
        "equal loads: w_O1 = w_O2 = w_O3 = j*w_in/k",
        "equal_loads", False, KINEMATIC_RTOL, _chk_equal_load_output_speeds,
    ),
    Check(
        "locked_input_speed_sum",
        "input pinned: w_O1 + w_O2 + w_O3 = 0, one output opposing the rest",
        "input_locked", False, KINEMATIC_RTOL, _chk_locked_speed_sum,
    ),
    Check(
        "ring_torque_split",
        "equal loads: each first-stage ring carries k*tau_in/3",
        "equal_loads", True, TORQUE_RTOL, _chk_ring_torque_split,
    ),
    Check(
        "side_torque_half_ring",
        "equal loads: all six first-stage side torques equal half their ring torque",
        "equal_loads", True, TORQUE_RTOL, _chk_side_torque_half_ring,
    ),
    Check(
        "input_torque_from_sides",
        "equal loads: tau_in = 6*tau_side/k",
        "equal_loads", True, TORQUE_RTOL, _chk_input_torque_from_sides,
    ),
    Check(
        "output_ratio_torque",
        "tau_O[n] = tau_R[3+n] / j at each output gear pair",
        "always", True, TORQUE_RTOL, _chk_output_ratio_torque,
    ),
    Check(
        "ring_torque_sum_sides",
        "each second-stage ring torque equals the sum fed through its side gears",
        "always", True, TORQUE_RTOL, _chk_ring_torque_sum_sides,
    ),
    Check(
        "output_torque_sum",
        "tau_O1 + tau_O2 + tau_O3 = (k*tau_in - sum_p I_p*alpha_p) / j",
        "always", True, TORQUE_RTOL, _output_torque_sum_residual,
    ),
    Check(
        "locked_input_torque_sum",
        "input pinned: the torque-sum identity with the worm reaction retained "
        "(ideal bilateral mesh; a dry self-locking mesh would absorb tau_in as friction)",
        "input_locked", True, TORQUE_RTOL, _output_torque_sum_residual,
    ),
    Check(
        "equal_load_output_torques",
        "equal loads: tau_O1 = tau_O2 = tau_O3",
        "equal_loads", True, TORQUE_RTOL, _chk_equal_load_output_torques,
    ),
    Check(
        "power_balance",
        "P_source + P_loads = d(KE)/dt each step, net of the epsilon-inertia allowance",
        "always", False, POWER_RTOL, _chk_power_balance,
    ),
]

_GENERIC_CHECKS = [
    Check(
        "power_balance",
        "P_source + P_loads = d(KE)/dt each step, net of the epsilon-inertia allowance",
        "always", False, POWER_RTOL, _chk_power_balance,
    ),
]


def registered_checks(family: str | None) -> list[Check]:
    """Checks registered for a mechanism family ('3ood' has the full set)."""
    return list(_THREE_OUTPUT_CHECKS) if family == "3ood" else list(_GENERIC_CHECKS)


def check_invariants(traj: Trajectory) -> VerificationReport:
    """Run every registered check applicable to the trajectory's regime.

    Raises MissingTorqueSeries when an applicable check needs element
    torques and the trajectory was recorded without them.
    """
    if len(traj.t) < 2:
        return VerificationReport(results=[], note="trajectory too short to check")
    ctx = _Ctx(traj)
    family = ctx.g.get("family")
    results: list[CheckResult] = []
    for check in registered_checks(family):
        applicable = (
            check.regime == "always"
            or (check.regime == "equal_loads" and ctx.equal_loads)
            or (check.regime == "input_locked" and ctx.mode == "input_locked")
        )
        if not applicable:
            results.append(
                CheckResult(check.name, check.anchor, False, math.nan, math.nan,
                            check.tolerance, True)
            )
            continue
        if check.needs_torques and traj.element_torques is None:
            raise MissingTorqueSeries(
                f"check {check.name!r} needs element torques; "
                "re-run with record_torques=True"
            )
        abs_res, rel_res = check.fn(ctx)
        results.append(
            CheckResult(
                check.name,
                check.anchor,
                True,
                abs_res,
                rel_res,
                check.tolerance,
                rel_res <= check.tolerance,
            )
        )
    return VerificationReport(results=results)
