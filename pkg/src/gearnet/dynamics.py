"""Constrained rigid-body dynamics of mechanism graphs.

Each integration step solves the saddle-point system

    [M  -A^T] [alpha ]   [tau(v, t)]
    [A    0 ] [lambda] = [  rhs_c  ]

where M is the (epsilon-regularized) diagonal inertia matrix, A stacks the
element constraint rows with one pin row per velocity-prescribed shaft,
and the multipliers recover element port torques through the transpose
map.  The default integrator is semi-implicit Euler with viscous load
torque taken at the end-of-step velocity; a classical fourth-order
Runge-Kutta variant is available for convergence studies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import ScenarioError, SingularKKT
from .kinematics import constraint_matrix, solve_velocities
from .mechanism import (
    AppliedTorque,
    ConstantResistive,
    Free,
    Load,
    Locked,
    MechanismGraph,
    Viscous,
)

INTEGRATORS = ("semi_implicit_euler", "rk4")
DRIVE_MODES = ("torque", "velocity", "input_locked")


@dataclass(frozen=True)
class Drive:
    """How the mechanism is driven.

    mode "torque" applies an effort source tau(t) to the drive shaft;
    "velocity" prescribes the drive shaft's speed omega(t) exactly;
    "input_locked" pins the drive shaft at zero speed (the worm cannot be
    back-driven) and optionally drives some other shaft through
    ``source_shaft``/``source_kind``/``source_value``.
    """

    mode: str
    value: float | Callable[[float], float] = 0.0
    shaft: str | None = None
    source_shaft: str | None = None
    source_kind: str = "velocity"
    source_value: float | Callable[[float], float] = 0.0

    @staticmethod
    def torque(value, shaft: str | None = None) -> "Drive":
        return Drive(mode="torque", value=value, shaft=shaft)

    @staticmethod
    def velocity(value, shaft: str | None = None) -> "Drive":
        return Drive(mode="velocity", value=value, shaft=shaft)

    @staticmethod
    def input_locked(
        source_shaft: str | None = None,
        source_kind: str = "velocity",
        source_value: float | Callable[[float], float] = 0.0,
    ) -> "Drive":
        return Drive(
            mode="input_locked",
            source_shaft=source_shaft,
            source_kind=source_kind,
            source_value=source_value,
        )

    def value_at(self, t: float) -> float:
        return self.value(t) if callable(self.value) else self.value

    def source_value_at(self, t: float) -> float:
        return self.source_value(t) if callable(self.source_value) else self.source_value


@dataclass(frozen=True)
class SimOptions:
    """Integration settings.

    initial "consistent" seeds the run with the minimum-norm feasible
    state matching the t=0 prescriptions; "rest" starts every shaft at
    zero, letting the first Euler step absorb any prescribed jump as an
    impulsive (but constraint-consistent) spin-up.
    """

    duration: float = 0.5
    dt: float = 1e-4
    epsilon_inertia: float = 1e-8
    integrator: str = "semi_implicit_euler"
    record_torques: bool = True
    initial: str = "consistent"
    omega_eps: float = 1e-4  # resistive-load tanh regularization width


@dataclass
class Scenario:
    """A mechanism plus drive, per-shaft loads, and integration options."""

    graph: MechanismGraph
    drive: Drive
    loads: dict[str, Load] = field(default_factory=dict)
    options: SimOptions = field(default_factory=SimOptions)
    name: str = ""

    def drive_shaft(self) -> str:
        if self.drive.shaft is not None:
            return self.drive.shaft
        inp = self.graph.meta.get("input")
        if inp is None:
            raise ScenarioError(
                "drive.shaft: no shaft given and the graph does not name an input"
            )
        return inp

    def validate(self) -> None:
        """Raise ScenarioError on contradictions; graph errors pass through."""
        self.graph.require_valid()
        opts = self.options
        if not opts.duration > 0:
            raise ScenarioError(f"sim.duration: must be > 0, got {opts.duration}")
        if not opts.dt > 0:
            raise ScenarioError(f"sim.dt: must be > 0, got {opts.dt}")
        if not opts.epsilon_inertia > 0:
            raise ScenarioError(f"sim.epsilon_inertia: must be > 0, got {opts.epsilon_inertia}")
        if opts.integrator not in INTEGRATORS:
            raise ScenarioError(
                f"sim.integrator: unknown integrator {opts.integrator!r}; "
                f"expected one of {INTEGRATORS}"
            )
        if opts.initial not in ("consistent", "rest"):
            raise ScenarioError(f"sim.initial: expected 'consistent' or 'rest', got {opts.initial!r}")
        if self.drive.mode not in DRIVE_MODES:
            raise ScenarioError(
                f"drive.mode: unknown mode {self.drive.mode!r}; expected one of {DRIVE_MODES}"
            )
        drive_shaft = self.drive_shaft()
        self.graph.shaft_id(drive_shaft)
        for name in self.loads:
            self.graph.shaft_id(name)
        if isinstance(self.loads.get(drive_shaft), Locked) and self.drive.mode != "input_locked":
            raise ScenarioError(
                f"loads.{drive_shaft}: cannot lock the driven shaft; "
                "use drive.mode 'input_locked' instead"
            )
        if self.drive.mode == "input_locked" and self.drive.source_shaft is not None:
            if self.drive.source_shaft == drive_shaft:
                raise ScenarioError(
                    "drive.source.shaft: coincides with the locked input shaft"
                )
            self.graph.shaft_id(self.drive.source_shaft)
            if self.drive.source_kind not in ("velocity", "torque"):
                raise ScenarioError(
                    f"drive.source.kind: expected 'velocity' or 'torque', "
                    f"got {self.drive.source_kind!r}"
                )
            if isinstance(self.loads.get(self.drive.source_shaft), Locked):
                raise ScenarioError(
                    f"loads.{self.drive.source_shaft}: cannot lock the source-driven shaft"
                )


@dataclass
class Trajectory:
    """Recorded simulation output.

    All series share the same length: one row per time point, where row i
    holds the state at t[i] together with the acceleration and torques of
    the step launched from it (the final row gets an extra instantaneous
    solve).  ``element_torques[name]`` has one column per port of that
    element, ordered as ``element_ports[name]``.
    """

    shaft_names: list[str]
    t: np.ndarray
    omega: np.ndarray
    alpha: np.ndarray
    element_torques: dict[str, np.ndarray] | None
    element_ports: dict[str, list[str]]
    element_shafts: dict[str, dict[str, str]]
    drive_torque: np.ndarray
    aux_torque: np.ndarray | None
    meta: dict

    def omega_of(self, name: str) -> np.ndarray:
        return self.omega[:, self.shaft_names.index(name)]

    def alpha_of(self, name: str) -> np.ndarray:
        return self.alpha[:, self.shaft_names.index(name)]

    def port_torque(self, element: str, port: str) -> np.ndarray:
        from .errors import MissingTorqueSeries

        if self.element_torques is None:
            raise MissingTorqueSeries(
                "trajectory was recorded with record_torques=False"
            )
        cols = self.element_ports[element]
        return self.element_torques[element][:, cols.index(port)]

    def final_state(self) -> dict[str, float]:
        return {n: float(self.omega[-1, i]) for i, n in enumerate(self.shaft_names)}

    def to_csv(self, path) -> None:
        write_trajectory_csv(self, path)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Write `t,<shaft>.omega,<shaft>.alpha[,<element>.tau_<port>]` rows.

    Numbers carry 17 significant digits so the file round-trips floats
    exactly and reruns produce bit-identical output.
    """
    headers = ["t"]
    columns = [traj.t]
    for i, name in enumerate(traj.shaft_names):
        headers.append(f"{name}.omega")
        columns.append(traj.omega[:, i])
        headers.append(f"{name}.alpha")
        columns.append(traj.alpha[:, i])
    if traj.element_torques is not None:
        for ename, ports in traj.element_ports.items():
            series = traj.element_torques[ename]
            for c, port in enumerate(ports):
                headers.append(f"{ename}.tau_{port}")
                columns.append(series[:, c])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(headers) + "\n")
        for r in range(len(traj.t)):
            fh.write(",".join(f"{col[r]:.17g}" for col in columns) + "\n")


# --------------------------------------------------------------------------
# Assembly
# --------------------------------------------------------------------------


class _Assembled:
    """Constraint rows, inertia/damping vectors, and pin bookkeeping."""

    def __init__(self, scenario: Scenario):
        g = scenario.graph
        opts = scenario.options
        self.graph = g
        self.opts = opts
        self.n = g.n_shafts

        inertia = np.asarray(g.inertias(), dtype=float)
        self.m_declared = inertia.copy()
        self.m_eff = np.where(inertia > 0.0, inertia, opts.epsilon_inertia)

        self.damping = np.zeros(self.n)
        self.resistive: list[tuple[int, float]] = []
        self.applied: list[tuple[int, AppliedTorque]] = []
        for name, load in scenario.loads.items():
            sid = g.shaft_id(name)
            if isinstance(load, Viscous):
                self.damping[sid] += load.b
            elif isinstance(load, ConstantResistive):
                self.resistive.append((sid, load.tau))
            elif isinstance(load, AppliedTorque):
                self.applied.append((sid, load))
            elif isinstance(load, (Free, Locked)):
                pass
            else:
                raise ScenarioError(f"loads.{name}: unsupported load {load!r}")

        C = constraint_matrix(g)
        pins: list[tuple[int, Callable[[float], float]]] = []  # (shaft, target fn)
        self.drive_kind = scenario.drive.mode
        drive = scenario.drive
        drive_sid = g.shaft_id(scenario.drive_shaft())
        self.drive_sid = drive_sid
        self.effort: list[tuple[int, Callable[[float], float]]] = []
        self.drive_pin_row: int | None = None  # index into pin list
        self.aux_pin_row: int | None = None
        self.aux_sid: int | None = None
        self.aux_kind: str | None = None

        if drive.mode == "torque":
            self.effort.append((drive_sid, drive.value_at))
        elif drive.mode == "velocity":
            self.drive_pin_row = len(pins)
            pins.append((drive_sid, drive.value_at))
        else:  # input_locked
            self.drive_pin_row = len(pins)
            pins.append((drive_sid, lambda t: 0.0))
            if drive.source_shaft is not None:
                self.aux_sid = g.shaft_id(drive.source_shaft)
                self.aux_kind = drive.source_kind
                if drive.source_kind == "velocity":
                    self.aux_pin_row = len(pins)
                    pins.append((self.aux_sid, drive.source_value_at))
                else:
                    self.effort.append((self.aux_sid, drive.source_value_at))

        for name, load in scenario.loads.items():
            if isinstance(load, Locked):
                pins.append((g.shaft_id(name), lambda t: 0.0))

        self.n_element_rows = C.shape[0]
        self.pins = pins
        P = np.zeros((len(pins), self.n))
        for r, (sid, _) in enumerate(pins):
            P[r, sid] = 1.0
        self.A = np.vstack([C, P]) if len(pins) else C
        self.m_rows = self.A.shape[0]

    # -- saddle operators ----------------------------------------------

    def saddle(self, dt: float | None) -> np.ndarray:
        """KKT matrix; dt folds the semi-implicit viscous term into M."""
        n, m = self.n, self.m_rows
        K = np.zeros((n + m, n + m))
        w = self.m_eff + (dt * self.damping if dt is not None else 0.0)
        K[:n, :n] = np.diag(w)
        K[:n, n:] = -self.A.T
        K[n:, :n] = self.A
        return K

    def tau_explicit(self, v: np.ndarray, t: float) -> np.ndarray:
        """All torque that goes on the RHS: sources, applied, resistive."""
        tau = np.zeros(self.n)
        for sid, fn in self.effort:
            tau[sid] += fn(t)
        for sid, load in self.applied:
            tau[sid] += load.value(t)
        for sid, mag in self.resistive:
            tau[sid] += -mag * math.tanh(v[sid] / self.opts.omega_eps)
        return tau

    def pin_rhs_discrete(self, v: np.ndarray, t_next: float, dt: float) -> np.ndarray:
        """Pin-row accelerations that land each shaft on its target at t+dt."""
        rhs = np.zeros(len(self.pins))
        for r, (sid, target) in enumerate(self.pins):
            rhs[r] = (target(t_next) - v[sid]) / dt
        return rhs

    def pin_rhs_derivative(self, t: float, h: float = 1e-7) -> np.ndarray:
        """Pin-row accelerations as exact target derivatives (for RK4)."""
        rhs = np.zeros(len(self.pins))
        for r, (_, target) in enumerate(self.pins):
            rhs[r] = (target(t + h) - target(t - h)) / (2.0 * h)
        return rhs

    def initial_state(self) -> np.ndarray:
        v = np.zeros(self.n)
        if self.opts.initial == "rest":
            if self.opts.integrator == "rk4":
                for sid, target in self.pins:
                    if target(0.0) != 0.0:
                        raise ScenarioError(
                            "sim.initial: 'rest' conflicts with a nonzero prescribed "
                            "speed under rk4; use initial='consistent'"
                        )
            return v
        prescribed = {self.graph.shaft_name(sid): target(0.0) for sid, target in self.pins}
        if not prescribed:
            return v
        full = solve_velocities(self.graph, prescribed, require_external_determined=False)
        for name, val in full.items():
            v[self.graph.shaft_id(name)] = val
        return v


def _factor(K: np.ndarray):
    """LU-factor the saddle matrix, raising SingularKKT when it degenerates."""
    with warnings.catch_warnings():
        # scipy warns on exact zeros in U; we detect and raise instead
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(K, check_finite=False)
    diag = np.abs(np.diag(lu))
    dmax = float(diag.max()) if diag.size else 0.0
    if dmax == 0.0 or float(diag.min()) < 1e-14 * dmax:
        _, _, vt = np.linalg.svd(K)
        raise SingularKKT(
            "constraint system is singular (redundant or conflicting rows)",
            direction=vt[-1],
        )
    return lu, piv


# --------------------------------------------------------------------------
# Stepping and simulation
# --------------------------------------------------------------------------


def step(
    scenario: Scenario,
    v: np.ndarray,
    t: float,
    dt: float | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Advance one semi-implicit Euler step from (v, t).

    Returns (v_next, alpha, multipliers).  A convenience wrapper over the
    machinery :func:`simulate` uses; it re-assembles per call, so prefer
    :func:`simulate` for long runs.
    """
    scenario.validate()
    sys_ = _Assembled(scenario)
    dt = scenario.options.dt if dt is None else dt
    lu = _factor(sys_.saddle(dt))
    alpha, lam = _euler_solve(sys_, lu, v, t, dt)
    return v + dt * alpha, alpha, lam


def _euler_solve(sys_: _Assembled, lu, v: np.ndarray, t: float, dt: float):
    rhs = np.concatenate(
        [
            sys_.tau_explicit(v, t) - sys_.damping * v,
            np.zeros(sys_.n_element_rows),
            sys_.pin_rhs_discrete(v, t + dt, dt),
        ]
    )
    x = lu_solve(lu, rhs, check_finite=False)
    return x[: sys_.n], x[sys_.n :]


def _rk4_rate(sys_: _Assembled, lu, v: np.ndarray, t: float):
    rhs = np.concatenate(
        [
            sys_.tau_explicit(v, t) - sys_.damping * v,
            np.zeros(sys_.n_element_rows),
            sys_.pin_rhs_derivative(t),
        ]
    )
    x = lu_solve(lu, rhs, check_finite=False)
    return x[: sys_.n], x[sys_.n :]


def simulate(scenario: Scenario) -> Trajectory:
    """Integrate a scenario over its full duration and record everything."""
    scenario.validate()
    sys_ = _Assembled(scenario)
    opts = scenario.options
    g = scenario.graph

    n_steps = max(1, int(round(opts.duration / opts.dt)))
    times = np.arange(n_steps + 1) * opts.dt
    v = sys_.initial_state()

    euler = opts.integrator == "semi_implicit_euler"
    lu = _factor(sys_.saddle(opts.dt if euler else None))

    n = sys_.n
    omega = np.empty((n_steps + 1, n))
    alpha = np.empty((n_steps + 1, n))
    drive_torque = np.zeros(n_steps + 1)
    aux_torque = np.zeros(n_steps + 1) if sys_.aux_sid is not None else None
    torques: dict[str, np.ndarray] | None = None
    ports = {e.name: [p for p, _ in e.ports()] for e in g.elements}
    if opts.record_torques:
        torques = {e.name: np.empty((n_steps + 1, len(e.ports()))) for e in g.elements}
    rows = [e.row_entries() for e in g.elements]

    for i in range(n_steps + 1):
        t = times[i]
        if euler:
            a, lam = _euler_solve(sys_, lu, v, t, opts.dt)
        else:
            a, lam = _rk4_rate(sys_, lu, v, t)
        omega[i] = v
        alpha[i] = a
        _record_torques(g, rows, lam, torques, i)
        _record_sources(sys_, scenario, lam, t, drive_torque, aux_torque, i)
        if i == n_steps:
            break
        if euler:
            v = v + opts.dt * a
        else:
            dt = opts.dt
            k1 = a
            k2, _ = _rk4_rate(sys_, lu, v + 0.5 * dt * k1, t + 0.5 * dt)
            k3, _ = _rk4_rate(sys_, lu, v + 0.5 * dt * k2, t + 0.5 * dt)
            k4, _ = _rk4_rate(sys_, lu, v + dt * k3, t + dt)
            v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    meta = _trajectory_meta(scenario, sys_)
    return Trajectory(
        shaft_names=g.shaft_names(),
        t=times,
        omega=omega,
        alpha=alpha,
        element_torques=torques,
        element_ports=ports,
        element_shafts={
            e.name: {p: g.shaft_name(sid) for p, sid in e.ports()} for e in g.elements
        },
        drive_torque=drive_torque,
        aux_torque=aux_torque,
        meta=meta,
    )


def _record_torques(g, rows, lam, torques, i):
    if torques is None:
        return
    for r, e in enumerate(g.elements):
        torques[e.name][i] = [coeff * lam[r] for _, coeff in rows[r]]


def _record_sources(sys_, scenario, lam, t, drive_torque, aux_torque, i):
    base = sys_.n_element_rows
    if scenario.drive.mode == "torque":
        drive_torque[i] = scenario.drive.value_at(t)
    elif sys_.drive_pin_row is not None:
        drive_torque[i] = lam[base + sys_.drive_pin_row]
    if sys_.aux_sid is not None and aux_torque is not None:
        if sys_.aux_kind == "velocity" and sys_.aux_pin_row is not None:
            aux_torque[i] = lam[base + sys_.aux_pin_row]
        else:
            aux_torque[i] = scenario.drive.source_value_at(t)


def _trajectory_meta(scenario: Scenario, sys_: _Assembled) -> dict:
    g = scenario.graph
    loads_doc = {}
    for name, load in scenario.loads.items():
        if isinstance(load, Viscous):
            loads_doc[name] = {"kind": "viscous", "b": load.b}
        elif isinstance(load, ConstantResistive):
            loads_doc[name] = {"kind": "constant_resistive", "tau": load.tau}
        elif isinstance(load, Locked):
            loads_doc[name] = {"kind": "locked"}
        elif isinstance(load, AppliedTorque):
            loads_doc[name] = {
                "kind": "applied_torque",
                "value": load.tau if not callable(load.tau) else "callable",
            }
        else:
            loads_doc[name] = {"kind": "free"}

    outputs = g.meta.get("outputs", [])
    equal = bool(outputs) and set(scenario.loads) == set(outputs)
    if equal:
        vals = [loads_doc[o] for o in outputs]
        equal = all(v == vals[0] for v in vals)

    return {
        "graph": dict(g.meta),
        "drive": {
            "mode": scenario.drive.mode,
            "shaft": scenario.drive_shaft(),
            "source_shaft": scenario.drive.source_shaft,
            "source_kind": scenario.drive.source_kind,
        },
        "loads": loads_doc,
        # In-memory only: the live load objects, for exact power accounting.
        "loads_obj": dict(scenario.loads),
        "equal_output_loads": equal,
        "dt": scenario.options.dt,
        "duration": scenario.options.duration,
        "integrator": scenario.options.integrator,
        "epsilon_inertia": scenario.options.epsilon_inertia,
        "omega_eps": scenario.options.omega_eps,
        "inertias": {s.name: s.inertia for s in g.shafts},
        "drive_shaft": scenario.drive_shaft(),
        "name": scenario.name,
    }


def impulse_response(
    graph: MechanismGraph,
    shaft: str,
    tau: float = 1.0,
    held: tuple[str, ...] | list[str] = (),
    epsilon_inertia: float = 1e-8,
) -> np.ndarray:
    """Instantaneous accelerations from rest under a unit of applied torque.

    Args:
        graph: validated mechanism graph.
        shaft: name of the shaft receiving the torque.
        tau: applied torque (N*m).
        held: shafts whose acceleration is pinned to zero (e.g. a locked
            input) during the probe.
        epsilon_inertia: substitute inertia for massless shafts.

    Returns:
        Array of angular accelerations indexed by shaft id.
    """
    graph.require_valid()
    n = graph.n_shafts
    inertia = np.asarray(graph.inertias(), dtype=float)
    m_eff = np.where(inertia > 0.0, inertia, epsilon_inertia)
    C = constraint_matrix(graph)
    pin_rows = np.zeros((len(held), n))
    for r, name in enumerate(held):
        pin_rows[r, graph.shaft_id(name)] = 1.0
    A = np.vstack([C, pin_rows]) if len(held) else C
    m = A.shape[0]
    K = np.zeros((n + m, n + m))
    K[:n, :n] = np.diag(m_eff)
    K[:n, n:] = -A.T
    K[n:, :n] = A
    rhs = np.zeros(n + m)
    rhs[graph.shaft_id(shaft)] = tau
    lu = _factor(K)
    x = lu_solve(lu, rhs, check_finite=False)
    return x[:n]
