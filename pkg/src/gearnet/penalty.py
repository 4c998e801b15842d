"""Penalty-method reference integrator.

An independent cross-check for the multiplier-based dynamics: instead of
enforcing C @ v = 0 exactly, every constraint row becomes a very stiff
damper with torque -k_pen * C^T (C @ v).  The resulting unconstrained ODE
is integrated with an implicit stiff solver, so no part of the saddle
point machinery is shared.  Agreement between the two routes validates
both the constraint assembly and the KKT stepping.

Only free (torque-driven) scenarios are supported; velocity prescriptions
have no penalty analogue here and are cross-checked kinematically instead.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import Scenario, _Assembled
from .errors import ScenarioError


def penalty_velocities(
    scenario: Scenario,
    k_pen: float = 1e8,
    rtol: float = 1e-9,
    atol: float = 1e-12,
) -> np.ndarray:
    """Final shaft velocities of the penalty-regularized system.

    Integrates M dv/dt = tau(v, t) - k_pen * C^T C v from rest over the
    scenario duration with an implicit Radau scheme and returns v(T).

    Raises ScenarioError when the scenario contains velocity
    prescriptions or locked shafts, which this reference does not model.
    """
    scenario.validate()
    sys_ = _Assembled(scenario)
    if sys_.pins:
        raise ScenarioError(
            "penalty reference handles torque-driven scenarios only; "
            "got velocity-prescribed or locked shafts"
        )

    C = sys_.A[: sys_.n_element_rows]
    m_eff = sys_.m_eff
    damping = sys_.damping
    stiff = k_pen * (C.T @ C)

    def rate(t: float, v: np.ndarray) -> np.ndarray:
        tau = sys_.tau_explicit(v, t) - damping * v - stiff @ v
        return tau / m_eff

    def jac(t: float, v: np.ndarray) -> np.ndarray:
        # The resistive tanh terms are omitted from the Jacobian; Radau
        # only needs it approximately right for step control.
        return (-stiff - np.diag(damping)) / m_eff[:, None]

    sol = solve_ivp(
        rate,
        (0.0, scenario.options.duration),
        np.zeros(sys_.n),
        method="Radau",
        rtol=rtol,
        atol=atol,
        jac=jac,
        dense_output=False,
    )
    if not sol.success:  # pragma: no cover - scipy failure is exceptional
        raise RuntimeError(f"penalty reference integration failed: {sol.message}")
    return sol.y[:, -1]
