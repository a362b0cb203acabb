"""Device state trajectories evaluated directly (outside any LP).

Each function maps a power schedule to the state after every slot. They
are used to replay LP solutions and as independent references in tests.
Every energy conversion multiplies kW by ``grid.slot_hours``.
"""
from __future__ import annotations

import numpy as np

from .types import EssParams, EwhParams, HvacParams, PevParams, ThermalState, TimeGrid

RATE_TOL = 1e-9


def _powers(values, name: str, lo: float, hi: float) -> np.ndarray:
    p = np.asarray(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"{name}: non-finite value")
    bad = np.flatnonzero((p < lo - RATE_TOL) | (p > hi + RATE_TOL))
    if bad.size:
        t = int(bad[0])
        raise ValueError(f"{name}[{t}] = {p[t]:.6g} outside [{lo:.6g}, {hi:.6g}]")
    return p


def hvac_step(state: ThermalState, t_out: float, irradiance: float, p_hvac: float,
              params: HvacParams, slot: int = 0) -> ThermalState:
    """One slot of ``x' = beta x + alpha [t_out, irradiance, sigma*eta*p]``."""
    vals = (state.t_in, state.t_iw, state.t_ow, t_out, irradiance, p_hvac)
    if not all(np.isfinite(v) for v in vals):
        raise ValueError("hvac_step: non-finite input")
    _powers([p_hvac], "p_hvac", 0.0, params.p_max)
    u = np.array([t_out, irradiance, params.sigma[slot] * params.eta * p_hvac])
    return ThermalState.from_array(params.beta @ state.as_array() + params.alpha @ u)


def hvac_trajectory(initial: ThermalState, powers, t_out, irradiance, params: HvacParams
                    ) -> np.ndarray:
    """States after each slot, shape (slots, 3) with columns t_in, t_iw, t_ow."""
    p = _powers(powers, "p_hvac", 0.0, params.p_max)
    out = np.empty((p.size, 3))
    state = initial
    for t in range(p.size):
        state = hvac_step(state, float(t_out[t]), float(irradiance[t]), float(p[t]), params, t)
        out[t] = state.as_array()
    return out


def pev_soc_trajectory(soc0: float, charges, params: PevParams, grid: TimeGrid) -> np.ndarray:
    """SoC after each slot; not clamped, so overcharging shows up as ``> soc_max``."""
    p = _powers(charges, "p_pev", 0.0, params.p_ch_max)
    return soc0 + np.cumsum(p * grid.slot_hours * params.eta_ch) / params.e_rated


def ewh_temp_trajectory(t0: float, powers, params: EwhParams, grid: TimeGrid) -> np.ndarray:
    if not params.mass > 0:
        raise ValueError("ewh mass must be positive")
    p = _powers(powers, "p_ewh", params.p_min, params.p_max)
    drain = params.heat_drain[:p.size]
    return t0 + np.cumsum(params.zeta * p * grid.slot_hours - drain) / params.heat_capacity


def ess_soc_trajectory(params: EssParams, charges, discharges, grid: TimeGrid) -> np.ndarray:
    pc = _powers(charges, "p_ch", 0.0, params.p_ch_max)
    pd = _powers(discharges, "p_dis", 0.0, params.p_dis_max)
    if pc.size != pd.size:
        raise ValueError("charge and discharge schedules differ in length")
    both = np.flatnonzero((pc > RATE_TOL) & (pd > RATE_TOL))
    if both.size:
        raise ValueError(f"slot {int(both[0])}: simultaneous charge and discharge")
    dt = grid.slot_hours
    step = (pc * dt * params.eta_ch - pd * dt / params.eta_dis) / params.e_rated
    return params.soc0 + np.cumsum(step)
