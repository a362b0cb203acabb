"""Bundled configurations with synthetic, seeded profiles.

The real building, weather and tariff series behind the original study are
not public. Everything produced here is synthetic and only meant to be of
a plausible magnitude: six buildings with 10 kW of solar each (60 kW in
total), fifty vehicles in three models, a flat base price with a peak
price ten times higher from 12:00 to 18:00, and an 1867 kW tie-line.

The HVAC coefficients come from an explicit Euler step of a three-node
resistance-capacitance network (room air, inner wall, outer wall) and are
illustrative, not fitted to any building.
"""
from __future__ import annotations

import numpy as np

from .types import (Budgets, Building, EssParams, EwhParams, Exogenous, HvacParams,
                    NetworkParams, PevParams, Profile, SystemConfig, Tariff, ThermalState,
                    TimeGrid)

# (model, rated kWh, max charging kW, count)
PEV_MODELS = (("Tesla Model S 75D", 75.0, 11.5, 20),
              ("Tesla Model X 100D", 100.0, 17.2, 15),
              ("Nissan Leaf SV", 30.0, 3.6, 15))

BASE_PRICE = 0.08  # $/kWh
PEAK_HOURS = (12.0, 18.0)


def rc_hvac_coefficients(slot_hours: float = 0.25, c_air: float = 3.0, c_iw: float = 15.0,
                         c_ow: float = 25.0, ua_air_iw: float = 6.0, ua_window: float = 1.5,
                         ua_wall: float = 4.0, ua_out: float = 5.0, solar_air: float = 4.0,
                         solar_wall: float = 8.0) -> tuple[np.ndarray, np.ndarray]:
    """Euler-discretised 3R3C room model; capacities in kWh/K, conductances in kW/K.

    Returns ``(alpha, beta)`` for the state ``[t_in, t_iw, t_ow]`` and the
    input ``[t_out, irradiance, thermal kW]``, with irradiance scaled to
    [0, 1] and ``solar_*`` the kW gained at full sun.
    """
    h = slot_hours
    K = np.array([
        [-(ua_air_iw + ua_window) / c_air, ua_air_iw / c_air, 0.0],
        [ua_air_iw / c_iw, -(ua_air_iw + ua_wall) / c_iw, ua_wall / c_iw],
        [0.0, ua_wall / c_ow, -(ua_wall + ua_out) / c_ow],
    ])
    G = np.array([
        [ua_window / c_air, solar_air / c_air, 1.0 / c_air],
        [0.0, 0.0, 0.0],
        [ua_out / c_ow, solar_wall / c_ow, 0.0],
    ])
    beta = np.eye(3) + h * K
    alpha = h * G
    if max(abs(np.linalg.eigvals(beta))) >= 1:
        raise ValueError("slot too long for a stable explicit step")
    return alpha, beta


def _clock(grid: TimeGrid) -> np.ndarray:
    return grid.start_hour + (np.arange(grid.slot_count) + 0.5) * grid.slot_hours


def synthetic_weather(grid: TimeGrid, rng: np.random.Generator) -> Exogenous:
    h = _clock(grid)
    t_out = 26.0 + 7.0 * np.sin(np.pi * np.clip(h - 8.0, 0, 14) / 14.0)
    t_out = t_out + rng.normal(0.0, 0.3, h.size)
    irr = np.clip(np.sin(np.pi * (h - 6.0) / 14.0), 0.0, None)
    irr = np.clip(irr * (1.0 + rng.normal(0.0, 0.05, h.size)), 0.0, 1.0)
    return Exogenous(t_out=np.round(t_out, 3), irradiance=np.round(irr, 4))


def synthetic_tariff(grid: TimeGrid, base: float = BASE_PRICE, ratio: float = 10.0,
                     peak_hours: tuple[float, float] = PEAK_HOURS) -> Tariff:
    h = _clock(grid)
    peak = np.flatnonzero((h >= peak_hours[0]) & (h < peak_hours[1]))
    T = grid.slot_count
    return Tariff(c_base=np.full(T, base), c_peak=np.full(T, base * ratio),
                  peak_slots=frozenset(int(t) for t in peak))


def _building(grid: TimeGrid, exo: Exogenous, rng: np.random.Generator, i: int,
              solar_kw: float, load_kw: float, hvac_pmax: float, with_ess: bool = True,
              with_hvac: bool = True, with_ewh: bool = True) -> Building:
    h = _clock(grid)
    T = grid.slot_count
    scale = rng.uniform(0.9, 1.1)
    res = np.round(solar_kw * scale * exo.irradiance, 3)
    occupancy = 0.7 + 0.3 * np.exp(-((h - 13.0) / 3.0) ** 2)
    load = np.round(load_kw * rng.uniform(0.85, 1.15) * occupancy
                    * (1.0 + rng.normal(0.0, 0.02, T)), 3)
    alpha, beta = rc_hvac_coefficients(grid.slot_hours)
    hvac = HvacParams(alpha=alpha, beta=beta, eta=3.0, sigma=-np.ones(T), p_max=hvac_pmax)
    drain = 0.25 + 0.35 * np.exp(-((h - 12.5) / 1.0) ** 2) + rng.uniform(0.0, 0.05, T)
    ewh = EwhParams(heat_drain=np.round(drain, 4))
    return Building(res=Profile(res, np.round(0.2 * res, 3), np.round(0.2 * res, 3)),
                    load=Profile(load, np.round(0.1 * load, 3), np.round(0.1 * load, 3)),
                    hvac=hvac if with_hvac else None, ewh=ewh if with_ewh else None,
                    ess=EssParams() if with_ess else None,
                    hvac_initial=ThermalState(24.0, 24.5, 26.0), name=f"CB{i + 1}")


def _pevs(rng: np.random.Generator, counts) -> list[PevParams]:
    out = []
    for (name, e, p, _), n in zip(PEV_MODELS, counts):
        for _ in range(n):
            nominal = round(float(rng.uniform(0.25, 0.55)), 4)
            out.append(PevParams(e_rated=e, p_ch_max=p, soc0_nominal=nominal,
                                 soc0_dev_plus=0.1, soc0_dev_minus=0.1, model=name))
    return out


def default_config(seed: int = 0, kappa: float = 1.0,
                   budgets: Budgets = Budgets(4, 4, 5, 4)) -> SystemConfig:
    """Six buildings and fifty vehicles over 8:00 to 20:00 in 15-minute slots."""
    rng = np.random.default_rng(seed)
    grid = TimeGrid(48, 0.25, 8.0)
    exo = synthetic_weather(grid, rng)
    buildings = [_building(grid, exo, rng, i, solar_kw=10.0, load_kw=40.0, hvac_pmax=20.0)
                 for i in range(6)]
    pevs = _pevs(rng, [m[3] for m in PEV_MODELS])
    return SystemConfig(grid=grid, buildings=tuple(buildings), pevs=tuple(pevs),
                        tariff=synthetic_tariff(grid), network=NetworkParams(1867.0, 0.8),
                        budgets=budgets, exogenous=exo, kappa=kappa, penetration=0.5,
                        seed=seed, name="default",
                        notes="synthetic profiles; not the original study's data")


def tiny_config(n_buildings: int = 1, n_pev: int = 1, budgets=(1, 1, 1, 1), seed: int = 0,
                slots: int = 4, ess: tuple[bool, ...] | None = None, kappa: float = 1.0,
                tie_line: float = 30.0) -> SystemConfig:
    """A few-slot instance small enough for exhaustive enumeration.

    The tie-line is sized so that the DR floor binds when every device
    wants power, which keeps all four uncertainty sources relevant.
    """
    rng = np.random.default_rng(seed)
    grid = TimeGrid(slots, 0.25, 11.0)
    exo = synthetic_weather(grid, rng)
    ess = (True,) * n_buildings if ess is None else tuple(ess)
    buildings = [_building(grid, exo, rng, i, solar_kw=5.0, load_kw=10.0, hvac_pmax=20.0,
                           with_ess=ess[i]) for i in range(n_buildings)]
    counts = [0, 0, 0]
    for v in range(n_pev):
        counts[v % 3] += 1
    pevs = _pevs(rng, counts)
    tariff = synthetic_tariff(grid, peak_hours=(grid.start_hour + grid.horizon / 2, 24.0))
    return SystemConfig(grid=grid, buildings=tuple(buildings), pevs=tuple(pevs), tariff=tariff,
                        network=NetworkParams(tie_line, 0.8), budgets=Budgets(*budgets),
                        exogenous=exo, kappa=kappa, penetration=0.5, seed=seed,
                        name=f"tiny-{n_buildings}b{n_pev}v-s{seed}",
                        notes="synthetic test instance")
