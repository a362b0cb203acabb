"""Replay a first-stage decision against a realisation and report what happens."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .comfort import ewh_comfort, hvac_comfort, pev_comfort
from .linprog import solve_lp
from .model.assemble import recourse_lp
from .model.diagnose import diagnose
from .model.linear import LinearModel
from .model.types import FirstStageDecision, SystemConfig, UncertaintyRealization

FEASIBLE_RESIDUAL = 1e-6


@dataclass
class RunReport:
    """Per-slot series, totals and residuals for one recourse solve.

    Arrays are indexed ``[unit, slot]``; rows for buildings without the
    device are NaN. Comfort is recomputed from the trajectories and clamped
    to [0, 1], so it does not depend on the epigraph variables.
    """

    feasible: bool
    objective: float = float("nan")
    clock: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dr: np.ndarray = field(default_factory=lambda: np.zeros(0))
    t_in: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    t_water: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    ess_soc: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    ess_charge: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    ess_discharge: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    pev_soc: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    pev_charge: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    hvac_power: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    ewh_power: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    p_base: np.ndarray = field(default_factory=lambda: np.zeros(0))
    p_peak: np.ndarray = field(default_factory=lambda: np.zeros(0))
    p_grid: np.ndarray = field(default_factory=lambda: np.zeros(0))
    spill: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tie_usage: np.ndarray = field(default_factory=lambda: np.zeros(0))
    res: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    load: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    comfort_hvac: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    comfort_pev: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    comfort_ewh: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    costs: dict[str, float] = field(default_factory=dict)
    residual_balance: float = float("nan")
    residual_rows: float = float("nan")
    infeasible_group: str | None = None
    infeasibility: dict | None = None

    @property
    def total_cost(self) -> float:
        return self.costs.get("total", float("nan"))

    def mean_comfort(self) -> dict[str, float]:
        """Time-averaged comfort per category and their unweighted mean."""
        out = {}
        for name in ("hvac", "pev", "ewh"):
            a = getattr(self, f"comfort_{name}")
            a = a[np.isfinite(a)]
            if a.size:
                out[name] = float(a.mean())
        out["overall"] = float(np.mean(list(out.values()))) if out else float("nan")
        return out

    def summary(self) -> dict:
        doc = {"feasible": self.feasible, "objective": self.objective,
               "costs": self.costs, "comfort": self.mean_comfort() if self.feasible else {},
               "residuals": {"power_balance": self.residual_balance,
                             "rows": self.residual_rows}}
        if not self.feasible:
            doc["infeasible_group"] = self.infeasible_group
            doc["infeasibility"] = self.infeasibility
        return doc

    def slot_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        series: list[tuple[str, np.ndarray]] = [
            ("clock", self.clock), ("dr", self.dr), ("p_base", self.p_base),
            ("p_peak", self.p_peak), ("p_grid", self.p_grid), ("tie_usage", self.tie_usage),
            ("spill", self.spill)]
        for name, arr in (("res", self.res), ("load", self.load), ("t_in", self.t_in),
                          ("t_water", self.t_water), ("hvac_p", self.hvac_power),
                          ("ewh_p", self.ewh_power), ("ess_soc", self.ess_soc),
                          ("ess_ch", self.ess_charge), ("ess_dis", self.ess_discharge),
                          ("pev_soc", self.pev_soc), ("pev_p", self.pev_charge),
                          ("comfort_hvac", self.comfort_hvac), ("comfort_ewh", self.comfort_ewh),
                          ("comfort_pev", self.comfort_pev)):
            for k in range(arr.shape[0]):
                series.append((f"{name}_{k}", arr[k]))
        w.writerow(["slot"] + [s[0] for s in series])
        for t in range(self.clock.size):
            w.writerow([t] + [repr(float(s[1][t])) for s in series])
        return buf.getvalue()

    def write(self, out_dir: str | Path, stem: str = "report") -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"report_csv": out / f"{stem}.csv", "report_json": out / f"{stem}.json"}
        paths["report_csv"].write_text(self.slot_csv() if self.feasible else "slot\n")
        paths["report_json"].write_text(json.dumps(self.summary(), indent=1) + "\n")
        return paths


def _grid(model: LinearModel, x: np.ndarray, device: str, quantity: str, units: int, T: int
          ) -> np.ndarray:
    out = np.full((units, T), np.nan)
    for j in model.columns(device=device, quantity=quantity):
        t = model.tags[j]
        out[t.index, t.slot] = x[j]
    return out


def simulate(config: SystemConfig, x: FirstStageDecision, realization: UncertaintyRealization,
             backend: str = "auto") -> RunReport:
    """Solve the recourse LP at ``realization`` and report the dispatch.

    Raises ``ValueError`` if the realisation leaves its declared intervals
    or the decision does not fit the configuration.
    """
    config.check()
    issues = realization.issues(config) + x.issues(config)
    if issues:
        raise ValueError("; ".join(issues))
    lp = recourse_lp(config, x, realization)
    sol = solve_lp(lp, backend=backend)
    if not sol.optimal:
        rep = diagnose(lp, backend=backend)
        return RunReport(feasible=False, infeasible_group=rep.worst_group(),
                         infeasibility=rep.to_json())
    v = sol.x
    T, nb, nv = config.T, len(config.buildings), len(config.pevs)
    ness = len(config.ess_buildings)
    dt = config.grid.slot_hours
    tariff = config.tariff

    def flat(quantity):
        return _grid(lp, v, "grid", quantity, 1, T)[0]

    rep = RunReport(feasible=True, objective=sol.objective)
    rep.clock = config.grid.start_hour + np.arange(T) * dt
    rep.dr = np.asarray(realization.dr, dtype=float)
    rep.t_in = _grid(lp, v, "hvac", "t_in", nb, T)
    rep.hvac_power = _grid(lp, v, "hvac", "p", nb, T)
    rep.t_water = _grid(lp, v, "ewh", "t_w", nb, T)
    rep.ewh_power = _grid(lp, v, "ewh", "p", nb, T)
    rep.ess_soc = _grid(lp, v, "ess", "soc", ness, T)
    rep.ess_charge = _grid(lp, v, "ess", "p_ch", ness, T)
    rep.ess_discharge = _grid(lp, v, "ess", "p_dis", ness, T)
    rep.pev_soc = _grid(lp, v, "pev", "soc", nv, T)
    rep.pev_charge = _grid(lp, v, "pev", "p", nv, T)
    rep.p_base, rep.p_peak = flat("p_base"), flat("p_peak")
    rep.p_grid, rep.spill = flat("p_total"), flat("spill")
    rep.tie_usage = rep.p_grid / (rep.dr * config.network.tie_line_limit)
    rep.res = np.asarray(realization.res, dtype=float)
    rep.load = np.asarray(realization.load, dtype=float)

    rep.comfort_hvac = np.full((nb, T), np.nan)
    rep.comfort_ewh = np.full((nb, T), np.nan)
    for i, b in enumerate(config.buildings):
        if b.hvac is not None:
            rep.comfort_hvac[i] = np.clip(hvac_comfort(rep.t_in[i], b.hvac), 0.0, 1.0)
        if b.ewh is not None:
            rep.comfort_ewh[i] = np.clip(ewh_comfort(rep.t_water[i], b.ewh), 0.0, 1.0)
    rep.comfort_pev = np.array([np.clip(pev_comfort(rep.pev_soc[k], ev), 0.0, 1.0)
                                for k, ev in enumerate(config.pevs)]).reshape(nv, T)

    zero = np.nan_to_num
    costs = {"base": float(dt * np.sum(tariff.c_base * rep.p_base)),
             "peak": float(dt * np.sum(tariff.c_peak * rep.p_peak)),
             "ess_degradation": float(dt * tariff.c_ess_deg
                                      * np.sum(rep.ess_charge + rep.ess_discharge)),
             "pev_degradation": float(dt * tariff.c_pev_deg * np.sum(rep.pev_charge))}
    costs["total"] = costs["base"] + costs["peak"] + costs["ess_degradation"] \
        + costs["pev_degradation"]
    rep.costs = costs

    supply = rep.res.sum(axis=0) + rep.p_base + rep.p_peak + rep.ess_discharge.sum(axis=0)
    demand = (rep.load.sum(axis=0) + zero(rep.hvac_power).sum(axis=0)
              + zero(rep.ewh_power).sum(axis=0) + rep.ess_charge.sum(axis=0)
              + rep.pev_charge.sum(axis=0) + rep.spill)
    rep.residual_balance = float(np.abs(supply - demand).max(initial=0.0))
    rep.residual_rows = float(lp.row_violation(v).max(initial=0.0))
    rep.feasible = rep.residual_balance <= FEASIBLE_RESIDUAL and \
        rep.residual_rows <= FEASIBLE_RESIDUAL
    if not rep.feasible:
        rep.infeasible_group = "balance" if rep.residual_balance > FEASIBLE_RESIDUAL else \
            lp.row_tags[int(np.argmax(lp.row_violation(v)))].group
    return rep
