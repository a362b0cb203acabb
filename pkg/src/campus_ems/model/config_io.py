"""JSON (and CSV profile) serialisation of :class:`SystemConfig`.

Any per-slot vector in the JSON document may instead be a reference
``{"csv": "profiles.csv", "column": "t_out"}``; the path is resolved
relative to the JSON file and the CSV has a header row and one row per
slot.
"""
from __future__ import annotations

import csv
import json
from dataclasses import fields
from pathlib import Path
from typing import Any

import numpy as np

from .types import (Budgets, Building, ConfigError, EssParams, EwhParams, Exogenous,
                    HvacParams, NetworkParams, PevParams, Profile, SystemConfig, Tariff,
                    ThermalState, TimeGrid)

SCHEMA_VERSION = 1


class ConfigParseError(ValueError):
    """The document is not valid JSON; carries the line and column."""

    def __init__(self, path, line: int, column: int, msg: str):
        self.line, self.column = line, column
        super().__init__(f"{path}: line {line}, column {column}: {msg}")


class _Reader:
    def __init__(self, base: Path | None):
        self.base = base
        self.issues: list[str] = []
        self._csv: dict[Path, dict[str, list[float]]] = {}

    def _table(self, name: str) -> dict[str, list[float]]:
        path = Path(name)
        if not path.is_absolute() and self.base is not None:
            path = self.base / path
        if path not in self._csv:
            with open(path, newline="") as fh:
                rows = list(csv.DictReader(fh))
            cols: dict[str, list[float]] = {}
            for r, row in enumerate(rows):
                for k, v in row.items():
                    try:
                        cols.setdefault(k.strip(), []).append(float(v))
                    except (TypeError, ValueError):
                        raise ConfigError([f"{path}: row {r + 2} column {k!r}: not a number"])
            self._csv[path] = cols
        return self._csv[path]

    def vector(self, value: Any, path: str):
        if isinstance(value, dict) and "csv" in value:
            try:
                table = self._table(value["csv"])
            except OSError as exc:
                self.issues.append(f"{path}: cannot read {value['csv']}: {exc.strerror}")
                return None
            col = value.get("column")
            if col not in table:
                self.issues.append(f"{path}: column {col!r} not in {value['csv']}")
                return None
            return np.array(table[col])
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, list) and all(isinstance(v, (int, float)) for v in value):
            return np.array(value, dtype=float)
        self.issues.append(f"{path}: expected a number list or a CSV reference")
        return None

    def obj(self, doc: Any, path: str, cls, vectors=(), required=(), skip=()):
        if not isinstance(doc, dict):
            self.issues.append(f"{path}: expected an object")
            return None
        names = {f.name for f in fields(cls)} - set(skip)
        for k in doc:
            if k not in names:
                self.issues.append(f"{path}.{k}: unknown field")
        missing = [k for k in required if k not in doc]
        for k in missing:
            self.issues.append(f"{path}.{k}: required field missing")
        if missing:
            return None
        kw = {}
        for k, v in doc.items():
            if k not in names:
                continue
            if k in vectors:
                kw[k] = self.vector(v, f"{path}.{k}")
                if kw[k] is None:
                    return None
            elif isinstance(v, (int, float, str, bool)) or v is None:
                kw[k] = v
            else:
                self.issues.append(f"{path}.{k}: expected a scalar")
                return None
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            self.issues.append(f"{path}: {exc}")
            return None


def config_from_dict(doc: dict, base: Path | None = None) -> SystemConfig:
    r = _Reader(base)
    if not isinstance(doc, dict):
        raise ConfigError(["<root>: expected an object"])
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        r.issues.append(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    known = {"schema_version", "name", "notes", "seed", "kappa", "penetration", "grid",
             "exogenous", "tariff", "network", "budgets", "buildings", "pevs"}
    for k in doc:
        if k not in known:
            r.issues.append(f"{k}: unknown field")
    for k in ("grid", "exogenous", "tariff", "buildings", "pevs"):
        if k not in doc:
            r.issues.append(f"{k}: required field missing")
    if r.issues:
        raise ConfigError(r.issues)

    grid = r.obj(doc["grid"], "grid", TimeGrid)
    exo = r.obj(doc["exogenous"], "exogenous", Exogenous, vectors=("t_out", "irradiance"),
                required=("t_out", "irradiance"))
    tdoc = dict(doc["tariff"]) if isinstance(doc["tariff"], dict) else doc["tariff"]
    peak = []
    if isinstance(tdoc, dict):
        peak = tdoc.pop("peak_slots", [])
    tariff = r.obj(tdoc, "tariff", Tariff, vectors=("c_base", "c_peak"),
                   required=("c_base", "c_peak"), skip=("peak_slots",))
    if tariff is not None:
        if not (isinstance(peak, list) and all(isinstance(t, int) for t in peak)):
            r.issues.append("tariff.peak_slots: expected a list of slot indices")
        else:
            T = grid.slot_count if grid is not None else 0
            base = np.broadcast_to(np.asarray(tariff.c_base, dtype=float), (T,)) \
                if tariff.c_base.size == 1 else tariff.c_base
            pk = np.broadcast_to(np.asarray(tariff.c_peak, dtype=float), (T,)) \
                if tariff.c_peak.size == 1 else tariff.c_peak
            tariff = Tariff(base, pk, frozenset(peak), tariff.c_ess_deg, tariff.c_pev_deg)
    network = r.obj(doc.get("network", {}), "network", NetworkParams)
    budgets = r.obj(doc.get("budgets", {}), "budgets", Budgets)

    buildings = []
    if not isinstance(doc["buildings"], list):
        r.issues.append("buildings: expected a list")
    else:
        for i, bd in enumerate(doc["buildings"]):
            buildings.append(_building(r, bd, f"buildings[{i}]", grid))
    pevs = []
    if not isinstance(doc["pevs"], list):
        r.issues.append("pevs: expected a list")
    else:
        for v, pd in enumerate(doc["pevs"]):
            pevs.append(r.obj(pd, f"pevs[{v}]", PevParams,
                              required=("e_rated", "p_ch_max", "soc0_nominal")))
    if r.issues:
        raise ConfigError(r.issues)
    return SystemConfig(grid=grid, buildings=tuple(buildings), pevs=tuple(pevs), tariff=tariff,
                        network=network, budgets=budgets, exogenous=exo,
                        kappa=float(doc.get("kappa", 1.0)),
                        penetration=float(doc.get("penetration", 0.5)),
                        seed=int(doc.get("seed", 0)), name=str(doc.get("name", "")),
                        notes=str(doc.get("notes", "")))


def _building(r: _Reader, bd: Any, path: str, grid: TimeGrid | None):
    if not isinstance(bd, dict):
        r.issues.append(f"{path}: expected an object")
        return None
    known = {"name", "res_profile", "load_profile", "hvac", "hvac_initial", "ewh", "ess"}
    for k in bd:
        if k not in known:
            r.issues.append(f"{path}.{k}: unknown field")
    kw: dict[str, Any] = {"name": str(bd.get("name", ""))}
    for key, attr in (("res_profile", "res"), ("load_profile", "load")):
        if key not in bd:
            r.issues.append(f"{path}.{key}: required field missing")
            continue
        kw[attr] = r.obj(bd[key], f"{path}.{key}", Profile,
                         vectors=("nominal", "dev_plus", "dev_minus"), required=("nominal",))
        if kw[attr] is not None and kw[attr].nominal.size == 0:
            r.issues.append(f"{path}.{key}.nominal: empty")
    if bd.get("hvac") is not None:
        hd = bd["hvac"]
        if isinstance(hd, dict) and grid is not None and isinstance(hd.get("sigma"), (int, float)):
            hd = dict(hd, sigma=[hd["sigma"]] * grid.slot_count)
        kw["hvac"] = _hvac(r, hd, f"{path}.hvac")
    if "hvac_initial" in bd:
        kw["hvac_initial"] = r.obj(bd["hvac_initial"], f"{path}.hvac_initial", ThermalState,
                                   required=("t_in", "t_iw", "t_ow"))
    if bd.get("ewh") is not None:
        ed = bd["ewh"]
        if isinstance(ed, dict) and grid is not None and isinstance(ed.get("heat_drain"),
                                                                    (int, float)):
            ed = dict(ed, heat_drain=[ed["heat_drain"]] * grid.slot_count)
        kw["ewh"] = r.obj(ed, f"{path}.ewh", EwhParams, vectors=("heat_drain",),
                          required=("heat_drain",))
    if bd.get("ess") is not None:
        kw["ess"] = r.obj(bd["ess"], f"{path}.ess", EssParams)
    if any(v is None for k, v in kw.items() if k in ("res", "load", "hvac", "ewh", "ess",
                                                     "hvac_initial")):
        return None
    if "res" not in kw or "load" not in kw:
        return None
    return Building(**kw)


def _hvac(r: _Reader, hd: Any, path: str):
    if not isinstance(hd, dict):
        r.issues.append(f"{path}: expected an object")
        return None
    out = {}
    for k in ("alpha", "beta"):
        m = hd.get(k)
        if not (isinstance(m, list) and len(m) == 3
                and all(isinstance(row, list) and len(row) == 3 for row in m)):
            r.issues.append(f"{path}.{k}: expected a 3x3 nested list")
            return None
        out[k] = np.array(m, dtype=float)
    rest = {k: v for k, v in hd.items() if k not in ("alpha", "beta")}
    partial = r.obj(dict(rest, alpha=[0.0] * 9, beta=[0.0] * 9), path, HvacParams,
                    vectors=("sigma", "alpha", "beta"), required=("eta", "sigma", "p_max"))
    if partial is None:
        return None
    return HvacParams(alpha=out["alpha"], beta=out["beta"], eta=partial.eta,
                      sigma=partial.sigma, p_max=partial.p_max, t_desired=partial.t_desired,
                      delta=partial.delta, epsilon=partial.epsilon)


def load_config(path) -> SystemConfig:
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(path, exc.lineno, exc.colno, exc.msg) from None
    return config_from_dict(doc, base=path.parent)


def _num(a) -> list | float:
    a = np.asarray(a, dtype=float)
    return a.tolist()


def config_to_dict(c: SystemConfig) -> dict:
    def prof(p: Profile) -> dict:
        return {"nominal": _num(p.nominal), "dev_plus": _num(p.dev_plus),
                "dev_minus": _num(p.dev_minus)}

    buildings = []
    for b in c.buildings:
        d: dict[str, Any] = {"name": b.name, "res_profile": prof(b.res),
                             "load_profile": prof(b.load)}
        if b.hvac is not None:
            h = b.hvac
            d["hvac"] = {"alpha": _num(h.alpha), "beta": _num(h.beta), "eta": h.eta,
                         "sigma": _num(h.sigma), "p_max": h.p_max, "t_desired": h.t_desired,
                         "delta": h.delta, "epsilon": h.epsilon}
            s = b.hvac_initial
            d["hvac_initial"] = {"t_in": s.t_in, "t_iw": s.t_iw, "t_ow": s.t_ow}
        if b.ewh is not None:
            e = b.ewh
            d["ewh"] = {f.name: (_num(getattr(e, f.name)) if f.name == "heat_drain"
                                 else getattr(e, f.name)) for f in fields(e)}
        if b.ess is not None:
            d["ess"] = {f.name: getattr(b.ess, f.name) for f in fields(b.ess)}
        buildings.append(d)
    t = c.tariff
    return {
        "schema_version": SCHEMA_VERSION,
        "name": c.name,
        "notes": c.notes,
        "seed": c.seed,
        "kappa": c.kappa,
        "penetration": c.penetration,
        "grid": {f.name: getattr(c.grid, f.name) for f in fields(c.grid)},
        "exogenous": {"t_out": _num(c.exogenous.t_out),
                      "irradiance": _num(c.exogenous.irradiance)},
        "tariff": {"c_base": _num(t.c_base), "c_peak": _num(t.c_peak),
                   "peak_slots": sorted(t.peak_slots), "c_ess_deg": t.c_ess_deg,
                   "c_pev_deg": t.c_pev_deg},
        "network": {f.name: getattr(c.network, f.name) for f in fields(c.network)},
        "budgets": {f.name: getattr(c.budgets, f.name) for f in fields(c.budgets)},
        "buildings": buildings,
        "pevs": [{f.name: getattr(p, f.name) for f in fields(p)} for p in c.pevs],
    }


def save_config(config: SystemConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=1) + "\n")
