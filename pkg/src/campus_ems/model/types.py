"""Campus description: devices, tariffs, uncertainty intervals and weights.

All containers are frozen. Construction only normalises types; invariant
checks live in ``issues()`` so that a validator can report every problem
at once, and ``SystemConfig.check()`` raises :class:`ConfigError` when any
are found.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np


class ConfigError(ValueError):
    def __init__(self, issues: Sequence[str]):
        self.issues = list(issues)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.issues))


def _vec(values, dtype=float) -> np.ndarray:
    a = np.array(values, dtype=dtype).reshape(-1)
    a.setflags(write=False)
    return a


def _mat(values, shape) -> np.ndarray:
    a = np.array(values, dtype=float).reshape(shape)
    a.setflags(write=False)
    return a


def _finite(path: str, **values) -> list[str]:
    out = []
    for name, v in values.items():
        if not np.all(np.isfinite(np.asarray(v, dtype=float))):
            out.append(f"{path}.{name}: must be finite")
    return out


@dataclass(frozen=True)
class TimeGrid:
    slot_count: int = 48
    slot_hours: float = 0.25
    start_hour: float = 8.0

    @property
    def horizon(self) -> float:
        return self.slot_count * self.slot_hours

    def clock(self, t: int) -> float:
        return self.start_hour + t * self.slot_hours

    def issues(self, path: str = "grid") -> list[str]:
        out = []
        if int(self.slot_count) != self.slot_count or self.slot_count < 1:
            out.append(f"{path}.slot_count: slot_count >= 1 violated")
        if not self.slot_hours > 0:
            out.append(f"{path}.slot_hours: slot_hours > 0 violated")
        return out


@dataclass(frozen=True)
class ThermalState:
    t_in: float
    t_iw: float
    t_ow: float

    def as_array(self) -> np.ndarray:
        return np.array([self.t_in, self.t_iw, self.t_ow])

    @classmethod
    def from_array(cls, a) -> "ThermalState":
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def issues(self, path: str) -> list[str]:
        return _finite(path, t_in=self.t_in, t_iw=self.t_iw, t_ow=self.t_ow)


@dataclass(frozen=True, eq=False)
class HvacParams:
    alpha: np.ndarray
    beta: np.ndarray
    eta: float
    sigma: np.ndarray  # +1 heating / -1 cooling, one entry per slot
    p_max: float
    t_desired: float = 24.0
    delta: float = 2.0
    epsilon: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "alpha", _mat(self.alpha, (3, 3)))
        object.__setattr__(self, "beta", _mat(self.beta, (3, 3)))
        object.__setattr__(self, "sigma", _vec(self.sigma))

    def issues(self, path: str, slots: int | None = None) -> list[str]:
        out = _finite(path, alpha=self.alpha, beta=self.beta, eta=self.eta, p_max=self.p_max,
                      t_desired=self.t_desired, delta=self.delta, epsilon=self.epsilon)
        if out:
            return out
        if not 0 < self.epsilon < self.delta:
            out.append(f"{path}.epsilon: 0 < epsilon < delta violated "
                       f"(epsilon={self.epsilon}, delta={self.delta})")
        if not self.p_max > 0:
            out.append(f"{path}.p_max: p_max > 0 violated")
        if not self.eta > 0:
            out.append(f"{path}.eta: eta > 0 violated")
        rho = max(abs(np.linalg.eigvals(self.beta)))
        if not rho < 1:
            out.append(f"{path}.beta: spectral radius < 1 violated (rho={rho:.4g})")
        if not np.all(np.isin(self.sigma, (-1.0, 1.0))):
            out.append(f"{path}.sigma: entries must be -1 (cooling) or +1 (heating)")
        if slots is not None and self.sigma.size != slots:
            out.append(f"{path}.sigma: length {self.sigma.size} != slot_count {slots}")
        return out


@dataclass(frozen=True)
class PevParams:
    e_rated: float
    p_ch_max: float
    soc0_nominal: float
    soc0_dev_plus: float = 0.0
    soc0_dev_minus: float = 0.0
    soc_min: float = 0.05
    soc_max: float = 0.95
    eta_ch: float = 0.95
    soc_desired: float = 0.8
    soc_base: float = 0.1
    model: str = ""

    @property
    def soc0_low(self) -> float:
        return self.soc0_nominal - self.soc0_dev_minus

    @property
    def soc0_high(self) -> float:
        return self.soc0_nominal + self.soc0_dev_plus

    def issues(self, path: str) -> list[str]:
        vals = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "model"}
        out = _finite(path, **vals)
        if out:
            return out
        if not 0 <= self.soc_min < self.soc_max <= 1:
            out.append(f"{path}: 0 <= soc_min < soc_max <= 1 violated")
        if not self.soc_base < self.soc_desired <= self.soc_max:
            out.append(f"{path}.soc_desired: soc_base < soc_desired <= soc_max violated")
        if self.soc0_dev_plus < 0 or self.soc0_dev_minus < 0:
            out.append(f"{path}: soc0 deviations must be >= 0")
        if self.soc0_low < self.soc_min - 1e-12 or self.soc0_high > self.soc_max + 1e-12:
            out.append(f"{path}.soc0_nominal: soc0 interval "
                       f"[{self.soc0_low:.4g}, {self.soc0_high:.4g}] leaves [soc_min, soc_max]")
        if not self.e_rated > 0:
            out.append(f"{path}.e_rated: e_rated > 0 violated")
        if not self.p_ch_max >= 0:
            out.append(f"{path}.p_ch_max: p_ch_max >= 0 violated")
        if not 0 < self.eta_ch <= 1:
            out.append(f"{path}.eta_ch: efficiency in (0, 1] violated")
        return out


@dataclass(frozen=True, eq=False)
class EwhParams:
    heat_drain: np.ndarray  # kWh of heat removed in each slot
    zeta: float = 1.2
    p_min: float = 0.0
    p_max: float = 4.5
    mass: float = 300.0
    c_water: float = 0.001163  # kWh/(kg K)
    t_desired: float = 40.0
    delta: float = 10.0
    t0: float = 30.0

    def __post_init__(self):
        object.__setattr__(self, "heat_drain", _vec(self.heat_drain))

    @property
    def heat_capacity(self) -> float:
        return self.mass * self.c_water

    def issues(self, path: str, slots: int | None = None) -> list[str]:
        out = _finite(path, heat_drain=self.heat_drain, zeta=self.zeta, p_min=self.p_min,
                      p_max=self.p_max, mass=self.mass, c_water=self.c_water,
                      t_desired=self.t_desired, delta=self.delta, t0=self.t0)
        if out:
            return out
        if not self.p_min <= self.p_max:
            out.append(f"{path}.p_min: p_min <= p_max violated")
        if self.p_min < 0:
            out.append(f"{path}.p_min: p_min >= 0 violated")
        if not self.mass > 0:
            out.append(f"{path}.mass: mass > 0 violated")
        if not self.c_water > 0:
            out.append(f"{path}.c_water: c_water > 0 violated")
        if not self.delta > 0:
            out.append(f"{path}.delta: delta > 0 violated")
        if slots is not None and self.heat_drain.size != slots:
            out.append(f"{path}.heat_drain: length {self.heat_drain.size} != slot_count {slots}")
        return out


@dataclass(frozen=True)
class EssParams:
    e_rated: float = 80.0
    p_ch_max: float = 4.0
    p_dis_max: float = 4.0
    soc0: float = 0.5
    soc_min: float = 0.05
    soc_max: float = 0.95
    eta_ch: float = 0.95
    eta_dis: float = 0.95

    def issues(self, path: str) -> list[str]:
        out = _finite(path, **{f.name: getattr(self, f.name) for f in fields(self)})
        if out:
            return out
        if not self.soc_min <= self.soc0 <= self.soc_max:
            out.append(f"{path}.soc0: soc_min <= soc0 <= soc_max violated")
        if not (0 < self.eta_ch <= 1 and 0 < self.eta_dis <= 1):
            out.append(f"{path}: efficiencies in (0, 1] violated")
        if not self.e_rated > 0:
            out.append(f"{path}.e_rated: e_rated > 0 violated")
        if self.p_ch_max < 0 or self.p_dis_max < 0:
            out.append(f"{path}: rate limits must be >= 0")
        return out


@dataclass(frozen=True, eq=False)
class Profile:
    """Nominal per-slot values with the largest upward/downward deviations."""

    nominal: np.ndarray
    dev_plus: np.ndarray = 0.0
    dev_minus: np.ndarray = 0.0

    def __post_init__(self):
        n = _vec(self.nominal)
        object.__setattr__(self, "nominal", n)
        for name in ("dev_plus", "dev_minus"):
            v = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, _vec(np.broadcast_to(v, n.shape)))

    @classmethod
    def fixed(cls, nominal) -> "Profile":
        return cls(nominal, 0.0, 0.0)

    def issues(self, path: str, slots: int, nonneg: bool = True) -> list[str]:
        out = _finite(path, nominal=self.nominal, dev_plus=self.dev_plus,
                      dev_minus=self.dev_minus)
        if out:
            return out
        if self.nominal.size != slots:
            out.append(f"{path}.nominal: length {self.nominal.size} != slot_count {slots}")
        if np.any(self.dev_plus < 0) or np.any(self.dev_minus < 0):
            out.append(f"{path}: deviations must be >= 0")
        if nonneg and np.any(self.nominal - self.dev_minus < -1e-12):
            t = int(np.argmax(self.nominal - self.dev_minus < -1e-12))
            out.append(f"{path}.dev_minus[{t}]: lower end of the interval is negative")
        return out


@dataclass(frozen=True, eq=False)
class Building:
    res: Profile
    load: Profile
    hvac: HvacParams | None = None
    ewh: EwhParams | None = None
    ess: EssParams | None = None
    hvac_initial: ThermalState = ThermalState(24.0, 24.0, 24.0)
    name: str = ""

    def issues(self, path: str, slots: int) -> list[str]:
        out = self.res.issues(f"{path}.res_profile", slots)
        out += self.load.issues(f"{path}.load_profile", slots)
        if self.hvac is not None:
            out += self.hvac.issues(f"{path}.hvac", slots)
            out += self.hvac_initial.issues(f"{path}.hvac_initial")
            if not out:
                lo = self.hvac.t_desired - self.hvac.delta
                hi = self.hvac.t_desired + self.hvac.delta
                if not lo <= self.hvac_initial.t_in <= hi:
                    out.append(f"{path}.hvac_initial.t_in: outside the hard band [{lo}, {hi}]")
        if self.ewh is not None:
            out += self.ewh.issues(f"{path}.ewh", slots)
        if self.ess is not None:
            out += self.ess.issues(f"{path}.ess")
        return out


@dataclass(frozen=True, eq=False)
class Tariff:
    c_base: np.ndarray
    c_peak: np.ndarray
    peak_slots: frozenset = frozenset()
    c_ess_deg: float = 0.0035
    c_pev_deg: float = 0.0035

    def __post_init__(self):
        object.__setattr__(self, "c_base", _vec(self.c_base))
        object.__setattr__(self, "c_peak", _vec(self.c_peak))
        object.__setattr__(self, "peak_slots", frozenset(int(t) for t in self.peak_slots))

    def is_peak(self, t: int) -> bool:
        return t in self.peak_slots

    def issues(self, path: str, slots: int) -> list[str]:
        out = _finite(path, c_base=self.c_base, c_peak=self.c_peak, c_ess_deg=self.c_ess_deg,
                      c_pev_deg=self.c_pev_deg)
        if out:
            return out
        for name in ("c_base", "c_peak"):
            if getattr(self, name).size != slots:
                out.append(f"{path}.{name}: length {getattr(self, name).size} "
                           f"!= slot_count {slots}")
        if not out and not (np.all(self.c_peak >= self.c_base) and np.all(self.c_base >= 0)):
            out.append(f"{path}: c_peak >= c_base >= 0 violated")
        bad = [t for t in self.peak_slots if not 0 <= t < slots]
        if bad:
            out.append(f"{path}.peak_slots: slot {bad[0]} outside the horizon")
        if self.c_ess_deg < 0 or self.c_pev_deg < 0:
            out.append(f"{path}: degradation costs must be >= 0")
        return out


@dataclass(frozen=True)
class NetworkParams:
    tie_line_limit: float = 1867.0
    dr_floor: float = 0.8

    def issues(self, path: str) -> list[str]:
        out = _finite(path, tie_line_limit=self.tie_line_limit, dr_floor=self.dr_floor)
        if out:
            return out
        if not self.tie_line_limit > 0:
            out.append(f"{path}.tie_line_limit: tie_line_limit > 0 violated")
        if not 0 < self.dr_floor <= 1:
            out.append(f"{path}.dr_floor: 0 < dr_floor <= 1 violated")
        return out


@dataclass(frozen=True)
class Budgets:
    gamma_w: int = 0
    gamma_d: int = 0
    gamma_z: int = 0
    gamma_i: int = 0

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.gamma_w, self.gamma_d, self.gamma_z, self.gamma_i)

    def issues(self, path: str, slots: int, n_pev: int) -> list[str]:
        out = []
        caps = {"gamma_w": slots, "gamma_d": slots, "gamma_z": n_pev, "gamma_i": slots}
        for name, cap in caps.items():
            v = getattr(self, name)
            if int(v) != v or v < 0:
                out.append(f"{path}.{name}: must be a nonnegative integer")
            elif v > cap:
                what = "PEV count" if name == "gamma_z" else "slot_count"
                out.append(f"{path}.{name}: {name} <= {what} violated ({v} > {cap})")
        return out


@dataclass(frozen=True, eq=False)
class Exogenous:
    t_out: np.ndarray
    irradiance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t_out", _vec(self.t_out))
        object.__setattr__(self, "irradiance", _vec(self.irradiance))

    def issues(self, path: str, slots: int) -> list[str]:
        out = _finite(path, t_out=self.t_out, irradiance=self.irradiance)
        for name in ("t_out", "irradiance"):
            if getattr(self, name).size != slots:
                out.append(f"{path}.{name}: length {getattr(self, name).size} "
                           f"!= slot_count {slots}")
        return out


@dataclass(frozen=True, eq=False)
class SystemConfig:
    grid: TimeGrid
    buildings: tuple[Building, ...]
    pevs: tuple[PevParams, ...]
    tariff: Tariff
    network: NetworkParams
    budgets: Budgets
    exogenous: Exogenous
    kappa: float = 1.0
    penetration: float = 0.5
    seed: int = 0
    name: str = ""
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "buildings", tuple(self.buildings))
        object.__setattr__(self, "pevs", tuple(self.pevs))

    @property
    def T(self) -> int:
        return int(self.grid.slot_count)

    @property
    def ess_buildings(self) -> list[int]:
        """Indices of buildings that own an ESS, in order; ESS k lives in building ``ess_buildings[k]``."""
        return [i for i, b in enumerate(self.buildings) if b.ess is not None]

    def issues(self) -> list[str]:
        out = self.grid.issues("grid")
        if out:
            return out
        T = self.T
        for i, b in enumerate(self.buildings):
            out += b.issues(f"buildings[{i}]", T)
        for v, p in enumerate(self.pevs):
            out += p.issues(f"pevs[{v}]")
        out += self.tariff.issues("tariff", T)
        out += self.network.issues("network")
        out += self.budgets.issues("budgets", T, len(self.pevs))
        out += self.exogenous.issues("exogenous", T)
        if not np.isfinite(self.kappa) or self.kappa < 0:
            out.append("kappa: kappa >= 0 violated")
        if not 0 <= self.penetration <= 1:
            out.append("penetration: 0 <= penetration <= 1 violated")
        if not self.buildings:
            out.append("buildings: at least one building required")
        return out

    def check(self) -> "SystemConfig":
        found = self.issues()
        if found:
            raise ConfigError(found)
        return self

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    def with_budgets(self, gamma_w=None, gamma_d=None, gamma_z=None, gamma_i=None
                     ) -> "SystemConfig":
        b = self.budgets
        new = Budgets(b.gamma_w if gamma_w is None else gamma_w,
                      b.gamma_d if gamma_d is None else gamma_d,
                      b.gamma_z if gamma_z is None else gamma_z,
                      b.gamma_i if gamma_i is None else gamma_i)
        return replace(self, budgets=new)


@dataclass(frozen=True, eq=False)
class UncertaintyRealization:
    """Concrete RES output, load, PEV initial SoC and DR factor over the horizon."""

    res: np.ndarray      # (buildings, slots) kW
    load: np.ndarray     # (buildings, slots) kW
    pev_soc0: np.ndarray  # (pevs,)
    dr: np.ndarray       # (slots,) in [dr_floor, 1]

    def __post_init__(self):
        for name in ("res", "load", "pev_soc0", "dr"):
            a = np.array(getattr(self, name), dtype=float)
            if name in ("res", "load") and a.ndim == 1:
                a = a.reshape(1, -1) if a.size else a.reshape(0, 0)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.res.ravel(), self.load.ravel(), self.pev_soc0, self.dr])

    def key(self) -> bytes:
        return self.vector().tobytes()

    def same_as(self, other: "UncertaintyRealization") -> bool:
        a, b = self.vector(), other.vector()
        return a.shape == b.shape and bool(np.array_equal(a, b))

    @classmethod
    def nominal(cls, config: SystemConfig) -> "UncertaintyRealization":
        return cls(res=np.array([b.res.nominal for b in config.buildings]).reshape(
                       len(config.buildings), config.T),
                   load=np.array([b.load.nominal for b in config.buildings]).reshape(
                       len(config.buildings), config.T),
                   pev_soc0=np.array([p.soc0_nominal for p in config.pevs], dtype=float),
                   dr=np.ones(config.T))

    def issues(self, config: SystemConfig, tol: float = 1e-9) -> list[str]:
        """Shape and interval checks against the config's uncertainty sets."""
        nb, T, nv = len(config.buildings), config.T, len(config.pevs)
        out = []
        for name, shape in (("res", (nb, T)), ("load", (nb, T)), ("pev_soc0", (nv,)),
                            ("dr", (T,))):
            if getattr(self, name).shape != shape:
                out.append(f"{name}: shape {getattr(self, name).shape} != {shape}")
        if out:
            return out
        for name in ("res", "load"):
            for i, b in enumerate(config.buildings):
                prof = getattr(b, name)
                v = getattr(self, name)[i]
                bad = np.flatnonzero((v < prof.nominal - prof.dev_minus - tol)
                                     | (v > prof.nominal + prof.dev_plus + tol))
                if bad.size:
                    out.append(f"{name}[{i}][{bad[0]}]: value {v[bad[0]]:.6g} outside "
                               f"[{prof.nominal[bad[0]] - prof.dev_minus[bad[0]]:.6g}, "
                               f"{prof.nominal[bad[0]] + prof.dev_plus[bad[0]]:.6g}]")
        for v, p in enumerate(config.pevs):
            s = self.pev_soc0[v]
            if s < p.soc0_low - tol or s > p.soc0_high + tol:
                out.append(f"pev_soc0[{v}]: value {s:.6g} outside [{p.soc0_low:.6g}, "
                           f"{p.soc0_high:.6g}]")
        bad = np.flatnonzero((self.dr < config.network.dr_floor - tol) | (self.dr > 1 + tol))
        if bad.size:
            out.append(f"dr[{bad[0]}]: value {self.dr[bad[0]]:.6g} outside "
                       f"[{config.network.dr_floor}, 1]")
        return out

    def to_json(self) -> dict:
        return {"res": self.res.tolist(), "load": self.load.tolist(),
                "pev_soc0": self.pev_soc0.tolist(), "dr": self.dr.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "UncertaintyRealization":
        return cls(res=doc["res"], load=doc["load"], pev_soc0=doc["pev_soc0"], dr=doc["dr"])


@dataclass(frozen=True, eq=False)
class FirstStageDecision:
    """ESS charge/discharge mode binaries, shape (ess units, slots)."""

    u_ch: np.ndarray
    u_dis: np.ndarray

    def __post_init__(self):
        for name in ("u_ch", "u_dis"):
            a = np.array(getattr(self, name), dtype=float)
            if a.ndim == 1:
                a = a.reshape(1, -1) if a.size else a.reshape(0, 0)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @classmethod
    def idle(cls, config: SystemConfig) -> "FirstStageDecision":
        n = len(config.ess_buildings)
        return cls(np.zeros((n, config.T)), np.zeros((n, config.T)))

    def issues(self, config: SystemConfig) -> list[str]:
        shape = (len(config.ess_buildings), config.T)
        out = []
        for name in ("u_ch", "u_dis"):
            a = getattr(self, name)
            if a.shape != shape:
                out.append(f"{name}: shape {a.shape} != {shape}")
            elif not np.all(np.isin(a, (0.0, 1.0))):
                out.append(f"{name}: entries must be 0 or 1")
        if not out:
            both = np.argwhere(self.u_ch + self.u_dis > 1)
            if both.size:
                k, t = both[0]
                out.append(f"ess[{k}] slot {t}: u_ch + u_dis <= 1 violated")
        return out

    def same_as(self, other: "FirstStageDecision") -> bool:
        return (np.array_equal(self.u_ch, other.u_ch) and np.array_equal(self.u_dis, other.u_dis))

    def to_json(self) -> dict:
        return {"u_ch": self.u_ch.astype(int).tolist(), "u_dis": self.u_dis.astype(int).tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "FirstStageDecision":
        return cls(u_ch=doc["u_ch"], u_dis=doc["u_dis"])
