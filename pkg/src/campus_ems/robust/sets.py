"""Cardinality-budget uncertainty sets and their 0/1 deviation patterns."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..model.types import SystemConfig, UncertaintyRealization


@dataclass(frozen=True, eq=False)
class UncertaintySets:
    res_nominal: np.ndarray    # (buildings, slots)
    res_plus: np.ndarray
    res_minus: np.ndarray
    gamma_w: int
    load_nominal: np.ndarray
    load_plus: np.ndarray
    load_minus: np.ndarray
    gamma_d: int
    soc0_nominal: np.ndarray   # (pevs,)
    soc0_plus: np.ndarray
    soc0_minus: np.ndarray
    gamma_z: int
    dr_floor: float
    gamma_i: int

    @classmethod
    def from_config(cls, config: SystemConfig) -> "UncertaintySets":
        nb, T = len(config.buildings), config.T

        def stack(attr, part):
            return np.array([getattr(getattr(b, attr), part) for b in config.buildings]
                            ).reshape(nb, T)

        pev = config.pevs
        b = config.budgets
        return cls(res_nominal=stack("res", "nominal"), res_plus=stack("res", "dev_plus"),
                   res_minus=stack("res", "dev_minus"), gamma_w=int(b.gamma_w),
                   load_nominal=stack("load", "nominal"), load_plus=stack("load", "dev_plus"),
                   load_minus=stack("load", "dev_minus"), gamma_d=int(b.gamma_d),
                   soc0_nominal=np.array([p.soc0_nominal for p in pev], dtype=float),
                   soc0_plus=np.array([p.soc0_dev_plus for p in pev], dtype=float),
                   soc0_minus=np.array([p.soc0_dev_minus for p in pev], dtype=float),
                   gamma_z=int(b.gamma_z), dr_floor=float(config.network.dr_floor),
                   gamma_i=int(b.gamma_i))

    @property
    def shape(self) -> tuple[int, int, int]:
        """(buildings, slots, vehicles)."""
        nb, T = self.res_nominal.shape
        return nb, T, self.soc0_nominal.size

    def realize(self, pattern: "DeviationPattern") -> UncertaintyRealization:
        p = pattern
        return UncertaintyRealization(
            res=self.res_nominal + self.res_plus * p.u_plus - self.res_minus * p.u_minus,
            load=self.load_nominal + self.load_plus * p.v_plus - self.load_minus * p.v_minus,
            pev_soc0=self.soc0_nominal + self.soc0_plus * p.z_plus - self.soc0_minus * p.z_minus,
            dr=1.0 - (1.0 - self.dr_floor) * p.s)

    def nominal_pattern(self) -> "DeviationPattern":
        nb, T, nv = self.shape
        z2, z1 = np.zeros((nb, T)), np.zeros(nv)
        return DeviationPattern(z2, z2, z2, z2, z1, z1, np.zeros(T))

    def admits(self, p: "DeviationPattern") -> bool:
        """Budget and one-sign checks on a 0/1 pattern."""
        ok = all(np.all(np.isin(a, (0.0, 1.0))) for a in p.arrays())
        ok &= bool(np.all(p.u_plus + p.u_minus <= 1) and np.all(p.v_plus + p.v_minus <= 1)
                   and np.all(p.z_plus + p.z_minus <= 1))
        ok &= bool(np.all((p.u_plus + p.u_minus).sum(axis=1) <= self.gamma_w))
        ok &= bool(np.all((p.v_plus + p.v_minus).sum(axis=1) <= self.gamma_d))
        ok &= bool((p.z_plus + p.z_minus).sum() <= self.gamma_z)
        ok &= bool(p.s.sum() <= self.gamma_i)
        return ok


@dataclass(frozen=True, eq=False)
class DeviationPattern:
    """0/1 selectors: ``u`` for RES, ``v`` for load, ``z`` for PEV SoC, ``s`` for DR."""

    u_plus: np.ndarray
    u_minus: np.ndarray
    v_plus: np.ndarray
    v_minus: np.ndarray
    z_plus: np.ndarray
    z_minus: np.ndarray
    s: np.ndarray

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.u_plus, self.u_minus, self.v_plus, self.v_minus, self.z_plus,
                self.z_minus, self.s)

    def to_json(self) -> dict:
        return {k: np.asarray(getattr(self, k)).astype(int).tolist()
                for k in ("u_plus", "u_minus", "v_plus", "v_minus", "z_plus", "z_minus", "s")}
