"""Assemble the campus scheduling constraints over the time grid.

Column order is: ESS mode binaries (first stage), then HVAC, EWH, ESS, PEV
and grid blocks, each by device index then slot, and finally the
placeholder columns for the uncertain quantities (RES output ``w``, load
``d``, PEV initial SoC and DR factor ``I``). In fixed mode the
placeholders are substituted by numbers and disappear from the model.

States are indexed by the slot that ends in them: ``soc[t]`` is the state
after slot ``t`` has been applied.

With every building carrying an HVAC, EWH and ESS, ``n_cb`` buildings and
``n_pev`` vehicles over ``T`` slots give::

    columns      = 2 T n_cb + 11 T n_cb + 3 T n_pev + 4 T
    placeholders = 2 T n_cb + n_pev + T           (symbolic mode only)
    rows         = T n_cb + 10 T n_cb + 2 T n_pev + 3 T

(:func:`expected_counts`). Per slot and building that is 5 HVAC columns
(three temperatures, power, comfort) and 5 rows (three dynamics, two
comfort pieces); 3 EWH columns and 2 rows; 3 ESS columns and 3 rows
(dynamics and two rate links); per vehicle 3 columns and 2 rows; per slot
4 grid columns (base, peak, total, spill) and 3 rows (balance, split,
tie-line) plus the mode exclusivity row of each ESS.
"""
from __future__ import annotations

import numpy as np

from ..comfort import encode_epigraph, ewh_pieces, hvac_pieces, pev_pieces
from .linear import EQ, LE, LinearModel, ModelBuilder, RowTag, VarTag
from .types import FirstStageDecision, SystemConfig, UncertaintyRealization

PLACEHOLDERS = ("res", "load", "pev_init", "dr")
FIRST_STAGE = "ess_mode"


def expected_counts(T: int, n_cb: int, n_pev: int, symbolic: bool = True) -> dict:
    """Closed-form tallies for buildings that each own an HVAC, EWH and ESS."""
    cols = 2 * T * n_cb + 11 * T * n_cb + 3 * T * n_pev + 4 * T
    ph = 2 * T * n_cb + n_pev + T
    rows = T * n_cb + 10 * T * n_cb + 2 * T * n_pev + 3 * T
    return {"columns": cols + (ph if symbolic else 0), "placeholders": ph if symbolic else 0,
            "rows": rows}


def assemble_constraints(config: SystemConfig,
                         realization: UncertaintyRealization | None = None,
                         decision: FirstStageDecision | None = None,
                         check: bool = True) -> LinearModel:
    """Build the maximisation model of comfort minus operating cost.

    ``realization=None`` keeps the uncertain quantities as placeholder
    columns bounded by their intervals; otherwise they become numbers.
    ``decision`` fixes the ESS mode binaries and removes the then constant
    exclusivity rows.
    """
    if check:
        config.check()
    T = config.T
    dt = config.grid.slot_hours
    kappa = config.kappa
    tariff = config.tariff
    b = ModelBuilder()
    ess_units = config.ess_buildings

    # first stage
    mode = {}
    for k in range(len(ess_units)):
        for t in range(T):
            mode[k, t, "ch"] = b.add_var(VarTag(FIRST_STAGE, k, "u_ch", t), 0, 1, integer=True)
            mode[k, t, "dis"] = b.add_var(VarTag(FIRST_STAGE, k, "u_dis", t), 0, 1, integer=True)
            b.add_row([(mode[k, t, "ch"], 1.0), (mode[k, t, "dis"], 1.0)], LE, 1.0,
                      RowTag("mode_excl", k, t))

    p_hvac: list[tuple[int, int]] = []
    p_ewh: list[tuple[int, int]] = []
    p_ess: list[tuple[int, int, int]] = []
    p_pev: list[tuple[int, int]] = []

    for i, bld in enumerate(config.buildings):
        h = bld.hvac
        if h is None:
            continue
        lo, hi = h.t_desired - h.delta, h.t_desired + h.delta
        pieces = hvac_pieces(h)
        x0 = bld.hvac_initial.as_array()
        prev = None
        for t in range(T):
            th = [b.add_var(VarTag("hvac", i, "t_in", t), lo, hi),
                  b.add_var(VarTag("hvac", i, "t_iw", t), -np.inf, np.inf),
                  b.add_var(VarTag("hvac", i, "t_ow", t), -np.inf, np.inf)]
            p = b.add_var(VarTag("hvac", i, "p", t), 0.0, h.p_max)
            p_hvac.append((t, p))
            gain = h.sigma[t] * h.eta
            u_exo = (h.alpha[:, 0] * config.exogenous.t_out[t]
                     + h.alpha[:, 1] * config.exogenous.irradiance[t])
            for r, name in enumerate(("in", "iw", "ow")):
                terms = [(th[r], 1.0), (p, -h.alpha[r, 2] * gain)]
                rhs = u_exo[r]
                if prev is None:
                    rhs += h.beta[r] @ x0
                else:
                    terms += [(prev[l], -h.beta[r, l]) for l in range(3)]
                b.add_row(terms, EQ, rhs, RowTag(f"hvac_dyn_{name}", i, t))
            encode_epigraph(pieces, th[0], b, VarTag("hvac", i, "J", t), lower=0.0, obj=kappa)
            prev = th

    for i, bld in enumerate(config.buildings):
        e = bld.ewh
        if e is None:
            continue
        pieces = ewh_pieces(e)
        mc = e.heat_capacity
        prev = None
        for t in range(T):
            tw = b.add_var(VarTag("ewh", i, "t_w", t), e.t_desired - e.delta, np.inf)
            p = b.add_var(VarTag("ewh", i, "p", t), e.p_min, e.p_max)
            p_ewh.append((t, p))
            terms = [(tw, 1.0), (p, -e.zeta * dt / mc)]
            rhs = -e.heat_drain[t] / mc
            if prev is None:
                rhs += e.t0
            else:
                terms.append((prev, -1.0))
            b.add_row(terms, EQ, rhs, RowTag("ewh_dyn", i, t))
            encode_epigraph(pieces, tw, b, VarTag("ewh", i, "J", t), obj=kappa)
            prev = tw

    for k, i in enumerate(ess_units):
        s = config.buildings[i].ess
        prev = None
        for t in range(T):
            soc = b.add_var(VarTag("ess", k, "soc", t), s.soc_min, s.soc_max)
            pc = b.add_var(VarTag("ess", k, "p_ch", t), 0.0, s.p_ch_max,
                           obj=-dt * tariff.c_ess_deg)
            pd = b.add_var(VarTag("ess", k, "p_dis", t), 0.0, s.p_dis_max,
                           obj=-dt * tariff.c_ess_deg)
            p_ess.append((t, pc, pd))
            terms = [(soc, 1.0), (pc, -s.eta_ch * dt / s.e_rated),
                     (pd, dt / (s.eta_dis * s.e_rated))]
            rhs = 0.0
            if prev is None:
                rhs = s.soc0
            else:
                terms.append((prev, -1.0))
            b.add_row(terms, EQ, rhs, RowTag("ess_dyn", k, t))
            b.add_row([(pc, 1.0), (mode[k, t, "ch"], -s.p_ch_max)], LE, 0.0,
                      RowTag("ess_ch_link", k, t))
            b.add_row([(pd, 1.0), (mode[k, t, "dis"], -s.p_dis_max)], LE, 0.0,
                      RowTag("ess_dis_link", k, t))
            prev = soc

    pev_first_rows = []
    for v, ev in enumerate(config.pevs):
        pieces = pev_pieces(ev)
        prev = None
        for t in range(T):
            soc = b.add_var(VarTag("pev", v, "soc", t), ev.soc_min, ev.soc_max)
            p = b.add_var(VarTag("pev", v, "p", t), 0.0, ev.p_ch_max,
                          obj=-dt * tariff.c_pev_deg)
            p_pev.append((t, p))
            terms = [(soc, 1.0), (p, -ev.eta_ch * dt / ev.e_rated)]
            if prev is None:
                pev_first_rows.append(b.add_row(terms, EQ, 0.0, RowTag("pev_dyn", v, t)))
            else:
                terms.append((prev, -1.0))
                b.add_row(terms, EQ, 0.0, RowTag("pev_dyn", v, t))
            encode_epigraph(pieces, soc, b, VarTag("pev", v, "J", t),
                            obj=kappa * config.penetration)
            prev = soc

    grid_cols = []
    for t in range(T):
        peak = tariff.is_peak(t)
        pb = b.add_var(VarTag("grid", 0, "p_base", t), 0.0, 0.0 if peak else np.inf,
                       obj=-dt * tariff.c_base[t])
        pp = b.add_var(VarTag("grid", 0, "p_peak", t), 0.0, np.inf if peak else 0.0,
                       obj=-dt * tariff.c_peak[t])
        pt = b.add_var(VarTag("grid", 0, "p_total", t), 0.0, np.inf)
        sp_ = b.add_var(VarTag("grid", 0, "spill", t), 0.0, np.inf)
        grid_cols.append((pb, pp, pt, sp_))

    # placeholders
    nb = len(config.buildings)
    w_col, d_col = {}, {}
    for name, cols in (("res", w_col), ("load", d_col)):
        for i, bld in enumerate(config.buildings):
            prof = getattr(bld, name)
            lo, hi = prof.nominal - prof.dev_minus, prof.nominal + prof.dev_plus
            for t in range(T):
                cols[i, t] = b.add_var(VarTag(name, i, "w" if name == "res" else "d", t),
                                       lo[t], hi[t])
    z_col = [b.add_var(VarTag("pev_init", v, "soc0"), ev.soc0_low, ev.soc0_high)
             for v, ev in enumerate(config.pevs)]
    i_col = [b.add_var(VarTag("dr", 0, "I", t), config.network.dr_floor, 1.0) for t in range(T)]

    # the PEV rows of slot 0 reference the initial SoC placeholder
    for v, r in enumerate(pev_first_rows):
        b.add_term(r, z_col[v], -1.0)

    by_slot = [[] for _ in range(T)]
    for t, j in p_hvac:
        by_slot[t].append((j, -1.0))
    for t, j in p_ewh:
        by_slot[t].append((j, -1.0))
    for t, pc, pd in p_ess:
        by_slot[t] += [(pd, 1.0), (pc, -1.0)]
    for t, j in p_pev:
        by_slot[t].append((j, -1.0))
    P = config.network.tie_line_limit
    for t in range(T):
        pb, pp, pt, sp_ = grid_cols[t]
        terms = by_slot[t] + [(w_col[i, t], 1.0) for i in range(nb)]
        terms += [(pb, 1.0), (pp, 1.0), (sp_, -1.0)]
        terms += [(d_col[i, t], -1.0) for i in range(nb)]
        b.add_row(terms, EQ, 0.0, RowTag("balance", 0, t))
        b.add_row([(pb, 1.0), (pp, 1.0), (pt, -1.0)], EQ, 0.0, RowTag("tie_split", 0, t))
        b.add_row([(pt, 1.0), (i_col[t], -P)], LE, 0.0, RowTag("tie_limit", 0, t))

    model = b.build(maximize=True)
    fixed: dict[int, float] = {}
    if decision is not None:
        issues = decision.issues(config)
        if issues:
            raise ValueError("invalid first-stage decision: " + "; ".join(issues))
        for (k, t, kind), j in mode.items():
            fixed[j] = float((decision.u_ch if kind == "ch" else decision.u_dis)[k, t])
    if realization is not None:
        fixed.update(placeholder_values(config, realization, model))
    if not fixed:
        return model
    model = model.fix(fixed)
    return model.without_empty_rows() if decision is not None else model


def placeholder_values(config: SystemConfig, realization: UncertaintyRealization,
                       model: LinearModel) -> dict[int, float]:
    """Map each placeholder column of a symbolic ``model`` to its realised value."""
    issues = realization.issues(config)
    if issues:
        raise ValueError("realization outside the uncertainty sets: " + "; ".join(issues))
    out = {}
    for j, tag in enumerate(model.tags):
        if tag.device == "res":
            out[j] = float(realization.res[tag.index, tag.slot])
        elif tag.device == "load":
            out[j] = float(realization.load[tag.index, tag.slot])
        elif tag.device == "pev_init":
            out[j] = float(realization.pev_soc0[tag.index])
        elif tag.device == "dr":
            out[j] = float(realization.dr[tag.slot])
    return out


def placeholder_rows(model: LinearModel) -> dict[VarTag, tuple[int, float]]:
    """For each placeholder column: the single row it enters and its coefficient."""
    A = model.A.tocsc()
    out = {}
    for j, tag in enumerate(model.tags):
        if tag.device not in PLACEHOLDERS:
            continue
        lo, hi = A.indptr[j], A.indptr[j + 1]
        if hi - lo != 1:
            raise ValueError(f"placeholder {tag.label()} enters {hi - lo} rows, expected 1")
        out[tag] = (int(A.indices[lo]), float(A.data[lo]))
    return out


def recourse_lp(config: SystemConfig, decision: FirstStageDecision,
                realization: UncertaintyRealization) -> LinearModel:
    """The second-stage LP for a fixed first stage and realisation."""
    return assemble_constraints(config, realization, decision)


def first_stage_columns(model: LinearModel) -> list[int]:
    return [j for j, t in enumerate(model.tags) if t.device == FIRST_STAGE]


def decision_from_values(config: SystemConfig, model: LinearModel, x: np.ndarray
                         ) -> FirstStageDecision:
    """Read the ESS mode binaries of ``x`` (rounded) into a decision."""
    n = len(config.ess_buildings)
    u_ch = np.zeros((n, config.T))
    u_dis = np.zeros((n, config.T))
    for j, tag in enumerate(model.tags):
        if tag.device == FIRST_STAGE and tag.scenario is None:
            (u_ch if tag.quantity == "u_ch" else u_dis)[tag.index, tag.slot] = round(x[j])
    return FirstStageDecision(u_ch, u_dis)
