import json
from dataclasses import replace

import numpy as np
import pytest

from campus_ems.linprog import solve_lp, solve_milp
from campus_ems.model.assemble import (PLACEHOLDERS, assemble_constraints, decision_from_values,
                                       expected_counts, placeholder_rows, recourse_lp)
from campus_ems.model.config_io import (ConfigParseError, config_from_dict, config_to_dict,
                                        load_config, save_config)
from campus_ems.model.defaults import default_config, tiny_config
from campus_ems.model.dynamics import (ess_soc_trajectory, ewh_temp_trajectory, hvac_step,
                                       hvac_trajectory, pev_soc_trajectory)
from campus_ems.model.linear import LE
from campus_ems.model.types import (Budgets, ConfigError, EssParams, EwhParams,
                                    FirstStageDecision, HvacParams, PevParams, ThermalState,
                                    TimeGrid, UncertaintyRealization)

GRID = TimeGrid()


def hvac(alpha=np.zeros((3, 3)), beta=np.eye(3) * 0.9, sigma=1.0, eta=1.0, slots=4):
    return HvacParams(alpha=alpha, beta=beta, eta=eta, sigma=np.full(slots, sigma), p_max=20)


def test_default_grid_is_twelve_hours():
    assert GRID.slot_count == 48 and GRID.horizon == 12.0 and GRID.start_hour == 8


def test_hvac_identity_dynamics():
    p = hvac(beta=np.eye(3))
    s = ThermalState(23.0, 24.0, 25.0)
    assert hvac_step(s, 30.0, 0.5, 5.0, p) == s


def test_hvac_hand_evaluation():
    alpha = np.zeros((3, 3))
    alpha[2, 2] = -0.1
    alpha[0, 2] = -0.1
    p = hvac(alpha=alpha)
    out = hvac_step(ThermalState(24, 24, 24), 30.0, 0.0, 10.0, p)
    assert out.t_in == pytest.approx(0.9 * 24 - 0.1 * 10, abs=1e-12)
    assert out.t_in == pytest.approx(20.6, abs=1e-12)


def test_hvac_zero_power_ignores_mode_and_efficiency():
    alpha = np.random.default_rng(0).normal(size=(3, 3)) * 0.1
    a = hvac_step(ThermalState(24, 24, 24), 30, 0.3, 0.0, hvac(alpha=alpha, sigma=1, eta=3))
    b = hvac_step(ThermalState(24, 24, 24), 30, 0.3, 0.0, hvac(alpha=alpha, sigma=-1, eta=1))
    assert a == b


def test_hvac_rejects_bad_inputs():
    with pytest.raises(ValueError):
        hvac_step(ThermalState(24, 24, np.nan), 30, 0.3, 1.0, hvac())
    with pytest.raises(ValueError, match=r"p_hvac\[0\]"):
        hvac_step(ThermalState(24, 24, 24), 30, 0.3, 25.0, hvac())


def test_pev_trajectories():
    ev = PevParams(e_rated=75, p_ch_max=11.5, soc0_nominal=0.5, soc0_dev_plus=0.1,
                   soc0_dev_minus=0.1, eta_ch=1.0)
    assert np.allclose(pev_soc_trajectory(0.5, np.zeros(5), ev, GRID), 0.5)
    one = pev_soc_trajectory(0.5, [11.5], ev, GRID)
    assert one[0] == pytest.approx(0.5 + 2.875 / 75, abs=1e-12)
    assert one[0] == pytest.approx(0.538333, abs=1e-6)
    half = replace(ev, eta_ch=0.5)
    p = [11.5, 3.0, 0.0, 7.0]
    assert np.allclose(np.diff(pev_soc_trajectory(0.5, p, half, GRID), prepend=0.5),
                       0.5 * np.diff(pev_soc_trajectory(0.5, p, ev, GRID), prepend=0.5))


def test_ewh_trajectories():
    e = EwhParams(heat_drain=np.zeros(4), mass=1.0, c_water=1.0)
    assert np.allclose(ewh_temp_trajectory(30.0, np.zeros(4), e, GRID), 30.0)
    p = np.array([1.0, 2.0, 4.0, 0.5])
    balanced = replace(e, heat_drain=e.zeta * p * GRID.slot_hours)
    assert np.allclose(ewh_temp_trajectory(30.0, p, balanced, GRID), 30.0)
    one = replace(e, heat_drain=np.array([0.2]))
    assert ewh_temp_trajectory(30.0, [4.0], one, GRID)[0] - 30.0 == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ewh_temp_trajectory(30.0, [1.0], replace(e, mass=0.0), GRID)


def test_ess_trajectories():
    s = EssParams()
    assert np.allclose(ess_soc_trajectory(s, np.zeros(6), np.zeros(6), GRID), 0.5)
    unit = replace(s, eta_ch=1.0, eta_dis=1.0)
    traj = ess_soc_trajectory(unit, [4, 0], [0, 4], GRID)
    assert traj[-1] == pytest.approx(unit.soc0, abs=1e-15)
    lossy = replace(s, eta_ch=0.9, eta_dis=0.9)
    net = ess_soc_trajectory(lossy, [4, 0], [0, 4], GRID)[-1] - lossy.soc0
    assert net == pytest.approx(4 * 0.25 / 80 * (0.9 - 1 / 0.9), abs=1e-15)
    assert net < 0
    with pytest.raises(ValueError, match="slot 1"):
        ess_soc_trajectory(s, [0, 2, 0], [0, 1, 0], GRID)


def test_trajectories_are_affine_and_telescope():
    rng = np.random.default_rng(1)
    ev = PevParams(e_rated=60, p_ch_max=7, soc0_nominal=0.3)
    e = EwhParams(heat_drain=rng.uniform(0, 0.5, 10))
    s = EssParams()
    h = hvac(alpha=rng.normal(size=(3, 3)) * 0.05, slots=10)
    t_out, irr = rng.uniform(20, 30, 10), rng.uniform(0, 1, 10)
    x0 = ThermalState(24, 24, 24)
    for _ in range(20):
        lam = rng.random()
        p, q = rng.uniform(0, 3, 10), rng.uniform(0, 3, 10)
        mix = lam * p + (1 - lam) * q
        for f in (lambda a: pev_soc_trajectory(0.3, a, ev, GRID),
                  lambda a: ewh_temp_trajectory(30, a, e, GRID),
                  lambda a: ess_soc_trajectory(s, a, np.zeros(10), GRID),
                  lambda a: hvac_trajectory(x0, a, t_out, irr, h)):
            assert np.allclose(f(mix), lam * f(p) + (1 - lam) * f(q), atol=1e-9)
        soc = pev_soc_trajectory(0.3, p, ev, GRID)
        inc = p * GRID.slot_hours * ev.eta_ch / ev.e_rated
        assert np.allclose(np.diff(soc, prepend=0.3), inc, atol=1e-15)


def test_counts_match_closed_form():
    for T, nb, nv in ((2, 1, 1), (4, 2, 3), (3, 1, 2)):
        c = tiny_config(n_buildings=nb, n_pev=nv, slots=T, budgets=(1, 1, 1, 1))
        m = assemble_constraints(c)
        exp = expected_counts(T, nb, nv)
        assert (m.n_vars, m.n_rows) == (exp["columns"], exp["rows"])
        fixed = assemble_constraints(c, UncertaintyRealization.nominal(c))
        exp = expected_counts(T, nb, nv, symbolic=False)
        assert (fixed.n_vars, fixed.n_rows) == (exp["columns"], exp["rows"])


def test_counts_by_hand_for_two_slots():
    # per building and slot: 2 mode binaries, 5 HVAC (3 temps, power, comfort),
    # 3 EWH, 3 ESS columns; per PEV and slot 3; per slot 4 grid columns
    c = tiny_config(slots=2)
    m = assemble_constraints(c, UncertaintyRealization.nominal(c))
    assert m.n_vars == 2 * (2 + 5 + 3 + 3) + 2 * 3 + 2 * 4
    # rows per slot: mode, 3 HVAC dynamics + 2 comfort pieces, EWH dynamics + 1 piece,
    # ESS dynamics + 2 links; PEV dynamics + 1 piece; balance, split, tie
    assert m.n_rows == 2 * (1 + 5 + 2 + 3) + 2 * 2 + 2 * 3


def test_power_balance_coefficients():
    c = tiny_config(n_buildings=2, n_pev=2)
    m = assemble_constraints(c)
    A = m.A.tocsr()
    want = {("ess", "p_dis"): 1, ("ess", "p_ch"): -1, ("res", "w"): 1, ("grid", "p_base"): 1,
            ("grid", "p_peak"): 1, ("load", "d"): -1, ("ewh", "p"): -1, ("hvac", "p"): -1,
            ("pev", "p"): -1, ("grid", "spill"): -1}
    for i in m.rows(group="balance"):
        t = m.row_tags[i].slot
        row = A.getrow(i)
        seen = {}
        for j, v in zip(row.indices, row.data):
            tag = m.tags[j]
            assert tag.slot == t
            seen.setdefault((tag.device, tag.quantity), set()).add(v)
        assert {k: v.pop() for k, v in seen.items()} == want


def test_tie_line_at_full_signal():
    c = default_config()
    m = assemble_constraints(c, UncertaintyRealization.nominal(c))
    for i in m.rows(group="tie_limit"):
        row = m.A.getrow(i)
        assert row.nnz == 1 and row.data[0] == 1.0
        assert m.tags[row.indices[0]].quantity == "p_total"
        assert m.rhs[i] == pytest.approx(1867.0) and m.sense[i] == LE


def test_each_placeholder_enters_one_row():
    c = tiny_config(n_buildings=2, n_pev=2)
    rows = placeholder_rows(assemble_constraints(c))
    assert len(rows) == 2 * 2 * c.T + 2 + c.T
    assert {t.device for t in rows} == set(PLACEHOLDERS)


def test_assembly_is_deterministic():
    c = tiny_config(n_buildings=2)
    a, b = assemble_constraints(c), assemble_constraints(c)
    assert a.tags == b.tags and a.row_tags == b.row_tags
    assert (a.A != b.A).nnz == 0
    assert np.array_equal(a.rhs, b.rhs) and np.array_equal(a.c, b.c)


def test_feasible_point_replays_through_dynamics():
    c = tiny_config(n_buildings=2, n_pev=2, slots=6)
    real = UncertaintyRealization.nominal(c)
    m = assemble_constraints(c, real)
    sol = solve_milp(m, backend="highs")
    assert sol.optimal
    x = sol.x

    def series(device, index, quantity):
        cols = m.columns(device=device, index=index, quantity=quantity)
        return x[sorted(cols, key=lambda j: m.tags[j].slot)]

    for i, b in enumerate(c.buildings):
        traj = hvac_trajectory(b.hvac_initial, np.clip(series("hvac", i, "p"), 0, b.hvac.p_max),
                               c.exogenous.t_out, c.exogenous.irradiance, b.hvac)
        assert np.allclose(traj[:, 0], series("hvac", i, "t_in"), atol=1e-6)
        tw = ewh_temp_trajectory(b.ewh.t0, np.clip(series("ewh", i, "p"), 0, b.ewh.p_max),
                                 b.ewh, c.grid)
        assert np.allclose(tw, series("ewh", i, "t_w"), atol=1e-6)
    for k, i in enumerate(c.ess_buildings):
        s = c.buildings[i].ess
        soc = ess_soc_trajectory(s, np.clip(series("ess", k, "p_ch"), 0, s.p_ch_max),
                                 np.clip(series("ess", k, "p_dis"), 0, s.p_dis_max), c.grid)
        assert np.allclose(soc, series("ess", k, "soc"), atol=1e-6)
    for v, ev in enumerate(c.pevs):
        soc = pev_soc_trajectory(real.pev_soc0[v], np.clip(series("pev", v, "p"), 0, ev.p_ch_max),
                                 ev, c.grid)
        assert np.allclose(soc, series("pev", v, "soc"), atol=1e-6)
    d = decision_from_values(c, m, x)
    assert not d.issues(c)
    lp = recourse_lp(c, d, real)
    assert solve_lp(lp).objective == pytest.approx(sol.objective, abs=1e-6)


def test_invariant_diagnostics_name_fields():
    c = tiny_config()
    b = c.buildings[0]
    bad = c.with_(buildings=(replace(b, hvac=replace(b.hvac, epsilon=b.hvac.delta)),))
    assert any("epsilon < delta" in s and s.startswith("buildings[0].hvac") for s in bad.issues())
    over = c.with_(budgets=Budgets(1, 1, 2, 1))
    assert any("gamma_z" in s and "PEV count" in s for s in over.issues())
    with pytest.raises(ConfigError):
        over.check()
    assert default_config().issues() == []


def test_realization_and_decision_checks():
    c = tiny_config()
    r = UncertaintyRealization.nominal(c)
    res = r.res.copy()
    res[0, 2] += 10.0
    issues = replace(r, res=res).issues(c)
    assert issues and "res[0][2]" in issues[0]
    x = FirstStageDecision(np.ones((1, c.T)), np.ones((1, c.T)))
    assert any("slot 0" in s for s in x.issues(c))
    assert FirstStageDecision.idle(c).issues(c) == []


def test_config_round_trip(tmp_path):
    c = default_config()
    save_config(c, tmp_path / "c.json")
    back = load_config(tmp_path / "c.json")
    assert config_to_dict(back) == config_to_dict(c)
    a = assemble_constraints(c, UncertaintyRealization.nominal(c))
    b = assemble_constraints(back, UncertaintyRealization.nominal(back))
    assert np.array_equal(a.rhs, b.rhs) and (a.A != b.A).nnz == 0


def test_config_parse_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "schema_version": 1,\n  "grid": {,\n}')
    with pytest.raises(ConfigParseError) as exc:
        load_config(p)
    assert exc.value.line == 3
    doc = config_to_dict(tiny_config())
    doc["surprise"] = 1
    del doc["pevs"]
    with pytest.raises(ConfigError) as err:
        config_from_dict(doc)
    assert any(s.startswith("surprise") for s in err.value.issues)
    assert any(s.startswith("pevs") for s in err.value.issues)


def test_csv_profile_reference(tmp_path):
    c = tiny_config()
    doc = config_to_dict(c)
    t_out = np.asarray(c.exogenous.t_out)
    rows = ["slot,t_out"] + [f"{t},{float(v)!r}" for t, v in enumerate(t_out)]
    (tmp_path / "weather.csv").write_text("\n".join(rows) + "\n")
    doc["exogenous"]["t_out"] = {"csv": "weather.csv", "column": "t_out"}
    (tmp_path / "c.json").write_text(json.dumps(doc))
    back = load_config(tmp_path / "c.json")
    assert np.array_equal(back.exogenous.t_out, t_out)
