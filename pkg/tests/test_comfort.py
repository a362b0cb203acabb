import numpy as np
import pytest

from campus_ems.comfort import (ComfortPieces, encode_epigraph, ewh_comfort, ewh_pieces,
                                hvac_comfort, hvac_pieces, pev_comfort, pev_pieces)
from campus_ems.linprog import solve_lp
from campus_ems.model.linear import ModelBuilder, VarTag
from campus_ems.model.types import EwhParams, HvacParams, PevParams

HVAC = HvacParams(alpha=np.zeros((3, 3)), beta=np.eye(3), eta=1.0, sigma=np.ones(1), p_max=1.0)
PEV = PevParams(e_rated=60, p_ch_max=7, soc0_nominal=0.3)
EWH = EwhParams(heat_drain=np.zeros(1))


def test_hvac_values():
    assert hvac_comfort(24.0, HVAC) == 1.0
    assert hvac_comfort(26.0, HVAC) == 0.0
    assert hvac_comfort(25.25, HVAC) == pytest.approx(0.5, abs=1e-12)
    assert hvac_comfort(30.0, HVAC) == 0.0 and hvac_comfort(10.0, HVAC) == 0.0


def test_pev_and_ewh_values():
    assert pev_comfort(0.8, PEV) == 1.0
    assert pev_comfort(0.1, PEV) == 0.0
    assert pev_comfort(0.45, PEV) == pytest.approx(0.5, abs=1e-12)
    assert ewh_comfort(40.0, EWH) == 1.0
    assert ewh_comfort(30.0, EWH) == 0.0
    assert ewh_comfort(35.0, EWH) == pytest.approx(0.5, abs=1e-12)


def test_hvac_is_symmetric():
    for d in np.linspace(0, 3, 31):
        assert hvac_comfort(24 + d, HVAC) == pytest.approx(hvac_comfort(24 - d, HVAC), abs=1e-12)


def test_evaluators_accept_arrays():
    x = np.array([[23.5, 25.25], [27.0, 24.0]])
    assert np.allclose(hvac_comfort(x, HVAC), [[1.0, 0.5], [0.0, 1.0]])


def test_pieces_match_evaluators_where_nonnegative():
    cases = [(hvac_pieces(HVAC), hvac_comfort, HVAC, (22.0, 26.0)),
             (pev_pieces(PEV), pev_comfort, PEV, (0.1, 1.0)),
             (ewh_pieces(EWH), ewh_comfort, EWH, (30.0, 60.0))]
    for pieces, f, params, (lo, hi) in cases:
        x = np.linspace(lo, hi, 101)
        assert np.allclose(np.minimum(pieces(x), 1.0), f(x, params), atol=1e-12)


def test_nonconcave_pieces_rejected():
    with pytest.raises(ValueError, match="concave"):
        ComfortPieces(((0, 0), (1, 1), (2, 0), (3, 1)))
    with pytest.raises(ValueError):
        ComfortPieces(((0, 0), (0, 1)))


def epigraph_max(pieces, arg):
    b = ModelBuilder()
    a = b.add_var(VarTag("arg", 0, "x"), lb=arg, ub=arg)
    j = encode_epigraph(pieces, a, b, VarTag("user", 0, "J"), obj=1.0)
    sol = solve_lp(b.build(maximize=True), backend="native")
    return sol.x[j]


def test_epigraph_recovers_comfort():
    for arg, want in ((24.0, 1.0), (25.25, 0.5), (23.5, 1.0), (23.0, 2 / 3), (22.5, 1 / 3)):
        assert epigraph_max(hvac_pieces(HVAC), arg) == pytest.approx(want, abs=1e-9)
    assert epigraph_max(pev_pieces(PEV), 0.45) == pytest.approx(0.5, abs=1e-9)
    assert epigraph_max(ewh_pieces(EWH), 45.0) == pytest.approx(1.0, abs=1e-9)


def test_epigraph_rejects_undeclared_argument():
    with pytest.raises(IndexError):
        encode_epigraph(hvac_pieces(HVAC), 3, ModelBuilder(), VarTag("user", 0, "J"))
