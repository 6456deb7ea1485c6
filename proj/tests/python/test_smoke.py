import math
import pathlib

import pytest

import grnvelo

ROOT = pathlib.Path(__file__).resolve().parents[2]


def single_gene():
    return grnvelo.GrnModel(w_plus=[[0.0]], alpha=[1.0], beta=[2.0], gamma=[4.0])


def test_rhs_vanishes_at_equilibrium():
    du, ds = grnvelo.rhs(single_gene(), [0.5], [0.25])
    assert du == [0.0] and ds == [0.0]


def test_regulation_and_model_checks():
    m = grnvelo.GrnModel(w_plus=[[0, 0], [0.5, 0]], alpha=[1, 1], beta=[1, 1], gamma=[1, 1])
    assert m.n_genes == 2
    assert grnvelo.regulation(m, [1.0, 0.0]) == pytest.approx([1.0, 1.5])
    with pytest.raises(grnvelo.DomainError):
        grnvelo.GrnModel(w_plus=[[-1.0]], alpha=[1], beta=[1], gamma=[1])


def test_integrate_reaches_closed_form():
    times, states = grnvelo.integrate(single_gene(), [0.0], [0.0], 10.0, 1e-3)
    assert len(times) == len(states) == 10001
    assert states[-1] == pytest.approx([0.5, 0.25], abs=1e-8)


def test_equilibrium():
    r = grnvelo.solve_equilibrium(single_gene())
    assert r["converged"] and r["feasible"]
    assert r["s_star"] == pytest.approx([0.25])
    assert r["u_star"] == pytest.approx([0.5])


def test_spectral_helpers():
    assert grnvelo.spectral_radius([[0, 2], [0.5, 0]]) == pytest.approx(1.0, rel=1e-9)
    assert grnvelo.lambda2([[0, 1], [1, 0]]) == pytest.approx(2.0)
    assert grnvelo.alon_boppana(12) == pytest.approx(12 - 2 * math.sqrt(11))


def test_bang_bang():
    assert grnvelo.bang_bang_update(-1.0, 0.3, 0.0, 1.0, 0.5) == 1.0
    assert grnvelo.bang_bang_update(1.0, 0.3, 0.0, 1.0, 0.5) == 0.0
    assert grnvelo.bang_bang_update(0.0, 0.3, 0.0, 1.0, 0.7) == 0.7


def test_min_time_toy():
    m = grnvelo.GrnModel(w_plus=[[1.5]], alpha=[1], beta=[1], gamma=[1])
    sol = grnvelo.solve_min_time(m, 0, [2.0], [2.0], targets=[(0, 1.5)], bins=500)
    assert sol["T_star"] == pytest.approx(1.6752, rel=2e-3)
    assert set(sol["z"]) == {0.0}


def test_structurally_unreachable():
    m = grnvelo.GrnModel(w_plus=[[1, 0], [0, 0]], alpha=[1, 1], beta=[1, 1], gamma=[1, 1])
    with pytest.raises(grnvelo.UnreachableError):
        grnvelo.solve_min_time(m, 0, [1, 1], [1, 1], targets=[(1, 0.1)], bins=200)


def test_molecular_distance():
    m = grnvelo.GrnModel(w_plus=[[0, 0, 0], [1, 0, 0], [0, 1, 0]], alpha=[1] * 3, beta=[1] * 3, gamma=[1] * 3)
    assert grnvelo.molecular_distance(m, 0, "s", 2) == 5
    assert grnvelo.molecular_distance(m, 2, "s", 0) is None


def test_run_scenario(tmp_path):
    code = grnvelo.run_scenario(str(ROOT / "scenarios" / "single_gene.json"), str(tmp_path))
    assert code == 0
    assert (tmp_path / "trajectory.csv").read_text().startswith("t,cell,gene,u,s\n")
    assert (tmp_path / "report.json").exists()
