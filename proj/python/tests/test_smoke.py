# Copyright the macrosurf contributors.
# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest

import macrosurf

COARSE = """
frequency: 9.6e9
templates:
  patch:
    unit_cell: {patch_width: 5.4e-3, mesh_length_patch: 2.7e-3, mesh_length_box: 4.5e-3}
layout:
  counts: [2, 1]
  fill: patch
excitation:
  plane_wave: {direction: [0, 0, -1], polarization: [1, 0, 0]}
output:
  cuts: [0, 90]
  theta_step: 10
"""


def test_parse_and_validate():
    cfg = macrosurf.parse_config(COARSE)
    assert cfg.frequency == 9.6e9
    assert (cfg.mx, cfg.my) == (2, 1)
    assert cfg.cells == ["patch", "patch"]
    assert cfg.template_ids == ["patch"]
    macrosurf.validate_config(cfg)


def test_config_errors():
    with pytest.raises(macrosurf.ConfigError, match="colour"):
        macrosurf.parse_config(COARSE + "colour: red\n")
    cfg = macrosurf.parse_config(COARSE)
    cfg.cells = ["patch", "dish"]
    with pytest.raises(macrosurf.ConfigError, match="dish"):
        macrosurf.validate_config(cfg)
    assert issubclass(macrosurf.ConfigError, macrosurf.MacrosurfError)


def test_dry_run_bookkeeping():
    u = macrosurf.dry_run(macrosurf.parse_config(COARSE))
    assert u["stacked"] == 2 * u["per_cell_eq"]
    assert u["merged"] == u["stacked"] - u["duplicates"]
    assert u["merged"] < u["monolithic"]


def test_solve_matches_dense_system():
    sim = macrosurf.Simulation(macrosurf.parse_config(COARSE), monolithic_count=False)
    sim.post_process()
    r = sim.result
    assert r["converged"]
    A = sim.dense_matrix()
    x, b = sim.solution, sim.rhs
    assert np.iscomplexobj(x) and x.shape == (r["unknowns"]["merged"],)
    assert np.linalg.norm(A @ x - b) <= 1e-4 * np.linalg.norm(b)
    assert len(r["history"]) == r["iterations"] + 1
    assert abs(r["directivity_integral"] - 1.0) < 1e-3
    cut = r["cuts"][0]
    assert cut["theta_deg"].shape == cut["d_dbi"].shape == (37,)
    assert "Total number of unknowns" in sim.report()


def test_run_solve_writes_artifacts(tmp_path):
    cfg = macrosurf.parse_config(COARSE, str(tmp_path))
    r = macrosurf.run_solve(cfg, str(tmp_path / "cache"))
    names = sorted(p.name for p in map(type(tmp_path), r["artifacts"]))
    assert names == ["cut_phi0.csv", "cut_phi90.csv", "report.txt"]
    header = (tmp_path / "out" / "cut_phi0.csv").read_text().splitlines()[0]
    assert header == "theta_deg,E_theta_re,E_theta_im,E_phi_re,E_phi_im,D_dBi"
    again = macrosurf.run_solve(cfg, str(tmp_path / "cache"))
    assert again["macromodel_cache_hits"] == 1
    assert again["macromodels_built"] == 0


def test_convergence_failure_is_reported(tmp_path):
    cfg = macrosurf.parse_config(COARSE, str(tmp_path))
    cfg.max_iterations = 1
    cfg.tolerance = 1e-12
    with pytest.raises(macrosurf.ConvergenceError):
        macrosurf.run_solve(cfg)
    assert not (tmp_path / "out").exists()


def test_selftest_fast_tier():
    outcomes = macrosurf.selftest("fast")
    assert [o["id"] for o in outcomes] == [1, 2, 7, 8, 9]
    assert all(o["passed"] for o in outcomes), [o["detail"] for o in outcomes]
    with pytest.raises(ValueError):
        macrosurf.selftest("medium")
