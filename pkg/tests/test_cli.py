import json
import math

import numpy as np
import pytest

from qcollide import (
    ConfigError,
    basis_state,
    blp_witness,
    bloch_vector,
    demo_config,
    load_config,
    run_scenario,
)
from qcollide.cli import main

from helpers import max_abs


def _minimal_config(**overrides):
    cfg = {
        "d_s": 2,
        "d_a": 2,
        "unitary": {"kind": "partial_swap", "theta": 0.785398},
        "eta": {"kind": "basis_state", "index": 0},
        "gamma": 1.0,
        "t_max": 5.0,
        "engines": ["me"],
        "initial_states": [{"kind": "basis_state", "index": 1}],
        "output_path": "out",
    }
    cfg.update(overrides)
    return cfg


def _load(cfg):
    return load_config(json.dumps(cfg))


def test_minimal_config_defaults():
    cfg = _load(_minimal_config())
    assert cfg.grid_points == 101
    assert cfg.n_traj == 10000
    assert cfg.seed == 0
    assert cfg.delta_t == 5.0 / 10000
    assert cfg.fixed_n is None
    assert len(cfg.initial_states) == 1


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown config key: 'tmax'"):
        _load(_minimal_config(tmax=1.0))


def test_missing_key_rejected():
    cfg = _minimal_config()
    del cfg["eta"]
    with pytest.raises(ConfigError, match="eta"):
        _load(cfg)


def test_invalid_eta_names_field():
    bad = _minimal_config(
        eta={"kind": "matrix", "value": [[1.0, 0.0], [0.0, 1.0]]}
    )
    with pytest.raises(ConfigError, match="eta"):
        _load(bad)


def test_unitary_literal_validated():
    bad = _minimal_config(
        unitary={"kind": "matrix", "value": [[1, 0, 0, 0]] * 4}
    )
    with pytest.raises(ConfigError, match="unitary"):
        _load(bad)


def test_matrix_literal_with_complex_entries():
    # eta = (I + sigma_y)/2 written with [re, im] pairs
    cfg = _load(_minimal_config(
        eta={"kind": "matrix",
             "value": [[0.5, [0.0, -0.5]], [[0.0, 0.5], 0.5]]}
    ))
    assert abs(cfg.eta.mat[0, 1] - (-0.5j)) <= 1e-15


def test_sigma_x_requires_qubit_system():
    bad = _minimal_config(d_s=3, d_a=2, unitary={"kind": "sigma_x_on_system"})
    with pytest.raises(ConfigError, match="sigma_x_on_system"):
        _load(bad)


def test_periodic_step_probability_checked():
    bad = _minimal_config(engines=["periodic", "me"], gamma=3.0, delta_t=0.5)
    with pytest.raises(ConfigError, match="delta_t"):
        _load(bad)


def test_correlated_requires_m_and_divisibility():
    with pytest.raises(ConfigError, match="correlated_m"):
        _load(_minimal_config(engines=["correlated"], delta_t=0.05))
    with pytest.raises(ConfigError, match="multiple"):
        _load(_minimal_config(engines=["correlated"], correlated_m=1, delta_t=0.3))


def test_engine_list_validated():
    with pytest.raises(ConfigError, match="unknown engine"):
        _load(_minimal_config(engines=["exact"]))
    with pytest.raises(ConfigError, match="duplicate"):
        _load(_minimal_config(engines=["me", "me"]))


def test_initial_state_count():
    with pytest.raises(ConfigError, match="initial_states"):
        _load(_minimal_config(initial_states=[]))


def test_bloch_vector_examples():
    assert bloch_vector(basis_state(2, 0)) == (0.0, 0.0, 1.0)
    from qcollide import DensityMatrix

    assert bloch_vector(DensityMatrix(np.eye(2) / 2)) == (0.0, 0.0, 0.0)
    plus = DensityMatrix(np.full((2, 2), 0.5))
    assert bloch_vector(plus) == (1.0, 0.0, 0.0)
    with pytest.raises(ValueError, match="qubit"):
        bloch_vector(basis_state(3, 0))


def test_blp_witness_monotone_series():
    t = np.linspace(0, 1, 11)
    rep = blp_witness(t, np.exp(-2 * t))
    assert rep.blp_value == 0.0
    assert rep.revival_intervals == []


def test_blp_witness_single_revival():
    rep = blp_witness([0.0, 1.0, 2.0], [1.0, 0.0, 1.0])
    assert rep.blp_value == 1.0
    assert rep.revival_intervals == [(1.0, 2.0)]


def test_blp_witness_piecewise_linear():
    t = np.linspace(0, 1, 101)
    rep = blp_witness(t, np.abs(1 - 2 * t))
    assert abs(rep.blp_value - 1.0) <= 1e-12
    assert len(rep.revival_intervals) == 1
    a, b = rep.revival_intervals[0]
    assert abs(a - 0.5) <= 1e-12 and abs(b - 1.0) <= 1e-12


def test_run_scenario_me_csv_schema(tmp_path):
    cfg = _load(_minimal_config(output_path=str(tmp_path / "o"), grid_points=11))
    files = run_scenario(cfg)
    names = {f.name for f in files}
    assert names == {"me_state0.csv", "summary.json"}
    lines = (tmp_path / "o" / "me_state0.csv").read_text().splitlines()
    assert lines[0] == (
        "t,re_r_0_0,im_r_0_0,re_r_0_1,im_r_0_1,re_r_1_1,im_r_1_1,"
        "bloch_x,bloch_y,bloch_z"
    )
    assert len(lines) == 12
    # t = 0 row reproduces the initial state
    row0 = [float(x) for x in lines[1].split(",")]
    assert row0[0] == 0.0
    assert abs(row0[1] - 0.0) <= 1e-12  # re rho_00
    assert abs(row0[5] - 1.0) <= 1e-12  # re rho_11


def test_run_scenario_comparison_column(tmp_path):
    cfg = _load(_minimal_config(
        engines=["stochastic", "me"], n_traj=200, grid_points=11,
        output_path=str(tmp_path / "o"),
    ))
    files = run_scenario(cfg)
    comp = (tmp_path / "o" / "comparison.csv").read_text().splitlines()
    assert comp[0] == "t,D_stochastic_vs_me"
    vals = [float(r.split(",")[1]) for r in comp[1:]]
    assert all(0 <= v <= 1 for v in vals)


def test_run_scenario_witness_json(tmp_path):
    cfg = _load(_minimal_config(
        unitary={"kind": "sigma_x_on_system"},
        t_max=1.0, fixed_n=1, n_traj=4000, grid_points=51,
        engines=["stochastic"],
        initial_states=[{"kind": "basis_state", "index": 0},
                        {"kind": "basis_state", "index": 1}],
        output_path=str(tmp_path / "o"),
    ))
    run_scenario(cfg)
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["seed"] == 0
    blp = summary["witness"]["stochastic"]["blp_value"]
    assert abs(blp - 1.0) <= 0.05
    assert summary["witness"]["stochastic"]["revival_intervals"]


def test_run_scenario_deterministic_bytes(tmp_path):
    cfg_dict = _minimal_config(
        engines=["stochastic", "me"], n_traj=500, grid_points=21, seed=3,
    )
    outputs = []
    for sub in ("a", "b"):
        cfg = _load({**cfg_dict, "output_path": str(tmp_path / sub)})
        files = run_scenario(cfg)
        outputs.append({f.name: f.read_bytes() for f in files})
    assert outputs[0] == outputs[1]


def test_demo_configs_all_load():
    for name in ("eq33-identity", "fullswap-decay", "fixedn-revival", "correlated-m1"):
        cfg = demo_config(name)
        assert cfg.name == name
    with pytest.raises(ConfigError, match="unknown demo"):
        demo_config("nope")


def test_main_validate_ok(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(_minimal_config()))
    assert main(["validate", str(p)]) == 0
    assert "OK" in capsys.readouterr().out


def test_main_config_error_exit_1(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(_minimal_config(gamma=-1)))
    assert main(["validate", str(p)]) == 1
    assert main(["run", str(p)]) == 1
    assert "config error" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.json")]) == 1


def test_main_runtime_error_exit_2(tmp_path, capsys):
    # valid config, but the exact branch enumeration guard trips at run time
    cfg = _minimal_config(
        engines=["correlated"], correlated_m=40, delta_t=0.05, t_max=5.0,
        output_path=str(tmp_path / "o"),
    )
    assert math.comb(100, 40) > 10**6
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert main(["run", str(p)]) == 2
    assert "runtime error" in capsys.readouterr().err


def test_main_run_writes_files(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(_minimal_config(grid_points=5)))
    assert main(["run", str(p), "--out-dir", str(tmp_path / "od")]) == 0
    assert (tmp_path / "od" / "me_state0.csv").exists()


def test_csv_floats_roundtrip(tmp_path):
    cfg = _load(_minimal_config(grid_points=7, output_path=str(tmp_path / "o")))
    run_scenario(cfg)
    lines = (tmp_path / "o" / "me_state0.csv").read_text().splitlines()
    import qcollide as qc

    series = qc.integrate_me(
        qc.CollisionSpec(cfg.d_s, cfg.d_a, cfg.unitary, cfg.eta, cfg.gamma),
        cfg.initial_states[0],
        np.linspace(0, cfg.t_max, cfg.grid_points),
        qc.IntegratorConfig(step=cfg.delta_t),
    )
    # 17 significant digits round-trip doubles exactly
    for line, state in zip(lines[1:], series.states):
        vals = [float(x) for x in line.split(",")]
        assert vals[1] == state.mat[0, 0].real
        assert vals[5] == state.mat[1, 1].real
