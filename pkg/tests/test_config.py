import numpy as np
import pytest

from homodyne_bh.config import (
    ConfigError,
    RunConfig,
    SweepSpec,
    apply_env_overrides,
    config_from_dict,
    config_to_dict,
    dumps,
    load_config,
)
from homodyne_bh.operators import BoseHubbardParams


def write(tmp_path, text, name="c.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_defaults_without_file():
    cfg = load_config(None, environ={})
    assert (cfg.model.L, cfg.model.N) == (6, 6)
    assert cfg.sim.gamma == cfg.measurement.gamma == 0.01
    assert cfg.n_trajectories == 1


def test_sections_and_gamma_source(tmp_path):
    path = write(tmp_path, """
[model]
L = 3
N = 2
U = 4.0
boundary = "periodic"
[measurement]
kind = "population"
gamma = 2.5
[sim]
dt = 1e-3
t_final = 0.5
[run]
n_trajectories = 7
initial_state = [1, 0, 1]
""")
    cfg = load_config(path, environ={})
    assert cfg.model.boundary == "periodic"
    assert cfg.sim.gamma == 2.5
    assert cfg.initial_state == [1, 0, 1]
    assert cfg.n_trajectories == 7


@pytest.mark.parametrize(
    "text,field",
    [
        ("[model]\nL = 3\nN = 3\nbogus = 1\n", "model.bogus"),
        ("[model]\nL = 3\nN = 3\n[extra]\nx = 1\n", "extra"),
        ("[model]\nL = 3\n", "model.N"),
        ("[model]\nL = 3\nN = 3\n[run]\nthreads = 2\n", "run.threads"),
        ("[model]\nL = 3\nN = 3\n[sim]\ngamma = 1.0\n", "sim.gamma"),
    ],
)
def test_field_errors_name_the_field(tmp_path, text, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        load_config(write(tmp_path, text), environ={})


def test_syntax_error_reports_line(tmp_path):
    with pytest.raises(ConfigError, match="line 3"):
        load_config(write(tmp_path, "[model]\nL = 3\nN = = 3\n"), environ={})


def test_nested_validation_becomes_config_error(tmp_path):
    with pytest.raises(ConfigError, match="gamma"):
        load_config(write(tmp_path, "[model]\nL=2\nN=2\n[measurement]\ngamma = -1.0\n"), environ={})
    with pytest.raises(ConfigError, match="n_trajectories"):
        load_config(write(tmp_path, "[model]\nL=2\nN=2\n[run]\nn_trajectories = 0\n"), environ={})


def test_sweep_grid_forms():
    assert SweepSpec(grid=[1, 2]).values() == [1.0, 2.0]
    g = SweepSpec(u_over_j_min=0.1, u_over_j_max=100, points=40).values()
    assert len(g) == 40 and np.isclose(g[0], 0.1) and np.isclose(g[-1], 100)
    with pytest.raises(ConfigError, match="sweep.grid"):
        SweepSpec().values()


def test_env_overrides():
    env = {
        "HOMODYNE_BH_MODEL__U": "12.5",
        "HOMODYNE_BH_MICRO__OMEGA_L": "0.3",
        "HOMODYNE_BH_RUN__OUTPUT_DIR": "elsewhere",
        "HOMODYNE_BH_MEASUREMENT__KIND": '"population"',
        "UNRELATED": "1",
    }
    data = apply_env_overrides({"model": {"L": 2, "N": 2}}, env)
    cfg = config_from_dict(data)
    assert cfg.model.U == 12.5
    assert cfg.micro.omega_L == 0.3
    assert cfg.output_dir == "elsewhere"
    assert cfg.measurement.kind == "population"


def test_round_trip(tmp_path):
    cfg = RunConfig(model=BoseHubbardParams(L=3, N=4, U=2.0, epsilon=[0.1, 0.0, -0.1]), n_trajectories=3)
    cfg.micro.A0 = 0.5 + 0.25j
    text = dumps(config_to_dict(cfg))
    back = load_config(write(tmp_path, text), environ={})
    assert config_to_dict(back) == config_to_dict(cfg)
    assert back.micro.A0 == 0.5 + 0.25j


def test_meta_section_is_ignored(tmp_path):
    data = config_to_dict(RunConfig())
    data["meta"] = {"code_version": "x", "seed": 3}
    back = load_config(write(tmp_path, dumps(data)), environ={})
    assert config_to_dict(back) == config_to_dict(RunConfig())
