import pytest

from oscillax.config import DEFAULTS, RunConfig, build_run_config, load_config_file
from oscillax.errors import DomainError


def test_defaults_per_command():
    assert RunConfig("blowup").mollifier == "fast-path-log"
    assert RunConfig("check-class").mollifier == "diagonal-envelope"
    assert RunConfig("blowup", n=2).grid_points == DEFAULTS["grid_points"][2]


def test_flags_override_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('n = 2\nbeta = 0.8\np_list = [1, 2]\nmollifier = "linear"\n')
    values = load_config_file(path)
    cfg = build_run_config("blowup", values, {"beta": 0.7, "n": None})
    assert (cfg.n, cfg.beta, cfg.p_list, cfg.mollifier) == (2, 0.7, [1, 2], "linear")


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("colour = 3\n")
    with pytest.raises(DomainError, match="colour"):
        load_config_file(path)


@pytest.mark.parametrize("kw", [{"n": 0}, {"beta": 1.0}, {"delta": 0.0}, {"mollifier": "x"},
                                {"p_list": []}, {"p_list": [0]}, {"grid_points": 100},
                                {"l_max": 4}, {"max_order": 3}])
def test_validation(kw):
    with pytest.raises(DomainError):
        RunConfig("blowup", **kw)


def test_defaults_echoed():
    d = RunConfig("crosscheck").to_dict()
    assert d["defaults"]["defaults_version"] == DEFAULTS["defaults_version"]
    assert d["command"] == "crosscheck"
