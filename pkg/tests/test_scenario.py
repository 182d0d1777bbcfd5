import json

import pytest

from nonlocal_spectra.errors import BadScenario
from nonlocal_spectra.scenario import DEFAULT_OPTIONS, bundled, from_dict, load


def test_bundled_names():
    assert {"constant", "cosine", "symmetric_kpp", "asymmetric_tent", "nonexistence", "gaussian"} <= set(bundled())


def test_defaults():
    sc = from_dict({"kernel": {"family": "uniform", "halfwidth": 1.0}, "a": {"mean": 1.0}})
    assert sc.N == 256 and sc.R == 1.0 and sc.options == DEFAULT_OPTIONS
    assert sc.options["tol"] == 1e-10 and sc.options["max_iter"] == 100000


@pytest.mark.parametrize("data, pointer", [
    ({"kernel": {"family": "uniform"}, "a": {}}, "/kernel"),
    ({"kernel": {"family": "uniform", "halfwidth": 1}, "a": {"cos": ["x"]}}, "/a/cos/0"),
    ({"kernel": {"family": "uniform", "halfwidth": 1}, "a": {}, "N": 9}, "/N"),
    ({"kernel": {"family": "tent", "halfwidth": 1, "shift": 1.5}, "a": {}}, "/kernel"),
    ({"kernel": {"family": "uniform", "halfwidth": 1}, "a": {}, "options": {"tol": -1}}, "/options/tol"),
])
def test_bad_scenario_pointer(data, pointer):
    with pytest.raises(BadScenario) as info:
        from_dict(data)
    assert info.value.pointer == pointer


def test_missing_file(tmp_path):
    with pytest.raises(BadScenario):
        load(tmp_path / "nope.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(BadScenario):
        load(tmp_path / "bad.json")


def test_custom_nonlinearity_scenario():
    x = [-1 + 2 * i / 16 for i in range(16)]
    u = [0.1 * j for j in range(31)]
    f = [[uj * (1 - uj) for uj in u] for _ in x]
    sc = from_dict({"kernel": {"family": "uniform", "halfwidth": 1}, "a": {"mean": 1.0},
                    "nonlinearity": {"form": "custom", "x": x, "u": u, "f": f}})
    assert sc.nonlinearity.form == "custom" and sc.nonlinearity.M_sup == pytest.approx(1.0)


def test_with_grid():
    sc = load("cosine").with_grid(64)
    assert sc.grid.N == 64 and sc.raw["N"] == 64
