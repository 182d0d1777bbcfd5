"""JSON scenarios: schema validation, defaults, and construction of model objects."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import BadScenario, InputError
from .field import Coefficient, IntervalGrid, PeriodicGrid
from .kernel import Kernel, make_kernel
from .steady import Nonlinearity, make_nonlinearity

DEFAULT_OPTIONS = {"tol": 1e-10, "max_iter": 100_000, "margin_tol": 1e-6,
                   "decay_tol": 1e-8, "uniq_tol": 1e-6, "tail_tol": 1e-14}
DEFAULT_N = 256


@lru_cache(maxsize=1)
def schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("scenario.schema.json").read_text())


def bundled() -> dict[str, Path]:
    """Bundled example scenarios by name."""
    root = resources.files(__package__).joinpath("scenarios")
    return {p.name[:-5]: Path(str(p)) for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".json")}


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def validate_dict(data) -> None:
    """Schema check; raises BadScenario pointing at the offending field."""
    validator = jsonschema.Draft202012Validator(schema())
    error = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if error is not None:
        raise BadScenario(_pointer(error.absolute_path), error.message)


@dataclass(frozen=True, eq=False)
class Scenario:
    kernel: Kernel
    a: Coefficient
    R: float = 1.0
    N: int = DEFAULT_N
    nonlinearity: Nonlinearity | None = None
    options: dict = field(default_factory=lambda: dict(DEFAULT_OPTIONS))
    dirichlet: dict = field(default_factory=dict)
    seed: int = 0
    name: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def grid(self) -> PeriodicGrid:
        return PeriodicGrid(self.R, self.N)

    @property
    def f(self) -> Nonlinearity:
        return self.nonlinearity

    def interval_grid(self, r: float | None = None) -> IntervalGrid:
        d = self.dirichlet
        r = float(r if r is not None else d.get("radii", [2.0 * self.R])[0])
        return IntervalGrid.with_spacing(float(d.get("y", 0.0)), r, int(d.get("N_per_unit", 16)))

    def with_grid(self, N: int) -> "Scenario":
        raw = dict(self.raw, N=N)
        return replace(self, N=N, raw=raw, nonlinearity=_nonlinearity(raw, self.a, self.R, PeriodicGrid(self.R, N)))

    def to_dict(self) -> dict:
        return dict(self.raw)


def _nonlinearity(data, a, R, grid) -> Nonlinearity:
    spec = data.get("nonlinearity", {"form": "kpp"})
    try:
        if spec["form"] == "kpp":
            return make_nonlinearity(a, R, grid.x)
        return make_nonlinearity(dict(spec, R=R), R, grid.x)
    except InputError as exc:
        raise BadScenario("/nonlinearity", str(exc)) from exc


def from_dict(data: dict) -> Scenario:
    validate_dict(data)
    try:
        kernel = make_kernel(data["kernel"])
    except InputError as exc:
        raise BadScenario("/kernel", str(exc)) from exc
    R = float(data.get("R", 1.0))
    N = int(data.get("N", DEFAULT_N))
    ad = data["a"]
    a = Coefficient(ad.get("mean", 0.0), ad.get("cos", ()), ad.get("sin", ()), R)
    grid = PeriodicGrid(R, N)
    options = dict(DEFAULT_OPTIONS, **data.get("options", {}))
    return Scenario(kernel, a, R, N, _nonlinearity(data, a, R, grid), options, dict(data.get("dirichlet", {})),
                    int(data.get("seed", 0)), data.get("name", ""), dict(data))


def load(path) -> Scenario:
    """Read a scenario file; a bare name selects a bundled scenario."""
    p = Path(path)
    if not p.exists() and str(path) in bundled():
        p = bundled()[str(path)]
    try:
        data = json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise BadScenario("", f"no such scenario file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise BadScenario("", f"invalid JSON in {path}: {exc}") from exc
    return from_dict(data)
