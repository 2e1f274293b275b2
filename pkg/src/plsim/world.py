"""Synthetic soil world: sampling sites, loosened-soil piles and scenario files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .errors import ConfigurationError
from .rng import stream

SCENARIO_SCHEMA_VERSION = 1

_INTERVAL = {
    "type": "array",
    "items": {"type": "number", "minimum": 0},
    "minItems": 2,
    "maxItems": 2,
}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "n_sites"],
    "properties": {
        "schema_version": {"const": SCENARIO_SCHEMA_VERSION},
        "name": {"type": "string"},
        "n_sites": {"type": "integer"},
        "profile": {
            "type": "object",
            "properties": {
                "protein_rich_probability": {"type": "number"},
                "rich_protein_range": _INTERVAL,
                "lean_protein_range": _INTERVAL,
                "sugar_range": _INTERVAL,
                "hardness_range": _INTERVAL,
                "surface_distance_range_m": _INTERVAL,
            },
            "additionalProperties": False,
        },
        "explicit_sites": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index"],
                "properties": {
                    "index": {"type": "integer", "minimum": 0},
                    "surface_distance_m": {"type": "number"},
                    "protein_fraction": {"type": "number"},
                    "sugar_fraction": {"type": "number"},
                    "hardness": {"type": "number"},
                    "loosened_pile_g": {"type": "number"},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


@dataclass
class SoilSample:
    mass_g: float
    protein_fraction: float
    sugar_fraction: float


@dataclass
class SoilSite:
    """Ground truth for one sampling location.

    ``surface_distance_m`` is measured from the module base plate to the
    ground with the module fully lowered.
    """

    site_id: int
    surface_distance_m: float
    protein_fraction: float
    sugar_fraction: float
    hardness: float
    loosened_pile_g: float = 0.0

    def validate(self) -> None:
        if not (0.0 <= self.protein_fraction <= 1.0 and 0.0 <= self.sugar_fraction <= 1.0):
            raise ConfigurationError(f"site {self.site_id}: fractions must lie in [0, 1]")
        if self.protein_fraction + self.sugar_fraction > 1.0:
            raise ConfigurationError(f"site {self.site_id}: protein + sugar fraction exceeds 1")
        if not 0.0 <= self.hardness <= 1.0:
            raise ConfigurationError(f"site {self.site_id}: hardness must lie in [0, 1]")
        if not self.surface_distance_m > 0.0:
            raise ConfigurationError(f"site {self.site_id}: surface distance must be positive")
        if self.loosened_pile_g < 0.0:
            raise ConfigurationError(f"site {self.site_id}: negative loosened pile")


@dataclass
class SiteProfile:
    protein_rich_probability: float = 0.2
    rich_protein_range: tuple[float, float] = (0.035, 0.05)
    lean_protein_range: tuple[float, float] = (0.0, 0.01)
    sugar_range: tuple[float, float] = (0.003, 0.03)
    hardness_range: tuple[float, float] = (0.1, 0.5)
    surface_distance_range_m: tuple[float, float] = (0.03, 0.08)


@dataclass
class ScenarioSpec:
    n_sites: int
    profile: SiteProfile = field(default_factory=SiteProfile)
    # site index -> field overrides
    explicit_sites: dict[int, dict[str, float]] = field(default_factory=dict)
    name: str = ""

    def validate(self) -> None:
        if not isinstance(self.n_sites, int) or self.n_sites < 1:
            raise ConfigurationError(f"n_sites must be >= 1, got {self.n_sites!r}")
        p = self.profile
        if not 0.0 <= p.protein_rich_probability <= 1.0:
            raise ConfigurationError("protein_rich_probability must lie in [0, 1]")
        for name in ("rich_protein_range", "lean_protein_range", "sugar_range", "hardness_range"):
            lo, hi = getattr(p, name)
            if not 0.0 <= lo <= hi <= 1.0:
                raise ConfigurationError(f"{name} must be an interval within [0, 1]")
        lo, hi = p.surface_distance_range_m
        if not 0.0 < lo <= hi:
            raise ConfigurationError("surface_distance_range_m must be a positive interval")
        if max(p.rich_protein_range[1], p.lean_protein_range[1]) + p.sugar_range[1] > 1.0:
            raise ConfigurationError("protein and sugar ranges can sum above 1")
        site_fields = {f.name for f in fields(SoilSite)} - {"site_id"}
        for index, overrides in self.explicit_sites.items():
            if not 0 <= index < self.n_sites:
                raise ConfigurationError(f"explicit site index {index} outside [0, {self.n_sites})")
            unknown = set(overrides) - site_fields
            if unknown:
                raise ConfigurationError(f"unknown site override fields: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ScenarioSpec":
        try:
            jsonschema.validate(data, SCENARIO_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigurationError(f"scenario: {exc.message}") from None
        profile = SiteProfile(**{k: tuple(v) if isinstance(v, list) else v
                                 for k, v in data.get("profile", {}).items()})
        explicit: dict[int, dict[str, float]] = {}
        for entry in data.get("explicit_sites", []):
            entry = dict(entry)
            index = entry.pop("index")
            if index in explicit:
                raise ConfigurationError(f"duplicate explicit site index {index}")
            explicit[index] = entry
        spec = cls(n_sites=data["n_sites"], profile=profile, explicit_sites=explicit,
                   name=data.get("name", ""))
        spec.validate()
        return spec

    def to_dict(self) -> dict[str, Any]:
        p = self.profile
        return {
            "schema_version": SCENARIO_SCHEMA_VERSION,
            "name": self.name,
            "n_sites": self.n_sites,
            "profile": {
                "protein_rich_probability": p.protein_rich_probability,
                "rich_protein_range": list(p.rich_protein_range),
                "lean_protein_range": list(p.lean_protein_range),
                "sugar_range": list(p.sugar_range),
                "hardness_range": list(p.hardness_range),
                "surface_distance_range_m": list(p.surface_distance_range_m),
            },
            "explicit_sites": [dict(index=i, **o) for i, o in sorted(self.explicit_sites.items())],
        }


def load_scenario(path: str | Path) -> ScenarioSpec:
    """Read a scenario JSON file. A bare name such as ``"urc10"`` loads the bundled file."""
    path = Path(path)
    if path.suffix == "" and not path.exists():
        text = resources.files("plsim").joinpath("data").joinpath(f"{path.name}.scenario.json").read_text()
    else:
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read scenario {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"scenario {path}: {exc}") from None
    return ScenarioSpec.from_dict(data)


def generate_sites(seed: int, spec: ScenarioSpec) -> list[SoilSite]:
    spec.validate()
    rng = stream(seed, "world")
    p = spec.profile
    sites = []
    for i in range(spec.n_sites):
        # fixed draw order per site keeps the stream aligned whatever the overrides
        rich = rng.random() < p.protein_rich_probability
        protein = rng.uniform(*(p.rich_protein_range if rich else p.lean_protein_range))
        sugar = rng.uniform(*p.sugar_range)
        hardness = rng.uniform(*p.hardness_range)
        distance = rng.uniform(*p.surface_distance_range_m)
        site = SoilSite(site_id=i, surface_distance_m=float(distance),
                        protein_fraction=float(protein), sugar_fraction=float(sugar),
                        hardness=float(hardness))
        for key, value in spec.explicit_sites.get(i, {}).items():
            setattr(site, key, float(value))
        site.validate()
        sites.append(site)
    return sites


def withdraw_loosened(site: SoilSite, mass_g: float) -> SoilSample:
    """Take up to ``mass_g`` from the site's loosened pile."""
    if mass_g < 0:
        raise ValueError(f"cannot withdraw a negative mass ({mass_g} g)")
    taken = min(mass_g, site.loosened_pile_g)
    site.loosened_pile_g -= taken
    return SoilSample(taken, site.protein_fraction, site.sugar_fraction)


@dataclass
class World:
    sites: list[SoilSite]
    rng_seed: int
    current_site: int = 0

    @classmethod
    def from_scenario(cls, seed: int, spec: ScenarioSpec) -> "World":
        return cls(sites=generate_sites(seed, spec), rng_seed=seed)

    @property
    def site(self) -> SoilSite:
        return self.sites[self.current_site]

    def total_pile_g(self) -> float:
        return sum(s.loosened_pile_g for s in self.sites)
