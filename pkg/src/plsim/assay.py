"""Biuret (protein) and Benedict (reducing sugar) reactions in a chamber beaker.

Colors are HSV triples. The developed color relaxes exponentially toward a
target fixed by the chemistry; suspended soil settles out exponentially, and a
vessel is only worth photographing once it has decanted long enough.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .calibration import Calibration
from .errors import AssayError
from .world import SoilSample

DEFAULT_CALIBRATION = Calibration()
DEFAULT_REAGENT_ML = 7.0
SAMPLE_WINDOW_G = (2.0, 3.0)


class ReagentKind(str, enum.Enum):
    BIURET = "Biuret"
    BENEDICT = "Benedict"


class Band(str, enum.Enum):
    BLUE = "Blue"
    GREEN = "Green"
    YELLOW = "Yellow"
    BRICK_RED = "BrickRed"


BAND_HUE_KEYS = {
    Band.BLUE: "blue",
    Band.GREEN: "green",
    Band.YELLOW: "yellow",
    Band.BRICK_RED: "brick_red",
}


def wrap_hue(h: float) -> float:
    h = h % 360.0
    # a tiny negative input rounds to exactly 360.0
    return 0.0 if h >= 360.0 else h


def signed_hue_delta(from_deg: float, to_deg: float) -> float:
    """Shortest rotation from one hue to another, in [-180, 180)."""
    return (to_deg - from_deg + 180.0) % 360.0 - 180.0


def hue_distance(a: float, b: float) -> float:
    d = abs(a - b) % 360.0
    return 360.0 - d if d > 180.0 else d


@dataclass(frozen=True)
class ColorHSV:
    hue_deg: float
    saturation: float
    value: float

    def __post_init__(self):
        if not 0.0 <= self.hue_deg < 360.0:
            raise ValueError(f"hue {self.hue_deg} outside [0, 360)")
        if not (0.0 <= self.saturation <= 1.0 and 0.0 <= self.value <= 1.0):
            raise ValueError("saturation and value must lie in [0, 1]")


def color_distance(a: ColorHSV, b: ColorHSV) -> float:
    """Euclidean distance with the circular hue difference scaled to turns."""
    dh = hue_distance(a.hue_deg, b.hue_deg) / 360.0
    return math.sqrt(dh * dh + (a.saturation - b.saturation) ** 2 + (a.value - b.value) ** 2)


def canonical_color(name: str, table: Calibration = DEFAULT_CALIBRATION, deep: bool = False) -> ColorHSV:
    value = table.base_value + (table.deep_value_shift if deep else 0.0)
    return ColorHSV(float(table.hues_deg[name]), table.saturation, value)


@dataclass(frozen=True)
class BenedictBands:
    trace_gpl: float = 0.5
    green_hi_gpl: float = 2.5
    yellow_hi_gpl: float = 10.0

    def __post_init__(self):
        if not 0 < self.trace_gpl < self.green_hi_gpl < self.yellow_hi_gpl:
            raise ValueError("Benedict bands need 0 < trace < green_hi < yellow_hi")

    @classmethod
    def from_calibration(cls, table: Calibration) -> "BenedictBands":
        b = table.benedict_bands_gpl
        return cls(b["trace"], b["green_hi"], b["yellow_hi"])

    def band(self, sugar_gpl: float) -> Band:
        # lower edges are inclusive
        if sugar_gpl >= self.yellow_hi_gpl:
            return Band.BRICK_RED
        if sugar_gpl >= self.green_hi_gpl:
            return Band.YELLOW
        if sugar_gpl >= self.trace_gpl:
            return Band.GREEN
        return Band.BLUE


@dataclass
class Reagent:
    kind: ReagentKind
    volume_ml: float = DEFAULT_REAGENT_ML
    base_color: ColorHSV = field(default_factory=lambda: canonical_color("blue"))

    def __post_init__(self):
        if not self.volume_ml > 0:
            raise ValueError("reagent volume must be positive")


@dataclass
class ReactionVessel:
    reagent: Reagent
    soil_mass_g: float
    protein_conc_gpl: float
    sugar_conc_gpl: float
    current_color: ColorHSV
    elapsed_reaction_s: float = 0.0
    decant_s: float = 0.0
    turbidity: float = 1.0
    # sample mass outside the 2-3 g protocol window
    mass_warning: bool = False


def mix_sample(sample: SoilSample, reagent: Reagent) -> ReactionVessel:
    if not sample.mass_g > 0:
        raise AssayError("insufficient sample")
    litres = reagent.volume_ml / 1000.0
    lo, hi = SAMPLE_WINDOW_G
    return ReactionVessel(
        reagent=reagent,
        soil_mass_g=sample.mass_g,
        protein_conc_gpl=sample.mass_g * sample.protein_fraction / litres,
        sugar_conc_gpl=sample.mass_g * sample.sugar_fraction / litres,
        current_color=reagent.base_color,
        mass_warning=not lo <= sample.mass_g <= hi,
    )


def detectable_fraction(threshold_gpl: float, sample_mass_g: float = 3.0,
                        volume_ml: float = DEFAULT_REAGENT_ML) -> float:
    """Smallest soil mass fraction reaching ``threshold_gpl`` for the given mix."""
    return threshold_gpl * volume_ml / 1000.0 / sample_mass_g


def target_color(v: ReactionVessel, bands: BenedictBands, biuret_threshold_gpl: float,
                 table: Calibration = DEFAULT_CALIBRATION) -> ColorHSV:
    if v.reagent.kind is ReagentKind.BIURET:
        if v.protein_conc_gpl >= biuret_threshold_gpl:
            return canonical_color("purple", table, deep=True)
        return v.reagent.base_color
    return canonical_color(BAND_HUE_KEYS[bands.band(v.sugar_conc_gpl)], table)


def react_step(v: ReactionVessel, bands: BenedictBands, biuret_threshold_gpl: float, dt: float,
               table: Calibration = DEFAULT_CALIBRATION, target: ColorHSV | None = None) -> ReactionVessel:
    """Relax the color toward its target along the shorter hue arc.

    ``target`` may be passed in when the caller has already computed it; the
    concentrations never change after mixing, so neither does the target.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if target is None:
        target = target_color(v, bands, biuret_threshold_gpl, table)
    c = v.current_color
    if c != target:
        a = 1.0 - math.exp(-dt / table.tau_react_s)
        v.current_color = ColorHSV(
            wrap_hue(c.hue_deg + signed_hue_delta(c.hue_deg, target.hue_deg) * a),
            c.saturation + (target.saturation - c.saturation) * a,
            c.value + (target.value - c.value) * a,
        )
    v.elapsed_reaction_s += dt
    return v


def decant_step(v: ReactionVessel, dt: float, table: Calibration = DEFAULT_CALIBRATION) -> ReactionVessel:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    v.turbidity *= math.exp(-dt / table.tau_decant_s)
    v.decant_s += dt
    return v


def is_readable(v: ReactionVessel, table: Calibration = DEFAULT_CALIBRATION) -> bool:
    return v.decant_s >= table.readable_min_decant_s and v.turbidity < table.readable_max_turbidity


def true_color(v: ReactionVessel) -> ColorHSV:
    return v.current_color
