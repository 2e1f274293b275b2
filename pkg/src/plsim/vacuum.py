"""Centrifugal suction as a forced vortex, soil transport through the filter, and settling.

The impeller spins the air as a solid body, so static pressure rises from the
eye outward as 0.5 * rho * omega**2 * r**2. The low-pressure eye is what pulls
soil-laden air up the hose.
"""

from __future__ import annotations

from dataclasses import dataclass

from .world import SoilSite

STOP_OMEGA_RADPS = 1.0


@dataclass(frozen=True)
class ImpellerModel:
    outer_radius_m: float = 0.04
    air_density_kgpm3: float = 1.2
    min_suction_delta_p_pa: float = 300.0

    def __post_init__(self):
        if not self.outer_radius_m > 0 or not self.air_density_kgpm3 > 0:
            raise ValueError("impeller radius and air density must be positive")


def impeller_delta_p(r: float, omega: float, model: ImpellerModel) -> float:
    """Pressure rise (Pa) at radius ``r`` above the pressure on the axis."""
    if not 0.0 <= r <= model.outer_radius_m:
        raise ValueError(f"radius {r} outside [0, {model.outer_radius_m}]")
    return 0.5 * model.air_density_kgpm3 * omega * omega * r * r


def suction_active(omega: float, model: ImpellerModel) -> bool:
    if omega < 0:
        raise ValueError("impeller speed must be non-negative")
    return impeller_delta_p(model.outer_radius_m, omega, model) >= model.min_suction_delta_p_pa


@dataclass
class VacuumContainer:
    filter_efficiency: float = 0.99
    airborne_mass_g: float = 0.0
    collected_mass_g: float = 0.0
    lost_mass_g: float = 0.0
    clogged: bool = False

    def __post_init__(self):
        if not 0.0 <= self.filter_efficiency <= 1.0:
            raise ValueError("filter efficiency must lie in [0, 1]")


def transport_step(container: VacuumContainer, site: SoilSite, active: bool,
                   q_gps: float, dt: float) -> VacuumContainer:
    """Draw loosened soil from the site pile through the filter for ``dt`` seconds."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if q_gps < 0:
        raise ValueError("transport rate must be non-negative")
    if not active or container.clogged:
        return container
    moved = min(site.loosened_pile_g, q_gps * dt)
    if moved <= 0.0:
        return container
    site.loosened_pile_g -= moved
    kept = container.filter_efficiency * moved
    container.collected_mass_g += kept
    # loss by difference so kept + lost == moved exactly
    container.lost_mass_g += moved - kept
    return container


def settle_to_bin(container: VacuumContainer, vacuum_omega: float,
                  stop_omega: float = STOP_OMEGA_RADPS) -> float:
    """Release the collected soil into the bin channel once the impeller has stopped."""
    if abs(vacuum_omega) >= stop_omega:
        return 0.0
    delivered = container.collected_mass_g
    container.collected_mass_g = 0.0
    return delivered
