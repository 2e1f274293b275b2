"""Mission report: assay tallies, mass ledger and conversions to flat telemetry payloads."""

from __future__ import annotations

from dataclasses import dataclass, field

from .assay import Band, ColorHSV
from .perception import AssayResult, TestKind, Verdict

CHECKED_FIELDS = ("sites_visited", "protein_positive_count", "carb_positive_count",
                  "indeterminate_count")


def result_to_payload(r: AssayResult) -> dict:
    obs = r.observed
    return {
        "test_kind": r.test_kind.value,
        "verdict": r.verdict.value,
        "band": r.band.value if r.band is not None else None,
        "hue_distance_deg": r.hue_distance_deg,
        "site_id": r.site_id,
        "chamber_id": r.chamber_id,
        "observed_hue_deg": obs.hue_deg if obs else None,
        "observed_saturation": obs.saturation if obs else None,
        "observed_value": obs.value if obs else None,
        "note": r.note,
    }


def result_from_payload(p: dict) -> AssayResult:
    observed = None
    if p.get("observed_hue_deg") is not None:
        observed = ColorHSV(p["observed_hue_deg"], p["observed_saturation"], p["observed_value"])
    return AssayResult(
        test_kind=TestKind(p["test_kind"]),
        verdict=Verdict(p["verdict"]),
        band=Band(p["band"]) if p.get("band") is not None else None,
        hue_distance_deg=p.get("hue_distance_deg"),
        site_id=p["site_id"],
        chamber_id=p.get("chamber_id"),
        observed=observed,
        note=p.get("note", ""),
    )


@dataclass
class MissionReport:
    sites_visited: int = 0
    protein_positive_count: int = 0
    carb_positive_count: int = 0
    indeterminate_count: int = 0
    per_site_results: dict[int, list[AssayResult]] = field(default_factory=dict)
    total_sim_time_s: float = 0.0
    end_phase: str | None = None
    fault_reason: str | None = None
    chamber_reuse_count: int = 0
    insufficient_count: int = 0
    excavated_g: float = 0.0
    delivered_g: float = 0.0
    residual_g: float = 0.0
    lost_g: float = 0.0
    integrity_mismatches: list[str] = field(default_factory=list)

    @classmethod
    def from_results(cls, results, **extra) -> "MissionReport":
        report = cls(**extra)
        for r in results:
            report.add_result(r)
        return report

    def add_result(self, r: AssayResult) -> None:
        if r.site_id not in self.per_site_results:
            self.per_site_results[r.site_id] = []
            self.sites_visited += 1
        self.per_site_results[r.site_id].append(r)
        if r.verdict is Verdict.INDETERMINATE:
            self.indeterminate_count += 1
        elif r.verdict is Verdict.POSITIVE:
            if r.test_kind is TestKind.PROTEIN:
                self.protein_positive_count += 1
            else:
                self.carb_positive_count += 1

    @property
    def mass_balance_error_g(self) -> float:
        return self.excavated_g - (self.delivered_g + self.residual_g + self.lost_g)

    @property
    def complete(self) -> bool:
        return self.end_phase == "Complete"

    def summary_payload(self) -> dict:
        return {
            "sites_visited": self.sites_visited,
            "protein_positive_count": self.protein_positive_count,
            "carb_positive_count": self.carb_positive_count,
            "indeterminate_count": self.indeterminate_count,
            "total_sim_time_s": self.total_sim_time_s,
            "end_phase": self.end_phase,
            "fault_reason": self.fault_reason,
            "chamber_reuse_count": self.chamber_reuse_count,
            "insufficient_count": self.insufficient_count,
            "excavated_g": self.excavated_g,
            "delivered_g": self.delivered_g,
            "residual_g": self.residual_g,
            "lost_g": self.lost_g,
        }

    def __add__(self, other: "MissionReport") -> "MissionReport":
        merged = MissionReport()
        for part in (self, other):
            for site_results in part.per_site_results.values():
                for r in site_results:
                    merged.add_result(r)
        merged.total_sim_time_s = self.total_sim_time_s + other.total_sim_time_s
        merged.end_phase = other.end_phase
        merged.fault_reason = other.fault_reason or self.fault_reason
        for name in ("chamber_reuse_count", "insufficient_count", "excavated_g",
                     "delivered_g", "residual_g", "lost_g"):
            setattr(merged, name, getattr(self, name) + getattr(other, name))
        merged.integrity_mismatches = self.integrity_mismatches + other.integrity_mismatches
        return merged

    def format_text(self) -> str:
        lines = [
            f"end phase:            {self.end_phase}"
            + (f" ({self.fault_reason})" if self.fault_reason else ""),
            f"sites visited:        {self.sites_visited}",
            f"protein positives:    {self.protein_positive_count}",
            f"carbohydrate positives: {self.carb_positive_count}",
            f"indeterminate:        {self.indeterminate_count}",
            f"simulated time:       {self.total_sim_time_s:.2f} s",
            f"chamber reuses:       {self.chamber_reuse_count}",
        ]
        for site_id in sorted(self.per_site_results):
            cells = []
            for r in self.per_site_results[site_id]:
                band = f"/{r.band.value}" if r.band is not None else ""
                cells.append(f"{r.test_kind.value}={r.verdict.value}{band}")
            lines.append(f"  site {site_id:2d}: " + ", ".join(cells))
        if self.integrity_mismatches:
            lines.append("INTEGRITY MISMATCH:")
            lines.extend(f"  {m}" for m in self.integrity_mismatches)
        else:
            lines.append("integrity: ok")
        return "\n".join(lines)
