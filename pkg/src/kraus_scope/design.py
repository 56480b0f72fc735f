"""Feasibility numbers for preparing the probe with a grating and an SLM."""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact
MIN_PIXELS_PER_BEAM = 100


@dataclass(frozen=True)
class CombSpec:
    nominal_wavelength: float  # m
    repetition_frequency: float  # Hz
    component_spacing_multiple: int = 2

    def __post_init__(self):
        if not self.nominal_wavelength > 0:
            raise ValueError("nominal wavelength must be positive")
        if not self.repetition_frequency > 0:
            raise ValueError("repetition frequency must be positive")
        if int(self.component_spacing_multiple) != self.component_spacing_multiple or self.component_spacing_multiple < 1:
            raise ValueError("component spacing multiple must be an integer >= 1")

    @property
    def line_spacing(self) -> float:
        """Wavelength spacing of adjacent comb lines."""
        return self.nominal_wavelength**2 * self.repetition_frequency / SPEED_OF_LIGHT

    @property
    def component_spacing(self) -> float:
        """Frequency spacing of the comb lines selected for the probe."""
        return self.component_spacing_multiple * self.repetition_frequency


def grating_line_count(comb: CombSpec) -> float:
    """Illuminated grating lines needed to resolve adjacent comb lines, lambda / delta lambda."""
    return comb.nominal_wavelength / comb.line_spacing


def beam_size_for_grating(lines: float, lines_per_mm: float) -> float:
    """Beam width in mm that illuminates ``lines`` grating lines."""
    if not lines_per_mm > 0:
        raise ValueError("grating line density must be positive")
    return lines / lines_per_mm


def slm_pixel_budget(slm_width_pixels: int, d: int) -> int:
    """Pixels per beam when d beams share the SLM width with a blocked gap between neighbours."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if slm_width_pixels < 0:
        raise ValueError("SLM width must be non-negative")
    return int(slm_width_pixels) // (2 * d - 1)


def feasibility_report(comb: CombSpec, lines_per_mm: float, slm_width_pixels: int, d: int) -> dict:
    lines = grating_line_count(comb)
    pixels = slm_pixel_budget(slm_width_pixels, d)
    report = {
        "nominal_wavelength_m": comb.nominal_wavelength,
        "repetition_frequency_hz": comb.repetition_frequency,
        "component_spacing_hz": comb.component_spacing,
        "grating_line_count": lines,
        "grating_lines_per_mm": lines_per_mm,
        "beam_size_mm": beam_size_for_grating(lines, lines_per_mm),
        "dimension": d,
        "slm_width_pixels": int(slm_width_pixels),
        "pixels_per_beam": pixels,
        "warnings": [],
    }
    if pixels < MIN_PIXELS_PER_BEAM:
        report["warnings"].append(
            f"only {pixels} px per beam (< {MIN_PIXELS_PER_BEAM}); consider multiple SLMs"
        )
    if not math.isfinite(lines):
        report["warnings"].append("grating line count is not finite")
    return report
