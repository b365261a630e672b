"""Closed-form electrostatic and resistive references."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .constants import EPS0


@dataclass(frozen=True)
class OracleResult:
    name: str
    value: float
    formula: str

    def __float__(self) -> float:
        return self.value

    def rel_error(self, computed: float) -> float:
        return abs(computed - self.value) / abs(self.value)


def _positive(**kw) -> None:
    for k, v in kw.items():
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"{k} must be positive and finite, got {v!r}")


def sphere_capacitance(radius: float) -> OracleResult:
    _positive(radius=radius)
    return OracleResult("sphere_capacitance", 4 * math.pi * EPS0 * radius, "4*pi*eps0*R")


def concentric_capacitance(a: float, b: float) -> OracleResult:
    """Capacitance between concentric spheres of radii a < b."""
    _positive(a=a, b=b)
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    return OracleResult("concentric_capacitance", 4 * math.pi * EPS0 * a * b / (b - a), "4*pi*eps0*a*b/(b-a)")


def pouillet_resistance(length: float, sigma: float, area: float) -> OracleResult:
    _positive(length=length, sigma=sigma, area=area)
    return OracleResult("pouillet_resistance", length / (sigma * area), "l/(sigma*A)")


def parallel_plate_capacitance(area: float, spacing: float) -> OracleResult:
    """Infinite-plate value, fringing neglected."""
    _positive(area=area, spacing=spacing)
    return OracleResult("parallel_plate_capacitance", EPS0 * area / spacing, "eps0*A/d")
