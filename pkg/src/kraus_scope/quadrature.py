"""Quadrature rules for Gaussian-weighted integrands.

Every rule returned here integrates against the weight ``exp(-u**2)``:

    integral exp(-u**2) g(u) du  ~=  sum_i weights[i] * g(nodes[i])

so callers can swap schemes without touching the integrand.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SCHEMES = ("gauss-hermite", "cartesian-grid")


@dataclass(frozen=True)
class QuadratureSpec:
    """Per-axis quadrature settings.

    ``extent`` is the half-width of the Cartesian grid in units of the
    whitened Gaussian width and is ignored by Gauss-Hermite.
    """

    scheme: str = "gauss-hermite"
    order: int = 32
    extent: float = 8.0
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}; expected one of {SCHEMES}")
        if int(self.order) != self.order or self.order < 16:
            raise ValueError(f"quadrature order must be an integer >= 16, got {self.order}")
        if self.scheme == "cartesian-grid" and self.extent < 4:
            raise ValueError(f"cartesian extent must be >= 4, got {self.extent}")
        if not self.tolerance > 0:
            raise ValueError("quadrature tolerance must be positive")

    def with_order(self, order: int) -> "QuadratureSpec":
        return QuadratureSpec(self.scheme, order, self.extent, self.tolerance)

    def rule(self) -> tuple[np.ndarray, np.ndarray]:
        return gaussian_rule(self.scheme, self.order, self.extent)


@lru_cache(maxsize=32)
def _gauss_hermite(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


@lru_cache(maxsize=32)
def _cartesian(order: int, extent: float) -> tuple[np.ndarray, np.ndarray]:
    nodes = np.linspace(-extent, extent, order)
    h = nodes[1] - nodes[0]
    weights = h * np.exp(-nodes**2)
    weights[[0, -1]] *= 0.5
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def gaussian_rule(scheme: str, order: int, extent: float = 8.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for the weight function exp(-u**2) on the real line."""
    if scheme == "gauss-hermite":
        return _gauss_hermite(int(order))
    if scheme == "cartesian-grid":
        return _cartesian(int(order), float(extent))
    raise ValueError(f"unknown quadrature scheme {scheme!r}")
