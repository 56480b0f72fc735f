"""Laguerre-Gauss modes with zero radial index.

Angular spectra come from the generating function

    G(a; mu, T, w) = exp[i pi (a_x + i T a_y) w mu - pi^2 w^2 |a|^2]

whose |ell|-th derivative in ``mu`` at ``mu = 0`` is taken in closed form,
(i pi w (a_x + i T a_y))**|ell| * exp(-pi^2 w^2 |a|^2), and then scaled by
:func:`lg_norm`. Spatial frequencies ``a`` are in cycles per length unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import QuadratureSpec


@dataclass(frozen=True)
class AzimuthalMode:
    """LG mode with p = 0: azimuthal index ``ell`` and waist ``w``."""

    ell: int
    w: float

    def __post_init__(self):
        if int(self.ell) != self.ell:
            raise ValueError(f"azimuthal index must be an integer, got {self.ell!r}")
        object.__setattr__(self, "ell", int(self.ell))
        if not self.w > 0:
            raise ValueError(f"beam waist must be positive, got {self.w!r}")

    @property
    def sign(self) -> int:
        return int(np.sign(self.ell))

    @property
    def order(self) -> int:
        return abs(self.ell)


@dataclass(frozen=True)
class InnerProduct:
    value: complex
    mismatched_waists: bool = False


def lg_norm(ell: int, w: float) -> float:
    """Normalization constant ``w * sqrt(2 pi 2**|ell| / |ell|!)``."""
    if not w > 0:
        raise ValueError(f"beam waist must be positive, got {w!r}")
    k = abs(int(ell))
    return w * math.sqrt(2.0 * math.pi * 2.0**k / math.factorial(k))


def _split(a):
    a = np.asarray(a, dtype=float)
    if a.shape[-1] != 2:
        raise ValueError(f"spatial frequency must have a trailing axis of length 2, got shape {a.shape}")
    return a[..., 0], a[..., 1]


def lg_generating(a, mu, sign: int, w: float):
    """Generating function without the normalization constant."""
    ax, ay = _split(a)
    return np.exp(1j * np.pi * (ax + 1j * sign * ay) * w * mu - np.pi**2 * w**2 * (ax**2 + ay**2))


def lg_angular_spectrum(mode: AzimuthalMode, a):
    """Normalized angular spectrum of ``mode`` at spatial frequency ``a``.

    ``a`` may be a single 2-vector or any array with a trailing axis of 2.
    """
    ax, ay = _split(a)
    k = mode.order
    value = lg_norm(k, mode.w) * np.exp(-np.pi**2 * mode.w**2 * (ax**2 + ay**2))
    if k:
        value = value * (1j * np.pi * mode.w * (ax + 1j * mode.sign * ay)) ** k
    else:
        value = value.astype(complex)
    return value[()] if np.ndim(value) == 0 else value


def lg_real_space(mode: AzimuthalMode, x, y):
    """Field of ``mode`` in the transverse plane.

    Inverse Fourier transform of :func:`lg_angular_spectrum` with kernel
    ``exp(+2 pi i a.r)``; unit power in real space.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = mode.w
    k = mode.order
    field = lg_norm(k, w) / (np.pi * w**2) * np.exp(-(x**2 + y**2) / w**2)
    if k:
        field = field * ((x + 1j * mode.sign * y) * (-1.0 / w)) ** k
    else:
        field = field.astype(complex)
    return field


def mode_inner_product(m1: AzimuthalMode, m2: AzimuthalMode, quad: QuadratureSpec | None = None) -> InnerProduct:
    """Spatial-frequency overlap ``integral conj(spectrum1) * spectrum2 d^2a``.

    A tensor-product rule is scaled to the joint envelope
    exp(-pi^2 (w1^2 + w2^2) |a|^2). Waists that differ give a result that is
    not an orthonormality statement, so they are flagged instead of rejected.
    """
    quad = quad or QuadratureSpec(order=64)
    nodes, weights = quad.rule()
    scale = np.pi * math.sqrt(m1.w**2 + m2.w**2)
    ux, uy = np.meshgrid(nodes, nodes, indexing="ij")
    a = np.stack([ux, uy], axis=-1) / scale
    integrand = np.conj(lg_angular_spectrum(m1, a)) * lg_angular_spectrum(m2, a)
    g = integrand * np.exp(ux**2 + uy**2)
    value = np.einsum("i,j,ij->", weights, weights, g) / scale**2
    return InnerProduct(complex(value), not math.isclose(m1.w, m2.w, rel_tol=1e-12))
