"""Upconversion (sum-frequency) physics for the three-way overlap.

Beam 1 is the output state after the channel, beam 2 is the measurement
state and beam 3 is the upconverted photon coupled into a single-mode fiber
of mode waist ``w_c``. All lengths share one unit; spatial frequencies are in
cycles per that unit.

The overlap amplitude of an output mode with a measurement mode is

    M = integral K(a1, a2) psi_out(a1) psi_mea(a2) d^2a1 d^2a2

with the Gaussian kernel :func:`spuc_kernel`. The closed forms below are the
thin-crystal (L -> 0) evaluation of that integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modes import AzimuthalMode, lg_norm


@dataclass(frozen=True)
class CrystalConfig:
    lambda1: float
    lambda2: float
    n1: float
    n2: float
    L: float
    w_c: float

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "w_c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not self.L >= 0:
            raise ValueError(f"crystal length must be non-negative, got {self.L!r}")
        for name in ("n1", "n2"):
            if not getattr(self, name) >= 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)!r}")

    @property
    def n3(self) -> float:
        return upconverted_index(self)

    @property
    def lambda3(self) -> float:
        return upconverted_wavelength(self)

    @property
    def beta(self) -> float:
        return thin_crystal_beta(self)


@dataclass(frozen=True)
class OverlapResult:
    value: complex

    @property
    def probability(self) -> float:
        return abs(self.value) ** 2


def upconverted_wavelength(cfg: CrystalConfig) -> float:
    """Energy conservation: 1/lambda3 = 1/lambda1 + 1/lambda2."""
    return cfg.lambda1 * cfg.lambda2 / (cfg.lambda1 + cfg.lambda2)


def upconverted_index(cfg: CrystalConfig) -> float:
    """Index of the upconverted beam under collinear critical phase matching."""
    return (cfg.n1 * cfg.lambda2 + cfg.n2 * cfg.lambda1) / (cfg.lambda1 + cfg.lambda2)


def thin_crystal_beta(cfg: CrystalConfig) -> float:
    """Crystal length over the coupled mode's Rayleigh-like length, L lambda3 / (pi w_c^2)."""
    return cfg.L * upconverted_wavelength(cfg) / (math.pi * cfg.w_c**2)


def _vec(a):
    a = np.asarray(a, dtype=float)
    if a.shape[-1] != 2:
        raise ValueError(f"spatial frequency must have a trailing axis of length 2, got shape {a.shape}")
    return a


def _sq(v):
    return np.sum(v * v, axis=-1)


def _scalar(x):
    return x[()] if np.ndim(x) == 0 else x


def delta_kz_paraxial(cfg: CrystalConfig, a1, a2):
    """Paraxial longitudinal mismatch pi n1 n2 |lambda1 a1 - lambda2 a2|^2 / (n1 lambda2 + n2 lambda1)."""
    d = cfg.lambda1 * _vec(a1) - cfg.lambda2 * _vec(a2)
    return _scalar(math.pi * cfg.n1 * cfg.n2 * _sq(d) / (cfg.n1 * cfg.lambda2 + cfg.n2 * cfg.lambda1))


def transverse_matching(cfg: CrystalConfig, a1, a2):
    """Transverse spatial frequency of the upconverted beam."""
    s = cfg.n1 * _vec(a1) + cfg.n2 * _vec(a2)
    return s * (cfg.lambda1 + cfg.lambda2) / (cfg.lambda1 * cfg.n2 + cfg.lambda2 * cfg.n1)


def _kz_offset(lam, a_sq):
    # k_z - 2 pi / lam written without cancellation
    root = np.sqrt(1.0 / lam**2 - a_sq)
    return -2.0 * math.pi * a_sq / (root + 1.0 / lam)


def delta_kz_exact(cfg: CrystalConfig, a1, a2):
    """Nonparaxial mismatch n1 k1z + n2 k2z - n3 k3z with k_mz = 2 pi sqrt(1/lambda_m^2 - |a_m|^2).

    The sign is flipped so that it tends to :func:`delta_kz_paraxial` for
    small spatial frequencies. Each k_mz is split into 2 pi / lambda_m plus
    a small offset; the on-axis part is kept (it vanishes only up to
    rounding) so nothing beyond the printed definition is assumed.
    """
    a1 = _vec(a1)
    a2 = _vec(a2)
    a3 = transverse_matching(cfg, a1, a2)
    n3, lam3 = cfg.n3, cfg.lambda3
    on_axis = 2.0 * math.pi * (cfg.n1 / cfg.lambda1 + cfg.n2 / cfg.lambda2 - n3 / lam3)
    offsets = (
        cfg.n1 * _kz_offset(cfg.lambda1, _sq(a1))
        + cfg.n2 * _kz_offset(cfg.lambda2, _sq(a2))
        - n3 * _kz_offset(lam3, _sq(a3))
    )
    return _scalar(-(on_axis + offsets))


def spuc_kernel(cfg: CrystalConfig, a1, a2):
    """Upconversion kernel with the overall constant set to 1.

    Product of the fiber-mode Gaussian in the upconverted spatial frequency
    and the Gaussian stand-in for the phase-matching sinc.
    """
    a1 = _vec(a1)
    a2 = _vec(a2)
    n3 = cfg.n3
    fiber = math.pi**2 * cfg.w_c**2 / n3**2 * _sq(cfg.n1 * a1 + cfg.n2 * a2)
    phase = 0.5 * cfg.L * delta_kz_paraxial(cfg, a1, a2)
    return _scalar(np.exp(-fiber - phase))


def w_factor(cfg: CrystalConfig, w1: float, w2: float) -> float:
    """W = n1^2 w2^2 w_c^2 + n2^2 w1^2 w_c^2 + n3^2 w1^2 w2^2."""
    wc2 = cfg.w_c**2
    return cfg.n1**2 * w2**2 * wc2 + cfg.n2**2 * w1**2 * wc2 + cfg.n3**2 * w1**2 * w2**2


def _prefactor(cfg: CrystalConfig, w1: float, w2: float, order: int) -> float:
    # value of the mu = 0 Gaussian integral
    W = w_factor(cfg, w1, w2)
    return lg_norm(order, w1) * lg_norm(order, w2) * cfg.n3**2 / (math.pi**2 * W)


def _coupling(cfg: CrystalConfig, w1: float, w2: float, T1: int, T2: int) -> float:
    W = w_factor(cfg, w1, w2)
    return (1 - T1 * T2) * cfg.n1 * cfg.n2 * w1 * w2 * cfg.w_c**2 / (2.0 * W)


def overlap_generating_function(cfg: CrystalConfig, w1: float, w2: float, T1: int, T2: int, mu1, mu2, order: int = 0):
    """Thin-crystal generating function of the overlap in (mu1, mu2).

    Normalization constants are taken at ``|ell| = order``.
    """
    if not (w1 > 0 and w2 > 0):
        raise ValueError("beam waists must be positive")
    return _prefactor(cfg, w1, w2, order) * np.exp(np.multiply(mu1, mu2) * _coupling(cfg, w1, w2, T1, T2))


def overlap_generating(cfg: CrystalConfig, w1: float, w2: float, T1: int, T2: int, order: int) -> float:
    """Taylor coefficient of (mu1 mu2)**order in the thin-crystal generating function."""
    if not (w1 > 0 and w2 > 0):
        raise ValueError("beam waists must be positive")
    if order < 0:
        raise ValueError(f"order must be non-negative, got {order}")
    c = _coupling(cfg, w1, w2, T1, T2)
    return _prefactor(cfg, w1, w2, order) * c**order / math.factorial(order)


def overlap_closed_form(cfg: CrystalConfig, mode_out: AzimuthalMode, mode_mea: AzimuthalMode) -> OverlapResult:
    """Thin-crystal overlap of two LG modes.

    Zero unless the azimuthal indices are equal in magnitude and opposite in
    sign. Otherwise the |ell|-th derivative in each of mu1 and mu2, i.e.
    (|ell|!)^2 times the Taylor coefficient.
    """
    if mode_out.ell != -mode_mea.ell:
        return OverlapResult(0j)
    k = mode_out.order
    coeff = overlap_generating(cfg, mode_out.w, mode_mea.w, mode_out.sign, mode_mea.sign, k)
    return OverlapResult(complex(math.factorial(k) ** 2 * coeff))


def lambda_coefficient(cfg: CrystalConfig, w1: float, w2: float, ell: int) -> float:
    """Mode-weight function (n1 n2 w1 w2 w_c^2 / W)**|ell|, equal to 1 at ell = 0."""
    if not (w1 > 0 and w2 > 0):
        raise ValueError("beam waists must be positive")
    ratio = cfg.n1 * cfg.n2 * w1 * w2 * cfg.w_c**2 / w_factor(cfg, w1, w2)
    return ratio ** abs(int(ell))
