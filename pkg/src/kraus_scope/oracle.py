"""Brute-force four-dimensional evaluation of the upconversion overlap.

The integrand is evaluated point by point from :func:`spuc_kernel` and
:func:`lg_angular_spectrum`; nothing from the generating-function closed
form is reused. To place the nodes, the Gaussian envelope of the integrand
is measured by probing the kernel and the ``ell = 0`` spectra at a few
points, which fixes a whitening transform per Cartesian axis. After
whitening the integrand is exp(-|u|^2) times a bounded factor and the
tensor-product rule from :mod:`kraus_scope.quadrature` applies.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .modes import AzimuthalMode, lg_angular_spectrum, lg_norm
from .nonlinear import CrystalConfig, spuc_kernel
from .quadrature import QuadratureSpec, gaussian_rule

Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]


class NonConvergenceError(RuntimeError):
    def __init__(self, estimates: dict[int, complex], scale: float, tolerance: float):
        self.estimates = estimates
        self.scale = scale
        self.tolerance = tolerance
        parts = ", ".join(f"order {k}: {v:.15g}" for k, v in estimates.items())
        super().__init__(f"overlap quadrature did not converge to {tolerance:g} (relative to {scale:.3g}); {parts}")


@dataclass(frozen=True)
class SweepRow:
    order: int
    value: complex
    delta: float | None


def _envelope_log(kernel: Kernel, w1: float, w2: float, axis: int):
    """-log of the integrand envelope restricted to one Cartesian axis."""
    ref1 = AzimuthalMode(0, w1)
    ref2 = AzimuthalMode(0, w2)
    s0_1 = abs(lg_angular_spectrum(ref1, (0.0, 0.0)))
    s0_2 = abs(lg_angular_spectrum(ref2, (0.0, 0.0)))
    k0 = abs(kernel(np.zeros(2), np.zeros(2)))

    def q(p: float, r: float) -> float:
        a1 = np.zeros(2)
        a2 = np.zeros(2)
        a1[axis] = p
        a2[axis] = r
        env = (
            abs(kernel(a1, a2)) / k0
            * abs(lg_angular_spectrum(ref1, a1)) / s0_1
            * abs(lg_angular_spectrum(ref2, a2)) / s0_2
        )
        return -math.log(env)

    return q


def _quadratic_form(q, s0: float) -> np.ndarray:
    scales = []
    for e in ((1.0, 0.0), (0.0, 1.0)):
        s = s0
        for _ in range(4):
            v = q(s * e[0], s * e[1])
            s = s / math.sqrt(v)
        scales.append(s)
    s1, s2 = scales
    a11 = q(s1, 0.0) / s1**2
    a22 = q(0.0, s2) / s2**2
    a12 = (q(s1, s2) - a11 * s1**2 - a22 * s2**2) / (2 * s1 * s2)
    return np.array([[a11, a12], [a12, a22]])


def _whitening(form: np.ndarray) -> tuple[np.ndarray, float]:
    chol = np.linalg.cholesky(form)
    # v = inv(chol.T) u  gives  v.T form v = |u|^2
    return np.linalg.inv(chol.T), float(np.prod(np.diag(chol)))


def _integrate(
    kernel: Kernel,
    mode_out: AzimuthalMode,
    mode_mea: AzimuthalMode,
    whiten_x: np.ndarray,
    whiten_y: np.ndarray,
    jac: float,
    nodes: np.ndarray,
    weights: np.ndarray,
) -> tuple[complex, float]:
    wt = weights * np.exp(nodes**2)
    u2, u3, u4 = np.meshgrid(nodes, nodes, nodes, indexing="ij")
    w234 = np.einsum("i,j,k->ijk", wt, wt, wt)
    ay1 = whiten_y[0, 0] * u3 + whiten_y[0, 1] * u4
    ay2 = whiten_y[1, 0] * u3 + whiten_y[1, 1] * u4
    total = 0j
    mass = 0.0
    for u1, w1 in zip(nodes, wt):
        ax1 = whiten_x[0, 0] * u1 + whiten_x[0, 1] * u2
        ax2 = whiten_x[1, 0] * u1 + whiten_x[1, 1] * u2
        a1 = np.stack([ax1, ay1], axis=-1)
        a2 = np.stack([ax2, ay2], axis=-1)
        f = kernel(a1, a2) * lg_angular_spectrum(mode_out, a1) * lg_angular_spectrum(mode_mea, a2)
        total += w1 * np.sum(w234 * f)
        mass += w1 * np.sum(w234 * np.abs(f))
    return complex(total / jac), float(mass / jac)


def _setup(cfg: CrystalConfig | None, mode_out: AzimuthalMode, mode_mea: AzimuthalMode, kernel: Kernel | None):
    if kernel is None:
        if cfg is None:
            raise ValueError("either a crystal configuration or an explicit kernel is required")

        def kernel(a1, a2, _cfg=cfg):
            return spuc_kernel(_cfg, a1, a2)

    s0 = 1.0 / (math.pi * max(mode_out.w, mode_mea.w))
    wx, jx = _whitening(_quadratic_form(_envelope_log(kernel, mode_out.w, mode_mea.w, 0), s0))
    wy, jy = _whitening(_quadratic_form(_envelope_log(kernel, mode_out.w, mode_mea.w, 1), s0))
    return kernel, wx, wy, jx * jy


def quadrature_overlap(
    cfg: CrystalConfig | None,
    mode_out: AzimuthalMode,
    mode_mea: AzimuthalMode,
    quad: QuadratureSpec | None = None,
    *,
    kernel: Kernel | None = None,
    check: bool = True,
) -> complex:
    """Overlap amplitude by 4-D quadrature of kernel x spectrum_out x spectrum_mea.

    With ``check`` the integral is repeated at half the order; a difference
    larger than ``quad.tolerance`` times the integrand's absolute mass raises
    :class:`NonConvergenceError`.
    """
    quad = quad or QuadratureSpec()
    kernel, wx, wy, jac = _setup(cfg, mode_out, mode_mea, kernel)
    nodes, weights = quad.rule()
    value, mass = _integrate(kernel, mode_out, mode_mea, wx, wy, jac, nodes, weights)
    if check:
        low = max(quad.order // 2, 8)
        n_lo, w_lo = gaussian_rule(quad.scheme, low, quad.extent)
        coarse, _ = _integrate(kernel, mode_out, mode_mea, wx, wy, jac, n_lo, w_lo)
        if abs(value - coarse) > quad.tolerance * mass:
            raise NonConvergenceError({low: coarse, quad.order: value}, mass, quad.tolerance)
    return value


def convergence_sweep(
    cfg: CrystalConfig | None,
    modes: tuple[AzimuthalMode, AzimuthalMode],
    orders: Sequence[int],
    quad: QuadratureSpec | None = None,
    *,
    kernel: Kernel | None = None,
) -> list[SweepRow]:
    if len(orders) < 2:
        raise ValueError("a convergence sweep needs at least two orders")
    quad = quad or QuadratureSpec()
    mode_out, mode_mea = modes
    kernel, wx, wy, jac = _setup(cfg, mode_out, mode_mea, kernel)
    rows: list[SweepRow] = []
    prev = None
    for order in orders:
        spec = quad.with_order(order)
        nodes, weights = spec.rule()
        value, _ = _integrate(kernel, mode_out, mode_mea, wx, wy, jac, nodes, weights)
        rows.append(SweepRow(int(order), value, None if prev is None else abs(value - prev)))
        prev = value
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["order", "re", "im", "delta"])
        for r in rows:
            out.writerow([r.order, repr(r.value.real), repr(r.value.imag), "" if r.delta is None else repr(r.delta)])


def lambda_from_overlaps(m_ell: complex, m_zero: complex, ell: int, w1: float, w2: float) -> float:
    """Mode weight recovered from a pair of overlaps M(ell, -ell) and M(0, 0).

    Divides out the normalization constants of both modes and the |ell|!
    that turns the |ell|-fold mu-derivatives into the exponential-series
    coefficient, leaving the pure geometric weight.
    """
    k = abs(int(ell))
    norms = lg_norm(k, w1) * lg_norm(k, w2) / (lg_norm(0, w1) * lg_norm(0, w2))
    return float(np.real(m_ell / m_zero) / (norms * math.factorial(k)))
