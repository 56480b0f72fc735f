"""Turbulence channel: phase screens and their Kraus matrices over an OAM window."""

from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .modes import AzimuthalMode, lg_real_space

KOLMOGOROV_PSD = 0.023
DEFAULT_EPS_QUAD = 1e-6
_SCREEN_MAGIC = b"KSPS"


@dataclass(frozen=True, eq=False)
class PhaseScreen:
    grid: np.ndarray
    dx: float
    r0: float | None = None
    seed: int | None = None

    def __post_init__(self):
        grid = np.asarray(self.grid)
        if np.iscomplexobj(grid):
            raise ValueError("phase screen values must be real")
        grid = np.array(grid, dtype=float)
        if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
            raise ValueError(f"phase screen must be square, got shape {grid.shape}")
        if grid.shape[0] < 64:
            raise ValueError(f"phase screen side must be >= 64 samples, got {grid.shape[0]}")
        if not self.dx > 0:
            raise ValueError(f"grid spacing must be positive, got {self.dx!r}")
        grid.flags.writeable = False
        object.__setattr__(self, "grid", grid)

    @property
    def side(self) -> int:
        return self.grid.shape[0]

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        return grid_coordinates(self.side, self.dx)

    def shifted(self, phase: float) -> "PhaseScreen":
        return PhaseScreen(self.grid + phase, self.dx, self.r0, self.seed)


@dataclass(frozen=True, eq=False)
class KrausMatrix:
    """Kraus operator block: rows are output modes, columns input modes, both labelled by ``basis``."""

    entries: np.ndarray
    basis: tuple[int, ...]
    waist: float | None = None
    quad_error: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        basis = tuple(int(b) for b in self.basis)
        if entries.ndim != 2 or entries.shape != (len(basis), len(basis)):
            raise ValueError(f"entries of shape {entries.shape} do not match a basis of size {len(basis)}")
        if len(set(basis)) != len(basis):
            raise ValueError(f"basis labels must be distinct, got {basis}")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "basis", basis)

    @property
    def d(self) -> int:
        return len(self.basis)

    def column_power(self) -> np.ndarray:
        return np.sum(np.abs(self.entries) ** 2, axis=0)

    def to_json(self) -> dict:
        out = {
            "basis": list(self.basis),
            "waist": self.waist,
            "quad_error": self.quad_error,
            "entries": [[[float(z.real), float(z.imag)] for z in row] for row in self.entries],
        }
        if self.meta:
            out["meta"] = self.meta
        return out

    @classmethod
    def from_json(cls, data: dict) -> "KrausMatrix":
        entries = np.array([[complex(re, im) for re, im in row] for row in data["entries"]])
        return cls(entries, tuple(data["basis"]), data.get("waist"), data.get("quad_error", 0.0), data.get("meta", {}))


def default_basis(d: int) -> list[int]:
    """d consecutive azimuthal indices centred on zero, e.g. [-1, 0, 1] for d = 3."""
    start = -(d // 2)
    return list(range(start, start + d))


def grid_coordinates(side: int, dx: float) -> tuple[np.ndarray, np.ndarray]:
    """Sample positions symmetric about the optical axis (no sample on the axis for even sides)."""
    x = (np.arange(side) - (side - 1) / 2.0) * dx
    return np.meshgrid(x, x, indexing="ij")


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def _kolmogorov_psd(f, r0):
    return KOLMOGOROV_PSD * r0 ** (-5.0 / 3.0) * f ** (-11.0 / 3.0)


def _cell_weight(fx, fy, df, r0, sub=16):
    """PSD assigned to the frequency cell centred on (fx, fy).

    The cell average of PSD * f^2, divided by the centre f^2, so that each
    discrete component carries the small-lag structure-function weight of the
    whole cell. Point sampling badly under-weights cells next to the origin,
    where f^(-11/3) varies fastest.
    """
    o = (np.arange(sub) + 0.5) / sub - 0.5
    ox, oy = np.meshgrid(o, o, indexing="ij")
    f = np.hypot(fx[..., None, None] + ox * df, fy[..., None, None] + oy * df)
    centre2 = fx**2 + fy**2
    return (_kolmogorov_psd(f, r0) * f**2).mean(axis=(-1, -2)) / centre2


def kolmogorov_screen(
    r0: float,
    side: int,
    dx: float,
    seed: int,
    *,
    subharmonics: int = 5,
    near_cells: int = 4,
    alias_folds: int = 2,
) -> PhaseScreen:
    """Random Kolmogorov phase screen with structure function ~ 6.88 (r / r0)^(5/3).

    FFT synthesis on the grid, plus ``subharmonics`` levels of 3x3 sub-grid
    components below the grid's lowest frequency. Spectral power beyond the
    Nyquist frequency is folded back (``alias_folds`` images per axis) and the
    ``near_cells`` rings around the origin use cell-averaged weights.
    """
    if not r0 > 0:
        raise ValueError(f"Fried parameter must be positive, got {r0!r}")
    if int(side) != side or not _is_power_of_two(int(side)) or side < 64:
        raise ValueError(f"screen side must be a power of two >= 64, got {side!r}")
    if not dx > 0:
        raise ValueError(f"grid spacing must be positive, got {dx!r}")
    side = int(side)
    rng = np.random.default_rng(seed)
    extent = side * dx
    df = 1.0 / extent

    fx = np.fft.fftfreq(side, dx)
    FX, FY = np.meshgrid(fx, fx, indexing="ij")
    psd = np.zeros((side, side))
    for kx in range(-alias_folds, alias_folds + 1):
        for ky in range(-alias_folds, alias_folds + 1):
            f = np.hypot(FX + kx / dx, FY + ky / dx)
            if kx == 0 and ky == 0:
                f[0, 0] = 1.0
            psd += _kolmogorov_psd(f, r0)
    k = np.fft.fftfreq(side, 1.0 / side)
    KX, KY = np.meshgrid(k, k, indexing="ij")
    near = (np.abs(KX) <= near_cells) & (np.abs(KY) <= near_cells) & ((KX != 0) | (KY != 0))
    psd[near] += _cell_weight(FX[near], FY[near], df, r0) - _kolmogorov_psd(np.hypot(FX[near], FY[near]), r0)
    psd[0, 0] = 0.0
    noise = rng.standard_normal((side, side)) + 1j * rng.standard_normal((side, side))
    phase = np.real(np.fft.ifft2(noise * np.sqrt(psd) * df)) * side**2

    x = (np.arange(side) - side / 2.0) * dx
    for p in range(1, subharmonics + 1):
        dfp = df / 3**p
        f1 = np.array([-1.0, 0.0, 1.0]) * dfp
        SX, SY = np.meshgrid(f1, f1, indexing="ij")
        weight = np.zeros((3, 3))
        ring = np.ones((3, 3), dtype=bool)
        ring[1, 1] = False
        weight[ring] = _cell_weight(SX[ring], SY[ring], dfp, r0)
        cn = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))) * np.sqrt(weight) * dfp
        ex = np.exp(2j * np.pi * np.outer(f1, x))
        phase += np.real(ex.T @ cn @ ex)
    phase -= phase.mean()
    return PhaseScreen(phase, dx, r0, seed)


def uniform_screen(phase: float, side: int, dx: float) -> PhaseScreen:
    return PhaseScreen(np.full((side, side), float(phase)), dx)


def zernike_radial(n: int, m: int, rho):
    m = abs(m)
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    for s in range((n - m) // 2 + 1):
        c = (-1) ** s * math.factorial(n - s) / (
            math.factorial(s) * math.factorial((n + m) // 2 - s) * math.factorial((n - m) // 2 - s)
        )
        out = out + c * rho ** (n - 2 * s)
    return out


def zernike(n: int, m: int, rho, theta):
    """Unnormalized Zernike polynomial (value 1 at the rim for cos-type terms); m < 0 selects sin."""
    if int(n) != n or int(m) != m or n < 0 or abs(m) > n or (n - abs(m)) % 2:
        raise ValueError(f"invalid Zernike order (n={n}, m={m})")
    radial = zernike_radial(int(n), int(m), rho)
    if m > 0:
        return radial * np.cos(m * np.asarray(theta))
    if m < 0:
        return radial * np.sin(-m * np.asarray(theta))
    return radial


def zernike_screen(
    coeffs: Sequence[tuple[int, int, float]], side: int, dx: float, aperture_radius: float
) -> PhaseScreen:
    """Phase screen equal to sum(amplitude * Z_n^m) inside the aperture and zero outside."""
    if not aperture_radius > 0:
        raise ValueError(f"aperture radius must be positive, got {aperture_radius!r}")
    X, Y = grid_coordinates(side, dx)
    rho = np.hypot(X, Y) / aperture_radius
    theta = np.arctan2(Y, X)
    inside = rho <= 1.0
    phase = np.zeros((side, side))
    for n, m, amp in coeffs:
        phase += amp * zernike(n, m, rho, theta)
    return PhaseScreen(np.where(inside, phase, 0.0), dx)


def _mode_stack(basis: Sequence[int], waist: float, X, Y) -> np.ndarray:
    return np.stack([lg_real_space(AzimuthalMode(ell, waist), X, Y) for ell in basis])


def kraus_from_screen(
    screen: PhaseScreen, basis: Sequence[int], waist: float, eps_quad: float = DEFAULT_EPS_QUAD
) -> KrausMatrix:
    """T[m, n] = integral conj(LG_m) exp(i phase) LG_n d^2r, summed on the screen grid.

    The grid's own Gram matrix is computed alongside; its largest deviation
    from the identity is stored as ``quad_error`` and a warning is issued
    when it exceeds ``eps_quad``.
    """
    limit = screen.side * screen.dx / 6.0
    if not 0 < waist <= limit:
        raise ValueError(f"waist {waist!r} must be positive and <= side*dx/6 = {limit!r}")
    X, Y = screen.coordinates()
    modes = _mode_stack(basis, waist, X, Y)
    area = screen.dx**2
    flat = modes.reshape(len(basis), -1)
    conj = np.conj(flat)
    entries = conj @ (np.exp(1j * screen.grid.ravel()) * flat).T * area
    gram = conj @ flat.T * area
    err = float(np.max(np.abs(gram - np.eye(len(basis)))))
    if err > eps_quad:
        warnings.warn(
            f"mode orthonormality on this grid is only good to {err:.2e} (> {eps_quad:.1e}); "
            "use a finer or larger grid",
            stacklevel=2,
        )
    return KrausMatrix(entries, tuple(basis), waist, err)


def random_unitary_channel(d: int, seed: int, basis: Sequence[int] | None = None, waist: float | None = None) -> KrausMatrix:
    """Haar-random unitary over ``basis`` (default: d indices centred on zero)."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    basis = default_basis(d) if basis is None else list(basis)
    if len(basis) != d:
        raise ValueError(f"basis {basis} does not have {d} elements")
    u = unitary_group.rvs(d, random_state=np.random.default_rng(seed))
    return KrausMatrix(u, tuple(basis), waist)


def identity_channel(basis: Sequence[int], waist: float | None = None) -> KrausMatrix:
    return KrausMatrix(np.eye(len(basis)), tuple(basis), waist)


def save_screen(screen: PhaseScreen, path) -> None:
    """Write ``KSPS`` + uint32 header length + JSON header + little-endian float64 grid (row-major)."""
    header = json.dumps(
        {"side": screen.side, "dx": screen.dx, "r0": screen.r0, "seed": screen.seed, "dtype": "<f8"},
    ).encode()
    with open(path, "wb") as fh:
        fh.write(_SCREEN_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(screen.grid, dtype="<f8").tobytes())


def load_screen(path) -> PhaseScreen:
    raw = Path(path).read_bytes()
    if raw[:4] != _SCREEN_MAGIC:
        raise ValueError(f"{path} is not a phase-screen file")
    (n,) = struct.unpack("<I", raw[4:8])
    header = json.loads(raw[8 : 8 + n])
    side = header["side"]
    grid = np.frombuffer(raw[8 + n :], dtype=header.get("dtype", "<f8"))
    if grid.size != side * side:
        raise ValueError(f"{path}: expected {side * side} samples, found {grid.size}")
    return PhaseScreen(grid.reshape(side, side), header["dx"], header.get("r0"), header.get("seed"))


def save_kraus(T: KrausMatrix, path) -> None:
    Path(path).write_text(json.dumps(T.to_json(), indent=1) + "\n")


def load_kraus(path) -> KrausMatrix:
    return KrausMatrix.from_json(json.loads(Path(path).read_text()))
