"""Channel estimation with a wavelength-OAM correlated probe and upconversion detection.

Conventions
-----------
* The probe pairs frequency index ``n`` with azimuthal index ``basis[n]`` and
  amplitude ``alpha_n``. After the channel the field has coefficients
  ``out[m, n] = T[m, n] * alpha_n`` (output OAM ``basis[m]``, frequency ``n``).
* A :class:`MeasurementSpec` describes the measurement beam. Its OAM terms are
  the beam's own azimuthal indices, so a term ``-ell`` selects output mode
  ``ell``. A frequency term ``v`` means the beam is at the pump-conjugate
  frequency of comb line ``v`` and selects frequency ``v`` of the output.
* The detected amplitude is ``sum(E * out)`` with the effective projector
  ``E`` of :func:`effective_projector`; the probability is its squared modulus.
"""

from __future__ import annotations

import cmath
import csv
import heapq
import json
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .channel import KrausMatrix
from .nonlinear import CrystalConfig, lambda_coefficient

QUADRATURES = (0.0, math.pi / 2)
_NORM_TOL = 1e-9


class ReconstructionError(RuntimeError):
    def __init__(self, message: str, *, missing: Sequence[str] = (), unresolved: Sequence[tuple[int, int]] = (), diagnostics: dict | None = None):
        self.missing = list(missing)
        self.unresolved = list(unresolved)
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class SingularChannelError(ValueError):
    def __init__(self, singular_values: np.ndarray, threshold: float):
        self.singular_values = np.asarray(singular_values)
        self.threshold = threshold
        smin, smax = float(self.singular_values.min()), float(self.singular_values.max())
        self.condition = math.inf if smin == 0 else smax / smin
        super().__init__(
            f"channel estimate is singular: smallest singular value {smin:.3e} < {threshold:.1e} "
            f"(largest {smax:.3e}, condition number {self.condition:.3e})"
        )


@dataclass(frozen=True)
class ProbeState:
    """Correlated probe: one (frequency index, azimuthal index, amplitude) triple per component."""

    pairs: tuple[tuple[int, int, complex], ...]

    def __post_init__(self):
        pairs = tuple((int(w), int(ell), complex(a)) for w, ell, a in self.pairs)
        if not pairs:
            raise ValueError("probe state needs at least one component")
        omegas = [p[0] for p in pairs]
        ells = [p[1] for p in pairs]
        if len(set(omegas)) != len(omegas):
            raise ValueError(f"frequency indices must be distinct, got {omegas}")
        if len(set(ells)) != len(ells):
            raise ValueError(f"azimuthal indices must be distinct, got {ells}")
        norm = sum(abs(p[2]) ** 2 for p in pairs)
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"probe amplitudes must have unit norm, got sum |alpha|^2 = {norm!r}")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def equal(cls, basis: Sequence[int], phases: Sequence[float] | None = None) -> "ProbeState":
        d = len(basis)
        phases = phases or [0.0] * d
        return cls(tuple((n, ell, cmath.exp(1j * ph) / math.sqrt(d)) for n, (ell, ph) in enumerate(zip(basis, phases))))

    @property
    def d(self) -> int:
        return len(self.pairs)

    @property
    def omegas(self) -> list[int]:
        return [p[0] for p in self.pairs]

    @property
    def ells(self) -> list[int]:
        return [p[1] for p in self.pairs]

    @property
    def alphas(self) -> np.ndarray:
        return np.array([p[2] for p in self.pairs])


@dataclass(frozen=True, eq=False)
class OutputState:
    coeffs: np.ndarray
    basis: tuple[int, ...]
    omegas: tuple[int, ...]


@dataclass(frozen=True)
class MeasurementSpec:
    oam_terms: tuple[tuple[int, complex], ...]
    freq_terms: tuple[tuple[int, complex], ...]
    label: str
    role: str = "magnitude"

    def __post_init__(self):
        oam = tuple((int(l), complex(c)) for l, c in self.oam_terms)
        freq = tuple((int(v), complex(c)) for v, c in self.freq_terms)
        for name, terms in (("OAM", oam), ("frequency", freq)):
            if not terms:
                raise ValueError(f"{self.label}: {name} terms must not be empty")
            norm = sum(abs(c) ** 2 for _, c in terms)
            if abs(norm - 1.0) > _NORM_TOL:
                raise ValueError(f"{self.label}: {name} coefficients must have unit norm, got {norm!r}")
            keys = [k for k, _ in terms]
            if len(set(keys)) != len(keys):
                raise ValueError(f"{self.label}: repeated {name} index in {keys}")
        object.__setattr__(self, "oam_terms", oam)
        object.__setattr__(self, "freq_terms", freq)

    def to_row(self) -> dict:
        return {
            "label": self.label,
            "role": self.role,
            "oam_terms": json.dumps([[l, c.real, c.imag] for l, c in self.oam_terms]),
            "freq_terms": json.dumps([[v, c.real, c.imag] for v, c in self.freq_terms]),
        }

    @classmethod
    def from_row(cls, row: Mapping[str, str]) -> "MeasurementSpec":
        oam = tuple((l, complex(re, im)) for l, re, im in json.loads(row["oam_terms"]))
        freq = tuple((v, complex(re, im)) for v, re, im in json.loads(row["freq_terms"]))
        return cls(oam, freq, row["label"], row["role"])


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"
    n_photons: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "poisson"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "poisson" and not self.n_photons > 0:
            raise ValueError("poisson noise needs a positive photon number")


@dataclass(eq=False)
class ReconstructionReport:
    T_est: KrausMatrix
    reference_element: tuple[int, int]
    fidelity: float
    flagged_elements: list[tuple[int, int]] = field(default_factory=list)
    threshold: float = 0.0
    # groups of elements whose phase relative to the other groups was not measured
    unlinked_components: list[list[tuple[int, int]]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "reference_element": list(self.reference_element),
            "fidelity": self.fidelity,
            "threshold": self.threshold,
            "flagged_elements": [list(e) for e in self.flagged_elements],
            "unlinked_components": [[list(e) for e in comp] for comp in self.unlinked_components],
            "T_est": self.T_est.to_json(),
        }


LambdaFn = Callable[[int], float]


def lambda_weights(cfg: CrystalConfig | None, w1: float | None = None, w2: float | None = None) -> LambdaFn:
    """Per-|ell| weight function; identically 1 when no crystal is given."""
    if cfg is None:
        return lambda ell: 1.0
    if w1 is None or w2 is None:
        raise ValueError("mode waists w1 and w2 are required together with a crystal configuration")
    return lambda ell: lambda_coefficient(cfg, w1, w2, ell)


def apply_channel(probe: ProbeState, T: KrausMatrix) -> OutputState:
    missing = [ell for ell in probe.ells if ell not in T.basis]
    if missing:
        raise ValueError(f"probe azimuthal indices {missing} are not in the channel basis {list(T.basis)}")
    cols = [T.basis.index(ell) for ell in probe.ells]
    coeffs = T.entries[:, cols] * probe.alphas[None, :]
    return OutputState(coeffs, T.basis, tuple(probe.omegas))


def effective_projector(
    spec: MeasurementSpec,
    cfg: CrystalConfig | None,
    w1: float | None,
    w2: float | None,
    basis: Sequence[int],
    omegas: Sequence[int],
) -> np.ndarray:
    """Coefficients of the effective bra on the (output OAM, frequency) grid.

    Each measurement OAM term ``(ell, a)`` contributes ``Lambda(|ell|) * a`` on
    the row of output mode ``-ell``; terms outside ``basis`` select nothing.
    """
    lam = lambda_weights(cfg, w1, w2)
    row = np.zeros(len(basis), dtype=complex)
    for ell, a in spec.oam_terms:
        if -ell in basis:
            row[list(basis).index(-ell)] += lam(abs(ell)) * a
    col = np.zeros(len(omegas), dtype=complex)
    for v, c in spec.freq_terms:
        if v in omegas:
            col[list(omegas).index(v)] += c
    return np.outer(row, col)


def simulate_measurement(
    out: OutputState,
    spec: MeasurementSpec,
    cfg: CrystalConfig | None = None,
    w1: float | None = None,
    w2: float | None = None,
    noise: NoiseSpec | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    E = effective_projector(spec, cfg, w1, w2, out.basis, out.omegas)
    p = float(abs(np.sum(E * out.coeffs)) ** 2)
    if noise is not None and noise.kind == "poisson":
        rng = rng if rng is not None else np.random.default_rng(noise.seed)
        p = float(rng.poisson(noise.n_photons * p)) / noise.n_photons
    return p


def simulate_plan(
    out: OutputState,
    plan: Sequence[MeasurementSpec],
    cfg: CrystalConfig | None = None,
    w1: float | None = None,
    w2: float | None = None,
    noise: NoiseSpec | None = None,
) -> dict[str, float]:
    """Probabilities for every spec of ``plan``, drawn from one generator in plan order."""
    rng = np.random.default_rng(noise.seed) if noise is not None and noise.kind == "poisson" else None
    return {s.label: simulate_measurement(out, s, cfg, w1, w2, noise, rng) for s in plan}


def compensate_oam(spec: MeasurementSpec, lam: LambdaFn) -> MeasurementSpec:
    """Rescale OAM coefficients by 1/Lambda(|ell|) (then renormalize) so effective weights follow the nominal ones."""
    scaled = [(ell, a / lam(abs(ell))) for ell, a in spec.oam_terms]
    norm = math.sqrt(sum(abs(a) ** 2 for _, a in scaled))
    return MeasurementSpec(tuple((ell, a / norm) for ell, a in scaled), spec.freq_terms, spec.label, spec.role)


def _qlabel(q: float) -> str:
    return f"{q:.6g}"


def generate_plan(
    d: int,
    basis: Sequence[int] | None = None,
    quadratures: Sequence[float] = QUADRATURES,
    *,
    reference: tuple[int, int] = (0, 0),
    lam: LambdaFn | None = None,
) -> list[MeasurementSpec]:
    """Measurement plan recovering a d x d Kraus block up to a global phase.

    * d^2 single-mode specs give every magnitude;
    * two-frequency specs on the reference row link column ``v0`` to every
      other column;
    * two-OAM specs in every column link the reference row to every other row.

    Each interference pair is issued once per entry of ``quadratures``. With
    ``lam`` the two-OAM coefficients are pre-compensated for Lambda(|ell|).
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if basis is None:
        from .channel import default_basis

        basis = default_basis(d)
    basis = [int(b) for b in basis]
    if len(basis) != d:
        raise ValueError(f"basis {basis} does not have {d} elements")
    u0, v0 = reference
    if not (0 <= u0 < d and 0 <= v0 < d):
        raise ValueError(f"reference {reference} outside a {d}x{d} block")
    h = 1 / math.sqrt(2)
    plan: list[MeasurementSpec] = []
    for u in range(d):
        for v in range(d):
            plan.append(MeasurementSpec(((-basis[u], 1),), ((v, 1),), f"mag[u={u},v={v}]", "magnitude"))
    for w in range(d):
        if w == v0:
            continue
        for q in quadratures:
            plan.append(
                MeasurementSpec(
                    ((-basis[u0], 1),),
                    ((v0, h), (w, h * cmath.exp(1j * q))),
                    f"freq[u={u0},v={v0},w={w},q={_qlabel(q)}]",
                    "frequency-interference",
                )
            )
    for v in range(d):
        for m in range(d):
            if m == u0:
                continue
            for q in quadratures:
                spec = MeasurementSpec(
                    ((-basis[u0], h), (-basis[m], h * cmath.exp(1j * q))),
                    ((v, 1),),
                    f"oam[v={v},u={u0},m={m},q={_qlabel(q)}]",
                    "oam-interference",
                )
                plan.append(compensate_oam(spec, lam) if lam is not None else spec)
    return plan


def choose_reference(magnitudes: np.ndarray) -> tuple[int, int]:
    """Hub for :func:`generate_plan` from estimated element magnitudes.

    Every phase link of the plan passes through the hub row, so the row
    whose weakest element is strongest is taken; the hub column is that
    row's largest element.
    """
    mags = np.asarray(magnitudes, dtype=float)
    u0 = int(np.argmax(mags.min(axis=1)))
    return u0, int(np.argmax(mags[u0]))


def simulate_adaptive_plan(
    out: OutputState,
    cfg: CrystalConfig | None = None,
    w1: float | None = None,
    w2: float | None = None,
    noise: NoiseSpec | None = None,
    *,
    lam: LambdaFn | None = None,
    quadratures: Sequence[float] = QUADRATURES,
) -> tuple[list[MeasurementSpec], dict[str, float]]:
    """Two-stage measurement: magnitudes first, then interference around the best hub.

    The d^2 single-mode results pick the reference with
    :func:`choose_reference`; the interference specs of the resulting plan
    are then simulated. One generator is used for both stages, in plan
    order, so the total number of measurements is the same as for a fixed
    plan.
    """
    basis = list(out.basis)
    d = len(basis)
    rng = np.random.default_rng(noise.seed) if noise is not None and noise.kind == "poisson" else None
    first = generate_plan(d, basis, quadratures, lam=lam)[: d * d]
    probs = {s.label: simulate_measurement(out, s, cfg, w1, w2, noise, rng) for s in first}
    mags = np.zeros((d, d))
    for s in first:
        E = effective_projector(s, cfg, w1, w2, basis, out.omegas)
        (cell,) = _nonzero_cells(E)
        mags[cell] = math.sqrt(probs[s.label]) / abs(E[cell])
    plan = generate_plan(d, basis, quadratures, reference=choose_reference(mags), lam=lam)
    for s in plan[d * d :]:
        probs[s.label] = simulate_measurement(out, s, cfg, w1, w2, noise, rng)
    return plan, probs


def _nonzero_cells(E: np.ndarray) -> list[tuple[int, int]]:
    return [tuple(int(i) for i in idx) for idx in zip(*np.nonzero(E))]


def _phase_edges(
    specs: Iterable[tuple[MeasurementSpec, np.ndarray]],
) -> dict[tuple[tuple[int, int], tuple[int, int]], list[tuple[MeasurementSpec, np.ndarray]]]:
    groups = defaultdict(list)
    for spec, E in specs:
        cells = _nonzero_cells(E)
        if len(cells) == 2:
            groups[tuple(sorted(cells))].append((spec, E))
    return groups


def _solvable(entries: Sequence[tuple[MeasurementSpec, np.ndarray]], pair) -> bool:
    rows = [_cross_row(E, pair) for _, E in entries]
    return len(rows) >= 2 and np.linalg.matrix_rank(np.array(rows), tol=1e-9) == 2


def _cross_row(E: np.ndarray, pair) -> list[float]:
    i, j = pair
    k = np.conj(E[i]) * E[j]
    # Re(k z) = Re(k) Re(z) - Im(k) Im(z)
    return [k.real, -k.imag]


def unrecoverable_elements(plan: Sequence[MeasurementSpec], basis: Sequence[int], omegas: Sequence[int] | None = None) -> list[tuple[int, int]]:
    """Elements whose phase the plan cannot tie to the rest, assuming all magnitudes are nonzero.

    Builds the graph whose edges are element pairs with a full-rank (two
    independent quadratures) interference record and returns every element
    outside the largest connected component.
    """
    omegas = list(range(len(basis))) if omegas is None else list(omegas)
    specs = [(s, effective_projector(s, None, None, None, basis, omegas)) for s in plan]
    adj = defaultdict(set)
    for pair, entries in _phase_edges(specs).items():
        if _solvable(entries, pair):
            a, b = pair
            adj[a].add(b)
            adj[b].add(a)
    nodes = [(m, n) for m in range(len(basis)) for n in range(len(omegas))]
    best: set = set()
    seen: set = set()
    for start in nodes:
        if start in seen:
            continue
        comp = {start}
        todo = deque([start])
        while todo:
            x = todo.popleft()
            for y in adj[x]:
                if y not in comp:
                    comp.add(y)
                    todo.append(y)
        seen |= comp
        if len(comp) > len(best):
            best = comp
    return [n for n in nodes if n not in best]


def _largest(cells: Sequence[tuple[int, int]], values: np.ndarray) -> tuple[int, int]:
    """First cell in row-major order whose value is within 1e-9 of the maximum (stable under ties)."""
    top = max(values[c] for c in cells)
    return min(c for c in cells if values[c] >= top * (1 - 1e-9))


def _bhattacharyya(p: np.ndarray, q: np.ndarray) -> float:
    p = np.clip(p, 0, None)
    q = np.clip(q, 0, None)
    if p.sum() == 0 or q.sum() == 0:
        return 0.0
    return float(np.sum(np.sqrt(p * q)) ** 2 / (p.sum() * q.sum()))


def reconstruct(
    probs: Mapping[str, float],
    plan: Sequence[MeasurementSpec],
    alphas: Sequence[complex],
    basis: Sequence[int],
    *,
    cfg: CrystalConfig | None = None,
    w1: float | None = None,
    w2: float | None = None,
    n_photons: float | None = None,
    rel_threshold: float = 1e-6,
    waist: float | None = None,
    strict: bool = False,
) -> ReconstructionReport:
    """Kraus block from a complete set of measured probabilities.

    Magnitudes come from the single-mode specs. Every interference spec gives
    ``Re(k z)`` for a cross term ``z = conj(A_i) A_j`` of two output
    coefficients; the quadratures of one pair are solved jointly for ``z``.
    Phases are propagated from the largest element along the strongest
    available links (widest path), the probe amplitudes are divided out and
    the gauge is fixed so that the largest element is real and non-negative.

    Elements below threshold (``rel_threshold`` of the largest magnitude, or
    three shot-noise standard deviations when ``n_photons`` is given) are
    flagged and given phase 0, although a weak link through them is still
    used when it is the only path to another element. ``fidelity`` is the
    Bhattacharyya overlap of the measured probabilities with those predicted
    by the estimate.

    Elements linked to the reference only through elements at the
    ``rel_threshold`` floor (for example the diagonal of a diagonal
    channel) have no measured phase
    relative to it. Each such group gets its own gauge, again with its
    largest element real and non-negative, and is listed in
    ``unlinked_components``; with ``strict`` a ReconstructionError is raised
    instead.
    """
    basis = list(basis)
    alphas = np.asarray(alphas, dtype=complex)
    d = len(basis)
    omegas = list(range(len(alphas)))
    if len(alphas) != d:
        raise ValueError(f"got {len(alphas)} probe amplitudes for a basis of size {d}")
    if np.any(np.abs(alphas) == 0):
        raise ValueError("probe amplitudes must all be nonzero")
    missing = [s.label for s in plan if s.label not in probs]
    if missing:
        raise ReconstructionError(f"missing measurements: {', '.join(missing)}", missing=missing)

    specs = [(s, effective_projector(s, cfg, w1, w2, basis, omegas)) for s in plan]
    mag2_sum = np.zeros((d, d))
    mag2_cnt = np.zeros((d, d))
    gain = np.zeros((d, d))
    for s, E in specs:
        cells = _nonzero_cells(E)
        if len(cells) == 1:
            (cell,) = cells
            e2 = abs(E[cell]) ** 2
            mag2_sum[cell] += probs[s.label] / e2
            mag2_cnt[cell] += 1
            gain[cell] = max(gain[cell], math.sqrt(e2))
    absent = [(int(m), int(n)) for m, n in zip(*np.nonzero(mag2_cnt == 0))]
    if absent:
        raise ReconstructionError(f"no magnitude measurement for elements {absent}", unresolved=absent)
    mag = np.sqrt(np.clip(mag2_sum / mag2_cnt, 0, None))

    threshold = rel_threshold * mag.max()
    if n_photons:
        # sigma(|A|) ~ 1 / (2 |e| sqrt(N)) for Poisson counts
        threshold = max(threshold, float(np.max(3.0 / (2.0 * gain * math.sqrt(n_photons)))))
    live = mag > threshold

    cross: dict[tuple, complex] = {}
    for pair, entries in _phase_edges(specs).items():
        if not _solvable(entries, pair):
            continue
        i, j = pair
        rows, rhs = [], []
        for s, E in entries:
            rows.append(_cross_row(E, pair))
            rhs.append((probs[s.label] - abs(E[i]) ** 2 * mag[i] ** 2 - abs(E[j]) ** 2 * mag[j] ** 2) / 2.0)
        (zr, zi), *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
        cross[pair] = complex(zr, zi)

    # Phases travel along the widest path: links through weak elements are
    # used only when nothing stronger reaches an element. Elements at the
    # rounding floor carry no phase information at all.
    usable = mag > rel_threshold * mag.max()
    adj = defaultdict(list)
    for (i, j), z in cross.items():
        if usable[i] and usable[j]:
            strength = min(mag[i], mag[j])
            adj[i].append((strength, j, cmath.phase(z)))
            adj[j].append((strength, i, -cmath.phase(z)))
    cells = [(m, n) for m in range(d) for n in range(d)]
    components = []
    phase: dict[tuple[int, int], float] = {}
    while True:
        pending = [c for c in cells if usable[c] and c not in phase]
        if not pending:
            break
        root = _largest(pending, mag)
        # root phase chosen so that T[root] = A[root] / alpha comes out real
        phase[root] = cmath.phase(alphas[root[1]])
        comp = [root]
        heap = [(-strength, y, root, dphi) for strength, y, dphi in adj[root]]
        heapq.heapify(heap)
        while heap:
            _, y, x, dphi = heapq.heappop(heap)
            if y in phase:
                continue
            phase[y] = phase[x] + dphi
            comp.append(y)
            for strength, z, dz in adj[y]:
                if z not in phase:
                    heapq.heappush(heap, (-strength, z, y, dz))
        components.append(sorted(comp))

    if strict and len(components) > 1:
        unresolved = [c for comp in components[1:] for c in comp]
        raise ReconstructionError(
            f"phases of elements {unresolved} are not linked to the reference; the plan's hub row/column "
            "passes through elements below threshold, re-plan with a different reference",
            unresolved=unresolved,
            diagnostics={"magnitudes": mag.tolist(), "threshold": threshold},
        )
    flagged = [c for c in cells if not live[c]]
    A = np.zeros((d, d), dtype=complex)
    for c in cells:
        A[c] = mag[c] * cmath.exp(1j * (phase.get(c, 0.0) if live[c] else 0.0))
    T = A / alphas[None, :]
    for comp in components:
        top = _largest(comp, np.abs(T))
        rot = cmath.exp(-1j * cmath.phase(T[top]))
        for c in comp:
            T[c] *= rot
        T[top] = abs(T[top])
    ref = _largest(components[0], np.abs(T)) if components else (0, 0)

    predicted = np.array([abs(np.sum(E * T * alphas[None, :])) ** 2 for _, E in specs])
    measured = np.array([probs[s.label] for s, _ in specs])
    report = ReconstructionReport(
        KrausMatrix(T, tuple(basis), waist),
        ref,
        _bhattacharyya(measured, predicted),
        flagged,
        float(threshold),
        components[1:],
    )
    return report


def polar_unitary(T: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unitary factor U, positive factor H and singular values of T = U H."""
    W, s, Vh = np.linalg.svd(T)
    return W @ Vh, (Vh.conj().T * s) @ Vh, s


def design_compensation(T_est: KrausMatrix, min_singular: float = 1e-8) -> KrausMatrix:
    """Conjugate transpose of the unitary polar factor of the estimate.

    Applied after the channel it leaves C T = H, Hermitian positive
    semidefinite; for a unitary estimate C T is the identity.
    """
    U, _, s = polar_unitary(T_est.entries)
    if s.min() < min_singular:
        raise SingularChannelError(s, min_singular)
    return KrausMatrix(U.conj().T, T_est.basis, T_est.waist)


def trace_fidelity(A: np.ndarray, B: np.ndarray) -> float:
    """|Tr(A^dagger B)|^2 / (||A||_F^2 ||B||_F^2), insensitive to global phase and scale."""
    num = abs(np.vdot(A, B)) ** 2
    den = np.vdot(A, A).real * np.vdot(B, B).real
    return float(num / den) if den else 0.0


def phase_aligned_error(T_est: np.ndarray, T_true: np.ndarray) -> float:
    """min over phi of ||T_est - exp(i phi) T_true||_F."""
    phi = cmath.phase(np.vdot(T_true, T_est))
    return float(np.linalg.norm(T_est - cmath.exp(1j * phi) * T_true))


PLAN_FIELDS = ["label", "role", "oam_terms", "freq_terms"]


def write_plan_csv(plan: Sequence[MeasurementSpec], path, probs: Mapping[str, float] | None = None) -> None:
    fields = PLAN_FIELDS + (["probability"] if probs is not None else [])
    with open(path, "w", newline="") as fh:
        out = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        out.writeheader()
        for s in plan:
            row = s.to_row()
            if probs is not None:
                row["probability"] = repr(float(probs[s.label]))
            out.writerow(row)


def read_plan_csv(path) -> tuple[list[MeasurementSpec], dict[str, float]]:
    plan, probs = [], {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            spec = MeasurementSpec.from_row(row)
            plan.append(spec)
            if row.get("probability") not in (None, ""):
                probs[spec.label] = float(row["probability"])
    return plan, probs


def write_report_json(report: ReconstructionReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_json(), indent=1) + "\n")
