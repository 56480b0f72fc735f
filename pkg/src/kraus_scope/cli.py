"""Command-line entry point: ``kraus-scope <command> [--config FILE] [--seed N] [--out DIR] [--quiet]``.

Exit codes: 0 success, 2 invalid input, 3 kernel verification outside
tolerance, 4 reconstruction or compensation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .channel import (
    KrausMatrix,
    PhaseScreen,
    identity_channel,
    kolmogorov_screen,
    kraus_from_screen,
    load_kraus,
    load_screen,
    random_unitary_channel,
    save_kraus,
    save_screen,
    zernike_screen,
)
from .config import ConfigError, ExperimentConfig, load_config
from .design import CombSpec, feasibility_report
from .modes import AzimuthalMode
from .nonlinear import lambda_coefficient, overlap_closed_form
from .oracle import NonConvergenceError, convergence_sweep, lambda_from_overlaps, quadrature_overlap, write_sweep_csv
from .quadrature import QuadratureSpec
from .tomography import (
    NoiseSpec,
    ProbeState,
    ReconstructionError,
    SingularChannelError,
    apply_channel,
    design_compensation,
    generate_plan,
    lambda_weights,
    phase_aligned_error,
    reconstruct,
    simulate_adaptive_plan,
    simulate_plan,
    trace_fidelity,
    write_plan_csv,
    write_report_json,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_TOLERANCE = 3
EXIT_RECONSTRUCTION = 4

THREADS_ENV = "KRAUS_SCOPE_THREADS"


class UsageError(ValueError):
    pass


def max_workers() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        out.writerows(rows)


def _cplx(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


# -- verify-kernel ---------------------------------------------------------


def cmd_verify_kernel(cfg: ExperimentConfig, out: Path, args) -> int:
    crystal = cfg.crystal_config()
    w1, w2 = cfg.waists.w1, cfg.waists.w2
    v = cfg.verify
    quad = QuadratureSpec(order=v.order)
    ells = range(-v.ell_max, v.ell_max + 1)
    pairs = [(lo, lm) for lo in ells for lm in ells]

    def evaluate(pair):
        mo, mm = AzimuthalMode(pair[0], w1), AzimuthalMode(pair[1], w2)
        return overlap_closed_form(crystal, mo, mm).value, quadrature_overlap(crystal, mo, mm, quad)

    with ThreadPoolExecutor(max_workers=max_workers()) as pool:
        results = dict(zip(pairs, pool.map(evaluate, pairs)))

    closed00, oracle00 = results[(0, 0)]
    scale = abs(oracle00)
    rows, worst_rel, worst_zero = [], 0.0, 0.0
    for (lo, lm), (closed, oracle) in results.items():
        matched = lo == -lm
        if matched:
            err = abs(oracle - closed) / abs(closed)
            worst_rel = max(worst_rel, err)
        else:
            err = max(abs(oracle), abs(closed)) / scale
            worst_zero = max(worst_zero, err)
        rows.append([lo, lm, int(matched), repr(closed.real), repr(closed.imag), repr(oracle.real), repr(oracle.imag), repr(err)])
    _write_csv(
        out / "verify_kernel.csv",
        ["ell_out", "ell_mea", "selected", "closed_re", "closed_im", "quadrature_re", "quadrature_im", "error"],
        rows,
    )

    symmetric = crystal.n1 == crystal.n2 and w1 == w2
    alpha = (w1 / cfg.waists.w_c) ** 2 if symmetric else None
    lam_rows, worst_lam = [], 0.0
    for k in range(v.ell_max + 1):
        closed = lambda_coefficient(crystal, w1, w2, k)
        from_oracle = lambda_from_overlaps(results[(k, -k)][1], oracle00, k, w1, w2)
        law = (2.0 + alpha) ** (-k) if symmetric else float("nan")
        if symmetric:
            worst_lam = max(worst_lam, abs(closed - law) / law)
        lam_rows.append([k, repr(closed), repr(from_oracle), "" if not symmetric else repr(law)])
    _write_csv(out / "lambda.csv", ["abs_ell", "lambda_closed", "lambda_quadrature", "lambda_symmetric_law"], lam_rows)

    sweep = convergence_sweep(crystal, (AzimuthalMode(0, w1), AzimuthalMode(0, w2)), [16, 24, 32, 48, 64])
    write_sweep_csv(sweep, out / "convergence.csv")

    ok = worst_rel <= v.tolerance and worst_zero <= v.zero_tolerance and worst_lam <= 1e-12
    report = {
        "beta": crystal.beta,
        "alpha": alpha,
        "tolerance": v.tolerance,
        "zero_tolerance": v.zero_tolerance,
        "quadrature_order": v.order,
        "max_relative_error": worst_rel,
        "max_forbidden_magnitude": worst_zero,
        "max_lambda_law_error": worst_lam if symmetric else None,
        "M00": _cplx(closed00),
        "pass": ok,
    }
    _write_json(out / "verify_kernel.json", report)
    _say(args, f"verify-kernel: beta={crystal.beta:.3e} max rel err={worst_rel:.3e} forbidden={worst_zero:.3e} -> {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_TOLERANCE


# -- channels --------------------------------------------------------------


def _screen_from_config(cfg: ExperimentConfig) -> PhaseScreen:
    ch = cfg.channel
    dx = ch.grid_spacing()
    if ch.source == "kolmogorov":
        return kolmogorov_screen(ch.r0, ch.side, dx, cfg.seed)
    if ch.source == "zernike":
        radius = ch.aperture_radius if ch.aperture_radius is not None else 3.0 * ch.waist
        coeffs = [(int(n), int(m), float(a)) for n, m, a in ch.zernike]
        return zernike_screen(coeffs, ch.side, dx, radius)
    if ch.source == "file" and Path(ch.path).read_bytes()[:4] == b"KSPS":
        return load_screen(ch.path)
    raise UsageError(f"channel source {ch.source!r} does not define a phase screen")


def _is_screen_source(cfg: ExperimentConfig) -> bool:
    ch = cfg.channel
    if ch.source in ("kolmogorov", "zernike"):
        return True
    if ch.source == "file":
        try:
            return Path(ch.path).read_bytes()[:4] == b"KSPS"
        except OSError as exc:
            raise UsageError(f"cannot read channel file {ch.path}: {exc}") from None
    return False


def build_channel(cfg: ExperimentConfig) -> tuple[KrausMatrix, PhaseScreen | None]:
    basis = cfg.resolved_basis()
    ch = cfg.channel
    if ch.source == "identity":
        return identity_channel(basis), None
    if ch.source == "random-unitary":
        return random_unitary_channel(cfg.dimension, cfg.seed, basis), None
    if _is_screen_source(cfg):
        screen = _screen_from_config(cfg)
        return kraus_from_screen(screen, basis, ch.waist), screen
    T = load_kraus(ch.path)
    if list(T.basis) != basis:
        raise UsageError(f"channel file basis {list(T.basis)} does not match configured basis {basis}")
    return T, None


def cmd_simulate_channel(cfg: ExperimentConfig, out: Path, args) -> int:
    T, screen = build_channel(cfg)
    if screen is not None:
        save_screen(screen, out / "screen.ksps")
    save_kraus(T, out / "kraus.json")
    power = T.column_power()
    _write_csv(out / "column_power.csv", ["ell", "power"], [[ell, repr(float(p))] for ell, p in zip(T.basis, power)])
    _say(args, f"simulate-channel: {cfg.channel.source} d={T.d} mean column power={float(np.mean(power)):.6f}")
    return EXIT_OK


# -- run-tomography --------------------------------------------------------


def cmd_run_tomography(cfg: ExperimentConfig, out: Path, args) -> int:
    T_true, _ = build_channel(cfg)
    basis = list(T_true.basis)
    crystal = cfg.crystal_config()
    w1, w2 = cfg.waists.w1, cfg.waists.w2
    lam = lambda_weights(crystal, w1, w2) if cfg.compensate_lambda else None
    probe = ProbeState.equal(basis)
    noise = None
    if cfg.noise.kind == "poisson":
        noise = NoiseSpec("poisson", cfg.noise.n_photons, cfg.seed + 1)
    state = apply_channel(probe, T_true)
    if cfg.adaptive_reference:
        plan, probs = simulate_adaptive_plan(state, crystal, w1, w2, noise, lam=lam)
    else:
        plan = generate_plan(len(basis), basis, lam=lam)
        probs = simulate_plan(state, plan, crystal, w1, w2, noise)

    save_kraus(T_true, out / "truth.json")
    write_plan_csv(plan, out / "plan.csv")
    write_plan_csv(plan, out / "probabilities.csv", probs)

    try:
        report = reconstruct(
            probs,
            plan,
            probe.alphas,
            basis,
            cfg=crystal,
            w1=w1,
            w2=w2,
            n_photons=noise.n_photons if noise else None,
            waist=T_true.waist,
        )
        write_report_json(report, out / "reconstruction.json")
        C = design_compensation(report.T_est)
    except (ReconstructionError, SingularChannelError) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        for key in ("missing", "unresolved", "diagnostics", "condition"):
            if hasattr(exc, key):
                val = getattr(exc, key)
                diag[key] = [list(x) if isinstance(x, tuple) else x for x in val] if isinstance(val, list) else val
        if isinstance(exc, SingularChannelError):
            diag["singular_values"] = [float(s) for s in exc.singular_values]
            if math.isinf(diag["condition"]):
                diag["condition"] = None  # unbounded: an exactly zero singular value
        _write_json(out / "diagnostics.json", diag)
        print(f"run-tomography: {exc}", file=sys.stderr)
        return EXIT_RECONSTRUCTION

    save_kraus(C, out / "compensation.json")
    Tt, Te, Cm = T_true.entries, report.T_est.entries, C.entries
    W, _, Vh = np.linalg.svd(Tt)
    eye = np.eye(len(basis))
    summary = {
        "dimension": len(basis),
        "basis": basis,
        "channel": cfg.channel.source,
        "seed": cfg.seed,
        "noise": cfg.noise.kind,
        "n_photons": cfg.noise.n_photons if noise else None,
        "measurements": len(plan),
        "frobenius_error": phase_aligned_error(Te, Tt),
        "relative_frobenius_error": phase_aligned_error(Te, Tt) / float(np.linalg.norm(Tt)),
        "consistency_fidelity": report.fidelity,
        "flagged_elements": [list(e) for e in report.flagged_elements],
        "unlinked_components": [[list(e) for e in comp] for comp in report.unlinked_components],
        "raw_fidelity": trace_fidelity(Tt, eye),
        "compensated_fidelity": trace_fidelity(Cm @ Tt, eye),
        "compensated_unitary_fidelity": trace_fidelity(Cm @ (W @ Vh), eye),
    }
    _write_json(out / "summary.json", summary)
    _say(
        args,
        "run-tomography: d={dimension} error={frobenius_error:.3e} F(T,I)={raw_fidelity:.4f} "
        "F(CT,I)={compensated_fidelity:.4f}".format(**summary),
    )
    return EXIT_OK


# -- design ----------------------------------------------------------------


def cmd_design(cfg: ExperimentConfig, out: Path, args) -> int:
    d = cfg.design
    comb = CombSpec(d.nominal_wavelength, d.repetition_frequency, d.component_spacing_multiple)
    report = feasibility_report(comb, d.lines_per_mm, d.slm_width_pixels, cfg.dimension)
    _write_json(out / "design.json", report)
    _say(
        args,
        f"design: {report['grating_line_count']:.6g} grating lines, beam {report['beam_size_mm']:.4g} mm, "
        f"{report['pixels_per_beam']} px per beam",
    )
    for w in report["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "verify-kernel": (cmd_verify_kernel, "compare the closed-form overlaps with brute-force quadrature"),
    "run-tomography": (cmd_run_tomography, "simulate the measurement plan, reconstruct the Kraus block and design a compensation"),
    "simulate-channel": (cmd_simulate_channel, "generate a channel and write its Kraus matrix"),
    "design": (cmd_design, "grating and SLM feasibility numbers"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kraus-scope", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="experiment configuration (JSON); defaults are used when omitted")
        p.add_argument("--seed", type=int, help="overrides the configured seed")
        p.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
        p.add_argument("--quiet", action="store_true", help="suppress the summary line")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler, _ = COMMANDS[args.command]
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.seed is not None:
            if args.seed < 0:
                raise UsageError("--seed must be non-negative")
            cfg = replace(cfg, seed=args.seed)
        out = Path(args.out) if args.out else Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        max_workers()
        return handler(cfg, out, args)
    except (ConfigError, UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
