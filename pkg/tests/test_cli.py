from __future__ import annotations

import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from kraus_scope.channel import KrausMatrix, load_kraus, random_unitary_channel, save_kraus
from kraus_scope.cli import EXIT_INVALID, EXIT_OK, EXIT_RECONSTRUCTION, EXIT_TOLERANCE, main


def run(tmp_path, command, config=None, *extra, name="out"):
    args = [command, "--out", str(tmp_path / name), "--quiet", *extra]
    if config is not None:
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(config))
        args += ["--config", str(path)]
    return main(args), tmp_path / name


def read_json(path):
    return json.loads(path.read_text())


def test_verify_kernel_default(tmp_path):
    code, out = run(tmp_path, "verify-kernel")
    assert code == EXIT_OK
    report = read_json(out / "verify_kernel.json")
    assert report["pass"] and report["beta"] == 0
    with open(out / "lambda.csv") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        assert float(r["lambda_closed"]) == pytest.approx(float(r["lambda_symmetric_law"]), rel=1e-12)
        assert float(r["lambda_quadrature"]) == pytest.approx(float(r["lambda_symmetric_law"]), rel=1e-10)
    with open(out / "verify_kernel.csv") as fh:
        cells = list(csv.DictReader(fh))
    assert len(cells) == 49
    m00 = abs(complex(float(cells[24]["quadrature_re"]), float(cells[24]["quadrature_im"])))
    for c in cells:
        if c["selected"] == "0":
            assert abs(complex(float(c["quadrature_re"]), float(c["quadrature_im"]))) < 1e-10 * m00
    assert (out / "convergence.csv").exists()


def test_verify_kernel_thick_crystal_breaches_tolerance(tmp_path):
    # beta = L lambda3 / (pi w_c^2) = 0.1
    L = 0.1 * math.pi * (100e-6) ** 2 / 0.5e-6
    code, out = run(tmp_path, "verify-kernel", {"crystal": {"L": L}, "verify": {"ell_max": 2}})
    assert code == EXIT_TOLERANCE
    report = read_json(out / "verify_kernel.json")
    assert report["beta"] == pytest.approx(0.1)
    assert not report["pass"] and report["max_relative_error"] > report["tolerance"]


def test_run_tomography_identity(tmp_path):
    code, out = run(tmp_path, "run-tomography", {"channel": {"source": "identity"}})
    assert code == EXIT_OK
    for name in ("truth.json", "plan.csv", "probabilities.csv", "reconstruction.json", "compensation.json", "summary.json"):
        assert (out / name).exists()
    summary = read_json(out / "summary.json")
    assert summary["consistency_fidelity"] == pytest.approx(1.0, abs=1e-10)
    assert summary["frobenius_error"] < 1e-10
    assert np.allclose(load_kraus(out / "compensation.json").entries, np.eye(3), atol=1e-10)


def test_run_tomography_random_unitary(tmp_path):
    code, out = run(tmp_path, "run-tomography", {"dimension": 3}, "--seed", "17")
    assert code == EXIT_OK
    summary = read_json(out / "summary.json")
    assert summary["seed"] == 17
    assert summary["frobenius_error"] < 1e-8
    assert np.allclose(load_kraus(out / "truth.json").entries, random_unitary_channel(3, 17).entries)


def test_run_tomography_kolmogorov(tmp_path):
    config = {"channel": {"source": "kolmogorov", "waist": 0.01, "r0": 0.01 / 0.3}}
    code, out = run(tmp_path, "run-tomography", config)
    assert code == EXIT_OK
    s = read_json(out / "summary.json")
    assert s["compensated_unitary_fidelity"] == pytest.approx(1.0, abs=1e-10)
    assert s["raw_fidelity"] < s["compensated_fidelity"]
    assert s["relative_frobenius_error"] < 1e-8


def test_run_tomography_is_deterministic(tmp_path):
    config = {"channel": {"source": "kolmogorov"}, "noise": {"kind": "poisson", "n_photons": 1e5}}
    run(tmp_path, "run-tomography", config, name="a")
    run(tmp_path, "run-tomography", config, name="b")
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


def test_run_tomography_singular_channel(tmp_path):
    save_kraus(KrausMatrix(np.diag([1.0, 0.5, 0.0]), (-1, 0, 1)), tmp_path / "T.json")
    config = {"channel": {"source": "file", "path": str(tmp_path / "T.json")}}
    code, out = run(tmp_path, "run-tomography", config)
    assert code == EXIT_RECONSTRUCTION
    diag = read_json(out / "diagnostics.json")
    assert diag["error"] == "SingularChannelError"
    assert diag["condition"] is None
    assert diag["singular_values"] == [1.0, 0.5, 0.0]


def test_channel_file_basis_mismatch(tmp_path):
    save_kraus(random_unitary_channel(2, 0), tmp_path / "T.json")
    code, _ = run(tmp_path, "run-tomography", {"channel": {"source": "file", "path": str(tmp_path / "T.json")}})
    assert code == EXIT_INVALID


def test_simulate_channel_and_reuse_screen(tmp_path):
    code, out = run(tmp_path, "simulate-channel", {"channel": {"source": "kolmogorov"}})
    assert code == EXIT_OK
    assert (out / "screen.ksps").read_bytes()[:4] == b"KSPS"
    T = load_kraus(out / "kraus.json")
    with open(out / "column_power.csv") as fh:
        power = [float(r["power"]) for r in csv.DictReader(fh)]
    assert np.allclose(power, T.column_power())
    assert all(p <= 1 + 1e-6 for p in power)
    # feeding the screen file back reproduces the same Kraus matrix
    code, again = run(tmp_path, "simulate-channel", {"channel": {"source": "file", "path": str(out / "screen.ksps")}}, name="again")
    assert code == EXIT_OK
    assert np.array_equal(load_kraus(again / "kraus.json").entries, T.entries)


def test_simulate_zernike_channel(tmp_path):
    code, out = run(tmp_path, "simulate-channel", {"channel": {"source": "zernike", "zernike": [[0, 0, 0.5]]}})
    assert code == EXIT_OK
    T = load_kraus(out / "kraus.json").entries
    assert np.allclose(T, np.exp(0.5j) * np.eye(3), atol=1e-6)


def test_design(tmp_path):
    code, out = run(tmp_path, "design")
    assert code == EXIT_OK
    r = read_json(out / "design.json")
    assert 2.9e5 <= r["grating_line_count"] <= 3.1e5
    assert r["beam_size_mm"] == pytest.approx(100, rel=0.01)
    assert r["pixels_per_beam"] == 200 and r["warnings"] == []
    code, out = run(tmp_path, "design", {"dimension": 10}, name="d10")
    r = read_json(out / "design.json")
    assert r["pixels_per_beam"] < 100
    assert any("consider multiple SLMs" in w for w in r["warnings"])


def test_validation_exit_codes(tmp_path, monkeypatch):
    assert run(tmp_path, "design", {"bogus": 1})[0] == EXIT_INVALID
    assert main(["design", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x")]) == EXIT_INVALID
    assert run(tmp_path, "design", None, "--seed", "-1")[0] == EXIT_INVALID
    monkeypatch.setenv("KRAUS_SCOPE_THREADS", "zero")
    assert run(tmp_path, "design")[0] == EXIT_INVALID
    monkeypatch.setenv("KRAUS_SCOPE_THREADS", "0")
    assert run(tmp_path, "design")[0] == EXIT_INVALID


def test_thread_cap_does_not_change_results(tmp_path, monkeypatch):
    config = {"verify": {"ell_max": 1}}
    monkeypatch.setenv("KRAUS_SCOPE_THREADS", "1")
    run(tmp_path, "verify-kernel", config, name="one")
    monkeypatch.setenv("KRAUS_SCOPE_THREADS", "4")
    run(tmp_path, "verify-kernel", config, name="four")
    for f in sorted((tmp_path / "one").iterdir()):
        assert f.read_bytes() == (tmp_path / "four" / f.name).read_bytes(), f.name


def test_console_entry_points(tmp_path):
    out = tmp_path / "cli"
    res = subprocess.run(
        [sys.executable, "-m", "kraus_scope", "design", "--out", str(out)], capture_output=True, text=True
    )
    assert res.returncode == 0
    assert "200 px per beam" in res.stdout
    res = subprocess.run([sys.executable, "-m", "kraus_scope", "frobnicate"], capture_output=True, text=True)
    assert res.returncode == 2
