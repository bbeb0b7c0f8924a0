"""End-to-end command-line tests: pipelines, exit codes, manifests, determinism."""

import json

import numpy as np
import pytest

from snapspec import load_tensor, save_response_csv, save_tensor
from snapspec.cli import main


def _write_random_system(tmp_path, n_bands=4, kernel=3, seed=0):
    rng = np.random.default_rng(seed)
    psfs = rng.uniform(size=(n_bands, kernel, kernel))
    psfs /= psfs.sum(axis=(1, 2), keepdims=True)
    response = rng.uniform(size=(3, n_bands))
    psf_path = tmp_path / "psf.htns"
    resp_path = tmp_path / "resp.csv"
    save_tensor(psfs, psf_path)
    save_response_csv(resp_path, np.linspace(450.0, 650.0, n_bands), response)
    return str(psf_path), str(resp_path)


def _write_identity_system(tmp_path):
    psfs = np.ones((3, 1, 1))
    psf_path = tmp_path / "id_psf.htns"
    resp_path = tmp_path / "id_resp.csv"
    save_tensor(psfs, psf_path)
    save_response_csv(resp_path, np.array([450.0, 550.0, 650.0]), np.eye(3))
    return str(psf_path), str(resp_path)


def _write_cube(tmp_path, shape=(16, 16, 4), seed=1, name="cube.htns"):
    cube = np.random.default_rng(seed).uniform(size=shape)
    path = tmp_path / name
    save_tensor(cube, path)
    return str(path), cube


def test_identity_simulate_reproduces_cube(tmp_path):
    psf, resp = _write_identity_system(tmp_path)
    cube_path, cube = _write_cube(tmp_path, shape=(16, 16, 3))
    out = str(tmp_path / "coded.htns")
    code = main([
        "simulate", "--cube", cube_path, "--psf", psf, "--response", resp,
        "--out", out, "--noise", "none",
    ])
    assert code == 0
    assert np.array_equal(load_tensor(out), cube)


def test_simulate_byte_deterministic(tmp_path):
    psf, resp = _write_random_system(tmp_path)
    cube_path, _ = _write_cube(tmp_path)
    out_a = str(tmp_path / "a.htns")
    out_b = str(tmp_path / "b.htns")
    base = ["--cube", cube_path, "--psf", psf, "--response", resp, "--seed", "3"]
    assert main(["simulate", *base, "--out", out_a]) == 0
    assert main(["simulate", *base, "--out", out_b]) == 0
    assert (tmp_path / "a.htns").read_bytes() == (tmp_path / "b.htns").read_bytes()


def test_threads_flag_does_not_change_bytes(tmp_path):
    psf, resp = _write_random_system(tmp_path)
    cube_path, _ = _write_cube(tmp_path)
    out_a = str(tmp_path / "t1.htns")
    out_b = str(tmp_path / "t8.htns")
    base = ["--cube", cube_path, "--psf", psf, "--response", resp]
    assert main(["simulate", *base, "--out", out_a, "--threads", "1"]) == 0
    assert main(["simulate", *base, "--out", out_b, "--threads", "8"]) == 0
    assert (tmp_path / "t1.htns").read_bytes() == (tmp_path / "t8.htns").read_bytes()


def test_manifest_contents_and_determinism(tmp_path):
    psf, resp = _write_random_system(tmp_path)
    cube_path, _ = _write_cube(tmp_path)
    out = str(tmp_path / "coded.htns")
    args = [
        "simulate", "--cube", cube_path, "--psf", psf, "--response", resp, "--out", out,
    ]
    assert main(args) == 0
    first = (tmp_path / "coded.htns.manifest.json").read_bytes()
    manifest = json.loads(first)
    assert manifest["tool"] == "snapspec"
    assert manifest["command"] == "simulate"
    assert cube_path in manifest["inputs"]
    assert out in manifest["outputs"]
    assert manifest["config"]["noise"] == "default"
    assert "time" not in json.dumps(manifest).lower() or "timestamp" not in manifest
    assert main(args) == 0
    assert (tmp_path / "coded.htns.manifest.json").read_bytes() == first


def _simulate_noiseless(tmp_path, psf, resp, cube_path):
    coded = str(tmp_path / "coded.htns")
    code = main([
        "simulate", "--cube", cube_path, "--psf", psf, "--response", resp,
        "--out", coded, "--noise", "none",
    ])
    assert code == 0
    return coded


def test_reconstruct_single_stage_returns_initialization(tmp_path):
    psf, resp = _write_random_system(tmp_path)
    cube_path, _ = _write_cube(tmp_path)
    coded = _simulate_noiseless(tmp_path, psf, resp, cube_path)
    out = str(tmp_path / "recon.htns")
    code = main([
        "reconstruct", "--coded", coded, "--psf", psf, "--response", resp,
        "--out", out, "--stages", "1", "--init", "zero",
    ])
    assert code == 0
    assert not load_tensor(out).any()


def test_hqs_flag_equals_admm_with_zero_zeta(tmp_path):
    psf, resp = _write_random_system(tmp_path)
    cube_path, _ = _write_cube(tmp_path)
    coded = _simulate_noiseless(tmp_path, psf, resp, cube_path)
    out_h = str(tmp_path / "h.htns")
    out_a = str(tmp_path / "a.htns")
    base = [
        "--coded", coded, "--psf", psf, "--response", resp, "--stages", "5",
        "--denoiser", "quadratic", "--prior-weight", "0.05",
    ]
    assert main(["reconstruct", *base, "--out", out_h, "--method", "hqs"]) == 0
    assert main(["reconstruct", *base, "--out", out_a, "--method", "admm",
                 "--zeta", "0"]) == 0
    assert (tmp_path / "h.htns").read_bytes() == (tmp_path / "a.htns").read_bytes()


def test_reconstruct_trace_csv(tmp_path):
    psf, resp = _write_random_system(tmp_path)
    cube_path, _ = _write_cube(tmp_path)
    coded = _simulate_noiseless(tmp_path, psf, resp, cube_path)
    out = str(tmp_path / "recon.htns")
    code = main([
        "reconstruct", "--coded", coded, "--psf", psf, "--response", resp,
        "--out", out, "--stages", "4", "--trace",
    ])
    assert code == 0
    lines = (tmp_path / "recon.htns.trace.csv").read_text().strip().splitlines()
    assert lines[0] == "stage,fidelity,delta,gamma"
    assert len(lines) == 5
    first = lines[1].split(",")
    assert first[0] == "1"
    assert first[2] == "nan"  # stage 1 has no predecessor
    for line in lines[2:]:
        parts = line.split(",")
        assert float(parts[1]) >= 0
        assert float(parts[3]) > 0


def test_full_pipeline_with_evaluate(tmp_path, capsys):
    psf, resp = _write_random_system(tmp_path, n_bands=4)
    cube_path, _ = _write_cube(tmp_path, shape=(20, 20, 4))
    coded = _simulate_noiseless(tmp_path, psf, resp, cube_path)
    out = str(tmp_path / "recon.htns")
    assert main([
        "reconstruct", "--coded", coded, "--psf", psf, "--response", resp,
        "--out", out, "--stages", "6", "--denoiser", "tv:lambda=0.005,iters=20",
    ]) == 0
    report_path = str(tmp_path / "report.json")
    code = main([
        "evaluate", "--recon", out, "--gt", cube_path, "--crop", "4",
        "--out-json", report_path,
    ])
    assert code == 0
    captured = capsys.readouterr()
    payload = json.loads(captured.out.strip().splitlines()[-1])
    assert list(payload) == ["psnr_db", "sam_rad", "ssim", "crop"]
    assert payload["crop"] == 4
    assert "deg" in captured.err
    assert json.loads((tmp_path / "report.json").read_text()) == payload


def test_evaluate_rmse_csv(tmp_path):
    cube_path, cube = _write_cube(tmp_path, shape=(16, 16, 3))
    other_path = str(tmp_path / "other.htns")
    save_tensor(cube + 0.1, other_path)
    rmse_path = str(tmp_path / "rmse.csv")
    code = main([
        "evaluate", "--recon", other_path, "--gt", cube_path, "--crop", "2",
        "--rmse-csv", rmse_path,
    ])
    assert code == 0
    grid = np.loadtxt(rmse_path, delimiter=",")
    assert grid.shape == (12, 12)
    assert np.allclose(grid, 0.1, atol=1e-6)


def test_export_pgm(tmp_path):
    psf, resp = _write_identity_system(tmp_path)
    cube_path, _ = _write_cube(tmp_path, shape=(8, 8, 3))
    out = str(tmp_path / "coded.htns")
    preview = str(tmp_path / "preview.pgm")
    assert main([
        "simulate", "--cube", cube_path, "--psf", psf, "--response", resp,
        "--out", out, "--noise", "none", "--export-pgm", preview,
    ]) == 0
    blob = (tmp_path / "preview.pgm").read_bytes()
    assert blob.startswith(b"P5\n8 8\n255\n")
    assert len(blob) == len(b"P5\n8 8\n255\n") + 64


# config resolution


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment line\nstages=3\ndenoiser=identity\n")
    with pytest.raises(SystemExit) as exc:
        main([
            "reconstruct", "--config", str(cfg), "--stages", "9", "--dump-config",
        ])
    assert exc.value.code == 0
    dumped = dict(
        line.split("=", 1) for line in capsys.readouterr().out.strip().splitlines()
    )
    assert dumped["stages"] == "9"  # flag beats file
    assert dumped["denoiser"] == "identity"  # file beats default
    assert dumped["init"] == "mean"  # default survives


def test_unknown_config_key_rejected(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("stagez=3\n")
    code = main(["reconstruct", "--config", str(cfg)])
    assert code == 2


# exit codes


def test_usage_error_missing_required(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["simulate"])
    assert exc.value.code == 1


def test_usage_error_no_command():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_usage_error_unknown_denoiser(tmp_path, capsys):
    psf, resp = _write_random_system(tmp_path)
    cube_path, _ = _write_cube(tmp_path)
    coded = _simulate_noiseless(tmp_path, psf, resp, cube_path)
    with pytest.raises(SystemExit) as exc:
        main([
            "reconstruct", "--coded", coded, "--psf", psf, "--response", resp,
            "--out", str(tmp_path / "r.htns"), "--denoiser", "wavelet",
        ])
    assert exc.value.code == 1
    err = capsys.readouterr().err
    for name in ("gaussian", "identity", "quadratic", "tv"):
        assert name in err


def test_usage_error_unknown_initializer(tmp_path):
    psf, resp = _write_random_system(tmp_path)
    cube_path, _ = _write_cube(tmp_path)
    coded = _simulate_noiseless(tmp_path, psf, resp, cube_path)
    with pytest.raises(SystemExit) as exc:
        main([
            "reconstruct", "--coded", coded, "--psf", psf, "--response", resp,
            "--out", str(tmp_path / "r.htns"), "--init", "warm",
        ])
    assert exc.value.code == 1


def test_validation_error_exit_2(tmp_path):
    psf, resp = _write_random_system(tmp_path)
    cube_path, _ = _write_cube(tmp_path)
    coded = _simulate_noiseless(tmp_path, psf, resp, cube_path)
    code = main([
        "reconstruct", "--coded", coded, "--psf", psf, "--response", resp,
        "--out", str(tmp_path / "r.htns"), "--stages", "0",
    ])
    assert code == 2


def test_corrupt_tensor_exit_2(tmp_path):
    psf, resp = _write_random_system(tmp_path)
    bad = tmp_path / "bad.htns"
    bad.write_bytes(b"XXXX" + b"\x00" * 32)
    code = main([
        "simulate", "--cube", str(bad), "--psf", psf, "--response", resp,
        "--out", str(tmp_path / "o.htns"),
    ])
    assert code == 2


def test_missing_file_exit_3(tmp_path):
    psf, resp = _write_random_system(tmp_path)
    code = main([
        "simulate", "--cube", str(tmp_path / "nope.htns"), "--psf", psf,
        "--response", resp, "--out", str(tmp_path / "o.htns"),
    ])
    assert code == 3


# oracle-check


def test_oracle_check_passes(tmp_path, capsys):
    code = main(["oracle-check", "--trials", "5"])
    assert code == 0
    out = capsys.readouterr().out
    assert "PASS (5 trials)" in out
    assert out.count("PASS") >= 4  # three checks plus the summary


def test_oracle_check_zero_trials_warns(capsys):
    code = main(["oracle-check", "--trials", "0"])
    assert code == 0
    assert "vacuous" in capsys.readouterr().out


def test_oracle_check_detects_injected_bug(capsys):
    code = main(["oracle-check", "--trials", "2", "--inject-conjugate-bug"])
    assert code == 4
    captured = capsys.readouterr()
    assert "FAIL" in captured.out or "FAIL" in captured.err


def test_inject_flag_hidden_from_help(capsys):
    with pytest.raises(SystemExit):
        main(["oracle-check", "--help"])
    assert "inject" not in capsys.readouterr().out


# bench


def test_bench_smoke(tmp_path):
    out = str(tmp_path / "bench.csv")
    code = main([
        "bench", "--sizes", "6,40", "--bands", "4", "--repeats", "1",
        "--matched-cap", "200", "--out", out,
    ])
    assert code == 0
    lines = (tmp_path / "bench.csv").read_text().strip().splitlines()
    assert lines[0] == "size,bands,solver,seconds,detail"
    rows = [line.split(",") for line in lines[1:]]
    solvers_small = {row[2] for row in rows if row[0] == "6"}
    solvers_large = {row[2] for row in rows if row[0] == "40"}
    # dense reference fits at 6x6x4 but not at 40x40x4
    assert "dense_oracle" in solvers_small
    assert "dense_oracle" not in solvers_large
    assert {"analytical", "gdm10", "gdm_matched"} <= solvers_small
    assert {"analytical", "gdm10", "gdm_matched"} <= solvers_large
    for row in rows:
        assert float(row[3]) >= 0.0


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "snapspec" in capsys.readouterr().out
