"""Command-line pipeline: simulate, reconstruct, evaluate, bench, oracle-check.

Every subcommand resolves its configuration from three layers (command-line
flag, then config file, then built-in default), can print the resolved
result with ``--dump-config``, and writes a manifest next to any file it
produces.  Manifests carry the resolved config, input/output checksums, and
the tool version, and deliberately no timestamps, so identical runs yield
byte-identical artifacts.

Exit codes: 0 success, 1 usage, 2 input validation, 3 I/O, 4 reference
check breach.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from .errors import SnapspecError, ValidationError
from .fidelity import (
    FidelityProblem,
    fidelity_solve,
    gdm_fidelity_step,
    lipschitz_bound,
    subproblem_objective,
)
from .metrics import evaluate as evaluate_metrics
from .optics import (
    FrequencyOperator,
    NoiseModel,
    OpticalSystem,
    add_noise,
    apply_forward_frequency,
    build_frequency_operator,
    forward_encode,
)
from .oracle import DenseSystem
from .synth import rgb_response, rotating_psf_stack, smooth_cube
from .tensorio import load_response_csv, load_tensor, save_tensor
from .unfolding import (
    DENOISERS,
    INITIALIZERS,
    StageSchedule,
    reconstruct as run_reconstruct,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_ORACLE = 4


class _Parser(argparse.ArgumentParser):
    """argparse parser with the exit-code contract's usage code (1, not 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "%s: error: %s\n" % (self.prog, message))


# ---------------------------------------------------------------------------
# config plumbing: flag > file > default, flat key=value files


def _conv_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValidationError("expected an integer, got %r" % text)


def _conv_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValidationError("expected a number, got %r" % text)


def _conv_str(text: str) -> str:
    return text


def _conv_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValidationError("expected a boolean, got %r" % text)


def _conv_choice(*choices):
    def conv(text: str):
        if text not in choices:
            raise ValidationError("expected one of %s, got %r" % ("/".join(choices), text))
        return text

    return conv


class Key:
    """One config entry: name, converter, default, help text."""

    def __init__(self, name, conv, default, help_text, required=False):
        self.name = name
        self.conv = conv
        self.default = default
        self.help = help_text
        self.required = required

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


_COMMON_KEYS = [
    Key("threads", _conv_int, 0,
        "worker thread cap (0 = auto); results are identical for any value"),
]


def _add_config_flags(sub: argparse.ArgumentParser, keys: list[Key]) -> None:
    sub.add_argument("--config", default=None, metavar="FILE",
                     help="flat key=value config file; flags override it")
    sub.add_argument("--dump-config", action="store_true",
                     help="print the fully resolved config and exit")
    for key in keys:
        if isinstance(key.default, bool):
            sub.add_argument(key.flag, dest=key.name, default=None,
                             action="store_const", const=True, help=key.help)
        else:
            sub.add_argument(key.flag, dest=key.name, default=None,
                             metavar=key.name.upper(), help=key.help)


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(
                    "%s:%d: expected key=value, got %r" % (path, lineno, line)
                )
            name, _, value = line.partition("=")
            values[name.strip()] = value.strip()
    return values


def _resolve_config(args: argparse.Namespace, keys: list[Key],
                    parser: argparse.ArgumentParser) -> dict:
    file_values: dict[str, str] = {}
    if args.config:
        file_values = _read_config_file(args.config)
        known = {key.name for key in keys}
        for name in file_values:
            if name not in known:
                raise ValidationError("unknown config key %r in %s" % (name, args.config))
    resolved = {}
    for key in keys:
        flag_value = getattr(args, key.name)
        if flag_value is not None:
            resolved[key.name] = flag_value if isinstance(flag_value, bool) \
                else key.conv(flag_value)
        elif key.name in file_values:
            resolved[key.name] = key.conv(file_values[key.name])
        else:
            resolved[key.name] = key.default
    if args.dump_config:
        for name in sorted(resolved):
            print("%s=%s" % (name, resolved[name]))
        raise SystemExit(EXIT_OK)
    for key in keys:
        if key.required and resolved[key.name] in (None, ""):
            parser.error("missing required %s" % key.flag)
    return resolved


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(anchor_path: str, command: str, config: dict,
                    inputs: list[str], outputs: list[str]) -> str:
    manifest = {
        "tool": "snapspec",
        "version": __version__,
        "command": command,
        "config": {name: config[name] for name in sorted(config)},
        "inputs": {path: _sha256(path) for path in sorted(inputs)},
        "outputs": {path: _sha256(path) for path in sorted(outputs)},
    }
    path = anchor_path + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_pgm(path: str, image: np.ndarray) -> None:
    """8-bit binary PGM preview of a 2-D array, clipped to [0, 1]."""
    data = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (data.shape[1], data.shape[0]))
        fh.write(data.tobytes())


# ---------------------------------------------------------------------------
# spec-string parsing (noise, denoiser, initializer, schedule)


def _parse_kv_args(text: str, what: str) -> dict[str, str]:
    out: dict[str, str] = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise ValidationError("%s: expected key=value, got %r" % (what, item))
        name, _, value = item.partition("=")
        out[name.strip()] = value.strip()
    return out


def parse_noise_spec(spec: str, seed: int) -> NoiseModel:
    """'none', 'default', or 'gaussian=SIGMA,poisson_bits=BITS'."""
    if spec == "none":
        return NoiseModel(gaussian_sigma=0.0, poisson_bits=0, seed=seed)
    if spec == "default":
        return NoiseModel(seed=seed)
    pairs = _parse_kv_args(spec, "noise spec")
    sigma = 0.0
    bits = 0
    for name, value in pairs.items():
        if name == "gaussian":
            sigma = _conv_float(value)
        elif name == "poisson_bits":
            bits = _conv_int(value)
        else:
            raise ValidationError(
                "noise spec: unknown key %r (valid: gaussian, poisson_bits)" % name
            )
    return NoiseModel(gaussian_sigma=sigma, poisson_bits=bits, seed=seed)


def parse_denoiser_spec(spec: str):
    """'identity', 'gaussian[:std=S]', 'tv[:lambda=L,iters=N]', 'quadratic'."""
    name, _, rest = spec.partition(":")
    if name not in DENOISERS:
        raise ValidationError(
            "unknown denoiser %r; valid: %s" % (name, ", ".join(sorted(DENOISERS)))
        )
    pairs = _parse_kv_args(rest, "denoiser spec")
    if name == "identity" or name == "quadratic":
        if pairs:
            raise ValidationError("denoiser %r takes no parameters" % name)
        return DENOISERS[name]()
    if name == "gaussian":
        std = _conv_float(pairs.pop("std", "1.0"))
        if pairs:
            raise ValidationError("gaussian denoiser: unknown keys %r" % sorted(pairs))
        return DENOISERS[name](spatial_std=std)
    weight = _conv_float(pairs.pop("lambda", "0.01"))
    iters = _conv_int(pairs.pop("iters", "30"))
    if pairs:
        raise ValidationError("tv denoiser: unknown keys %r" % sorted(pairs))
    return DENOISERS[name](weight=weight, iters=iters)


def parse_init_spec(spec: str):
    """'zero', 'mean', 'adjoint', or 'rand[:seed=N]'."""
    name, _, rest = spec.partition(":")
    if name not in INITIALIZERS:
        raise ValidationError(
            "unknown initializer %r; valid: %s" % (name, ", ".join(sorted(INITIALIZERS)))
        )
    pairs = _parse_kv_args(rest, "initializer spec")
    if name == "rand":
        seed = _conv_int(pairs.pop("seed", "0"))
        if pairs:
            raise ValidationError("rand initializer: unknown keys %r" % sorted(pairs))
        return INITIALIZERS[name](seed=seed)
    if pairs:
        raise ValidationError("initializer %r takes no parameters" % name)
    return INITIALIZERS[name]()


def parse_schedule_spec(spec: str, n_stages: int, prior_weight: float,
                        zeta: float) -> StageSchedule:
    """'geometric:GAMMA0,RATIO' or 'constant:GAMMA'."""
    name, _, rest = spec.partition(":")
    if name == "geometric":
        parts = rest.split(",") if rest else []
        if len(parts) != 2:
            raise ValidationError("geometric schedule needs GAMMA0,RATIO, got %r" % rest)
        return StageSchedule.geometric(
            n_stages, _conv_float(parts[0]), _conv_float(parts[1]), prior_weight, zeta
        )
    if name == "constant":
        if not rest or "," in rest:
            raise ValidationError("constant schedule needs a single GAMMA, got %r" % rest)
        return StageSchedule.constant(n_stages, _conv_float(rest), prior_weight, zeta)
    raise ValidationError(
        "unknown schedule %r; valid: geometric:GAMMA0,RATIO, constant:GAMMA" % name
    )


def _load_system(psf_path: str, response_path: str) -> OpticalSystem:
    psfs = load_tensor(psf_path)
    if psfs.ndim != 3:
        raise ValidationError("PSF stack must be a 3-D tensor (bands, k, k)")
    response = load_response_csv(response_path)
    return OpticalSystem(psfs=psfs, response=response)


def _load_cube(path: str) -> np.ndarray:
    cube = load_tensor(path)
    if cube.ndim != 3:
        raise ValidationError("%s: expected a 3-D tensor, got %d-D" % (path, cube.ndim))
    return np.asarray(cube, dtype=np.float64)


# ---------------------------------------------------------------------------
# subcommands

_SIMULATE_KEYS = [
    Key("cube", _conv_str, "", "input spectral cube (.htns)", required=True),
    Key("psf", _conv_str, "", "PSF stack tensor (bands, k, k) (.htns)", required=True),
    Key("response", _conv_str, "", "spectral response CSV", required=True),
    Key("out", _conv_str, "", "output coded image (.htns)", required=True),
    Key("boundary", _conv_choice("circular", "valid-crop"), "circular",
        "convolution boundary handling"),
    Key("noise", _conv_str, "default",
        "'none', 'default' (gaussian=7e-5,poisson_bits=14), or explicit spec"),
    Key("seed", _conv_int, 0, "noise RNG seed"),
    Key("export_pgm", _conv_str, "", "optional 8-bit grayscale preview path"),
] + _COMMON_KEYS


def _cmd_simulate(config: dict) -> int:
    cube = _load_cube(config["cube"])
    system = _load_system(config["psf"], config["response"])
    noise = parse_noise_spec(config["noise"], config["seed"])
    coded = forward_encode(cube, system, boundary=config["boundary"])
    coded = add_noise(coded, noise)
    save_tensor(coded, config["out"])
    outputs = [config["out"]]
    if config["export_pgm"]:
        _write_pgm(config["export_pgm"], coded.mean(axis=2))
        outputs.append(config["export_pgm"])
    _write_manifest(
        config["out"], "simulate", config,
        [config["cube"], config["psf"], config["response"]], outputs,
    )
    print("wrote %s (%dx%dx3)" % (config["out"], coded.shape[0], coded.shape[1]))
    return EXIT_OK


_RECONSTRUCT_KEYS = [
    Key("coded", _conv_str, "", "coded RGB image (.htns)", required=True),
    Key("psf", _conv_str, "", "PSF stack tensor (.htns)", required=True),
    Key("response", _conv_str, "", "spectral response CSV", required=True),
    Key("out", _conv_str, "", "output reconstructed cube (.htns)", required=True),
    Key("stages", _conv_int, 7, "stage count K (K=1 returns the initialization)"),
    Key("method", _conv_choice("admm", "hqs", "gdm"), "admm",
        "admm, hqs (no multipliers), or gdm (gradient-descent fidelity baseline)"),
    Key("gamma_schedule", _conv_str, "geometric:0.01,4",
        "'geometric:GAMMA0,RATIO' or 'constant:GAMMA'"),
    Key("denoiser", _conv_str, "tv:lambda=0.01,iters=30",
        "identity | gaussian[:std=S] | tv[:lambda=L,iters=N] | quadratic"),
    Key("init", _conv_str, "mean", "zero | rand[:seed=N] | mean | adjoint"),
    Key("prior_weight", _conv_float, 0.0,
        "prior weight sigma; denoiser noise level is sqrt(sigma/gamma)"),
    Key("zeta", _conv_float, 1.0, "multiplier update rate (ignored by hqs)"),
    Key("gdm_iters", _conv_int, 10, "inner gradient steps when method=gdm"),
    Key("trace", _conv_bool, False, "also write per-stage trace CSV next to the output"),
    Key("export_pgm", _conv_str, "", "optional band-mean preview path"),
] + _COMMON_KEYS


def _cmd_reconstruct(config: dict) -> int:
    coded = _load_cube(config["coded"])
    if coded.shape[2] != 3:
        raise ValidationError("coded image must have 3 channels, got %d" % coded.shape[2])
    system = _load_system(config["psf"], config["response"])
    if config["stages"] < 1:
        raise ValidationError("stages must be >= 1, got %d" % config["stages"])
    schedule = parse_schedule_spec(
        config["gamma_schedule"], config["stages"], config["prior_weight"], config["zeta"]
    )
    denoiser = parse_denoiser_spec(config["denoiser"])
    initializer = parse_init_spec(config["init"])
    op = build_frequency_operator(system, coded.shape[0], coded.shape[1])
    mode = "hqs" if config["method"] == "hqs" else "admm"
    solver = "gdm" if config["method"] == "gdm" else "exact"
    result = run_reconstruct(
        coded, op, schedule, denoiser, initializer,
        mode=mode, trace=config["trace"], solver=solver, gdm_iters=config["gdm_iters"],
    )
    save_tensor(result.cube, config["out"])
    outputs = [config["out"]]
    if config["trace"]:
        trace_path = config["out"] + ".trace.csv"
        with open(trace_path, "w", encoding="utf-8") as fh:
            fh.write("stage,fidelity,delta,gamma\n")
            for rec in result.trace:
                fh.write(
                    "%d,%.17g,%.17g,%.17g\n"
                    % (rec.stage, rec.data_fidelity, rec.delta, rec.gamma)
                )
        outputs.append(trace_path)
    if config["export_pgm"]:
        _write_pgm(config["export_pgm"], result.cube.mean(axis=2))
        outputs.append(config["export_pgm"])
    _write_manifest(
        config["out"], "reconstruct", config,
        [config["coded"], config["psf"], config["response"]], outputs,
    )
    print(
        "wrote %s (%dx%dx%d, %d stages, %s)"
        % (
            config["out"], result.cube.shape[0], result.cube.shape[1],
            result.cube.shape[2], config["stages"], config["method"],
        )
    )
    return EXIT_OK


_EVALUATE_KEYS = [
    Key("recon", _conv_str, "", "reconstructed cube (.htns)", required=True),
    Key("gt", _conv_str, "", "ground-truth cube (.htns)", required=True),
    Key("crop", _conv_int, 20, "pixels cropped per edge before measuring"),
    Key("out_json", _conv_str, "", "optional path for the JSON report line"),
    Key("rmse_csv", _conv_str, "", "optional per-pixel RMSE map CSV (cropped region)"),
] + _COMMON_KEYS


def _cmd_evaluate(config: dict) -> int:
    recon = _load_cube(config["recon"])
    gt = _load_cube(config["gt"])
    report = evaluate_metrics(recon, gt, crop=config["crop"])
    line = report.to_json()
    print(line)
    print(
        "psnr %.2f dB | sam %.3f deg | ssim %.4f | crop %d"
        % (report.psnr_db, report.sam_deg, report.ssim, report.crop),
        file=sys.stderr,
    )
    outputs = []
    if config["out_json"]:
        with open(config["out_json"], "w", encoding="utf-8") as fh:
            fh.write(line + "\n")
        outputs.append(config["out_json"])
    if config["rmse_csv"]:
        c = config["crop"]
        a = recon[c:-c, c:-c] if c else recon
        b = gt[c:-c, c:-c] if c else gt
        rmse = np.sqrt(np.mean((a - b) ** 2, axis=2))
        np.savetxt(config["rmse_csv"], rmse, fmt="%.8g", delimiter=",")
        outputs.append(config["rmse_csv"])
    if outputs:
        _write_manifest(outputs[0], "evaluate", config,
                        [config["recon"], config["gt"]], outputs)
    return EXIT_OK


_BENCH_KEYS = [
    Key("sizes", _conv_str, "8,64,512", "comma list of square image extents"),
    Key("bands", _conv_str, "8", "comma list of band counts"),
    Key("gamma", _conv_float, 0.5, "anchor weight used in timed solves"),
    Key("repeats", _conv_int, 3, "median-of-N repeats per timing"),
    Key("seed", _conv_int, 0, "instance RNG seed"),
    Key("out", _conv_str, "", "optional CSV path (default: stdout)"),
    Key("matched_tol", _conv_float, 1e-6,
        "relative objective gap defining 'matched accuracy' for the GDM row"),
    Key("matched_cap", _conv_int, 20000, "iteration cap for the matched-GDM row"),
] + _COMMON_KEYS


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValidationError("%s: expected comma-separated integers, got %r" % (what, text))
    if not values:
        raise ValidationError("%s: empty list" % what)
    return values


def _median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(max(1, repeats)):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def _cmd_bench(config: dict) -> int:
    sizes = _parse_int_list(config["sizes"], "sizes")
    bands_list = _parse_int_list(config["bands"], "bands")
    gamma = config["gamma"]
    if not gamma > 0:
        raise ValidationError("gamma must be positive")
    rng = np.random.default_rng(config["seed"])
    rows = []
    failures = []
    for size in sizes:
        for bands in bands_list:
            kernel = 41 if size >= 64 else (5 if size >= 6 else 3)
            system = OpticalSystem(
                psfs=rotating_psf_stack(bands, kernel), response=rgb_response(bands)
            )
            op = build_frequency_operator(system, size, size)
            truth = smooth_cube(size, size, bands, seed=config["seed"])
            coded = apply_forward_frequency(op, truth)
            anchor = np.asarray(rng.standard_normal(truth.shape))
            prob = FidelityProblem.from_coded_image(op, coded, gamma)
            step = 1.0 / (lipschitz_bound(op) + gamma)

            t_exact = _median_time(lambda: fidelity_solve(prob, anchor), config["repeats"])
            rows.append((size, bands, "analytical", t_exact, ""))

            t_gdm10 = _median_time(
                lambda: gdm_fidelity_step(prob, anchor, anchor, step, 10),
                config["repeats"],
            )
            rows.append((size, bands, "gdm10", t_gdm10, ""))

            # one matched-accuracy GDM run: iterate until the subproblem
            # objective is within matched_tol of the closed-form optimum
            exact = fidelity_solve(prob, anchor)
            target = subproblem_objective(prob, exact, anchor)
            start = time.perf_counter()
            x = np.array(anchor, copy=True)
            iters_done = 0
            chunk = 50
            while iters_done < config["matched_cap"]:
                x = gdm_fidelity_step(prob, anchor, x, step, chunk)
                iters_done += chunk
                gap = subproblem_objective(prob, x, anchor) - target
                if gap <= config["matched_tol"] * max(1.0, abs(target)):
                    break
            t_matched = time.perf_counter() - start
            rows.append((size, bands, "gdm_matched", t_matched, "iters=%d" % iters_done))

            if size * size * bands <= 4096:
                dense = DenseSystem.from_system(system, size, size)
                t_dense = _median_time(
                    lambda: dense.ridge_solve(coded, anchor, gamma), config["repeats"]
                )
                rows.append((size, bands, "dense_oracle", t_dense, ""))

            if size >= 512:
                if not t_exact < t_gdm10:
                    failures.append(
                        "size %d bands %d: analytical %.4fs not faster than 10-step GDM %.4fs"
                        % (size, bands, t_exact, t_gdm10)
                    )
                if not t_exact < t_matched:
                    failures.append(
                        "size %d bands %d: analytical %.4fs not faster than matched GDM %.4fs"
                        % (size, bands, t_exact, t_matched)
                    )

    lines = ["size,bands,solver,seconds,detail"]
    lines += ["%d,%d,%s,%.6f,%s" % row for row in rows]
    text = "\n".join(lines) + "\n"
    if config["out"]:
        with open(config["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
        _write_manifest(config["out"], "bench", config, [], [config["out"]])
        print("wrote %s" % config["out"])
    else:
        sys.stdout.write(text)
    if failures:
        for failure in failures:
            print("bench: FAIL %s" % failure, file=sys.stderr)
        return EXIT_ORACLE
    return EXIT_OK


_ORACLE_KEYS = [
    Key("seed", _conv_int, 0, "trial RNG seed"),
    Key("trials", _conv_int, 20, "number of random instances (0 = vacuous pass)"),
] + _COMMON_KEYS


def _random_instance(rng: np.random.Generator, size: int, bands: int, kernel: int):
    psfs = rng.uniform(0.05, 1.0, size=(bands, kernel, kernel))
    psfs /= psfs.sum(axis=(1, 2), keepdims=True)
    response = rng.uniform(0.05, 1.0, size=(3, bands))
    system = OpticalSystem(psfs=psfs, response=response)
    cube = rng.uniform(size=(size, size, bands))
    return system, cube


def _cmd_oracle_check(config: dict, inject_conjugate_bug: bool) -> int:
    trials = config["trials"]
    if trials < 0:
        raise ValidationError("trials must be >= 0")
    if trials == 0:
        print("oracle-check: WARNING 0 trials requested; vacuous PASS")
        return EXIT_OK
    rng = np.random.default_rng(config["seed"])
    gammas = [1e-3, 1.0, 1e3]
    worst = {"forward": 0.0, "ridge": 0.0, "admm": 0.0}

    for trial in range(trials):
        size = 6 if trial % 2 == 0 else 8
        bands = 4 if trial % 3 == 0 else 5
        system, cube = _random_instance(rng, size, bands, kernel=3)
        op = build_frequency_operator(system, size, size)
        if inject_conjugate_bug:
            # deliberate fault: conjugated transfer, for sensitivity demos
            op = FrequencyOperator(
                transfer=np.conj(op.transfer), height=op.height, width=op.width
            )
        dense = DenseSystem.from_system(system, size, size)

        coded = apply_forward_frequency(op, cube)
        ref = dense.forward(cube)
        worst["forward"] = max(
            worst["forward"], float(np.max(np.abs(coded - ref)))
        )

        gamma = gammas[trial % len(gammas)]
        anchor = rng.uniform(size=cube.shape)
        prob = FidelityProblem.from_coded_image(op, ref, gamma)
        got = fidelity_solve(prob, anchor)
        want = dense.ridge_solve(ref, anchor, gamma)
        rel = float(
            np.linalg.norm(got - want) / max(np.linalg.norm(want), 1e-300)
        )
        worst["ridge"] = max(worst["ridge"], rel)

        if trial < 4:
            weight = 0.05
            admm_gamma = 0.3
            schedule = StageSchedule.constant(200, admm_gamma, prior_weight=weight)
            result = run_reconstruct(
                ref, op, schedule, DENOISERS["quadratic"](), INITIALIZERS["zero"]()
            )
            tik = dense.tikhonov_solve(ref, weight)
            rel = float(
                np.linalg.norm(result.cube - tik) / max(np.linalg.norm(tik), 1e-300)
            )
            worst["admm"] = max(worst["admm"], rel)

    tols = {"forward": 1e-12, "ridge": 1e-8, "admm": 1e-6}
    labels = {
        "forward": "frequency forward vs dense matrix (max abs)",
        "ridge": "fidelity_solve vs dense ridge (rel)",
        "admm": "quadratic-prior unfolding vs dense solution (rel)",
    }
    ok = True
    for name in ("forward", "ridge", "admm"):
        passed = worst[name] < tols[name]
        ok = ok and passed
        print(
            "check %-48s %.3e (tol %.0e) %s"
            % (labels[name], worst[name], tols[name], "PASS" if passed else "FAIL")
        )
    if not ok:
        print("oracle-check: FAIL (%d trials)" % trials, file=sys.stderr)
        return EXIT_ORACLE
    print("oracle-check: PASS (%d trials)" % trials)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> _Parser:
    parser = _Parser(prog="snapspec",
                     description="PSF-coded snapshot spectral imaging pipeline")
    parser.add_argument("--version", action="version", version="snapspec " + __version__)
    subs = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    sub = subs.add_parser("simulate", help="encode a spectral cube into a coded image")
    _add_config_flags(sub, _SIMULATE_KEYS)
    sub.set_defaults(keys=_SIMULATE_KEYS, run=_cmd_simulate)

    sub = subs.add_parser("reconstruct", help="recover a cube from a coded image")
    _add_config_flags(sub, _RECONSTRUCT_KEYS)
    sub.set_defaults(keys=_RECONSTRUCT_KEYS, run=_cmd_reconstruct)

    sub = subs.add_parser("evaluate", help="compare a reconstruction against ground truth")
    _add_config_flags(sub, _EVALUATE_KEYS)
    sub.set_defaults(keys=_EVALUATE_KEYS, run=_cmd_evaluate)

    sub = subs.add_parser("bench", help="time the solver paths at several scales")
    _add_config_flags(sub, _BENCH_KEYS)
    sub.set_defaults(keys=_BENCH_KEYS, run=_cmd_bench)

    sub = subs.add_parser("oracle-check",
                          help="verify production solvers against dense references")
    _add_config_flags(sub, _ORACLE_KEYS)
    sub.add_argument("--inject-conjugate-bug", action="store_true",
                     help=argparse.SUPPRESS)
    sub.set_defaults(keys=_ORACLE_KEYS, run=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.error("a command is required")
    try:
        config = _resolve_config(args, args.keys, parser)
        if args.command == "reconstruct":
            # unknown strategy names are usage errors, listing what is valid
            name = config["denoiser"].partition(":")[0]
            if name not in DENOISERS:
                parser.error(
                    "unknown denoiser %r; valid: %s" % (name, ", ".join(sorted(DENOISERS)))
                )
            name = config["init"].partition(":")[0]
            if name not in INITIALIZERS:
                parser.error(
                    "unknown initializer %r; valid: %s"
                    % (name, ", ".join(sorted(INITIALIZERS)))
                )
        if args.command == "oracle-check":
            return _cmd_oracle_check(config, args.inject_conjugate_bug)
        return args.run(config)
    except SnapspecError as exc:
        print("snapspec %s: error: %s" % (args.command, exc), file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print("snapspec %s: i/o error: %s" % (args.command, exc), file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
