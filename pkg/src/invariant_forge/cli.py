"""Command-line front end.

Subcommands: simulate (ring ODE -> trajectory.csv + dataset.csv), fit
(dataset -> trace JSON), analyze (spectral report), sweep (convergence map
CSV), verify (built-in acceptance suite). Every command writes a manifest
JSON next to its outputs; data files use 17-significant-digit decimals so a
re-run with the same parameters is byte-identical.

Exit codes: 0 ok, 1 verify found failures, 2 validation/parse error,
3 integrator failure, 4 singular sample covariance, 5 degenerate iteration.
"""

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _rng, acceptance, gaussmodel, linalg, rfmr, scf, spectral
from .errors import (
    DegenerateVariance,
    InsufficientData,
    InvariantForgeError,
    SingularCovariance,
    StateOutOfRange,
)

SEED_ENV_VAR = "INVARIANT_FORGE_SEED"

EXIT_VERIFY_FAILED = 1
EXIT_VALIDATION = 2
EXIT_INTEGRATOR = 3
EXIT_SINGULAR = 4
EXIT_DEGENERATE = 5


class CommandError(Exception):
    def __init__(self, message: str, code: int = EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fail(message: str, code: int = EXIT_VALIDATION) -> CommandError:
    return CommandError(message, code)


def _effective_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise _fail(f"{SEED_ENV_VAR} must be an integer, got {env!r}")
    return 0


def _parse_vector(text: str, name: str) -> np.ndarray:
    try:
        values = [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise _fail(f"{name}: expected comma-separated numbers, got {text!r}")
    if len(values) < 2:
        raise _fail(f"{name}: need at least 2 components")
    return np.array(values)


def _load_config(path: str, required: dict, optional: dict | None = None) -> dict:
    optional = optional or {}
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise _fail(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise _fail(f"config is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise _fail("config must be a JSON object")
    unknown = set(raw) - set(required) - set(optional)
    if unknown:
        raise _fail(f"unknown config keys: {sorted(unknown)}")
    missing = set(required) - set(raw)
    if missing:
        raise _fail(f"missing config keys: {sorted(missing)}")
    return raw


def _as_number(cfg: dict, key: str, kind=float):
    value = cfg[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(f"config field {key!r} must be a number")
    if kind is int and int(value) != value:
        raise _fail(f"config field {key!r} must be an integer")
    return kind(value)


def _as_float_list(cfg: dict, key: str, allow_inf: bool = False) -> list[float]:
    value = cfg[key]
    if not isinstance(value, list) or not value:
        raise _fail(f"config field {key!r} must be a non-empty list")
    out = []
    for item in value:
        if allow_inf and isinstance(item, str) and item.lower() in ("inf", "infinity"):
            out.append(math.inf)
            continue
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise _fail(f"config field {key!r} must contain numbers")
        out.append(float(item))
    return out


def _write_manifest(out_dir: Path, command: str, parameters: dict, inputs: list[str],
                    outputs: list[str], started: float) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "parameters": parameters,
        "inputs": inputs,
        "outputs": outputs,
        "duration_s": time.perf_counter() - started,
    }
    path = out_dir / f"{command}_manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = _load_config(
        args.config,
        required={"n": int, "rates": list, "x0": list, "dt": float, "steps": int,
                  "sigma2": float, "seed": int},
    )
    n = _as_number(cfg, "n", int)
    if n < 2:
        raise _fail("config field 'n' must be >= 2")
    rates = _as_float_list(cfg, "rates")
    x0 = _as_float_list(cfg, "x0")
    if len(rates) != n:
        raise _fail(f"config field 'rates' must have length n={n}")
    if len(x0) != n:
        raise _fail(f"config field 'x0' must have length n={n}")
    dt = _as_number(cfg, "dt")
    steps = _as_number(cfg, "steps", int)
    sigma2 = _as_number(cfg, "sigma2")
    seed = _as_number(cfg, "seed", int)
    if dt <= 0.0:
        raise _fail("config field 'dt' must be positive")
    if steps < 1:
        raise _fail("config field 'steps' must be >= 1")
    if sigma2 < 0.0:
        raise _fail("config field 'sigma2' must be nonnegative")

    try:
        system = rfmr.RfmrSystem(np.array(rates))
        trajectory = rfmr.integrate_rk4(system, np.array(x0), dt, steps)
    except StateOutOfRange as exc:
        raise _fail(str(exc), EXIT_INTEGRATOR)
    except (ValueError, InvariantForgeError) as exc:
        raise _fail(str(exc))
    dataset = rfmr.add_noise(trajectory, sigma2, seed)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    traj_path = out_dir / "trajectory.csv"
    _write_csv(
        traj_path,
        ["t"] + [f"x{i+1}" for i in range(n)],
        (
            [_fmt(k * dt)] + [_fmt(v) for v in trajectory.states[k]]
            for k in range(trajectory.states.shape[0])
        ),
    )
    data_path = out_dir / "dataset.csv"
    _write_csv(
        data_path,
        ["k"] + [f"z{i+1}" for i in range(n)],
        (
            [str(k + 1)] + [_fmt(v) for v in dataset.samples[k]]
            for k in range(dataset.samples.shape[0])
        ),
    )
    manifest = _write_manifest(
        out_dir, "simulate", cfg, [args.config], [str(traj_path), str(data_path)], started
    )
    print(f"wrote {traj_path}, {data_path}, {manifest}")
    return 0


def _read_dataset(path: str) -> np.ndarray:
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            rows = [line.strip() for line in fh if line.strip()]
    except FileNotFoundError:
        raise _fail(f"dataset not found: {path}")
    if len(header) < 3 or header[0] != "k" or any(
        name != f"z{i+1}" for i, name in enumerate(header[1:])
    ):
        raise _fail(f"dataset header must be k,z1,...,zn; got {header}")
    n = len(header) - 1
    samples = np.empty((len(rows), n))
    for i, line in enumerate(rows):
        parts = line.split(",")
        if len(parts) != n + 1:
            raise _fail(f"dataset row {i+1} has {len(parts)} fields, expected {n+1}")
        try:
            samples[i] = [float(p) for p in parts[1:]]
        except ValueError:
            raise _fail(f"dataset row {i+1} contains a non-numeric value")
    if samples.shape[0] == 0:
        raise _fail("dataset has no rows")
    return samples


def _trace_payload(trace: scf.IrasTrace, reference: np.ndarray | None) -> dict:
    payload = {
        "thetas": [[float(v) for v in theta] for theta in trace.thetas],
        "ratios": [float(r) for r in trace.ratios],
        "status": trace.status.value,
        "iterations": trace.iterations,
    }
    if reference is not None:
        radians = trace.angle_to(reference)
        payload["angle_to_reference"] = {
            "radians": radians,
            "degrees": math.degrees(radians),
        }
    return payload


def cmd_fit(args) -> int:
    started = time.perf_counter()
    samples = _read_dataset(args.dataset)
    n = samples.shape[1]
    if args.sigma_bar2 <= 0.0:
        raise _fail("--sigma-bar2 must be positive")
    if args.tol <= 0.0:
        raise _fail("--tol must be positive")
    if args.max_iters < 1:
        raise _fail("--max-iters must be >= 1")

    if args.theta0 is not None:
        theta0 = _parse_vector(args.theta0, "--theta0")
        if theta0.size != n:
            raise _fail(f"--theta0 must have {n} components to match the dataset")
        norm = np.linalg.norm(theta0)
        if norm == 0.0:
            raise _fail("--theta0 must be nonzero")
        theta0 = theta0 / norm
        theta0_seed = None
    else:
        theta0_seed = args.random_theta0 if args.random_theta0 is not None else _effective_seed(args)
        theta0 = _rng.unit_sphere_vector(_rng.generator(theta0_seed), n)

    reference = None
    if args.reference is not None:
        reference = _parse_vector(args.reference, "--reference")
        if reference.size != n:
            raise _fail(f"--reference must have {n} components")

    config = scf.IrasConfig(theta0, args.sigma_bar2, max_iters=args.max_iters, conv_tol=args.tol)
    try:
        trace = scf.run_iras_empirical(samples, config)
    except (InsufficientData, DegenerateVariance) as exc:
        raise _fail(str(exc))
    except SingularCovariance as exc:
        raise _fail(str(exc), EXIT_SINGULAR)

    payload = _trace_payload(trace, reference)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_path = out_dir / "trace.json"
    with open(trace_path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    parameters = {
        "dataset": args.dataset,
        "sigma_bar2": args.sigma_bar2,
        "theta0": [float(v) for v in theta0],
        "theta0_seed": theta0_seed,
        "tol": args.tol,
        "max_iters": args.max_iters,
        "reference": None if reference is None else [float(v) for v in reference],
    }
    _write_manifest(out_dir, "fit", parameters, [args.dataset], [str(trace_path)], started)

    if args.json:
        print(json.dumps(payload))
    else:
        print(f"status: {trace.status.value} after {trace.iterations} iterations")
        print("theta_final:", ", ".join(_fmt(v) for v in trace.final))
        if reference is not None:
            angle = payload["angle_to_reference"]
            print(f"angle to reference: {angle['radians']:.6e} rad "
                  f"({angle['degrees']:.4f} deg)")
        print(f"trace written to {trace_path}")
    if trace.status is scf.IrasStatus.DEGENERATE:
        return EXIT_DEGENERATE
    return 0


def _analysis_payload(sigma2: float, sigma_bar2: float, n: int, epsilon: float | None) -> dict:
    report = spectral.check_conditions(sigma2, sigma_bar2)
    model = gaussmodel.MeasurementModel.canonical(n, sigma2)
    equilibrium = spectral.equilibrium_spectrum(model, sigma_bar2)
    payload = {
        "sigma2": sigma2,
        "sigma_bar2": sigma_bar2,
        "n": n,
        "conditions": {
            "cond_a": report.cond_a,
            "cond_b": report.cond_b,
            "equilibrium": report.equilibrium,
            "r": None if not report.r_defined else report.r,
            "r_defined": report.r_defined,
        },
        "equilibrium_spectrum": {
            "analytic": [float(v) for v in equilibrium.analytic],
            "numerical": [float(v) for v in equilibrium.numerical],
            "max_abs_diff": equilibrium.max_abs_diff,
            "asymmetry": equilibrium.asymmetry,
        },
    }
    if epsilon is not None:
        closed = spectral.perturbed_spectrum(epsilon, sigma2, sigma_bar2, n)
        sigma = gaussmodel.signal_covariance(model)
        theta0 = np.zeros(n)
        theta0[0], theta0[1] = 1.0, epsilon
        theta0 /= np.linalg.norm(theta0)
        tilde = gaussmodel.tilde_sigma(theta0, sigma, sigma_bar2 * np.eye(n))
        numeric = linalg.pencil_eig(sigma, tilde)
        analytic = np.sort(
            np.concatenate(([closed.lambda1, closed.lambda2], np.full(n - 2, sigma_bar2)))
        )[::-1]
        idx = int(np.argmin(np.abs(numeric.eigenvalues - closed.lambda1)))
        payload["perturbed_spectrum"] = {
            "epsilon": epsilon,
            "lambda1": closed.lambda1,
            "lambda2": closed.lambda2,
            "lambda_rest": closed.lambda_rest,
            "delta": closed.delta,
            "c_of_lambda1": closed.c_of_lambda1,
            "w": [float(v) for v in closed.w],
            "crosscheck": {
                "eigenvalue_residual": float(np.max(np.abs(analytic - numeric.eigenvalues))),
                "eigenvector_distance": linalg.sign_invariant_distance(
                    closed.w, numeric.eigenvectors[:, idx]
                ),
            },
        }
    return payload


def cmd_analyze(args) -> int:
    started = time.perf_counter()
    if args.sigma2 <= 0.0 or args.sigma_bar2 <= 0.0:
        raise _fail("--sigma2 and --sigma-bar2 must be positive")
    if args.n < 2:
        raise _fail("--n must be >= 2")
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        payload = _analysis_payload(args.sigma2, args.sigma_bar2, args.n, args.epsilon)

    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        report_path = out_dir / "analysis.json"
        with open(report_path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        parameters = {k: payload[k] for k in ("sigma2", "sigma_bar2", "n")}
        parameters["epsilon"] = args.epsilon
        _write_manifest(out_dir, "analyze", parameters, [], [str(report_path)], started)

    if args.json:
        print(json.dumps(payload))
    else:
        cond = payload["conditions"]
        print(f"cond_a (one-step window): {cond['cond_a']}")
        print(f"cond_b (contraction window): {cond['cond_b']}")
        print(f"equilibrium (sigma_bar < 1): {cond['equilibrium']}")
        print(f"contraction factor r: {cond['r']}")
        spectrum = payload["equilibrium_spectrum"]
        print(f"spectrum at v1: {spectrum['analytic']} "
              f"(numerical agreement {spectrum['max_abs_diff']:.2e})")
        if "perturbed_spectrum" in payload:
            ps = payload["perturbed_spectrum"]
            print(f"tilted start: lambda1 {ps['lambda1']:.12g}, lambda2 {ps['lambda2']:.12g}, "
                  f"crosscheck residual {ps['crosscheck']['eigenvalue_residual']:.2e}")
    return 0


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    cfg = _load_config(
        args.config,
        required={"sigma2": list, "sigma_bar2": list, "epsilon": list, "n": int},
        optional={"max_iters": int, "tol": float, "angle_tol": float},
    )
    n = _as_number(cfg, "n", int)
    if n < 2:
        raise _fail("config field 'n' must be >= 2")
    sigma2_axis = _as_float_list(cfg, "sigma2")
    sigma_bar2_axis = _as_float_list(cfg, "sigma_bar2")
    epsilon_axis = _as_float_list(cfg, "epsilon", allow_inf=True)
    max_iters = int(cfg.get("max_iters", 100))
    tol = float(cfg.get("tol", 1e-9))
    angle_tol = float(cfg.get("angle_tol", 1e-6))
    if any(v <= 0.0 for v in sigma2_axis + sigma_bar2_axis):
        raise _fail("sigma2 and sigma_bar2 values must be positive")

    import warnings

    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for sigma2 in sigma2_axis:
            model = gaussmodel.MeasurementModel.canonical(n, sigma2)
            sigma = gaussmodel.signal_covariance(model)
            for sigma_bar2 in sigma_bar2_axis:
                for epsilon in epsilon_axis:
                    theta0 = np.zeros(n)
                    if math.isinf(epsilon):
                        theta0[1] = 1.0
                    else:
                        theta0[0], theta0[1] = 1.0, epsilon
                        theta0 /= np.linalg.norm(theta0)
                    config = scf.IrasConfig(theta0, sigma_bar2, max_iters=max_iters, conv_tol=tol)
                    trace = scf.run_iras(sigma, None, config)
                    angle = trace.angle_to(model.v1)
                    converged = trace.status is scf.IrasStatus.CONVERGED and angle < angle_tol
                    rows.append([
                        _fmt(sigma2),
                        _fmt(sigma_bar2),
                        "inf" if math.isinf(epsilon) else _fmt(epsilon),
                        str(converged).lower(),
                        str(trace.iterations),
                        _fmt(angle),
                    ])

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    sweep_path = out_dir / "sweep.csv"
    _write_csv(sweep_path, ["sigma2", "sigma_bar2", "epsilon", "converged", "iters", "final_angle"], rows)
    _write_manifest(out_dir, "sweep", cfg, [args.config], [str(sweep_path)], started)
    print(f"wrote {sweep_path} ({len(rows)} cells)")
    return 0


def cmd_verify(args) -> int:
    tamper = {}
    for item in args.tamper or []:
        if "=" not in item:
            raise _fail("--tamper expects NAME=FACTOR")
        name, _, factor = item.partition("=")
        if name not in acceptance.CRITERIA:
            raise _fail(f"unknown criterion {name!r}; choices: {list(acceptance.CRITERION_IDS)}")
        try:
            tamper[name] = float(factor)
        except ValueError:
            raise _fail(f"--tamper factor must be a number, got {factor!r}")
    for name in args.only or []:
        if name not in acceptance.CRITERIA:
            raise _fail(f"unknown criterion {name!r}; choices: {list(acceptance.CRITERION_IDS)}")

    results = acceptance.run_all(only=args.only, tamper=tamper)
    payload = {
        "version": __version__,
        "criteria": [
            {
                "id": r.cid,
                "passed": r.passed,
                "runtime_s": r.runtime,
                "details": r.details,
            }
            for r in results
        ],
        "all_passed": all(r.passed for r in results),
    }
    if args.json:
        print(json.dumps(payload))
    else:
        for r in results:
            mark = "PASS" if r.passed else "FAIL"
            print(f"{mark}  {r.cid}  ({r.runtime:.2f}s)  {r.details}")
        total = sum(r.runtime for r in results)
        print(f"{'all passed' if payload['all_passed'] else 'FAILURES PRESENT'} "
              f"({len(results)} criteria, {total:.1f}s)")
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "verify_report.json", "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    return 0 if payload["all_passed"] else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invariant-forge",
        description="Linear conserved-quantity discovery from noisy trajectory data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate the ring ODE and emit a noisy dataset")
    p_sim.add_argument("--config", required=True, help="JSON with n, rates, x0, dt, steps, sigma2, seed")
    p_sim.add_argument("--out", default=".", help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="run the estimator on a dataset CSV")
    p_fit.add_argument("dataset", help="CSV with header k,z1,...,zn")
    p_fit.add_argument("--sigma-bar2", type=float, required=True, dest="sigma_bar2")
    p_fit.add_argument("--theta0", help="comma-separated start direction (normalized internally)")
    p_fit.add_argument("--random-theta0", type=int, dest="random_theta0", metavar="SEED",
                       help="draw the start uniformly on the sphere from SEED")
    p_fit.add_argument("--seed", type=int, help=f"run seed (fallback: ${SEED_ENV_VAR}, then 0)")
    p_fit.add_argument("--tol", type=float, default=1e-9)
    p_fit.add_argument("--max-iters", type=int, default=100, dest="max_iters")
    p_fit.add_argument("--reference", help="comma-separated direction to report the angle against")
    p_fit.add_argument("--out", default=".")
    p_fit.add_argument("--json", action="store_true")
    p_fit.set_defaults(func=cmd_fit)

    p_an = sub.add_parser("analyze", help="condition flags and spectra for given variances")
    p_an.add_argument("--sigma2", type=float, required=True)
    p_an.add_argument("--sigma-bar2", type=float, required=True, dest="sigma_bar2")
    p_an.add_argument("--n", type=int, required=True)
    p_an.add_argument("--epsilon", type=float)
    p_an.add_argument("--out")
    p_an.add_argument("--json", action="store_true")
    p_an.set_defaults(func=cmd_analyze)

    p_sw = sub.add_parser("sweep", help="convergence map over a parameter grid")
    p_sw.add_argument("--config", required=True,
                      help="JSON with sigma2, sigma_bar2, epsilon lists and n")
    p_sw.add_argument("--out", default=".")
    p_sw.set_defaults(func=cmd_sweep)

    p_ver = sub.add_parser("verify", help="run the built-in acceptance suite")
    p_ver.add_argument("--json", action="store_true")
    p_ver.add_argument("--only", action="append", metavar="CRITERION",
                       help="run only the named criterion (repeatable)")
    p_ver.add_argument("--tamper", action="append", metavar="NAME=FACTOR",
                       help="test hook: scale a criterion's tolerances")
    p_ver.add_argument("--out")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
