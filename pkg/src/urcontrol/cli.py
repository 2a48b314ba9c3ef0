"""Command-line frontend: configure, run, and persist experiments.

Configs are JSON with a fixed schema; unknown keys are rejected with the
offending key path. Numeric tables are CSV with floats formatted by repr
(shortest round-trip), so a rerun with the stored config and seed reproduces
every table bitwise on the same platform. Each table gets a JSON sidecar
carrying a provenance block (problem hash, seed, package version, engine
backend, timestamp); timestamps never enter the CSVs. All files are written
to a temporary name and renamed, so partial files never appear.

Durations in configs and tables are dimensionless cycles: t_f times the
drive or twisting strength divided by 2 pi. Raw time units never appear.

Schema (top-level keys; all blocks optional unless a command needs them):

    problem      {"preset": NAME} or inline {"model", "pulse", "target",
                 "objective"}:
                   model      {"family": "single_qubit", "omega": W} or
                              {"family": "collective_spin", "beta": B,
                               "n_qubits": N}
                   pulse      {"n_segments": N, "cycles": C}
                   target     {"fixture": NAME} or
                              {"dicke": {"initial": M0, "target": M1}}
                   objective  {"robustness": "none" | "universal" |
                               {"known": OPNAME}, "weight": W,
                               "excluded": [class, ...]}
    optimizer    field overrides for the optimizer options
                 (n_starts, seed, max_iterations, gradient_mode, fd_step,
                  gradient_tol, functional_tol, success_threshold,
                  stop_on_success)
    scan         {"cycles_grid": {"start": A, "stop": B, "step": S}}
    verification {"lambdas": {"max": M, "points": ODD} or {"values": [...]},
                  "perturbations": [OPNAME, ...],
                  "random": {"count": N, "seed": S},
                  "one_design": {"n_samples": N},
                  "noise": {"kind": "white" | "exponential", ...}}
    output       directory for result files

Operator names: sigma_x, sigma_y, sigma_z on a single qubit; Sx, Sy, Sz and
their squares Sx2, Sy2, Sz2 on collective-spin models. Perturbations beyond
these named ones go through the Python API.

Exit codes: 0 success, 1 numeric failure, 2 configuration error. A completed
optimization that misses the success threshold still exits 0; the flag is
recorded in the summary.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, engine, qcore, verify
from .functionals import KnownPerturbation, Objective, UniversalSet, chi_state, chi_unitary
from .models import (
    Pulse,
    TargetSpec,
    collective_spin_model,
    dicke_state,
    fixture_targets,
    pauli_basis,
    single_qubit_model,
    spin_operators,
    symmetric_subspace_basis,
)
from .optimize import OptimizeOptions, _scan_point, optimize_pulse, preset, preset_names
from .superop import exponential_correlation, noise_kernel, white_noise


class ConfigError(Exception):
    """Invalid configuration; message names the offending key path."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated top-level config blocks."""

    problem: dict
    optimizer: dict
    scan: dict
    verification: dict
    output: str | None


@dataclass(frozen=True)
class ResultBundle:
    """Files written by a command plus its summary record."""

    files: tuple
    summary: dict


_TOP_KEYS = ("problem", "optimizer", "scan", "verification", "output")
_OPTIMIZER_KEYS = (
    "n_starts",
    "seed",
    "max_iterations",
    "gradient_mode",
    "fd_step",
    "gradient_tol",
    "functional_tol",
    "success_threshold",
    "stop_on_success",
)


def _require_keys(block: dict, allowed, path: str):
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(block) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}; allowed: {sorted(allowed)}")


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    _require_keys(raw, _TOP_KEYS, "config")
    out = raw.get("output")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output: expected a string path")
    for key in ("problem", "optimizer", "scan", "verification"):
        if key in raw and not isinstance(raw[key], dict):
            raise ConfigError(f"{key}: expected an object")
    if "optimizer" in raw:
        _require_keys(raw["optimizer"], _OPTIMIZER_KEYS, "optimizer")
    return ExperimentConfig(
        problem=raw.get("problem", {}),
        optimizer=raw.get("optimizer", {}),
        scan=raw.get("scan", {}),
        verification=raw.get("verification", {}),
        output=out,
    )


def _canonical(block) -> str:
    return json.dumps(block, sort_keys=True, separators=(",", ":"))


def _problem_hash(problem: dict) -> str:
    return hashlib.sha256(_canonical(problem).encode()).hexdigest()


def _build_model(spec: dict):
    _require_keys(spec, ("family", "omega", "beta", "n_qubits"), "problem.model")
    family = spec.get("family")
    if family == "single_qubit":
        return single_qubit_model(float(spec.get("omega", 1.0))), float(spec.get("omega", 1.0))
    if family == "collective_spin":
        beta = float(spec.get("beta", 1.0))
        n_qubits = int(spec.get("n_qubits", 2))
        return collective_spin_model(beta, n_qubits), beta
    raise ConfigError(f"problem.model.family: unknown family {family!r}")


def _build_target(spec: dict, model) -> TargetSpec:
    _require_keys(spec, ("fixture", "dicke"), "problem.target")
    if ("fixture" in spec) == ("dicke" in spec):
        raise ConfigError("problem.target: exactly one of fixture | dicke required")
    if "fixture" in spec:
        fixtures = fixture_targets()
        name = spec["fixture"]
        if name not in fixtures:
            raise ConfigError(
                f"problem.target.fixture: unknown fixture {name!r}; "
                f"available: {sorted(fixtures)}"
            )
        return fixtures[name]
    block = spec["dicke"]
    _require_keys(block, ("initial", "target"), "problem.target.dicke")
    n_qubits = model.dim - 1
    try:
        initial = dicke_state(n_qubits, int(block["initial"]))
        final = dicke_state(n_qubits, int(block["target"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"problem.target.dicke: {exc}") from None
    return TargetSpec(
        initial_state=qcore.pure_density(initial), target_state=qcore.pure_density(final)
    )


def _named_operator(name: str, model):
    d = model.dim
    if d == 2 and name in ("sigma_x", "sigma_y", "sigma_z"):
        from .models import PAULI

        return PAULI[name[-1].upper()]
    spins = spin_operators(d - 1)
    if name in spins:
        return spins[name]
    if name in ("Sx2", "Sy2", "Sz2"):
        s = spins[name[:2]]
        return s @ s
    known = ["sigma_x", "sigma_y", "sigma_z"] if d == 2 else [*spins, "Sx2", "Sy2", "Sz2"]
    raise ConfigError(f"unknown operator {name!r} for this model; available: {known}")


def _model_basis(model):
    if model.label.startswith("collective_spin"):
        return symmetric_subspace_basis(model.dim - 1)
    n_qubits = int(np.log2(model.dim))
    if 2**n_qubits != model.dim:
        raise ConfigError("no operator basis registered for this model dimension")
    return pauli_basis(n_qubits)


def _build_objective(problem: dict):
    """Resolve a problem block into (objective, n_segments, dt, resolved dict)."""
    _require_keys(problem, ("preset", "model", "pulse", "target", "objective"), "problem")
    if "preset" in problem:
        if len(problem) > 1:
            raise ConfigError("problem: preset does not combine with inline blocks")
        name = problem["preset"]
        try:
            p = preset(name)
        except KeyError as exc:
            raise ConfigError(f"problem.preset: {exc.args[0]}") from None
        return p.objective, p.n_segments, p.dt, {"preset": name}
    for key in ("model", "pulse", "target"):
        if key not in problem:
            raise ConfigError(f"problem.{key}: required without a preset")
    model, rate = _build_model(problem["model"])
    pulse_spec = problem["pulse"]
    _require_keys(pulse_spec, ("n_segments", "cycles"), "problem.pulse")
    try:
        n_segments = int(pulse_spec["n_segments"])
        cycles = float(pulse_spec["cycles"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("problem.pulse: needs integer n_segments and numeric cycles") from None
    if n_segments < 1 or cycles <= 0:
        raise ConfigError("problem.pulse: n_segments >= 1 and cycles > 0 required")
    t_f = cycles * 2.0 * np.pi / rate
    target = _build_target(problem["target"], model)
    obj_spec = problem.get("objective", {})
    _require_keys(obj_spec, ("robustness", "weight", "excluded"), "problem.objective")
    weight = float(obj_spec.get("weight", 0.0))
    rob_spec = obj_spec.get("robustness", "none")
    if rob_spec == "none":
        robustness = None
    elif rob_spec == "universal":
        excluded = frozenset(int(k) for k in obj_spec.get("excluded", [0]))
        robustness = UniversalSet(basis=_model_basis(model), excluded=excluded)
    elif isinstance(rob_spec, dict) and set(rob_spec) == {"known"}:
        robustness = KnownPerturbation(_named_operator(rob_spec["known"], model))
    else:
        raise ConfigError(
            'problem.objective.robustness: expected "none", "universal", or {"known": NAME}'
        )
    try:
        objective = Objective(model=model, target=target, robustness=robustness, weight=weight)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"problem.objective: {exc}") from None
    return objective, n_segments, t_f / n_segments, dict(problem)


def _build_options(block: dict, seed_override=None) -> OptimizeOptions:
    fields = dict(block)
    if seed_override is not None:
        fields["seed"] = seed_override
    try:
        return OptimizeOptions(**fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"optimizer: {exc}") from None


def _provenance(problem: dict, seed: int) -> dict:
    return {
        "problem_sha256": _problem_hash(problem),
        "seed": seed,
        "version": __version__,
        "backend": engine.BACKEND,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_atomic(path: Path, text: str) -> Path:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    return path


def _write_csv(path: Path, header, rows) -> Path:
    lines = [",".join(header)]
    lines += [",".join(_fmt(x) for x in row) for row in rows]
    return _write_atomic(path, "\n".join(lines) + "\n")


def _write_json(path: Path, obj) -> Path:
    return _write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out_dir(args, config: ExperimentConfig, default: str) -> Path:
    out = args.out or config.output or default
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_problem_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else config_from_dict({})
    if getattr(args, "preset", None):
        config = ExperimentConfig(
            problem={"preset": args.preset},
            optimizer=config.optimizer,
            scan=config.scan,
            verification=config.verification,
            output=config.output,
        )
    if not config.problem:
        raise ConfigError("no problem specified: give --config with a problem block or --preset")
    return config


def cmd_optimize(args) -> int:
    config = _load_problem_config(args)
    objective, n_segments, dt, problem = _build_objective(config.problem)
    options = _build_options(config.optimizer, args.seed)
    out = _out_dir(args, config, "urcontrol_out")

    result = optimize_pulse(objective, n_segments, dt, options)
    provenance = _provenance(problem, options.seed)
    files = []
    header = ["segment"] + [f"channel_{c}" for c in range(result.pulse.n_channels)]
    rows = [[k, *result.pulse.values[k]] for k in range(n_segments)]
    files.append(_write_csv(out / "pulse.csv", header, rows))
    files.append(
        _write_json(
            out / "pulse.json",
            {
                "problem": problem,
                "n_segments": n_segments,
                "dt": dt,
                "t_f": n_segments * dt,
                "provenance": provenance,
            },
        )
    )
    trace_rows = [
        [tr.start_index, i, v]
        for tr in result.traces
        for i, v in enumerate(tr.values)
    ]
    files.append(_write_csv(out / "traces.csv", ["start", "iteration", "value"], trace_rows))
    summary = {
        "problem": problem,
        "n_segments": n_segments,
        "t_f": n_segments * dt,
        "functional": {
            "total": result.value.total,
            "j_target": result.value.j_target,
            "j_robust": result.value.j_robust,
            "weight": result.value.weight,
        },
        "success": result.success,
        "best_start": result.best_start,
        "n_starts_run": len(result.traces),
        "wall_time": result.wall_time,
        "provenance": provenance,
    }
    files.append(_write_json(out / "summary.json", summary))
    print(
        f"optimize: total={result.value.total:.6e} success={result.success} "
        f"-> {out}"
    )
    return ResultBundle(files=tuple(files), summary=summary)


def _scan_grid(config: ExperimentConfig) -> np.ndarray:
    block = config.scan
    _require_keys(block, ("cycles_grid",), "scan")
    if "cycles_grid" not in block:
        raise ConfigError("scan.cycles_grid: required for scan-mct")
    grid = block["cycles_grid"]
    _require_keys(grid, ("start", "stop", "step"), "scan.cycles_grid")
    try:
        start, stop, step = (float(grid[k]) for k in ("start", "stop", "step"))
    except (KeyError, TypeError, ValueError):
        raise ConfigError("scan.cycles_grid: needs numeric start, stop, step") from None
    if step <= 0 or stop < start:
        raise ConfigError("scan.cycles_grid: step > 0 and stop >= start required")
    n = int(round((stop - start) / step)) + 1
    return start + step * np.arange(n)


def cmd_scan_mct(args) -> int:
    config = _load_problem_config(args)
    objective, n_segments, dt, problem = _build_objective(config.problem)
    options = _build_options(config.optimizer, args.seed)
    cycles = _scan_grid(config)
    out = _out_dir(args, config, "urcontrol_out")
    points_dir = out / "scan_points"
    points_dir.mkdir(exist_ok=True)

    # presets carry unit drive/twisting rate, so cycles map to t_f directly
    rate = 1.0 if "preset" in problem else _build_model(problem["model"])[1]
    t_f_grid = cycles * 2.0 * np.pi / rate

    def point_file(i):
        return points_dir / f"point_{i:03d}.json"

    missing = [i for i in range(cycles.size) if args.force or not point_file(i).exists()]
    jobs = [(objective, float(t_f_grid[i]), n_segments, options, i) for i in missing]
    if args.threads > 1 and jobs:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.threads) as pool:
            finished = list(pool.map(_scan_point, jobs))
    else:
        finished = [_scan_point(job) for job in jobs]
    for i, result in finished:
        _write_json(
            point_file(i),
            {
                "index": i,
                "cycles": float(cycles[i]),
                "best_functional": result.value.total,
                "success": result.success,
                "best_start": result.best_start,
                "wall_time": result.wall_time,
            },
        )
    records = [json.loads(point_file(i).read_text()) for i in range(cycles.size)]

    rows = [[r["cycles"], r["best_functional"], r["success"]] for r in records]
    provenance = _provenance(problem, options.seed)
    files = [_write_csv(out / "scan.csv", ["cycles", "best_functional", "success"], rows)]
    successes = [r["cycles"] for r in records if r["success"]]
    summary = {
        "problem": problem,
        "n_segments": n_segments,
        "minimal_cycles": min(successes) if successes else None,
        "grid_step": float(cycles[1] - cycles[0]) if cycles.size > 1 else 0.0,
        "provenance": provenance,
    }
    files.append(_write_json(out / "scan.json", summary))
    print(f"scan-mct: minimal cycles = {summary['minimal_cycles']} -> {out}")
    return ResultBundle(files=tuple(files), summary=summary)


def _load_pulse(path, problem: dict, force: bool):
    sidecar = Path(path).with_suffix(".json")
    try:
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        meta = json.loads(sidecar.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read pulse file: {exc}") from None
    stored = meta.get("problem", {})
    if problem and _problem_hash(problem) != _problem_hash(stored) and not force:
        raise ConfigError(
            "pulse file was optimized for a different problem "
            f"(stored hash {_problem_hash(stored)[:12]}, "
            f"config hash {_problem_hash(problem)[:12]}); pass --force to override"
        )
    values = rows[:, 1:]
    return Pulse(values=values, dt=float(meta["dt"])), (problem or stored)


def _verify_lambdas(block: dict) -> np.ndarray:
    _require_keys(block, ("max", "points", "values"), "verification.lambdas")
    if "values" in block:
        grid = np.asarray(block["values"], dtype=np.float64)
        if not np.any(grid == 0.0):
            raise ConfigError("verification.lambdas.values: must contain 0")
        return grid
    try:
        lam_max = float(block["max"])
        points = int(block["points"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("verification.lambdas: needs max and points (or values)") from None
    if lam_max <= 0 or points < 3 or points % 2 == 0:
        raise ConfigError("verification.lambdas: max > 0 and odd points >= 3 required")
    return np.linspace(-lam_max, lam_max, points)


def cmd_verify(args) -> int:
    config = load_config(args.config)
    block = config.verification
    if not block:
        raise ConfigError("verification: block required for the verify command")
    _require_keys(
        block, ("lambdas", "perturbations", "random", "one_design", "noise"), "verification"
    )
    problem = config.problem
    if problem:
        _build_objective(problem)  # validate before touching the pulse file
    pulse, problem = _load_pulse(args.pulse, problem, args.force)
    objective, n_segments, dt, problem = _build_objective(problem)
    if n_segments != pulse.n_segments or abs(dt - pulse.dt) > 1e-12 * max(dt, 1.0):
        raise ConfigError("pulse shape does not match the problem's segment count or duration")
    model, target = objective.model, objective.target
    out = _out_dir(args, config, "urcontrol_out")
    provenance = _provenance(problem, 0)
    files = []
    curvature_rows = []

    lambdas = _verify_lambdas(block.get("lambdas", {"max": 0.1, "points": 21}))
    sigma = None if target.is_unitary else target.initial_state

    for name in block.get("perturbations", []):
        v = _named_operator(name, model)
        curve = verify.fidelity_sweep(model, pulse, target, v, lambdas, label=name)
        rows = zip(curve.lambdas, curve.fidelities, 1.0 - curve.fidelities)
        files.append(_write_csv(out / f"sweep_{name}.csv", ["lambda", "fidelity", "infidelity"], rows))
        if target.is_unitary:
            predicted = chi_unitary(model, pulse, v)
        else:
            predicted = chi_state(model, pulse, v, sigma)
        fit = verify.curvature_check(curve, predicted)
        curvature_rows.append(
            [name, fit.chi_fit, fit.chi_predicted, fit.relative_deviation, fit.residual,
             fit.window_max, fit.n_points]
        )

    rand = block.get("random")
    if rand:
        _require_keys(rand, ("count", "seed"), "verification.random")
        basis = None if model.dim == 2 else _model_basis(model)
        curve = verify.random_direction_sweep(
            model, pulse, target, int(rand.get("count", 20)), lambdas,
            int(rand.get("seed", 0)), basis=basis,
        )
        rows = zip(
            curve.lambdas,
            curve.fidelities,
            1.0 - curve.fidelities,
            curve.realizations.min(axis=0),
            curve.realizations.max(axis=0),
        )
        files.append(
            _write_csv(
                out / "sweep_random.csv",
                ["lambda", "mean_fidelity", "mean_infidelity", "min_fidelity", "max_fidelity"],
                rows,
            )
        )
        real_rows = [
            [k, lam, f]
            for k in range(curve.realizations.shape[0])
            for lam, f in zip(curve.lambdas, curve.realizations[k])
        ]
        files.append(
            _write_csv(
                out / "sweep_random_realizations.csv",
                ["realization", "lambda", "fidelity"],
                real_rows,
            )
        )

    if curvature_rows:
        files.append(
            _write_csv(
                out / "curvature.csv",
                ["perturbation", "chi_fit", "chi_predicted", "relative_deviation",
                 "residual", "window_max", "n_points"],
                curvature_rows,
            )
        )

    design = block.get("one_design")
    if design:
        _require_keys(design, ("n_samples",), "verification.one_design")
        report = verify.one_design_check(
            model, pulse, _model_basis(model), int(design.get("n_samples", 1024))
        )
        files.append(
            _write_json(
                out / "one_design.json",
                {
                    "max_deviation": report.max_deviation,
                    "frobenius_sq": report.frobenius_sq,
                    "identity_gap": report.identity_gap,
                    "n_samples": report.n_samples,
                    "provenance": provenance,
                },
            )
        )

    noise = block.get("noise")
    if noise:
        _require_keys(
            noise,
            ("kind", "strength", "variance", "tau_c", "lambda", "operator",
             "n_trajectories", "substeps", "seed"),
            "verification.noise",
        )
        if sigma is None:
            raise ConfigError("verification.noise: needs a state-preparation problem")
        if noise.get("kind") == "white":
            correlation = white_noise(float(noise.get("strength", 1.0)))
        elif noise.get("kind") == "exponential":
            correlation = exponential_correlation(
                float(noise.get("variance", 1.0)), float(noise.get("tau_c", 1.0))
            )
        else:
            raise ConfigError('verification.noise.kind: expected "white" or "exponential"')
        v = _named_operator(noise.get("operator", "sigma_z"), model)
        lam = float(noise.get("lambda", 0.01))
        substeps = int(noise.get("substeps", verify.NOISE_SUBSTEPS))
        kernel = noise_kernel(model, pulse, sigma, correlation, substeps=substeps)
        prediction = lam**2 * float(
            np.vdot(qcore.vectorize(v), kernel.entries @ qcore.vectorize(v)).real
        )
        estimate = verify.noise_monte_carlo(
            model, pulse, sigma, v, correlation, lam,
            int(noise.get("n_trajectories", 10000)), int(noise.get("seed", 0)),
            substeps=substeps,
        )
        files.append(
            _write_csv(
                out / "noise.csv",
                ["kind", "lambda", "predicted_infidelity", "mc_infidelity", "stderr",
                 "n_trajectories"],
                [[noise.get("kind"), lam, prediction, estimate.mean_infidelity,
                  estimate.stderr, estimate.n_trajectories]],
            )
        )

    summary = {"problem": problem, "files": [f.name for f in files], "provenance": provenance}
    files.append(_write_json(out / "verify.json", summary))
    print(f"verify: {len(files)} files -> {out}")
    return ResultBundle(files=tuple(files), summary=summary)


def cmd_fixtures(args) -> int:
    fixtures = fixture_targets()
    if args.action == "list":
        for name in sorted(fixtures):
            print(name)
        return 0
    name = args.name
    if name not in fixtures:
        raise ConfigError(f"unknown fixture {name!r}; available: {sorted(fixtures)}")
    for row in fixtures[name].unitary:
        print(" ".join(repr(complex(z)) for z in row))
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="urcontrol", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    opt = sub.add_parser("optimize", help="run a multistart pulse optimization")
    opt.add_argument("--config", help="JSON config path")
    opt.add_argument("--preset", help=f"named problem; one of: {', '.join(preset_names())}")
    opt.add_argument("--out", help="output directory")
    opt.add_argument("--seed", type=int, help="override the optimizer seed")
    opt.set_defaults(func=cmd_optimize)

    scan = sub.add_parser("scan-mct", help="scan total duration for the minimal control time")
    scan.add_argument("--config", required=True, help="JSON config path (needs a scan block)")
    scan.add_argument("--preset", help="named problem overriding the config's problem block")
    scan.add_argument("--out", help="output directory")
    scan.add_argument("--seed", type=int, help="override the optimizer seed")
    scan.add_argument("--threads", type=int, default=1, help="worker processes for grid points")
    scan.add_argument("--force", action="store_true", help="recompute existing grid points")
    scan.set_defaults(func=cmd_scan_mct)

    ver = sub.add_parser("verify", help="sweep, fit, and noise-check an optimized pulse")
    ver.add_argument("--config", required=True, help="JSON config path (needs verification block)")
    ver.add_argument("--pulse", required=True, help="pulse CSV written by optimize")
    ver.add_argument("--out", help="output directory")
    ver.add_argument("--force", action="store_true", help="skip the problem-hash check")
    ver.set_defaults(func=cmd_verify)

    fix = sub.add_parser("fixtures", help="list or print target fixtures")
    fix_sub = fix.add_subparsers(dest="action", required=True)
    fix_list = fix_sub.add_parser("list", help="print fixture names")
    fix_list.set_defaults(func=cmd_fixtures, action="list")
    fix_dump = fix_sub.add_parser("dump", help="print a fixture at full precision")
    fix_dump.add_argument("name")
    fix_dump.set_defaults(func=cmd_fixtures, action="dump")

    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        outcome = args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - numeric failures exit 1 by contract
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return outcome if isinstance(outcome, int) else 0


if __name__ == "__main__":
    sys.exit(main())
