"""Quasi-Newton pulse optimization, multistart drivers, and named presets.

Each start draws a random initial pulse from a seeded stream (phase channels
uniform on [0, 2pi), amplitude channels Gaussian with the channel's
start_scale), runs BFGS with Wolfe line search, and the best start wins.
Success means the combined functional drops below the threshold (1e-7 by
default). A minimal-control-time scan repeats this over a grid of total
durations at fixed segment count and reports the smallest succeeding one.

Determinism: start s of grid point i draws from a stream seeded by
(master seed, i, s), so results are bitwise reproducible and independent of
how grid points are distributed over worker processes.
"""
from __future__ import annotations

import concurrent.futures
import logging
import time
from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize

from . import grad, qcore
from .functionals import (
    FunctionalValue,
    J_target,
    KnownPerturbation,
    Objective,
    UniversalSet,
    evaluate,
)
from .models import (
    ControlModel,
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

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizeOptions:
    """Knobs for the multistart quasi-Newton search."""

    n_starts: int = 10
    seed: int = 0
    max_iterations: int = 2000
    gradient_mode: str = "fd"
    fd_step: float = 1e-6
    gradient_tol: float = 1e-9
    functional_tol: float = 1e-12
    success_threshold: float = 1e-7
    stop_on_success: bool = True

    def __post_init__(self):
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.gradient_mode not in ("fd", "analytic"):
            raise ValueError(f"unknown gradient_mode {self.gradient_mode!r}")
        for name in ("fd_step", "gradient_tol", "functional_tol", "success_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class StartTrace:
    """Functional value per accepted iteration of one start."""

    start_index: int
    values: np.ndarray
    converged: bool
    message: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def final_value(self) -> float:
        return float(self.values[-1])

    @property
    def n_iterations(self) -> int:
        return self.values.size - 1


@dataclass(frozen=True)
class OptimizationResult:
    """Best pulse over all executed starts, with per-start traces."""

    pulse: Pulse
    value: FunctionalValue
    success: bool
    traces: tuple
    best_start: int
    seed: int
    wall_time: float


@dataclass(frozen=True)
class MCTScanResult:
    """Best functional per total duration, and the minimal succeeding one."""

    t_f_grid: np.ndarray
    best_values: np.ndarray
    success: np.ndarray
    minimal_time: float | None
    resolution: float
    results: tuple

    def __post_init__(self):
        grid = np.asarray(self.t_f_grid, dtype=np.float64)
        if np.any(np.diff(grid) <= 0):
            raise ValueError("duration grid must be strictly increasing")
        grid.flags.writeable = False
        object.__setattr__(self, "t_f_grid", grid)


def initial_pulse(model: ControlModel, n_segments: int, dt: float, rng) -> Pulse:
    """Random start: uniform phases, Gaussian amplitudes at channel scale."""
    values = np.empty((n_segments, model.n_channels))
    for c, ch in enumerate(model.channels):
        if ch.kind == "phase":
            values[:, c] = rng.uniform(0.0, 2.0 * np.pi, n_segments)
        else:
            values[:, c] = rng.normal(0.0, ch.start_scale, n_segments)
    return Pulse(values=values, dt=dt)


def _objective_functions(objective: Objective, n_segments: int, dt: float, options: OptimizeOptions):
    """(fun, jac, eval_method) consistent with the chosen gradient mode."""
    model = objective.model
    n_ch = model.n_channels

    def make_fun(method):
        def fun(x):
            pulse = Pulse(values=x.reshape(n_segments, n_ch), dt=dt)
            return evaluate(objective, pulse, method=method).total

        return fun

    if options.gradient_mode == "fd":
        fun = make_fun("exact")
        jac = lambda x: grad.grad_finite_difference(fun, x, h=options.fd_step).values
        return fun, jac, "exact"

    rob = objective.robustness
    if not (
        isinstance(rob, UniversalSet)
        and rob.excluded == frozenset({0})
        and objective.target.is_unitary
        and objective.substeps == 1
    ):
        raise ValueError(
            "analytic gradient mode needs a unitary target with the universal "
            "demand (excluded == {0}) and substeps == 1; use gradient_mode='fd'"
        )
    # Analytic mode differentiates the left-Riemann cost, so the evaluated
    # functional must use the same quadrature to stay consistent.
    fun = make_fun("riemann")
    w = objective.weight
    target = objective.target

    def j0_only(x):
        pulse = Pulse(values=x.reshape(n_segments, n_ch), dt=dt)
        _, c = qcore.propagate_segments(model, pulse)
        return J_target(c[-1], target)

    def jac(x):
        pulse = Pulse(values=x.reshape(n_segments, n_ch), dt=dt)
        g_u = grad.grad_JU_analytic(model, pulse, rob.basis, rob.excluded).values
        g_0 = grad.grad_finite_difference(j0_only, x, h=options.fd_step).values
        return (g_0 + w * g_u) / (1.0 + w)

    return fun, jac, "riemann"


def _run_start(fun, jac, x0, options: OptimizeOptions):
    """One BFGS run; returns (best_x, trace values, converged, message)."""
    cache = {}

    def tracked(x):
        v = fun(x)
        if len(cache) > 64:
            cache.clear()
        cache[x.tobytes()] = v
        return v

    f0 = tracked(x0)
    if not np.isfinite(f0):
        return None, np.array([f0]), False, "non-finite functional at start"
    trace = [f0]

    def callback(xk):
        v = cache.get(xk.tobytes())
        if v is None:
            v = tracked(xk)
        prev = trace[-1]
        trace.append(v)
        if abs(prev - v) < options.functional_tol:
            raise StopIteration

    res = scipy.optimize.minimize(
        tracked,
        x0,
        jac=jac,
        method="BFGS",
        callback=callback,
        options={"gtol": options.gradient_tol, "maxiter": options.max_iterations},
    )
    if not np.all(np.isfinite(res.x)) or not np.isfinite(res.fun):
        return None, np.array(trace), False, "non-finite result"
    if not trace or trace[-1] > res.fun:
        trace.append(float(res.fun))
    converged = bool(res.success) or res.status == 99
    return res.x, np.array(trace), converged, str(res.message)


def optimize_pulse(
    objective: Objective,
    n_segments: int,
    dt: float,
    options: OptimizeOptions = OptimizeOptions(),
    _seed_path=(),
) -> OptimizationResult:
    """Multistart BFGS minimization of the objective at fixed pulse shape."""
    if n_segments < 1:
        raise ValueError("n_segments must be >= 1")
    if dt <= 0:
        raise ValueError("dt must be positive")
    t0 = time.perf_counter()
    fun, jac, _ = _objective_functions(objective, n_segments, dt, options)

    traces = []
    best_x = None
    best_total = np.inf
    best_start = -1
    for s in range(options.n_starts):
        rng = np.random.default_rng([options.seed, *_seed_path, s])
        x0 = initial_pulse(objective.model, n_segments, dt, rng).values.reshape(-1)
        x, trace_values, converged, message = _run_start(fun, jac, x0, options)
        traces.append(
            StartTrace(start_index=s, values=trace_values, converged=converged, message=message)
        )
        if x is None:
            logger.warning("start %d discarded: %s", s, message)
            continue
        pulse = Pulse(values=x.reshape(n_segments, objective.model.n_channels), dt=dt)
        total = evaluate(objective, pulse).total
        if total < best_total:
            best_total = total
            best_x = x
            best_start = s
        if options.stop_on_success and best_total < options.success_threshold:
            break

    if best_x is None:
        raise RuntimeError("every start produced a non-finite functional")
    best_pulse = Pulse(values=best_x.reshape(n_segments, objective.model.n_channels), dt=dt)
    value = evaluate(objective, best_pulse)
    return OptimizationResult(
        pulse=best_pulse,
        value=value,
        success=value.total < options.success_threshold,
        traces=tuple(traces),
        best_start=best_start,
        seed=options.seed,
        wall_time=time.perf_counter() - t0,
    )


def _scan_point(args):
    objective, t_f, n_segments, options, index = args
    result = optimize_pulse(objective, n_segments, t_f / n_segments, options, _seed_path=(index,))
    return index, result


def mct_scan(
    objective: Objective,
    t_f_grid,
    n_segments: int,
    options: OptimizeOptions = OptimizeOptions(),
    n_workers: int = 1,
) -> MCTScanResult:
    """Find the minimal total duration at which the optimization succeeds.

    Every grid point runs a fresh multistart optimization with dt scaled so
    the segment count stays fixed. Points are independent; with n_workers > 1
    they are distributed over processes and reassembled by index, which keeps
    the outcome identical to the serial run.
    """
    grid = np.asarray(t_f_grid, dtype=np.float64).reshape(-1)
    if grid.size == 0:
        raise ValueError("duration grid must not be empty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("duration grid must be strictly increasing")
    jobs = [(objective, grid[i], n_segments, options, i) for i in range(grid.size)]
    results = [None] * grid.size
    if n_workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=n_workers) as pool:
            for index, result in pool.map(_scan_point, jobs):
                results[index] = result
    else:
        for job in jobs:
            index, result = _scan_point(job)
            results[index] = result

    best_values = np.array([r.value.total for r in results])
    success = np.array([r.success for r in results])
    minimal = float(grid[np.argmax(success)]) if np.any(success) else None
    resolution = float(np.max(np.diff(grid))) if grid.size > 1 else 0.0
    return MCTScanResult(
        t_f_grid=grid,
        best_values=best_values,
        success=success,
        minimal_time=minimal,
        resolution=resolution,
        results=tuple(results),
    )


@dataclass(frozen=True)
class Preset:
    """A ready-to-run problem: objective plus pulse shape."""

    name: str
    description: str
    objective: Objective
    n_segments: int
    dt: float

    @property
    def t_f(self) -> float:
        return self.n_segments * self.dt


def _single_qubit_preset(
    family: str, variant: str, cycles: float, n_segments: int, weight: float
) -> Preset:
    model = single_qubit_model(1.0)
    target = fixture_targets()["single_qubit_z"]
    t_f = cycles * 2.0 * np.pi
    if variant == "target_only":
        objective = Objective(model=model, target=target)
        what = "terminal gate fidelity only"
    elif variant == "robust_z":
        objective = Objective(
            model=model,
            target=target,
            robustness=KnownPerturbation(np.diag([1.0, -1.0])),
            weight=weight,
        )
        what = "first-order insensitivity to a static dephasing error"
    elif variant == "universal":
        objective = Objective(
            model=model,
            target=target,
            robustness=UniversalSet(basis=pauli_basis(1)),
            weight=weight,
        )
        what = "first-order insensitivity to every traceless perturbation"
    else:
        raise KeyError(variant)
    return Preset(
        name=f"{family}.{variant}",
        description=(
            f"Phase-controlled qubit, z-axis half-turn target, {what}; "
            f"duration {cycles} drive periods over {n_segments} segments."
        ),
        objective=objective,
        n_segments=n_segments,
        dt=t_f / n_segments,
    )


def _collective_preset(family: str, variant: str, target: TargetSpec, target_note: str) -> Preset:
    model = collective_spin_model(1.0, 2)
    basis = symmetric_subspace_basis(2)
    weight = 0.1
    n_segments = 50
    t_f = 5.0 * 2.0 * np.pi
    if variant == "target_only":
        objective = Objective(model=model, target=target)
        what = "terminal fidelity only"
    elif variant == "robust_sx":
        objective = Objective(
            model=model,
            target=target,
            robustness=KnownPerturbation(spin_operators(2)["Sx"]),
            weight=weight,
        )
        what = "insensitivity to a static collective x error"
    elif variant == "robust_one_body":
        objective = Objective(
            model=model,
            target=target,
            robustness=UniversalSet(basis=basis, excluded=frozenset({0, 2})),
            weight=weight,
        )
        what = "insensitivity to every one-body perturbation"
    elif variant == "universal":
        objective = Objective(
            model=model,
            target=target,
            robustness=UniversalSet(basis=basis),
            weight=weight,
        )
        what = "insensitivity to every traceless perturbation"
    else:
        raise KeyError(variant)
    return Preset(
        name=f"{family}.{variant}",
        description=(
            f"Two-qubit collective-spin control, {target_note}, {what}; "
            f"duration 5 twisting periods over {n_segments} segments."
        ),
        objective=objective,
        n_segments=n_segments,
        dt=t_f / n_segments,
    )


def _dicke_preset(variant: str) -> Preset:
    model = collective_spin_model(1.0, 4)
    basis = symmetric_subspace_basis(4)
    target = TargetSpec(
        initial_state=qcore.pure_density(dicke_state(4, 0)),
        target_state=qcore.pure_density(dicke_state(4, 2)),
    )
    weight = 0.1
    n_segments = 50
    t_f = 5.0 * 2.0 * np.pi
    if variant == "target_only":
        objective = Objective(model=model, target=target)
        what = "terminal state fidelity only"
    elif variant == "robust_sx":
        objective = Objective(
            model=model,
            target=target,
            robustness=KnownPerturbation(spin_operators(4)["Sx"]),
            weight=weight,
        )
        what = "insensitivity to a static collective x error"
    elif variant == "robust_one_body":
        objective = Objective(
            model=model,
            target=target,
            robustness=UniversalSet(basis=basis, excluded=frozenset({0, 2, 3, 4})),
            weight=weight,
        )
        what = "insensitivity to every one-body perturbation"
    elif variant == "robust_two_body":
        objective = Objective(
            model=model,
            target=target,
            robustness=UniversalSet(basis=basis, excluded=frozenset({0, 1, 3, 4})),
            weight=weight,
        )
        what = "insensitivity to every two-body perturbation"
    else:
        raise KeyError(variant)
    return Preset(
        name=f"dicke_four.{variant}",
        description=(
            f"Four-qubit collective-spin state preparation into the balanced "
            f"Dicke state, {what}; duration 5 twisting periods over "
            f"{n_segments} segments."
        ),
        objective=objective,
        n_segments=n_segments,
        dt=t_f / n_segments,
    )


def _registry():
    reg = {}
    for variant in ("target_only", "robust_z", "universal"):
        reg[f"single_qubit.{variant}"] = lambda v=variant: _single_qubit_preset(
            "single_qubit", v, 3.5, 40, 1.0
        )
    # shortest-duration companions: each method run near its own minimal time
    for variant, cycles in (("target_only", 1.1), ("robust_z", 2.1), ("universal", 3.5)):
        reg[f"single_qubit_timescales.{variant}"] = lambda v=variant, c=cycles: _single_qubit_preset(
            "single_qubit_timescales", v, c, 40, 1.0
        )
    for variant in ("target_only", "robust_sx", "robust_one_body", "universal"):
        reg[f"two_qubit_random.{variant}"] = lambda v=variant: _collective_preset(
            "two_qubit_random",
            v,
            fixture_targets()["two_qubit_random"],
            "generic entangling target gate",
        )
        reg[f"two_qubit_ms.{variant}"] = lambda v=variant: _collective_preset(
            "two_qubit_ms",
            v,
            fixture_targets()["ms_gate"],
            "Molmer-Sorensen target gate",
        )
    for variant in ("target_only", "robust_sx", "robust_one_body", "robust_two_body"):
        reg[f"dicke_four.{variant}"] = lambda v=variant: _dicke_preset(v)
    return reg


_PRESETS = _registry()


def preset_names() -> tuple:
    return tuple(sorted(_PRESETS))


def preset(name: str) -> Preset:
    """Look up a named ready-to-run problem definition."""
    try:
        factory = _PRESETS[name]
    except KeyError:
        known = ", ".join(preset_names())
        raise KeyError(f"unknown preset {name!r}; available: {known}") from None
    built = factory()
    if built.name != name:
        raise RuntimeError(f"preset registry mismatch: {name!r} built {built.name!r}")
    return built
