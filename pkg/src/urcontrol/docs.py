"""Generated reference documentation.

Both documents are produced from the live preset registry and the package's
own constants, so they cannot drift from the code. The catalog generator
fails if a documented family has no registered presets or a registered
preset belongs to no documented family.
"""
from __future__ import annotations

import math
from collections import defaultdict

from .optimize import preset, preset_names

FAMILY_OUTCOMES = {
    "single_qubit": (
        "All three variants converge below the 1e-7 success threshold at 3.5 drive periods.",
        "The robust_z solution's fitted curvature for sigma_z is at least 100x below the "
        "target_only solution's, but some random directions stay within 10x.",
        "The universal solution's fitted curvature is at least 1000x below the target_only "
        "solution's for sigma_x, sigma_y, sigma_z, and seeded random directions alike.",
        "On the sampling grid the universal solution's evolution averages every traceless "
        "operator to zero: the path is a unitary 1-design.",
    ),
    "single_qubit_timescales": (
        "Each variant sits just above its own minimal control time: success from about "
        "1.0 drive periods for target_only, 2.0 for robust_z, 2.5 for universal, located "
        "by scanning duration at a 0.25-period grid step.",
    ),
    "two_qubit_random": (
        "target_only converges essentially to zero; the constrained variants plateau at "
        "small but nonzero functional values at 5 twisting periods.",
        "robust_one_body suppresses fitted curvature for the collective Sx and Sz errors "
        "but not for the two-body Sx^2 error; universal suppresses all three.",
        "For the Sx^2 perturbation the fitted curvatures order as "
        "universal <= robust_one_body <= robust_sx.",
        "The robustness weight 0.1 is a compromise: much larger weights sacrifice "
        "terminal fidelity to the robustness demand, much smaller ones the reverse.",
    ),
    "two_qubit_ms": (
        "Same robustness pattern as two_qubit_random with an entangling gate in standard "
        "form as the target.",
    ),
    "dicke_four": (
        "target_only reaches state infidelity below 1e-4 immediately.",
        "robust_one_body cuts fitted curvature at least 10x for Sx and Sz but not for "
        "Sx^2; robust_two_body shows the complementary pattern (Sx^2 suppressed, Sz not).",
    ),
}


def _families():
    groups = defaultdict(list)
    for name in preset_names():
        family, _, variant = name.partition(".")
        groups[family].append(name)
    return dict(groups)


def generate_preset_catalog() -> str:
    """Markdown catalog of every registered preset, grouped by family."""
    groups = _families()
    undocumented = sorted(set(groups) - set(FAMILY_OUTCOMES))
    missing = sorted(set(FAMILY_OUTCOMES) - set(groups))
    if undocumented or missing:
        raise RuntimeError(
            f"catalog out of sync: undocumented families {undocumented}, "
            f"documented but unregistered {missing}"
        )
    lines = ["# Preset catalog", ""]
    lines.append(
        "Every entry is runnable as `urcontrol optimize --preset NAME`. Durations are "
        "dimensionless cycles (drive or twisting periods)."
    )
    for family in sorted(groups):
        lines += ["", f"## {family}", ""]
        for name in groups[family]:
            p = preset(name)
            cycles = p.t_f / (2.0 * math.pi)
            lines.append(f"- `{name}` ({p.n_segments} segments, {cycles:g} cycles): {p.description}")
        lines += ["", "Expected outcomes:", ""]
        lines += [f"- {outcome}" for outcome in FAMILY_OUTCOMES[family]]
    return "\n".join(lines) + "\n"


def generate_conventions() -> str:
    """Markdown statement of the package-wide mathematical conventions."""
    return """# Conventions

- hbar = 1 everywhere; Hamiltonians are Hermitian matrices and propagators
  are exp(-i H t).
- A single qubit is driven through spin-1/2 operators (half the Pauli
  matrices): a resonant drive of amplitude Omega along x has eigenvalues
  +/- Omega/2 and full period Omega t = 4 pi. Collective-spin models use
  S_alpha, the sum of the individual spin-1/2 operators, restricted to the
  (N+1)-dimensional symmetric subspace.
- Vectorization stacks rows: |A>> lists A row by row, and
  (B (x) C)|A>> = |B A C^T>>. The averaging superoperator acts on this
  doubled space as a d^2 x d^2 matrix.
- Operator inner products are Hilbert-Schmidt, <A, B> = Tr(A^dag B); bases
  are orthonormal in this inner product with the identity class labeled 0.
- Pulses are piecewise constant: N_P segments of equal duration dt. Time
  averages are evaluated segment-exactly by eigendecomposition (the phase
  integrals are done in closed form); the optional left-Riemann quadrature
  exists for gradient checks and 1-design sampling and converges at first
  order in the substep.
- Noise kernels integrate on a trapezoid grid refined by `substeps` per
  segment (second-order accurate). Monte-Carlo noise is piecewise constant
  on the same refinement, drawn per trajectory from seeds derived as
  (master seed, trajectory index).
- All I/O uses dimensionless durations: cycles = rate * t_f / (2 pi) with
  rate the drive amplitude Omega or twisting strength beta. Raw time units
  never appear in configs or tables.
- Randomness is reproducible: every stochastic component derives its stream
  from an explicit master seed plus structural indices (grid point, start,
  trajectory), so results do not depend on execution order or worker count.
"""
