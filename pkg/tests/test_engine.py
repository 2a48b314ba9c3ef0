"""Backend parity and quadrature correctness of the propagation engine."""
import os
import subprocess
import sys

import numpy as np
import pytest

from urcontrol import engine
from urcontrol.engine import numpy_backend
from urcontrol.models import (
    collective_spin_model,
    segment_hamiltonians,
    single_qubit_model,
)

from helpers import (
    gl_time_average,
    random_hermitian,
    random_pulse,
    scipy_cumulative,
)

RNG_SEED = 20245


def _random_stack(rng, n, d):
    return np.stack([random_hermitian(rng, d) for _ in range(n)])


def test_propagate_matches_scipy_chain():
    rng = np.random.default_rng(RNG_SEED)
    for d in (2, 4):
        h = _random_stack(rng, 6, d)
        dt = 0.37
        u, c = engine.propagate(h, dt)
        assert u.shape == (6, d, d)
        assert c.shape == (7, d, d)
        want = scipy_cumulative(h, dt)
        assert np.max(np.abs(c - want)) < 1e-12
        import scipy.linalg

        for k in range(6):
            assert np.max(np.abs(u[k] - scipy.linalg.expm(-1j * h[k] * dt))) < 1e-12


def test_averaged_ops_matches_gauss_legendre():
    rng = np.random.default_rng(RNG_SEED + 1)
    d = 3
    h = _random_stack(rng, 5, d)
    dt = 0.29
    ops = np.stack([random_hermitian(rng, d) for _ in range(4)])
    avg, c = engine.averaged_ops(h, dt, ops)
    assert avg.shape == (4, d, d)
    assert np.max(np.abs(c - scipy_cumulative(h, dt))) < 1e-12
    for m in range(4):
        want = gl_time_average(h, dt, ops[m])
        assert np.max(np.abs(avg[m] - want)) < 1e-11


def test_averaged_ops_empty_stack():
    rng = np.random.default_rng(RNG_SEED + 2)
    h = _random_stack(rng, 3, 2)
    avg, c = engine.averaged_ops(h, 0.2, np.zeros((0, 2, 2)))
    assert avg.shape == (0, 2, 2)
    assert c.shape == (4, 2, 2)


def test_m0_matrix_consistent_with_averaged_ops():
    rng = np.random.default_rng(RNG_SEED + 3)
    d = 3
    h = _random_stack(rng, 6, d)
    dt = 0.31
    m0, c = engine.m0_matrix(h, dt)
    assert m0.shape == (d * d, d * d)
    # identity is fixed
    ident = np.eye(d).reshape(-1)
    assert np.max(np.abs(m0 @ ident - ident)) < 1e-11
    for _ in range(5):
        v = random_hermitian(rng, d)
        avg, _ = engine.averaged_ops(h, dt, v[None])
        got = (m0 @ v.reshape(-1)).reshape(d, d)
        assert np.max(np.abs(got - avg[0])) < 1e-11


def test_riemann_grid_propagators_layout():
    rng = np.random.default_rng(RNG_SEED + 4)
    h = _random_stack(rng, 4, 2)
    dt = 0.4
    grid = engine.riemann_grid_propagators(h, dt, 3)
    assert grid.shape == (12, 2, 2)
    assert np.max(np.abs(grid[0] - np.eye(2))) < 1e-13
    # every third entry lands on a segment boundary
    _, c = engine.propagate(h, dt)
    for j in range(4):
        assert np.max(np.abs(grid[3 * j] - c[j])) < 1e-12


def test_riemann_quadrature_first_order_convergence():
    rng = np.random.default_rng(RNG_SEED + 5)
    h = _random_stack(rng, 4, 2)
    dt = 0.5
    v = random_hermitian(rng, 2)
    exact, _ = engine.averaged_ops(h, dt, v[None])

    def err(substeps):
        approx = engine.riemann_averaged_ops(h, dt, v[None], substeps)
        return np.max(np.abs(approx[0] - exact[0]))

    # first-order scheme: 8x refinement shrinks the error 8x
    assert err(32) / err(256) == pytest.approx(8.0, rel=0.15)
    # the riemann M0 matrix agrees with the riemann component average
    m = engine.riemann_m0_matrix(h, dt, 16)
    approx = engine.riemann_averaged_ops(h, dt, v[None], 16)
    got = (m @ v.reshape(-1)).reshape(2, 2)
    assert np.max(np.abs(got - approx[0])) < 1e-12


def test_engine_input_validation():
    with pytest.raises(ValueError):
        engine.propagate(np.zeros((2, 2)), 0.1)  # not a stack
    with pytest.raises(ValueError):
        engine.propagate(np.zeros((2, 2, 3)), 0.1)  # not square
    with pytest.raises(ValueError):
        engine.propagate(np.zeros((2, 2, 2)), 0.0)
    with pytest.raises(ValueError):
        engine.averaged_ops(np.zeros((2, 2, 2)), 0.1, np.zeros((1, 3, 3)))


def test_read_only_inputs_are_accepted():
    # frozen dataclasses hand out read-only arrays; the dispatch layer must
    # copy them before the compiled kernels see the buffers
    rng = np.random.default_rng(RNG_SEED + 6)
    h = _random_stack(rng, 3, 2)
    h.flags.writeable = False
    v = random_hermitian(rng, 2)
    v.flags.writeable = False
    u, c = engine.propagate(h, 0.2)
    avg, _ = engine.averaged_ops(h, 0.2, v[None])
    assert np.all(np.isfinite(avg))


@pytest.mark.skipif(engine.BACKEND != "compiled", reason="compiled backend not built")
def test_compiled_matches_numpy_backend():
    rng = np.random.default_rng(RNG_SEED + 7)
    for d, n in ((2, 8), (3, 5), (5, 4)):
        h = _random_stack(rng, n, d)
        dt = 0.23
        ops = np.stack([random_hermitian(rng, d) for _ in range(3)])
        u_c, c_c = engine.propagate(h, dt)
        u_n, c_n = numpy_backend.propagate(h, dt)
        assert np.max(np.abs(u_c - u_n)) < 1e-13
        assert np.max(np.abs(c_c - c_n)) < 1e-13
        avg_c, _ = engine.averaged_ops(h, dt, ops)
        avg_n, _ = numpy_backend.averaged_ops(h, dt, ops)
        assert np.max(np.abs(avg_c - avg_n)) < 1e-13


def test_pure_python_env_selects_numpy_backend():
    code = (
        "import os; os.environ['URCONTROL_PURE_PYTHON'] = '1'; "
        "from urcontrol import engine; print(engine.BACKEND)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        check=True,
        env={**os.environ, "URCONTROL_PURE_PYTHON": "1"},
    )
    assert out.stdout.strip() == "numpy"


def test_backends_give_same_functional_values_through_models():
    # end to end: a pulse evaluated through the public API must not depend on
    # the backend beyond roundoff
    rng = np.random.default_rng(RNG_SEED + 8)
    model = collective_spin_model(beta=1.0, n_qubits=3)
    pulse = random_pulse(rng, model, 10, 0.2)
    h = segment_hamiltonians(model, pulse)
    v = random_hermitian(rng, 4)
    avg_active, _ = engine.averaged_ops(h, pulse.dt, v[None])
    avg_numpy, _ = numpy_backend.averaged_ops(h, pulse.dt, v[None])
    assert np.max(np.abs(avg_active - avg_numpy)) < 1e-12
