"""Command-line interface: configs, exit codes, artifacts, determinism."""
import json

import numpy as np
import pytest

from urcontrol import cli
from urcontrol.cli import (
    ConfigError,
    _fmt,
    _named_operator,
    _problem_hash,
    _scan_grid,
    _verify_lambdas,
    config_from_dict,
    main,
)
from urcontrol.models import collective_spin_model, single_qubit_model, spin_operators


def _write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def _tiny_problem():
    # small and fast: 8 segments, 1.5 drive periods, terminal cost only
    return {
        "model": {"family": "single_qubit", "omega": 1.0},
        "pulse": {"n_segments": 8, "cycles": 1.5},
        "target": {"fixture": "single_qubit_z"},
        "objective": {"robustness": "none"},
    }


def _tiny_optimizer(n_starts=2, seed=11, max_iterations=200):
    return {"n_starts": n_starts, "seed": seed, "max_iterations": max_iterations}


def _run_optimize(tmp_path, tag, problem=None, optimizer=None):
    cfg = _write_config(
        tmp_path / f"{tag}.json",
        {"problem": problem or _tiny_problem(), "optimizer": optimizer or _tiny_optimizer()},
    )
    out = tmp_path / tag
    rc = main(["optimize", "--config", cfg, "--out", str(out)])
    assert rc == 0
    return cfg, out


# -- helpers ------------------------------------------------------------------------


def test_fmt_round_trips_types():
    assert _fmt("sigma_z") == "sigma_z"
    assert _fmt(True) == "true"
    assert _fmt(np.bool_(False)) == "false"
    assert _fmt(7) == "7"
    assert _fmt(np.int64(7)) == "7"
    assert _fmt(0.1) == repr(0.1)
    assert float(_fmt(np.float64(1.0 / 3.0))) == 1.0 / 3.0


def test_problem_hash_ignores_key_order():
    a = {"model": {"family": "single_qubit"}, "pulse": {"n_segments": 8, "cycles": 1.5}}
    b = {"pulse": {"cycles": 1.5, "n_segments": 8}, "model": {"family": "single_qubit"}}
    assert _problem_hash(a) == _problem_hash(b)
    assert _problem_hash(a) != _problem_hash({**a, "extra": 1})


def test_config_from_dict_validation():
    assert config_from_dict({}).problem == {}
    with pytest.raises(ConfigError, match="unknown keys"):
        config_from_dict({"problems": {}})
    with pytest.raises(ConfigError, match="optimizer"):
        config_from_dict({"optimizer": {"nstarts": 3}})
    with pytest.raises(ConfigError, match="output"):
        config_from_dict({"output": 3})
    with pytest.raises(ConfigError, match="expected an object"):
        config_from_dict({"problem": []})


def test_scan_grid_arithmetic_and_validation():
    cfg = config_from_dict(
        {"scan": {"cycles_grid": {"start": 0.5, "stop": 1.5, "step": 0.25}}}
    )
    assert np.allclose(_scan_grid(cfg), [0.5, 0.75, 1.0, 1.25, 1.5])
    with pytest.raises(ConfigError, match="required"):
        _scan_grid(config_from_dict({"scan": {}}))
    with pytest.raises(ConfigError):
        _scan_grid(
            config_from_dict({"scan": {"cycles_grid": {"start": 2, "stop": 1, "step": 0.5}}})
        )
    with pytest.raises(ConfigError):
        _scan_grid(
            config_from_dict({"scan": {"cycles_grid": {"start": 1, "stop": 2, "step": 0}}})
        )


def test_verify_lambdas_forms():
    grid = _verify_lambdas({"max": 0.2, "points": 5})
    assert np.allclose(grid, np.linspace(-0.2, 0.2, 5))
    explicit = _verify_lambdas({"values": [-0.1, 0.0, 0.3]})
    assert np.allclose(explicit, [-0.1, 0.0, 0.3])
    with pytest.raises(ConfigError, match="contain 0"):
        _verify_lambdas({"values": [0.1, 0.2]})
    with pytest.raises(ConfigError, match="odd"):
        _verify_lambdas({"max": 0.1, "points": 4})
    with pytest.raises(ConfigError):
        _verify_lambdas({"max": -0.1, "points": 5})


def test_named_operator_lookup():
    qubit = single_qubit_model(1.0)
    assert np.array_equal(_named_operator("sigma_x", qubit), np.array([[0, 1], [1, 0]], dtype=complex))
    coll = collective_spin_model(1.0, 2)
    ops = spin_operators(2)
    assert np.array_equal(_named_operator("Sz", coll), ops["Sz"])
    assert np.allclose(_named_operator("Sx2", coll), ops["Sx"] @ ops["Sx"])
    with pytest.raises(ConfigError, match="available"):
        _named_operator("sigma_w", qubit)


# -- exit codes -----------------------------------------------------------------------


def test_main_exit_2_on_config_errors(tmp_path, capsys):
    assert main(["optimize", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["optimize", "--config", str(bad)]) == 2
    assert main(["optimize", "--preset", "single_qubit.bogus"]) == 2
    assert main(["optimize"]) == 2  # no problem given
    err = capsys.readouterr().err
    assert "configuration error" in err


def test_main_exit_1_on_numeric_failure(tmp_path):
    cfg, out = _run_optimize(tmp_path, "opt")
    # one-design sampling below one sample per segment is a numeric error,
    # not a configuration error
    vcfg = _write_config(
        tmp_path / "verify_bad.json",
        {
            "problem": _tiny_problem(),
            "verification": {"one_design": {"n_samples": 2}},
        },
    )
    rc = main(["verify", "--config", vcfg, "--pulse", str(out / "pulse.csv"),
               "--out", str(tmp_path / "vbad")])
    assert rc == 1


def test_fixtures_commands(capsys):
    assert main(["fixtures", "list"]) == 0
    names = capsys.readouterr().out.split()
    assert names == ["ms_gate", "single_qubit_z", "two_qubit_random"]
    assert main(["fixtures", "dump", "single_qubit_z"]) == 0
    dumped = capsys.readouterr().out.strip().splitlines()
    assert len(dumped) == 2
    assert complex(dumped[0].split()[0]) == -1j
    assert main(["fixtures", "dump", "nope"]) == 2


# -- optimize -------------------------------------------------------------------------


def test_optimize_writes_artifacts_and_is_deterministic(tmp_path, capsys):
    cfg, out1 = _run_optimize(tmp_path, "a")
    for name in ("pulse.csv", "pulse.json", "traces.csv", "summary.json"):
        assert (out1 / name).exists()
    summary = json.loads((out1 / "summary.json").read_text())
    assert summary["success"] is True
    assert summary["functional"]["total"] < 1e-7
    assert summary["provenance"]["problem_sha256"] == _problem_hash(_tiny_problem())
    meta = json.loads((out1 / "pulse.json").read_text())
    assert meta["n_segments"] == 8
    assert meta["t_f"] == pytest.approx(1.5 * 2.0 * np.pi)
    # pulse CSV parses to (8, 1) and reruns reproduce it byte for byte
    rows = np.loadtxt(out1 / "pulse.csv", delimiter=",", skiprows=1, ndmin=2)
    assert rows.shape == (8, 2)  # segment index + one channel
    _, out2 = _run_optimize(tmp_path, "b")
    assert (out1 / "pulse.csv").read_bytes() == (out2 / "pulse.csv").read_bytes()
    assert (out1 / "traces.csv").read_bytes() == (out2 / "traces.csv").read_bytes()


def test_optimize_seed_flag_overrides_config(tmp_path):
    cfg = _write_config(
        tmp_path / "c.json", {"problem": _tiny_problem(), "optimizer": _tiny_optimizer(seed=11)}
    )
    outa, outb = tmp_path / "sa", tmp_path / "sb"
    assert main(["optimize", "--config", cfg, "--out", str(outa), "--seed", "99"]) == 0
    assert main(["optimize", "--config", cfg, "--out", str(outb)]) == 0
    assert (outa / "pulse.csv").read_bytes() != (outb / "pulse.csv").read_bytes()
    assert json.loads((outa / "summary.json").read_text())["provenance"]["seed"] == 99


def test_optimize_rejects_preset_mixed_with_inline(tmp_path):
    cfg = _write_config(
        tmp_path / "mix.json",
        {"problem": {"preset": "single_qubit.target_only", **_tiny_problem()}},
    )
    assert main(["optimize", "--config", cfg, "--out", str(tmp_path / "mix")]) == 2


# -- scan-mct -------------------------------------------------------------------------


def test_scan_mct_resume_and_parallel_parity(tmp_path):
    payload = {
        "problem": _tiny_problem(),
        "optimizer": _tiny_optimizer(n_starts=2, seed=4, max_iterations=150),
        "scan": {"cycles_grid": {"start": 0.9, "stop": 1.1, "step": 0.2}},
    }
    cfg = _write_config(tmp_path / "scan.json", payload)
    out1 = tmp_path / "scan1"
    assert main(["scan-mct", "--config", cfg, "--out", str(out1)]) == 0
    assert (out1 / "scan_points" / "point_000.json").exists()
    assert (out1 / "scan_points" / "point_001.json").exists()
    scan_csv = (out1 / "scan.csv").read_bytes()

    # resume: drop one point file; only that point is recomputed, the summary
    # is unchanged
    (out1 / "scan_points" / "point_001.json").unlink()
    assert main(["scan-mct", "--config", cfg, "--out", str(out1)]) == 0
    assert (out1 / "scan.csv").read_bytes() == scan_csv

    # worker processes reassemble by index: identical output
    out2 = tmp_path / "scan2"
    assert main(["scan-mct", "--config", cfg, "--out", str(out2), "--threads", "2"]) == 0
    assert (out2 / "scan.csv").read_bytes() == scan_csv

    summary = json.loads((out1 / "scan.json").read_text())
    assert summary["grid_step"] == pytest.approx(0.2)


def test_scan_mct_requires_scan_block(tmp_path):
    cfg = _write_config(tmp_path / "noscan.json", {"problem": _tiny_problem()})
    assert main(["scan-mct", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


# -- verify ---------------------------------------------------------------------------


def test_verify_end_to_end_and_deterministic(tmp_path):
    cfg, out = _run_optimize(tmp_path, "vopt")
    vcfg = _write_config(
        tmp_path / "verify.json",
        {
            "problem": _tiny_problem(),
            "verification": {
                "lambdas": {"max": 0.02, "points": 9},
                "perturbations": ["sigma_z"],
                "random": {"count": 3, "seed": 5},
                "one_design": {"n_samples": 32},
            },
        },
    )
    v1, v2 = tmp_path / "v1", tmp_path / "v2"
    assert main(["verify", "--config", vcfg, "--pulse", str(out / "pulse.csv"),
                 "--out", str(v1)]) == 0
    expected = [
        "sweep_sigma_z.csv",
        "curvature.csv",
        "sweep_random.csv",
        "sweep_random_realizations.csv",
        "one_design.json",
        "verify.json",
    ]
    for name in expected:
        assert (v1 / name).exists()
    # curvature rows carry the perturbation label and numeric fit columns
    header, row = (v1 / "curvature.csv").read_text().strip().splitlines()
    assert header.startswith("perturbation,chi_fit,chi_predicted")
    assert row.split(",")[0] == "sigma_z"
    assert np.isfinite(float(row.split(",")[1]))
    # reruns are byte-identical for every CSV artifact
    assert main(["verify", "--config", vcfg, "--pulse", str(out / "pulse.csv"),
                 "--out", str(v2)]) == 0
    for name in expected:
        if name.endswith(".csv"):
            assert (v1 / name).read_bytes() == (v2 / name).read_bytes()


def test_verify_problem_hash_guard(tmp_path):
    cfg, out = _run_optimize(tmp_path, "gopt")
    other = _tiny_problem()
    other["pulse"] = {"n_segments": 8, "cycles": 2.0}
    vcfg = _write_config(
        tmp_path / "other.json",
        {"problem": other, "verification": {"lambdas": {"max": 0.02, "points": 9},
                                            "perturbations": ["sigma_z"]}},
    )
    # different problem hash: refuse without --force
    assert main(["verify", "--config", vcfg, "--pulse", str(out / "pulse.csv"),
                 "--out", str(tmp_path / "g1")]) == 2
    # with --force the hash is waived but the shape check still runs; cycles
    # change dt, so the pulse is rejected either way
    assert main(["verify", "--config", vcfg, "--pulse", str(out / "pulse.csv"),
                 "--out", str(tmp_path / "g2"), "--force"]) == 2


def test_verify_without_problem_uses_sidecar(tmp_path):
    cfg, out = _run_optimize(tmp_path, "sopt")
    vcfg = _write_config(
        tmp_path / "bare.json",
        {"verification": {"lambdas": {"max": 0.02, "points": 9},
                          "perturbations": ["sigma_x"]}},
    )
    assert main(["verify", "--config", vcfg, "--pulse", str(out / "pulse.csv"),
                 "--out", str(tmp_path / "sv")]) == 0
    assert (tmp_path / "sv" / "sweep_sigma_x.csv").exists()


def test_verify_noise_on_state_problem(tmp_path):
    problem = {
        "model": {"family": "collective_spin", "beta": 1.0, "n_qubits": 2},
        "pulse": {"n_segments": 6, "cycles": 0.8},
        "target": {"dicke": {"initial": 0, "target": 1}},
        "objective": {"robustness": "none"},
    }
    cfg = _write_config(
        tmp_path / "state.json",
        {"problem": problem, "optimizer": _tiny_optimizer(n_starts=1, seed=2, max_iterations=60)},
    )
    out = tmp_path / "sopt"
    assert main(["optimize", "--config", cfg, "--out", str(out)]) == 0
    vcfg = _write_config(
        tmp_path / "nverify.json",
        {
            "problem": problem,
            "verification": {
                "lambdas": {"max": 0.02, "points": 9},
                "noise": {"kind": "white", "strength": 0.5, "lambda": 0.02,
                          "operator": "Sz", "n_trajectories": 200, "substeps": 2,
                          "seed": 3},
            },
        },
    )
    vout = tmp_path / "nv"
    assert main(["verify", "--config", vcfg, "--pulse", str(out / "pulse.csv"),
                 "--out", str(vout)]) == 0
    header, row = (vout / "noise.csv").read_text().strip().splitlines()
    cells = row.split(",")
    assert cells[0] == "white"
    assert float(cells[2]) >= 0.0  # predicted infidelity
    assert int(cells[5]) == 200


def test_verify_noise_rejected_for_gate_problems(tmp_path):
    cfg, out = _run_optimize(tmp_path, "nopt")
    vcfg = _write_config(
        tmp_path / "gnoise.json",
        {
            "problem": _tiny_problem(),
            "verification": {"noise": {"kind": "white", "lambda": 0.01,
                                       "n_trajectories": 200}},
        },
    )
    assert main(["verify", "--config", vcfg, "--pulse", str(out / "pulse.csv"),
                 "--out", str(tmp_path / "gn")]) == 2
