"""Config validation, artifact determinism, and command composition."""
import csv
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

import mvlab as M
from mvlab.cli import (ConfigError, build_experiment, builtin_config_path,
                       load_ensemble, main, save_ensemble, validate_config)


def small_ou_config(**over):
    doc = {
        "scenario": {"name": "mean_field_ou",
                     "params": {"theta": 1.0, "kappa": 0.5, "sigma": 0.4,
                                "init_mean": 1.0, "init_var": 0.25}},
        "sim": {"n_particles": 200, "horizon": 1.0, "n_steps": 50},
        "ensemble": {"n_members": 2, "initial": {"kind": "scenario"}},
        "dictionary": {"ell": 1, "weighted": False, "size": 8, "seed": 11},
        "battery": {"n_xi": 2, "n_phi": 3, "n_cylinder": 4,
                    "n_martingale": 4, "n_qv": 1, "seed": 13},
        "seed": 42,
    }
    doc.update(over)
    return doc


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def read_rows(path):
    with open(path, encoding="utf-8") as f:
        schema = f.readline().strip()
        return schema, list(csv.DictReader(f))


# ---------------------------------------------------------------------------
# config validation


def test_validate_fills_defaults():
    resolved = validate_config(small_ou_config())
    assert resolved["thresholds"] == {"rm_vs_kfp_factor": 2.0,
                                      "martingale_rate_min": 0.95,
                                      "qv_rel_max": 0.05}
    assert resolved["dictionary"]["weighted"] is False
    assert resolved["sim"]["horizon"] == 1.0


@pytest.mark.parametrize("mangle,fragment", [
    (lambda d: d.pop("sim"), "config.sim: required field missing"),
    (lambda d: d["sim"].pop("n_particles"),
     "config.sim.n_particles: required field missing"),
    (lambda d: d["sim"].__setitem__("n_particles", True),
     "expected int, got bool"),
    (lambda d: d["sim"].__setitem__("n_particles", 0), "must be >= 1"),
    (lambda d: d["scenario"].__setitem__("name", "unknown"),
     "unknown scenario"),
    (lambda d: d["dictionary"].__setitem__("ell", 3), "must be 1 or 2"),
    (lambda d: d["battery"].__setitem__("n_phi", 99),
     "must be <= dictionary size"),
    (lambda d: d.__setitem__("thresholds", {"bogus": 1.0}),
     "unknown threshold"),
    (lambda d: d["ensemble"]["initial"].__setitem__("kind", "dirac"),
     "unknown kind"),
    (lambda d: d["scenario"]["params"].__setitem__("theta", "fast"),
     "expected number"),
])
def test_validate_rejects(mangle, fragment):
    doc = small_ou_config()
    mangle(doc)
    with pytest.raises(ConfigError) as ei:
        validate_config(doc)
    assert fragment in str(ei.value)


def test_validate_reingests_manifest():
    resolved = validate_config(small_ou_config())
    manifest = {"schema": "manifest-v1", "config": resolved,
                "artifacts": {}, "schemas": {}}
    assert validate_config(manifest) == resolved


def test_bad_scenario_params_rejected():
    doc = small_ou_config()
    doc["scenario"]["params"]["bogus_knob"] = 1.0
    with pytest.raises(ConfigError, match="scenario.params"):
        build_experiment(validate_config(doc))


def test_builtin_config_lookup():
    path = builtin_config_path("zero_smoke")
    assert path.name == "zero_smoke.json"
    with pytest.raises(ConfigError, match="no bundled config"):
        builtin_config_path("nope")


def test_cli_exit_codes_on_bad_input(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text('{"scenario": ', encoding="utf-8")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "invalid JSON at line" in err
    cfg = write_config(tmp_path, small_ou_config())
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "needs --ensemble" in capsys.readouterr().err
    doc = small_ou_config()
    del doc["sim"]["horizon"]
    assert main(["run", "--config", write_config(tmp_path, doc, "h.json"),
                 "--out", str(tmp_path / "o")]) == 2
    assert "config.sim.horizon" in capsys.readouterr().err


def test_out_dir_required(tmp_path, capsys):
    cfg = write_config(tmp_path, small_ou_config())
    assert main(["run", "--config", cfg]) == 2
    assert "output directory required" in capsys.readouterr().err
    doc = small_ou_config(out=str(tmp_path / "from_config"))
    assert main(["simulate", "--config", write_config(tmp_path, doc, "o.json")]) == 0
    assert (tmp_path / "from_config" / "ensemble.npz").exists()


# ---------------------------------------------------------------------------
# full runs


def test_zero_smoke_run_exact(tmp_path):
    out = tmp_path / "zero"
    assert main(["run", "--config", "builtin:zero_smoke",
                 "--out", str(out)]) == 0
    for name in ("run_manifest.json", "residuals.csv", "martingale.csv",
                 "metrics.csv", "hierarchy_summary.json"):
        assert (out / name).exists()
    schema, rows = read_rows(out / "residuals.csv")
    assert schema == "# schema=residuals-v1"
    assert all(float(r["normalized"]) <= 1e-14 for r in rows)
    assert {r["kind"] for r in rows} == {"kfp", "rm", "qv"}
    schema, mrows = read_rows(out / "martingale.csv")
    assert schema == "# schema=martingale-v1"
    assert len(mrows) == 8 * 3  # configs x members
    for r in mrows:
        assert r["estimate"] == "0.0"
        assert r["stderr"] == "0.0"
        assert r["passes"] == "1"
    summary = json.loads((out / "hierarchy_summary.json").read_text())
    assert summary["passed"] is True
    assert summary["summary"]["gates"]["exact_identities"] is True
    assert summary["qv"]["max_relative_gap"] == 0.0


def test_rows_sorted_by_test_id(tmp_path):
    out = tmp_path / "o"
    main(["run", "--config", "builtin:zero_smoke", "--out", str(out)])
    for name in ("residuals.csv", "martingale.csv", "metrics.csv"):
        _, rows = read_rows(out / name)
        ids = [r["test_id"] for r in rows]
        assert ids == sorted(ids)


def test_rerun_byte_identical(tmp_path):
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["run", "--config", "builtin:zero_smoke",
                     "--out", str(out)]) == 0
        outs.append(out)
    for name in ("run_manifest.json", "residuals.csv", "martingale.csv",
                 "metrics.csv", "hierarchy_summary.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_manifest_hashes_and_reingest(tmp_path):
    out1 = tmp_path / "one"
    assert main(["run", "--config", "builtin:zero_smoke",
                 "--out", str(out1)]) == 0
    manifest = json.loads((out1 / "run_manifest.json").read_text())
    assert manifest["schema"] == "manifest-v1"
    for name, digest in manifest["artifacts"].items():
        actual = hashlib.sha256((out1 / name).read_bytes()).hexdigest()
        assert actual == digest
    # the manifest is itself a valid config: replay and compare bytes
    out2 = tmp_path / "two"
    assert main(["run", "--config", str(out1 / "run_manifest.json"),
                 "--out", str(out2)]) == 0
    for name in manifest["artifacts"]:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_seed_override_changes_artifacts(tmp_path):
    cfg = write_config(tmp_path, small_ou_config())
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", "--config", cfg, "--out", str(a)])
    main(["run", "--config", cfg, "--out", str(b), "--seed", "43"])
    assert (a / "residuals.csv").read_bytes() != (b / "residuals.csv").read_bytes()
    ma = json.loads((a / "run_manifest.json").read_text())
    mb = json.loads((b / "run_manifest.json").read_text())
    assert ma["config_hash"] != mb["config_hash"]
    assert mb["config"]["seed"] == 43


def test_threads_do_not_change_artifacts(tmp_path):
    cfg = write_config(tmp_path, small_ou_config())
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", "--config", cfg, "--out", str(a)])
    main(["run", "--config", cfg, "--out", str(b), "--threads", "4"])
    assert (a / "residuals.csv").read_bytes() == (b / "residuals.csv").read_bytes()
    assert (a / "martingale.csv").read_bytes() == (b / "martingale.csv").read_bytes()


# ---------------------------------------------------------------------------
# command composition


def test_simulate_verify_hierarchy_compose(tmp_path):
    cfg = write_config(tmp_path, small_ou_config())
    sim_dir = tmp_path / "sim"
    assert main(["simulate", "--config", cfg, "--out", str(sim_dir)]) == 0
    ens_path = sim_dir / "ensemble.npz"
    assert ens_path.exists()

    ver_dir = tmp_path / "ver"
    rc = main(["verify", "--config", cfg, "--out", str(ver_dir),
               "--ensemble", str(ens_path)])
    assert rc in (0, 1)
    assert (ver_dir / "residuals.csv").exists()
    assert (ver_dir / "martingale.csv").exists()

    hier_dir = tmp_path / "hier"
    main(["hierarchy", "--config", cfg, "--out", str(hier_dir),
          "--ensemble", str(ens_path)])
    summary = json.loads((hier_dir / "hierarchy_summary.json").read_text())
    assert summary["summary"]["n_members"] == 2

    # the full pipeline simulates the same ensemble: identical residual rows
    run_dir = tmp_path / "run"
    main(["run", "--config", cfg, "--out", str(run_dir)])
    assert (ver_dir / "residuals.csv").read_bytes() == \
        (run_dir / "residuals.csv").read_bytes()


def test_ensemble_save_load_roundtrip(tmp_path, small_ensemble):
    path = tmp_path / "ens.npz"
    save_ensemble(path, small_ensemble)
    back = load_ensemble(path)
    assert np.array_equal(back.grid.nodes, small_ensemble.grid.nodes)
    assert np.array_equal(back.weights, small_ensemble.weights)
    assert len(back.members) == small_ensemble.n_members
    for a, b in zip(back.members, small_ensemble.members):
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.weights, b.weights)


def test_metrics_ensemble_mode(tmp_path):
    cfg = write_config(tmp_path, small_ou_config())
    sim_dir = tmp_path / "sim"
    main(["simulate", "--config", cfg, "--out", str(sim_dir)])
    met_dir = tmp_path / "met"
    assert main(["metrics", "--config", cfg, "--out", str(met_dir),
                 "--ensemble", str(sim_dir / "ensemble.npz")]) == 0
    schema, rows = read_rows(met_dir / "metrics.csv")
    assert schema == "# schema=metrics-v1"
    assert len(rows) == 9 * 5  # nine grid times, five metric kinds
    kinds = {r["kind"] for r in rows}
    assert kinds == {"ensemble_w1", "frak_d1", "frak_d2", "d_C1",
                     "w1_truncated"}
    # at t = horizon every row compares the final state with itself
    finals = [r for r in rows if r["test_id"].endswith("t00050")]
    assert len(finals) == 5
    for r in finals:
        assert float(r["value"]) <= 1e-9
    # decay toward the final time: distances at t=0 exceed those at the end
    def val(kind, tag):
        return next(float(r["value"]) for r in rows
                    if r["kind"] == kind and r["test_id"].endswith(tag))
    assert val("ensemble_w1", "t00000") > val("ensemble_w1", "t00050")


def test_metrics_pair_mode(tmp_path):
    cfg = write_config(tmp_path, small_ou_config())
    rng = np.random.default_rng(5)
    mu = M.EmpiricalMeasure.from_points(rng.normal(0.0, 1.0, 12))
    mu_path = tmp_path / "mu.json"
    mu_path.write_text(json.dumps(M.to_doc(mu)), encoding="utf-8")
    out = tmp_path / "pair"
    assert main(["metrics", "--config", cfg, "--out", str(out),
                 "--mu", str(mu_path), "--nu", str(mu_path)]) == 0
    _, rows = read_rows(out / "metrics.csv")
    assert {r["kind"] for r in rows} == {"d_C1", "w1_truncated"}
    for r in rows:
        assert float(r["value"]) <= 1e-9


def test_metrics_pair_mode_needs_both(tmp_path, capsys):
    cfg = write_config(tmp_path, small_ou_config())
    mu_path = tmp_path / "mu.json"
    mu_path.write_text(json.dumps(M.to_doc(
        M.EmpiricalMeasure.from_points([0.0]))), encoding="utf-8")
    assert main(["metrics", "--config", cfg, "--out", str(tmp_path / "o"),
                 "--mu", str(mu_path)]) == 2
    assert "both --mu and --nu" in capsys.readouterr().err
    assert main(["metrics", "--config", cfg,
                 "--out", str(tmp_path / "o")]) == 2
    assert "--ensemble" in capsys.readouterr().err


def test_float_formatting_shortest_roundtrip(tmp_path):
    out = tmp_path / "z"
    main(["run", "--config", "builtin:zero_smoke", "--out", str(out)])
    _, rows = read_rows(out / "residuals.csv")
    for r in rows:
        for col in ("value", "normalizer", "normalized"):
            assert float(r[col]) == float(repr(float(r[col])))
            assert repr(float(r[col])) == r[col]
