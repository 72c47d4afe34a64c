"""Config-driven experiment runner with fully deterministic artifacts.

A run is a pure function of its resolved config document: simulation seeds,
dictionary seeds, and battery seeds are all explicit, artifacts carry no
timestamps, CSV floats use shortest-roundtrip formatting, and rows are
sorted by test id. Running the same config twice must produce byte-identical
CSV files.

Artifacts: run_manifest.json, residuals.csv, martingale.csv, metrics.csv,
hierarchy_summary.json.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .dynamics import InitialLawSampler, SimConfig, simulate_ensemble
from .measures import (EmpiricalMeasure, PathMeasure, PathMeasureEnsemble,
                       TimeGrid, curve_from_ensemble, ensemble_project,
                       from_doc, integrate, path_marginal, uniform_weights)
from .metrics import d_2w, d_ell, ensemble_w1, frak_d, w1_truncated
from .scenarios import SCENARIOS, gaussian_family
from .seeds import content_hash, derive_seed
from .testfn import build_dictionary, build_outer_family, time_test_functions
from .verify import (cylinder_battery, hierarchy_check, martingale_configs,
                     qv_gap)

__all__ = ["main", "run_config", "builtin_config_path", "load_ensemble",
           "save_ensemble", "ConfigError"]

log = logging.getLogger("mvlab.cli")

SCHEMAS = {
    "residuals": "residuals-v1",
    "martingale": "martingale-v1",
    "metrics": "metrics-v1",
    "hierarchy": "hierarchy-v1",
    "manifest": "manifest-v1",
}

_DEFAULT_THRESHOLDS = {
    "rm_vs_kfp_factor": 2.0,
    "martingale_rate_min": 0.95,
    "qv_rel_max": 0.05,
}


class ConfigError(Exception):
    """Invalid or incomplete experiment configuration."""


# ---------------------------------------------------------------------------
# config validation


def _req(doc: dict, field: str, kinds, path: str):
    if field not in doc:
        raise ConfigError(f"{path}.{field}: required field missing")
    val = doc[field]
    if kinds is not None and not isinstance(val, kinds):
        names = kinds.__name__ if isinstance(kinds, type) else \
            "/".join(k.__name__ for k in kinds)
        raise ConfigError(f"{path}.{field}: expected {names}, "
                          f"got {type(val).__name__}")
    return val


def _opt(doc: dict, field: str, kinds, default, path: str):
    if field not in doc:
        return default
    return _req(doc, field, kinds, path)


def _int(doc, field, path, lo=None, default=None):
    val = _req(doc, field, int, path) if default is None else \
        _opt(doc, field, int, default, path)
    if isinstance(val, bool):
        raise ConfigError(f"{path}.{field}: expected int, got bool")
    if lo is not None and val < lo:
        raise ConfigError(f"{path}.{field}: must be >= {lo}, got {val}")
    return val


def validate_config(doc: dict) -> dict:
    """Resolve a raw config document, filling defaults; raises ConfigError."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    if "config" in doc and str(doc.get("schema", "")).startswith("manifest"):
        doc = doc["config"]  # re-ingest a run manifest

    scen = _req(doc, "scenario", dict, "config")
    name = _req(scen, "name", str, "config.scenario")
    if name not in SCENARIOS:
        raise ConfigError(f"config.scenario.name: unknown scenario {name!r}; "
                          f"known: {sorted(SCENARIOS)}")
    params = _opt(scen, "params", dict, {}, "config.scenario")
    for key, val in params.items():
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ConfigError(f"config.scenario.params.{key}: expected number")

    sim = _req(doc, "sim", dict, "config")
    n_particles = _int(sim, "n_particles", "config.sim", lo=1)
    horizon = _req(sim, "horizon", (int, float), "config.sim")
    if not horizon > 0:
        raise ConfigError("config.sim.horizon: must be > 0")
    n_steps = _int(sim, "n_steps", "config.sim", lo=1)

    ens = _req(doc, "ensemble", dict, "config")
    n_members = _int(ens, "n_members", "config.ensemble", lo=1)
    init = _req(ens, "initial", dict, "config.ensemble")
    kind = _req(init, "kind", str, "config.ensemble.initial")
    init_resolved = {"kind": kind}
    if kind == "scenario":
        pass
    elif kind == "gaussian":
        init_resolved["mean"] = float(_req(init, "mean", (int, float),
                                           "config.ensemble.initial"))
        var = float(_req(init, "var", (int, float), "config.ensemble.initial"))
        if var < 0:
            raise ConfigError("config.ensemble.initial.var: must be >= 0")
        init_resolved["var"] = var
    elif kind == "gaussian_family":
        for field in ("mean_range", "var_range"):
            rng = _req(init, field, list, "config.ensemble.initial")
            if len(rng) != 2 or not all(isinstance(v, (int, float)) for v in rng):
                raise ConfigError(
                    f"config.ensemble.initial.{field}: expected [lo, hi]")
            init_resolved[field] = [float(rng[0]), float(rng[1])]
        init_resolved["seed"] = _int(init, "seed", "config.ensemble.initial")
    else:
        raise ConfigError(f"config.ensemble.initial.kind: unknown kind {kind!r}; "
                          "known: scenario, gaussian, gaussian_family")

    dct = _req(doc, "dictionary", dict, "config")
    ell = _int(dct, "ell", "config.dictionary")
    if ell not in (1, 2):
        raise ConfigError("config.dictionary.ell: must be 1 or 2")
    weighted = _opt(dct, "weighted", bool, False, "config.dictionary")
    size = _int(dct, "size", "config.dictionary", lo=1)
    dict_seed = _int(dct, "seed", "config.dictionary")

    bat = _req(doc, "battery", dict, "config")
    battery = {
        "n_xi": _int(bat, "n_xi", "config.battery", lo=1),
        "n_phi": _int(bat, "n_phi", "config.battery", lo=1),
        "n_cylinder": _int(bat, "n_cylinder", "config.battery", lo=1),
        "n_martingale": _int(bat, "n_martingale", "config.battery", lo=0),
        "n_qv": _int(bat, "n_qv", "config.battery", lo=0),
        "seed": _int(bat, "seed", "config.battery"),
    }
    if battery["n_phi"] > size:
        raise ConfigError(
            f"config.battery.n_phi: must be <= dictionary size {size}")

    thr_doc = _opt(doc, "thresholds", dict, {}, "config")
    thresholds = dict(_DEFAULT_THRESHOLDS)
    for key, val in thr_doc.items():
        if key not in thresholds:
            raise ConfigError(f"config.thresholds.{key}: unknown threshold; "
                              f"known: {sorted(thresholds)}")
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ConfigError(f"config.thresholds.{key}: expected number")
        thresholds[key] = float(val)

    seed = _int(doc, "seed", "config")
    resolved = {
        "scenario": {"name": name, "params": {k: float(v) for k, v in params.items()}},
        "sim": {"n_particles": n_particles, "horizon": float(horizon),
                "n_steps": n_steps},
        "ensemble": {"n_members": n_members, "initial": init_resolved},
        "dictionary": {"ell": ell, "weighted": weighted, "size": size,
                       "seed": dict_seed},
        "battery": battery,
        "thresholds": thresholds,
        "seed": seed,
    }
    if "out" in doc:
        resolved["out"] = _req(doc, "out", str, "config")
    return resolved


def builtin_config_path(name: str) -> Path:
    path = resources.files("mvlab").joinpath("configs", f"{name}.json")
    with resources.as_file(path) as p:
        if not p.exists():
            raise ConfigError(f"no bundled config named {name!r}")
        return Path(p)


def load_config(spec: str) -> dict:
    if spec.startswith("builtin:"):
        path = builtin_config_path(spec[len("builtin:"):])
    else:
        path = Path(spec)
        if not path.exists():
            raise ConfigError(f"config file not found: {spec}")
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{spec}: invalid JSON at line {e.lineno}, "
                          f"column {e.colno}: {e.msg}") from e


# ---------------------------------------------------------------------------
# experiment assembly


def build_experiment(resolved: dict) -> dict:
    """Instantiate scenario, grid, dictionary, and test batteries."""
    scen_cfg = resolved["scenario"]
    try:
        scenario = SCENARIOS[scen_cfg["name"]](**scen_cfg["params"])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"config.scenario.params: {e}") from e
    coeffs = scenario.coefficients
    d = coeffs.d

    sim = resolved["sim"]
    grid = TimeGrid.uniform(sim["horizon"], sim["n_steps"])
    master = resolved["seed"]
    sim_cfg = SimConfig(sim["n_particles"], grid,
                        seed=derive_seed(master, "sim"), brownian_dim=coeffs.m)

    init = resolved["ensemble"]["initial"]
    n_members = resolved["ensemble"]["n_members"]
    if init["kind"] == "scenario":
        samplers = [scenario.initial] * n_members
    elif init["kind"] == "gaussian":
        law = InitialLawSampler.gaussian([init["mean"]] * d,
                                         np.eye(d) * init["var"])
        samplers = [law] * n_members
    else:
        samplers = gaussian_family(n_members, tuple(init["mean_range"]),
                                   tuple(init["var_range"]), init["seed"])

    dct = resolved["dictionary"]
    dictionary = build_dictionary(dct["ell"], dct["weighted"], d, dct["size"],
                                  dct["seed"])
    bat = resolved["battery"]
    xis = time_test_functions(sim["horizon"], bat["n_xi"],
                              derive_seed(bat["seed"], "xi"))
    phis = [dictionary[k] for k in range(bat["n_phi"])]
    qv_fns = []
    if bat["n_qv"]:
        qv_dict = build_dictionary(1, False, d, bat["n_qv"],
                                   derive_seed(bat["seed"], "qv"),
                                   center_box=1.0, radius_range=(2.0, 4.0))
        qv_fns = list(qv_dict)
    return {
        "scenario": scenario, "coeffs": coeffs, "grid": grid,
        "sim_cfg": sim_cfg, "samplers": samplers, "dictionary": dictionary,
        "xis": xis, "phis": phis, "qv_fns": qv_fns,
    }


def _simulate(resolved: dict, exp: dict, threads: int) -> PathMeasureEnsemble:
    return simulate_ensemble(exp["coeffs"], exp["samplers"], exp["sim_cfg"],
                             seed=derive_seed(resolved["seed"], "ensemble"),
                             threads=threads)


def _build_cylinders(resolved: dict, exp: dict, mcurve):
    """Cylinder battery with outer centers near the ensemble's t=0 levels."""
    dictionary = exp["dictionary"]
    rm0 = mcurve.entries[0]
    level0 = np.array([
        float(rm0.weights @ [integrate(atom, phi) for atom in rm0.atoms])
        for phi in dictionary])
    return cylinder_battery(dictionary, resolved["battery"]["n_cylinder"],
                            derive_seed(resolved["battery"]["seed"], "cylinder"),
                            centers_hint=lambda idxs: level0[idxs])


# ---------------------------------------------------------------------------
# artifact writing


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path: Path, schema: str, header, rows):
    rows = sorted(rows, key=lambda r: str(r[0]))
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"# schema={schema}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path: Path, doc: dict):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def _residual_rows(report, qv_reports):
    rows = []
    for member, rep in report.kfp_reports:
        _, _, xi, phi = rep.test_ids
        rows.append((rep.test_id, "kfp", member, xi, phi, rep.value,
                     rep.normalizer, rep.normalized))
    for rep in report.rm_reports:
        _, xi, flabel = rep.test_ids
        rows.append((rep.test_id, "rm", "", xi, flabel, rep.value,
                     rep.normalizer, rep.normalized))
    for rep in qv_reports:
        rows.append((rep.test_id, "qv", 0, "", rep.test_ids[1], rep.value,
                     rep.normalizer, rep.normalized))
    return rows


def _martingale_rows(report):
    rows = []
    for member, rep in report.martingale_reports:
        xi, phi, s, t, h = rep.config
        rows.append((f"mart/m{member}/{xi}/{phi}/{h}", member, xi, phi, s, t,
                     h, rep.estimate, rep.stderr, rep.n_samples, rep.passes))
    return rows


def _metric_rows(resolved: dict, exp: dict, frakL: PathMeasureEnsemble):
    """Distance-to-final-time decay rows at a spread of grid nodes."""
    dictionary = exp["dictionary"]
    grid = frakL.grid
    mcurve = curve_from_ensemble(ensemble_project(frakL))
    n_steps = grid.n_nodes - 1
    idxs = sorted(set(int(round(f)) for f in np.linspace(0, n_steps, 9)))
    outers = build_outer_family(8, derive_seed(resolved["battery"]["seed"],
                                               "outer"))
    rm_final = mcurve.entries[-1]
    mu_final = _decimate(path_marginal(frakL.members[0], grid.horizon))
    rows = []
    for k in idxs:
        t = float(grid.nodes[k])
        rm_t = mcurve.entries[k]
        tag = f"t{k:05d}"
        rows.append((f"metric/ensemble_w1/{tag}", "ensemble_w1", t,
                     ensemble_w1(rm_t, rm_final, dictionary)))
        rows.append((f"metric/frak_d1/{tag}", "frak_d1", t,
                     frak_d(1, rm_t, rm_final, dictionary, outers)))
        rows.append((f"metric/frak_d2/{tag}", "frak_d2", t,
                     frak_d(2, rm_t, rm_final, dictionary, outers)))
        mu_t = _decimate(path_marginal(frakL.members[0], t))
        rows.append((f"metric/member0_d/{tag}",
                     f"d_{dictionary.norm_kind}", t,
                     d_ell(mu_t, mu_final, dictionary).value))
        rows.append((f"metric/member0_w1/{tag}", "w1_truncated", t,
                     w1_truncated(mu_t, mu_final)))
    return rows


def _decimate(mu: EmpiricalMeasure, cap: int = 256) -> EmpiricalMeasure:
    """Uniform subsample standing in for mu in transport LPs (kept small)."""
    if mu.n_atoms <= cap:
        return mu
    idx = np.linspace(0, mu.n_atoms - 1, cap).round().astype(int)
    return EmpiricalMeasure(np.array(mu.points[idx]), uniform_weights(idx.size))


def _artifact_hashes(out_dir: Path, names) -> dict:
    out = {}
    for name in names:
        with open(out_dir / name, "rb") as f:
            out[name] = hashlib.sha256(f.read()).hexdigest()
    return out


# ---------------------------------------------------------------------------
# pipelines


def _hierarchy_report(resolved, exp, frakL, mcurve):
    bat = resolved["battery"]
    thr = resolved["thresholds"]
    cylinders = _build_cylinders(resolved, exp, mcurve)
    mart_cfgs = None
    if bat["n_martingale"]:
        mart_cfgs = martingale_configs(
            frakL.grid, exp["xis"], exp["phis"], bat["n_martingale"],
            derive_seed(bat["seed"], "martingale"), d=exp["coeffs"].d)
    return hierarchy_check(
        frakL, exp["coeffs"], exp["dictionary"], exp["xis"], cylinders,
        phis=exp["phis"], mart_configs=mart_cfgs,
        rm_vs_kfp_factor=thr["rm_vs_kfp_factor"],
        martingale_rate_min=thr["martingale_rate_min"])


def _qv_reports(exp, frakL):
    return [qv_gap(frakL.members[0], exp["coeffs"], f) for f in exp["qv_fns"]]


def _summary_doc(resolved, report, qv_reports) -> dict:
    thr = resolved["thresholds"]
    qv_block = None
    qv_ok = True
    if qv_reports:
        worst = max(r.normalized for r in qv_reports)
        qv_ok = bool(worst <= thr["qv_rel_max"])
        qv_block = {"count": len(qv_reports), "max_relative_gap": worst,
                    "rel_max": thr["qv_rel_max"], "ok": qv_ok}
    doc = {
        "schema": SCHEMAS["hierarchy"],
        "config_hash": content_hash(resolved),
        "summary": report.summary_doc(),
        "qv": qv_block,
        "passed": bool(report.passed and qv_ok),
    }
    return doc


def run_config(resolved: dict, out_dir: Path, threads: int = 1) -> int:
    """Full pipeline: simulate, verify, measure, summarize, write artifacts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    exp = build_experiment(resolved)
    log.info("simulating %d members at N=%d", len(exp["samplers"]),
             exp["sim_cfg"].n_particles)
    frakL = _simulate(resolved, exp, threads)
    mcurve = curve_from_ensemble(ensemble_project(frakL))
    report = _hierarchy_report(resolved, exp, frakL, mcurve)
    qv_reports = _qv_reports(exp, frakL)

    write_csv(out_dir / "residuals.csv", SCHEMAS["residuals"],
              ("test_id", "kind", "member", "xi", "phi", "value",
               "normalizer", "normalized"),
              _residual_rows(report, qv_reports))
    write_csv(out_dir / "martingale.csv", SCHEMAS["martingale"],
              ("test_id", "member", "xi", "phi", "s", "t", "h", "estimate",
               "stderr", "n_samples", "passes"),
              _martingale_rows(report))
    write_csv(out_dir / "metrics.csv", SCHEMAS["metrics"],
              ("test_id", "kind", "t", "value"),
              _metric_rows(resolved, exp, frakL))
    summary = _summary_doc(resolved, report, qv_reports)
    write_json(out_dir / "hierarchy_summary.json", summary)

    csv_names = ["residuals.csv", "martingale.csv", "metrics.csv",
                 "hierarchy_summary.json"]
    write_json(out_dir / "run_manifest.json", {
        "schema": SCHEMAS["manifest"],
        "config": resolved,
        "config_hash": content_hash(resolved),
        "schemas": SCHEMAS,
        "artifacts": _artifact_hashes(out_dir, csv_names),
    })
    if not summary["passed"]:
        log.warning("gates failed: %s qv=%s", summary["summary"]["gates"],
                    summary["qv"])
    return 0 if summary["passed"] else 1


# ---------------------------------------------------------------------------
# ensemble serialization (simulate / verify / hierarchy composition)


def save_ensemble(path: Path, ens: PathMeasureEnsemble):
    arrays = {"nodes": np.asarray(ens.grid.nodes),
              "member_weights": np.asarray(ens.weights)}
    for i, member in enumerate(ens.members):
        arrays[f"states_{i:03d}"] = np.asarray(member.states)
        arrays[f"weights_{i:03d}"] = np.asarray(member.weights)
    np.savez(path, **arrays)


def load_ensemble(path: Path) -> PathMeasureEnsemble:
    with np.load(path) as z:
        grid = TimeGrid(z["nodes"])
        member_weights = z["member_weights"]
        members = []
        for i in range(member_weights.size):
            members.append(PathMeasure(grid, z[f"states_{i:03d}"],
                                       z[f"weights_{i:03d}"]))
    return PathMeasureEnsemble(grid, tuple(members), member_weights)


def _cmd_simulate(resolved, out_dir, threads) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    exp = build_experiment(resolved)
    frakL = _simulate(resolved, exp, threads)
    save_ensemble(out_dir / "ensemble.npz", frakL)
    return 0


def _cmd_verify(resolved, out_dir, ensemble_path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    exp = build_experiment(resolved)
    frakL = load_ensemble(ensemble_path)
    mcurve = curve_from_ensemble(ensemble_project(frakL))
    report = _hierarchy_report(resolved, exp, frakL, mcurve)
    qv_reports = _qv_reports(exp, frakL)
    write_csv(out_dir / "residuals.csv", SCHEMAS["residuals"],
              ("test_id", "kind", "member", "xi", "phi", "value",
               "normalizer", "normalized"),
              _residual_rows(report, qv_reports))
    write_csv(out_dir / "martingale.csv", SCHEMAS["martingale"],
              ("test_id", "member", "xi", "phi", "s", "t", "h", "estimate",
               "stderr", "n_samples", "passes"),
              _martingale_rows(report))
    return 0 if report.passed else 1


def _cmd_hierarchy(resolved, out_dir, ensemble_path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    exp = build_experiment(resolved)
    frakL = load_ensemble(ensemble_path)
    mcurve = curve_from_ensemble(ensemble_project(frakL))
    report = _hierarchy_report(resolved, exp, frakL, mcurve)
    qv_reports = _qv_reports(exp, frakL)
    summary = _summary_doc(resolved, report, qv_reports)
    write_json(out_dir / "hierarchy_summary.json", summary)
    return 0 if summary["passed"] else 1


def _cmd_metrics(resolved, out_dir, ensemble_path, mu_path, nu_path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    exp = build_experiment(resolved)
    if mu_path or nu_path:
        if not (mu_path and nu_path):
            raise ConfigError("pair mode needs both --mu and --nu")
        with open(mu_path, encoding="utf-8") as f:
            mu = from_doc(json.load(f))
        with open(nu_path, encoding="utf-8") as f:
            nu = from_doc(json.load(f))
        dictionary = exp["dictionary"]
        rows = [
            (f"metric/pair_d/{dictionary.norm_kind}",
             f"d_{dictionary.norm_kind}", "",
             d_ell(mu, nu, dictionary).value),
            ("metric/pair_w1", "w1_truncated", "", w1_truncated(mu, nu)),
        ]
        if dictionary.weighted:
            rows.append(("metric/pair_d2w", "d_C2w", "",
                         d_2w(mu, nu, dictionary).value))
    else:
        if ensemble_path is None:
            raise ConfigError("metrics needs --ensemble, or --mu and --nu")
        frakL = load_ensemble(ensemble_path)
        rows = _metric_rows(resolved, exp, frakL)
    write_csv(out_dir / "metrics.csv", SCHEMAS["metrics"],
              ("test_id", "kind", "t", "value"), rows)
    return 0


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mvlab",
        description="Measure-evolution laboratory: simulate interacting "
                    "particle systems and verify the lifted equations.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, ensemble=False, pair=False):
        sp.add_argument("--config", required=True,
                        help="config JSON path, or builtin:<name>")
        sp.add_argument("--out", help="output directory (overrides config)")
        sp.add_argument("--seed", type=int, help="override master seed")
        sp.add_argument("--threads", type=int, default=1,
                        help="threads across ensemble members")
        if ensemble:
            sp.add_argument("--ensemble", help="ensemble .npz from simulate")
        if pair:
            sp.add_argument("--mu", help="first measure JSON (pair mode)")
            sp.add_argument("--nu", help="second measure JSON (pair mode)")

    common(sub.add_parser("run", help="full pipeline with all artifacts"))
    common(sub.add_parser("simulate", help="simulate and save the ensemble"))
    common(sub.add_parser("verify", help="residual + martingale batteries"),
           ensemble=True)
    common(sub.add_parser("metrics", help="metric tables"), ensemble=True,
           pair=True)
    common(sub.add_parser("hierarchy", help="hierarchy summary"), ensemble=True)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    level = os.environ.get("MVLAB_LOG", "WARNING").upper()
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        doc = load_config(args.config)
        resolved = validate_config(doc)
        if args.seed is not None:
            resolved["seed"] = args.seed
        out = args.out or resolved.get("out")
        if out is None:
            raise ConfigError("output directory required: --out or config.out")
        out_dir = Path(out)
        if args.command == "run":
            return run_config(resolved, out_dir, threads=args.threads)
        if args.command == "simulate":
            return _cmd_simulate(resolved, out_dir, args.threads)
        if args.command == "verify":
            if not args.ensemble:
                raise ConfigError("verify needs --ensemble")
            return _cmd_verify(resolved, out_dir, Path(args.ensemble))
        if args.command == "hierarchy":
            if not args.ensemble:
                raise ConfigError("hierarchy needs --ensemble")
            return _cmd_hierarchy(resolved, out_dir, Path(args.ensemble))
        if args.command == "metrics":
            ens = Path(args.ensemble) if args.ensemble else None
            return _cmd_metrics(resolved, out_dir, ens, args.mu, args.nu)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - CLI boundary
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error ({type(e).__name__}): {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
