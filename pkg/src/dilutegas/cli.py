"""Batch command-line front-end.

Each subcommand ingests a JSON model document, runs one stage of the
pipeline and writes CSV/JSON artifacts plus a run manifest into the output
directory.  Data artifacts are deterministic for a fixed config and seed;
the manifest additionally records the wall time.

Exit codes: 0 success, 2 config error, 3 numerical or model error,
4 resource budget exceeded.
"""

import argparse
import csv
import hashlib
import json
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy
from scipy.linalg import expm

from . import __version__
from .dynamics import (CalibrationError, TrajectoryConfig, assemble_generator,
                       choi_matrix, collision_monte_carlo, drift,
                       evolve_semigroup, exp_drift, series_expectation,
                       series_generator_derivative)
from .io import ConfigError, load_model
from .kernels import gamma_pv, gamma_resolvent, write_gamma_csv
from .limits import (compositions, convergence_study, factorization_check,
                     limit_correlator, write_convergence_json)
from .model import (ModelError, build_mesh, free_phase, inner,
                    spectral_density, weighted_inner)
from .scattering import (ScatteringError, assemble_s_matrix, build_r,
                         refinement_study, unitarity_report, write_r_csv)
from .wick import (CorrelatorSpec, ResourceError, diagram_scaling_report,
                   enumerate_pairings, finite_xi_correlator)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_RESOURCE = 4


def _word_slots(reservoir, word):
    slots = []
    for ch in word:
        if ch == "0":
            slots.append((reservoir.g0, reservoir.g1))
        elif ch == "1":
            slots.append((reservoir.g1, reservoir.g0))
        else:
            raise ConfigError(f"invalid word character {ch!r}; use 0/1")
    return tuple(slots)


def _json_default(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.complexfloating):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj)}")


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _write_manifest(outdir, args, started, model_doc):
    payload = {"command": args.command,
               "options": {k: v for k, v in sorted(vars(args).items())
                           if k not in ("command",)},
               "model": model_doc}
    blob = json.dumps(payload, sort_keys=True, default=_json_default)
    manifest = {
        "config_hash": hashlib.sha256(blob.encode()).hexdigest(),
        "versions": {"python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__,
                     "dilutegas": __version__},
        "seed": getattr(args, "seed", None),
        "wall_time_s": time.time() - started,
        "command": args.command,
    }
    _write_json(Path(outdir) / "manifest.json", manifest)


def _load(args):
    with open(args.model) as fh:
        model_doc = json.load(fh)
    system, reservoir, mesh = load_model(args.model)
    return system, reservoir, mesh, model_doc


def _complex_cell(z):
    return [repr(float(np.real(z))), repr(float(np.imag(z)))]


def cmd_spectral(args, outdir):
    system, reservoir, mesh, doc = _load(args)
    rows = []
    for m in range(2):
        for n in range(2):
            sd = spectral_density(reservoir, mesh, reservoir.formfactor(m),
                                  reservoir.formfactor(n))
            for b, v in enumerate(sd.values):
                rows.append([repr(float(mesh.centers[b])), m, n,
                             *_complex_cell(v)])
    with open(outdir / "spectral.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["bin_center", "m", "n", "re_sigma", "im_sigma"])
        wr.writerows(rows)
    comp = {}
    for m in range(2):
        for n in range(2):
            sd = spectral_density(reservoir, mesh, reservoir.formfactor(m),
                                  reservoir.formfactor(n))
            direct = inner(reservoir.formfactor(m), reservoir.formfactor(n))
            comp[f"{m}{n}"] = abs(mesh.delta_e * sd.values.sum() - direct)
    _write_json(outdir / "spectral_completeness.json",
                {"abs_error": comp, "n_bins": mesh.n_bins})
    return doc


def cmd_gamma(args, outdir):
    system, reservoir, mesh, doc = _load(args)
    pv = gamma_pv(reservoir, mesh, log_subtraction=args.log_subtraction)
    res = gamma_resolvent(reservoir, mesh, eta=args.eta)
    write_gamma_csv(pv, mesh, outdir / "gamma_pv.csv")
    write_gamma_csv(res, mesh, outdir / "gamma_resolvent.csv")
    diff = np.abs(pv.gamma - res.gamma).max()
    scale = np.abs(pv.gamma).max()
    _write_json(outdir / "gamma_agreement.json",
                {"max_abs_diff": float(diff), "scale": float(scale),
                 "relative": float(diff / max(scale, 1e-300)),
                 "eta": res.eta})
    return doc


def _scattering_data(args, reservoir, mesh, system):
    if args.route == "pv":
        table = gamma_pv(reservoir, mesh)
    else:
        table = gamma_resolvent(reservoir, mesh, eta=args.eta)
    return build_r(system, table)


def cmd_scattering(args, outdir):
    system, reservoir, mesh, doc = _load(args)
    sdata = _scattering_data(args, reservoir, mesh, system)
    write_r_csv(sdata, mesh, outdir / "r_matrices.csv")
    return doc


def cmd_smatrix(args, outdir):
    system, reservoir, mesh, doc = _load(args)
    sdata = _scattering_data(args, reservoir, mesh, system)
    smat = assemble_s_matrix(sdata, reservoir, mesh)
    rep = unitarity_report(smat)
    with open(outdir / "unitarity.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["bin_center", "defect"])
        for b, d in enumerate(rep["defects"]):
            wr.writerow([repr(float(mesh.centers[b])), repr(float(d))])
    out = {"max_defect": rep["max_defect"]}
    if args.refine > 0:
        levels = [mesh.delta_e / 2 ** j for j in range(args.refine + 1)]
        out["refinement"] = refinement_study(system, reservoir, levels,
                                             route=args.route)
    _write_json(outdir / "smatrix_report.json", out)
    return doc


def cmd_correlator(args, outdir):
    system, reservoir, mesh, doc = _load(args)
    slots = _word_slots(reservoir, args.word)
    spec = CorrelatorSpec(slots=slots, t=args.t, xi=reservoir.xi)
    total, per_diagram = finite_xi_correlator(spec, reservoir,
                                              budget=args.budget)
    diagrams = enumerate_pairings(spec.n)
    with open(outdir / "correlator.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["diagram", "connected", "k", "xi_order", "re", "im"])
        for dg in diagrams:
            v = per_diagram[dg.label()]
            wr.writerow([dg.label(), dg.connected, dg.k, dg.xi_order,
                         *_complex_cell(v)])
    _write_json(outdir / "correlator.json",
                {"word": args.word, "t": args.t, "xi": reservoir.xi,
                 "total": total})
    return doc


def cmd_limit(args, outdir):
    system, reservoir, mesh, doc = _load(args)
    slots = _word_slots(reservoir, args.word)
    value = limit_correlator(slots, args.t, reservoir, mesh, route=args.route)
    _write_json(outdir / "limit.json",
                {"word": args.word, "t": args.t, "value": value,
                 "n_compositions": len(compositions(len(slots)))})
    return doc


def cmd_converge(args, outdir):
    system, reservoir, mesh, doc = _load(args)
    slots = _word_slots(reservoir, args.word)
    xis = [float(x) for x in args.xis.split(",")]
    spec = CorrelatorSpec(slots=slots, t=args.t, xi=xis[0])
    rep = convergence_study(spec, reservoir, mesh, xis=xis, route=args.route,
                            budget=args.budget)
    write_convergence_json(rep, outdir / "convergence.json")
    return doc


def cmd_drift(args, outdir):
    system, reservoir, mesh, doc = _load(args)
    sdata = _scattering_data(args, reservoir, mesh, system)
    gamma = drift(sdata, reservoir, mesh)
    grid = np.linspace(0.0, args.t, args.steps + 1)
    snaps = exp_drift(gamma, grid)
    with open(outdir / "drift_expectation.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        head = ["t"]
        n_s = system.dim_s
        for i in range(n_s):
            for j in range(n_s):
                head += [f"re_{i}{j}", f"im_{i}{j}"]
        wr.writerow(head)
        for t, snap in zip(grid, snaps):
            row = [repr(float(t))]
            for i in range(n_s):
                for j in range(n_s):
                    row += _complex_cell(snap[i, j])
            wr.writerow(row)
    _write_json(outdir / "drift.json",
                {"gamma": gamma, "norm": float(np.linalg.norm(gamma, 2))})
    return doc


def cmd_series(args, outdir):
    system, reservoir, mesh, doc = _load(args)
    sdata = _scattering_data(args, reservoir, mesh, system)
    gamma = drift(sdata, reservoir, mesh)
    total, terms = series_expectation(system, reservoir, mesh, args.t,
                                      args.max_order, route=args.route)
    exact = exp_drift(gamma, [args.t])[0]
    _write_json(outdir / "series.json", {
        "t": args.t, "max_order": args.max_order,
        "partial_sum": total, "exp_minus_gamma_t": exact,
        "max_abs_dev": float(np.abs(total - exact).max()),
        "per_order_norm": {str(k): float(np.linalg.norm(v))
                           for k, v in terms.items()},
    })
    return doc


def cmd_generator(args, outdir):
    system, reservoir, mesh, doc = _load(args)
    sdata = _scattering_data(args, reservoir, mesh, system)
    gen = assemble_generator(system, sdata, reservoir, mesh)
    g1 = gen.apply_heisenberg(np.eye(system.dim_s, dtype=complex))
    step = expm(args.t * gen.g_star)
    choi = choi_matrix(step, system.dim_s)
    _write_json(outdir / "generator.json", {
        "gamma_drift": gen.gamma_drift,
        "g1_residual": float(np.linalg.norm(g1)),
        "g1_relative": float(np.linalg.norm(g1)
                             / max(np.linalg.norm(gen.gamma_drift), 1e-300)),
        "choi_min_eigenvalue": float(np.linalg.eigvalsh(
            0.5 * (choi + choi.conj().T)).min()),
        "choi_t": args.t,
    })
    return doc


def _default_rho0(n_s):
    return np.eye(n_s, dtype=complex) / n_s


def cmd_evolve(args, outdir):
    system, reservoir, mesh, doc = _load(args)
    sdata = _scattering_data(args, reservoir, mesh, system)
    gen = assemble_generator(system, sdata, reservoir, mesh)
    grid = np.linspace(0.0, args.t, args.steps + 1)
    states, diag = evolve_semigroup(gen, _default_rho0(system.dim_s), grid)
    _write_trajectory_csv(outdir / "evolution.csv", grid, states,
                          system.dim_s)
    _write_json(outdir / "evolution.json", diag)
    return doc


def _write_trajectory_csv(path, grid, states, n_s, stderr=None):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        head = ["t"]
        for i in range(n_s):
            for j in range(n_s):
                head += [f"re_{i}{j}", f"im_{i}{j}"]
        if stderr is not None:
            for i in range(n_s):
                for j in range(n_s):
                    head += [f"se_re_{i}{j}", f"se_im_{i}{j}"]
        wr.writerow(head)
        for idx, t in enumerate(grid):
            row = [repr(float(t))]
            for i in range(n_s):
                for j in range(n_s):
                    row += _complex_cell(states[idx][i, j])
            if stderr is not None:
                for i in range(n_s):
                    for j in range(n_s):
                        row += [repr(float(stderr[i, j].real)),
                                repr(float(stderr[i, j].imag))]
            wr.writerow(row)


def cmd_mc(args, outdir):
    system, reservoir, mesh, doc = _load(args)
    sdata = _scattering_data(args, reservoir, mesh, system)
    gen = assemble_generator(system, sdata, reservoir, mesh)
    smat = assemble_s_matrix(sdata, reservoir, mesh)
    cfg = TrajectoryConfig(dt=args.dt, horizon=args.t, n_traj=args.n_traj,
                           seed=args.seed, rate_scale=args.rate_scale)
    out = collision_monte_carlo(smat, reservoir, mesh, cfg,
                                _default_rho0(system.dim_s), gen)
    _write_trajectory_csv(outdir / "mc_trajectory.csv", out["times"],
                          out["mean"], system.dim_s, stderr=None)
    states, _ = evolve_semigroup(gen, _default_rho0(system.dim_s), [args.t])
    _write_json(outdir / "mc_summary.json", {
        "calibration": out["calibration"],
        "max_trace_dev": out["max_trace_dev"],
        "final_mean": out["final_mean"],
        "stderr": out["stderr"],
        "semigroup_final": states[0],
        "n_traj": out["n_traj"],
    })
    return doc


def cmd_verify(args, outdir):
    system, reservoir, mesh, doc = _load(args)
    checks = {}
    rng = np.random.default_rng(0)
    m_modes = reservoir.n_modes

    g = rng.normal(size=m_modes) + 1j * rng.normal(size=m_modes)
    f = rng.normal(size=m_modes) + 1j * rng.normal(size=m_modes)
    sd = spectral_density(reservoir, mesh, g, f)
    checks["spectral_completeness"] = abs(
        mesh.delta_e * sd.values.sum() - inner(g, f))

    sf, sg = free_phase(reservoir, f, 0.7), free_phase(reservoir, g, 0.7)
    checks["free_phase_unitary"] = abs(inner(sg, sf) - inner(g, f))

    table = gamma_pv(reservoir, mesh)
    checks["gamma_conjugation"] = float(np.abs(
        table.gamma[0, 1] + np.conj(table.gamma[1, 0])
        - table.gamma_tilde[0, 1]).max())
    sd01 = spectral_density(reservoir, mesh, reservoir.g0, reservoir.g1)
    checks["gamma_tilde_2pi_sigma"] = float(np.abs(
        table.gamma_tilde[0, 1] - 2 * np.pi * sd01.values).max())

    wplus = reservoir.weight_values("L/(1-xiL)")
    wminus = reservoir.weight_values("1/(1-xiL)")
    checks["ccr_weights"] = float(np.abs(
        wminus - reservoir.xi * wplus - 1.0).max())

    spec1 = CorrelatorSpec(slots=((reservoir.g0, reservoir.g1),),
                           t=0.9, xi=reservoir.xi)
    val, _ = finite_xi_correlator(spec1, reservoir)
    closed = 0.9 * weighted_inner(reservoir, reservoir.g1, reservoir.g0,
                                  "L/(1-xiL)")
    checks["n1_closed_form"] = abs(val - closed)

    checks["composition_count"] = abs(len(compositions(4)) - 2 ** 3)

    fact = factorization_check((g, f), 0,
                               ((reservoir.g0, reservoir.g1),
                                (reservoir.g1, reservoir.g0)),
                               0.9, reservoir, mesh)
    checks["factorization"] = fact["abs_error"]

    sdata = build_r(system, table)
    smat = assemble_s_matrix(sdata, reservoir, mesh)
    checks["s_unitarity_defect"] = unitarity_report(smat)["max_defect"]

    gen = assemble_generator(system, sdata, reservoir, mesh)
    g1_mat = gen.apply_heisenberg(np.eye(system.dim_s, dtype=complex))
    scale = max(np.linalg.norm(gen.gamma_drift), 1e-300)
    checks["generator_g1"] = float(np.linalg.norm(g1_mat) / scale)

    tolerances = {"spectral_completeness": 1e-10, "free_phase_unitary": 1e-12,
                  "gamma_conjugation": 1e-10, "gamma_tilde_2pi_sigma": 1e-10,
                  "ccr_weights": 1e-12, "n1_closed_form": 1e-10,
                  "composition_count": 0.5, "factorization": 1e-10,
                  "s_unitarity_defect": 1e-8, "generator_g1": 1e-8}
    results = {k: {"value": float(v), "tolerance": tolerances[k],
                   "passed": bool(v <= tolerances[k])}
               for k, v in checks.items()}
    all_pass = all(r["passed"] for r in results.values())
    _write_json(outdir / "verify.json",
                {"checks": results, "all_passed": all_pass})
    if not all_pass:
        raise ScatteringError("verification failed; see verify.json")
    return doc


COMMANDS = {
    "spectral": cmd_spectral, "gamma": cmd_gamma, "scattering": cmd_scattering,
    "smatrix": cmd_smatrix, "correlator": cmd_correlator, "limit": cmd_limit,
    "converge": cmd_converge, "drift": cmd_drift, "series": cmd_series,
    "generator": cmd_generator, "evolve": cmd_evolve, "mc": cmd_mc,
    "verify": cmd_verify,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dilutegas",
        description="Low-density-limit pipeline on finite mode grids")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--model", required=True, help="JSON model document")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="master RNG seed")
        p.add_argument("--budget", type=int, default=10_000_000,
                       help="mode-tuple budget for correlators")

    def route_opt(p):
        p.add_argument("--route", choices=("pv", "resolvent"), default="pv",
                       help="kernel construction route")
        p.add_argument("--eta", type=float, default=None,
                       help="resolvent regularization (default: bin width)")

    p = sub.add_parser("spectral", help="binned spectral densities")
    common(p)

    p = sub.add_parser("gamma", help="kernels by both routes")
    common(p)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--log-subtraction", action="store_true")

    for name, hlp in (("scattering", "T0/T1 and R matrices"),
                      ("smatrix", "S-matrix blocks and unitarity"),
                      ("drift", "drift matrix and its exponential"),
                      ("series", "perturbative expectation of U_t"),
                      ("generator", "reduced-dynamics generator"),
                      ("evolve", "semigroup evolution"),
                      ("mc", "collision Monte Carlo")):
        p = sub.add_parser(name, help=hlp)
        common(p)
        route_opt(p)
        if name == "smatrix":
            p.add_argument("--refine", type=int, default=0)
        if name in ("drift", "evolve"):
            p.add_argument("--t", type=float, default=1.0)
            p.add_argument("--steps", type=int, default=20)
        if name == "series":
            p.add_argument("--t", type=float, default=1.0)
            p.add_argument("--max-order", type=int, default=3)
        if name == "generator":
            p.add_argument("--t", type=float, default=1.0)
        if name == "mc":
            p.add_argument("--t", type=float, default=1.0)
            p.add_argument("--dt", type=float, default=0.01)
            p.add_argument("--n-traj", type=int, default=1000)
            p.add_argument("--rate-scale", type=float, default=1.0)

    for name, hlp in (("correlator", "finite-fugacity correlator"),
                      ("limit", "causal-limit correlator"),
                      ("converge", "finite-xi vs limit convergence")):
        p = sub.add_parser(name, help=hlp)
        common(p)
        p.add_argument("--word", default="01",
                       help="interaction word over {0,1}, one char per slot")
        p.add_argument("--t", type=float, default=1.0)
        if name != "correlator":
            p.add_argument("--route", choices=("pv", "resolvent"),
                           default="pv")
        if name == "converge":
            p.add_argument("--xis", default="0.2,0.1,0.05,0.025")

    p = sub.add_parser("verify", help="run the exact-identity suite")
    common(p)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.time()
    outdir = Path(args.out)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        doc = COMMANDS[args.command](args, outdir)
        _write_manifest(outdir, args, started, doc)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        _write_json(outdir / "error.json",
                    {"error": str(exc), "kind": "config"})
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        _write_json(outdir / "error.json",
                    {"error": str(exc), "kind": "resource",
                     "required": exc.required})
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ModelError, ScatteringError, CalibrationError, ValueError,
            np.linalg.LinAlgError) as exc:
        _write_json(outdir / "error.json",
                    {"error": str(exc), "kind": "numerical"})
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
