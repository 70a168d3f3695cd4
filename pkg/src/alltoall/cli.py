"""Experiment driver.

Every figure-class computation in the package is runnable from a JSON
config through one of the subcommands:

  lanczos     recursion coefficients b_n and growth-law fits
  autocorr    operator-space autocorrelation (direct / chain / both)
              with optional classical Monte Carlo comparison
  otoc        squared-commutator trajectories and finite-size diagnostics
  phasespace  classical trajectories, saddle scans, and the elliptic
              frequency of the mean-field growth rate
  entangle    kicked state-vector Renyi-2 sweeps and saturation stats
  predict     one-loop determinant entropies and effective-model
              growth classification
  verify      small-N brute-force oracle cross-checks

Flags: --config <path> --seed <u64> --threads <k> --out <dir>.
Exit codes: 0 success, 2 config/validation error, 3 numerical failure.
Each run writes CSV tables (header row, '.' decimal) plus a JSON sidecar
with the resolved config and code version; re-running the same config
and master seed reproduces the CSVs byte-for-byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, krylov, otoc, phasespace, semiclassics, statevec, symops

VALIDATION_ERRORS = (ValueError, KeyError, TypeError, symops.CapacityError)
NUMERICAL_ERRORS = (
    RuntimeError,
    ArithmeticError,
    np.linalg.LinAlgError,
    krylov.OrthogonalityError,
    symops.TruncationError,
)


# ---------------------------------------------------------------------------
# plumbing


def _model_from_config(cfg):
    kind = cfg["kind"]
    normalization = cfg.get("normalization", "sqrt_n")
    if kind == "lmg":
        return symops.lmg(cfg["J"], normalization=normalization)
    if kind == "euler_top":
        jx, jy, jz = cfg["J"]
        return symops.euler_top(jx, jy, jz, normalization=normalization)
    raise ValueError(f"unknown model kind {kind!r}")


def _grid_from_config(cfg):
    return np.linspace(cfg["start"], cfg["stop"], cfg["num"])


def _seed_operator(cfg, basis):
    axis = cfg.get("operator", "x")
    return symops.collective_spin_vector(axis, basis)


def _green_spec(cfg):
    kind = cfg["kind"]
    if kind == "tss_fixed_point":
        return semiclassics.tss_green()
    if kind == "uniform_sphere":
        return semiclassics.uniform_sphere_green()
    if kind == "great_circle":
        return semiclassics.great_circle_green()
    if kind == "moments":
        return semiclassics.moments_green(
            cfg["x_mean"], cfg["y2"], cfg["z2"], cfg.get("yz", 0.0)
        )
    if kind == "euler":
        return semiclassics.euler_green(np.asarray(cfg["g"], dtype=float))
    raise ValueError(f"unknown Green-function kind {kind!r}")


def _pointers(cfg, n_sites):
    kind = cfg.get("kind", "great_circle")
    if kind == "great_circle":
        return statevec.great_circle_pointers(n_sites, axis=cfg.get("axis", "x"))
    if kind == "uniform_sphere":
        return statevec.uniform_sphere_pointers(n_sites)
    if kind == "delta":
        return statevec.delta_pointers(cfg["s"], n_sites)
    raise ValueError(f"unknown pointer distribution {kind!r}")


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (complex, np.complexfloating)):
        return format(complex(value).real, ".17g") + (
            format(complex(value).imag, "+.17g") + "j"
        )
    return value


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _write_sidecar(out_dir, name, config, seed, extra=None):
    record = {
        "subcommand": name,
        "config": _jsonable(config),
        "seed": seed,
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    if extra:
        record.update(_jsonable(extra))
    with open(Path(out_dir) / f"{name}.json", "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _pmap(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# subcommands


def run_lanczos(config, seed, threads, out_dir):
    model = _model_from_config(config["model"])
    if "n_sites" in config:
        basis = symops.build_basis(n_sites=config["n_sites"])
    else:
        basis = symops.build_basis(max_degree=config["max_degree"])
    op = _seed_operator(config, basis)
    result = krylov.lanczos(model, op.normalized(), config["n_max"])
    rows = [(n + 1, b) for n, b in enumerate(result.b)]
    _write_csv(Path(out_dir) / "lanczos.csv", ("n", "b_n"), rows)
    extra = {"terminated_at": result.terminated_at,
             "max_ortho_error": result.max_ortho_error}
    if "fit" in config:
        fc = config["fit"]
        fit = krylov.fit_bn_law(
            result.b,
            fc.get("form", "power_log"),
            n_range=tuple(fc["n_range"]) if "n_range" in fc else None,
            fixed_power=fc.get("fixed_power", 1.5),
        )
        extra["fit"] = {"form": fit.form, "A": fit.A, "a": fit.a,
                        "B": fit.B, "residual": fit.residual}
    _write_sidecar(out_dir, "lanczos", config, seed, extra)


def run_autocorr(config, seed, threads, out_dir):
    model = _model_from_config(config["model"])
    if "n_sites" in config:
        basis = symops.build_basis(n_sites=config["n_sites"])
    else:
        basis = symops.build_basis(max_degree=config["max_degree"])
    op = _seed_operator(config, basis)
    t_grid = _grid_from_config(config["t_grid"])
    method = config.get("method", "both")
    res = krylov.autocorrelation_operator(
        model, op, t_grid, method=method, n_max=config.get("n_max", 150)
    )
    header = ["t", "G_re", "G_im"]
    columns = [t_grid, res.G.real, res.G.imag]
    extra = {
        "method": method,
        "edge_weight": res.edge_weight,
        "route_disagreement": res.route_disagreement,
        "chain_edge_contact": res.chain_edge_contact,
    }
    if "mc" in config:
        mc = config["mc"]
        ens = phasespace.sample_gaussian(mc["count"], seed=seed)
        mc_res = phasespace.mc_autocorrelation(
            model, config.get("operator", "x"), ens, t_grid
        )
        header += ["G_classical", "G_classical_stderr"]
        columns += [mc_res.G, mc_res.stderr]
        extra["mc_count"] = mc["count"]
    _write_csv(
        Path(out_dir) / "autocorr.csv", header, list(zip(*columns))
    )
    if "spectral" in config:
        sc = config["spectral"]
        dens = krylov.spectral_density(
            t_grid,
            res.G,
            sc["sigma_window"],
            omega_max=sc.get("omega_max"),
            n_omega=sc.get("n_omega", 2001),
        )
        _write_csv(
            Path(out_dir) / "spectral.csv",
            ("omega", "rho"),
            list(zip(dens.omega, dens.rho)),
        )
        extra["sum_rule_deficit"] = dens.sum_rule_deficit
        if "tail" in sc:
            fit = krylov.tail_fit(dens, sc["tail"]["exponent"],
                                  tuple(sc["tail"]["window"]))
            extra["tail_fit"] = {"exponent": fit.exponent,
                                 "omega0": fit.omega0,
                                 "c": fit.c,
                                 "r_squared": fit.r_squared}
    _write_sidecar(out_dir, "autocorr", config, seed, extra)


def run_otoc(config, seed, threads, out_dir):
    model = _model_from_config(config["model"])
    t_grid = _grid_from_config(config["t_grid"])
    sizes = list(config["n_sites"])

    def job(n_sites):
        basis = symops.build_basis(n_sites=n_sites)
        op = _seed_operator(config, basis)
        return otoc.otoc_trajectory(model, op, t_grid, label=str(n_sites))

    trajs = dict(zip(sizes, _pmap(job, sizes, threads)))
    rows = [
        (n, t, c)
        for n in sizes
        for t, c in zip(trajs[n].t, trajs[n].C)
    ]
    _write_csv(Path(out_dir) / "otoc.csv", ("n_sites", "t", "C"), rows)
    extra = {"diagnostics": {}}
    for n in sizes:
        diag = {}
        try:
            pre = otoc.presaturation(trajs[n])
            diag["t_p_interval"] = list(pre.t_interval)
            diag["c_at_tp"] = pre.c_at_tp
        except ValueError as err:
            diag["presaturation_error"] = str(err)
        try:
            diag["t_scrambling"] = otoc.scrambling_time(trajs[n])
        except ValueError as err:
            diag["scrambling_error"] = str(err)
        extra["diagnostics"][n] = diag
    if len(sizes) >= 3 and config.get("regime_fit", True):
        try:
            fit = otoc.regime_fit(trajs)
            extra["regime_fit"] = {"b": fit.b, "b_residual": fit.b_residual}
        except ValueError as err:
            extra["regime_fit_error"] = str(err)
    if "collapse_nu" in config:
        nu_grid = np.asarray(config["collapse_nu"], dtype=float)
        nu, scores = otoc.best_collapse(trajs, nu_grid)
        extra["collapse"] = {"nu": nu, "scores": list(scores)}
    _write_sidecar(out_dir, "otoc", config, seed, extra)


def run_phasespace(config, seed, threads, out_dir):
    model = _model_from_config(config["model"])
    extra = {}
    if "trajectories" in config:
        tc = config["trajectories"]
        t_grid = _grid_from_config(tc["t_grid"])
        s0 = np.asarray(tc["initial"], dtype=float)
        traj = phasespace.eom_integrate(model, s0, t_grid)
        rows = []
        for k, t in enumerate(t_grid):
            snap = np.atleast_2d(traj[k])
            for i, s in enumerate(snap):
                rows.append((i, t, s[0], s[1], s[2]))
        _write_csv(
            Path(out_dir) / "trajectories.csv",
            ("trajectory", "t", "s_x", "s_y", "s_z"),
            rows,
        )
    if "saddles" in config:
        rows = []
        for r in config["saddles"]["radii"]:
            info = phasespace.saddle_exponent(model, r)
            rows.append((r, info.rate if info.rate is not None else ""))
        _write_csv(Path(out_dir) / "saddles.csv", ("radius", "rate"), rows)
    if "omega0" in config:
        oc = config["omega0"]
        rows = [
            (j, e, phasespace.lmg_omega0(j, e))
            for j in oc["J"]
            for e in oc["E"]
        ]
        _write_csv(Path(out_dir) / "omega0.csv", ("J", "E", "omega0"), rows)
    if "autocorr_mc" in config:
        mc = config["autocorr_mc"]
        t_grid = _grid_from_config(mc["t_grid"])
        ens = phasespace.sample_gaussian(mc["count"], seed=seed)
        res = phasespace.mc_autocorrelation(
            model, mc.get("operator", "x"), ens, t_grid
        )
        _write_csv(
            Path(out_dir) / "autocorr_mc.csv",
            ("t", "G", "stderr"),
            list(zip(t_grid, res.G, res.stderr)),
        )
    _write_sidecar(out_dir, "phasespace", config, seed, extra)


def run_entangle(config, seed, threads, out_dir):
    model = _model_from_config(config["model"])
    dt = config["dt"]
    n_steps = config["n_steps"]
    sizes = list(config["n_sites"])
    allow_large = bool(config.get("allow_large", False))

    def job(n_sites):
        pointers = _pointers(config.get("pointers", {}), n_sites)
        state = statevec.build_product_state(pointers, allow_large=allow_large)
        sites_a = range(n_sites // 2)
        t, s2 = [], []

        def record(k, st):
            t.append(k * dt)
            s2.append(statevec.renyi2(st, sites_a))

        statevec.evolve_kicked(model, state, n_steps, dt, callback=record)
        return np.asarray(t), np.asarray(s2)

    curves = dict(zip(sizes, _pmap(job, sizes, threads)))
    rows = [
        (n, t, s)
        for n in sizes
        for t, s in zip(curves[n][0], curves[n][1])
    ]
    _write_csv(Path(out_dir) / "entangle.csv", ("n_sites", "t", "S2"), rows)
    extra = {}
    try:
        stats = statevec.saturation_stats(curves)
        _write_csv(
            Path(out_dir) / "saturation.csv",
            ("n_sites", "S_max", "t_ent"),
            [(n, stats.s_max[n], stats.t_ent[n]) for n in sizes],
        )
        extra["slope_vs_logn"] = stats.slope_vs_logn
        extra["t_ent_loglog_slope"] = stats.t_ent_loglog_slope
    except ValueError as err:
        extra["saturation_error"] = str(err)
    _write_sidecar(out_dir, "entangle", config, seed, extra)


def run_predict(config, seed, threads, out_dir):
    extra = {}
    if "determinant" in config:
        dc = config["determinant"]
        spec = _green_spec(dc["green"])
        n = dc.get("n", 2)
        j = dc["J"]
        x = dc.get("x", 0.5)
        dt = dc["dt"]
        steps = list(dc["steps"])

        def job(n_steps):
            return semiclassics.renyi_prediction(n, j, x, spec, dt, n_steps)

        values = _pmap(job, steps, threads)
        rows = [(k * dt, k, s) for k, s in zip(steps, values)]
        _write_csv(Path(out_dir) / "predict.csv", ("t", "steps", "S_n"), rows)
    if "effective" in config:
        ec = config["effective"]
        kwargs = {"x": ec.get("x", 0.5)}
        if "J" in ec:
            kwargs["j"] = ec["J"] if np.isscalar(ec["J"]) else tuple(ec["J"])
        if "kappa" in ec:
            kwargs["kappa"] = ec["kappa"]
        if "g" in ec:
            kwargs["g"] = np.asarray(ec["g"], dtype=float)
        em = semiclassics.effective_dynamics(ec["kind"], **kwargs)
        extra["effective"] = {
            "kind": em.kind,
            "rate": em.rate,
            "m_log": em.m_log,
            "eigenvalues": [
                {"re": z.real, "im": z.imag} for z in em.eigenvalues
            ],
        }
    _write_sidecar(out_dir, "predict", config, seed, extra)


def _verify_checks():
    """Brute-force oracle cross-checks at small N."""
    checks = []

    def check(name, fn):
        try:
            detail = fn()
            checks.append((name, True, detail))
        except AssertionError as err:
            checks.append((name, False, str(err)))

    def dense_commutator():
        n, d = 4, 4
        basis = symops.build_basis(n_sites=n)
        model = symops.euler_top(0.0, -1.0, 0.5)
        liou = symops.liouvillian_matrix(model, basis)
        rng = np.random.default_rng(0)
        vec = rng.normal(size=basis.dim)
        out = symops.SymOpVec(basis, liou @ vec.astype(complex))
        dense_in = symops.to_pauli_strings(symops.SymOpVec(basis, vec.astype(complex)))
        sy = symops.to_pauli_strings(symops.collective_spin_vector("y", basis))
        sz = symops.to_pauli_strings(symops.collective_spin_vector("z", basis))
        h = np.sqrt(n) * 0.5 * (-1.0 * sy @ sy + 0.5 * sz @ sz)
        dense_out = h @ dense_in - dense_in @ h
        got = symops.to_pauli_strings(out)
        err = np.max(np.abs(got - dense_out))
        assert err < 1e-10, f"liouvillian vs dense commutator: {err:.2e}"
        return f"max error {err:.2e}"

    def dense_otoc():
        n = 6
        basis = symops.build_basis(n_sites=n)
        model = symops.euler_top(0.0, -1.0, 0.5)
        op = symops.collective_spin_vector("x", basis)
        traj = otoc.otoc_trajectory(model, op, np.array([0.0, 1.0]))
        assert abs(traj.C[0] - 0.25) < 1e-12, "C(0) != 1/4"
        assert 0.25 < traj.C[1] <= n * 0.25 + 1e-9, "C(1) out of bounds"
        return f"C(0)={traj.C[0]:.6f}, C(1)={traj.C[1]:.6f}"

    def chain_two_site():
        traj = krylov.evolve_chain(np.array([1.0]), np.linspace(0, 2, 9))
        err = np.max(
            np.abs(np.abs(traj.phi[:, 0]) - np.abs(np.cos(traj.t)))
        )
        assert err < 1e-10, f"two-site chain: {err:.2e}"
        return f"max error {err:.2e}"

    def determinant_vs_statevec():
        n_sites, dt, j = 12, 0.5, 2.0
        model = symops.lmg(j, normalization="over_n")
        state = statevec.build_product_state(
            statevec.great_circle_pointers(n_sites, axis="x")
        )
        spec = semiclassics.great_circle_green()
        worst = 0.0
        for k in range(1, 5):
            state = statevec.kicked_step(model, state, dt)
            exact = statevec.renyi2(state, range(n_sites // 2))
            pred = semiclassics.renyi_prediction(2, j, 0.5, spec, dt, k)
            worst = max(worst, abs(pred - exact))
        assert worst < 0.15, f"determinant vs state vector: {worst:.3f}"
        return f"max deviation {worst:.4f}"

    def covariance_identity():
        state = statevec.build_product_state(
            statevec.great_circle_pointers(8, axis="x")
        )
        _, moments = statevec.collective_covariance(state)
        err = np.max(np.abs(moments - np.diag([0.25, 0.125, 0.125])))
        assert err < 1e-12, f"covariance identity: {err:.2e}"
        return f"max error {err:.2e}"

    check("liouvillian_vs_dense_commutator", dense_commutator)
    check("otoc_initial_and_bounds", dense_otoc)
    check("chain_two_site_propagator", chain_two_site)
    check("determinant_vs_state_vector", determinant_vs_statevec)
    check("covariance_identity", covariance_identity)
    return checks


def run_verify(config, seed, threads, out_dir):
    checks = _verify_checks()
    _write_csv(
        Path(out_dir) / "verify.csv",
        ("check", "passed", "detail"),
        [(name, int(ok), detail) for name, ok, detail in checks],
    )
    n_failed = sum(1 for _, ok, _ in checks if not ok)
    _write_sidecar(out_dir, "verify", config, seed, {"failed": n_failed})
    if n_failed:
        raise RuntimeError(f"{n_failed} verification check(s) failed")


RUNNERS = {
    "lanczos": run_lanczos,
    "autocorr": run_autocorr,
    "otoc": run_otoc,
    "phasespace": run_phasespace,
    "entangle": run_entangle,
    "predict": run_predict,
    "verify": run_verify,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    parser = argparse.ArgumentParser(
        prog="alltoall", description="all-to-all spin model experiment driver"
    )
    parser.add_argument("subcommand", choices=sorted(RUNNERS))
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON config file (verify runs without one)")
    parser.add_argument("--seed", type=int, default=0,
                        help="master seed for stochastic operations")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker pool size for independent jobs")
    parser.add_argument("--out", type=Path, default=Path("."),
                        help="output directory")
    return parser


def _error_record(out_dir, subcommand, kind, err):
    record = {
        "subcommand": subcommand,
        "error_type": kind,
        "error_class": type(err).__name__,
        "message": str(err),
    }
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "error.json", "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError:
        pass
    print(json.dumps(record), file=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    config = {}
    try:
        if args.config is not None:
            with open(args.config) as fh:
                config = json.load(fh)
        elif args.subcommand != "verify":
            raise ValueError(f"{args.subcommand} requires --config")
        args.out.mkdir(parents=True, exist_ok=True)
    except (OSError, json.JSONDecodeError, ValueError) as err:
        _error_record(args.out, args.subcommand, "validation", err)
        return 2
    seed = config.get("seed", 0) if args.seed == 0 else args.seed
    try:
        RUNNERS[args.subcommand](config, seed, args.threads, args.out)
    except VALIDATION_ERRORS as err:
        _error_record(args.out, args.subcommand, "validation", err)
        return 2
    except NUMERICAL_ERRORS as err:
        _error_record(args.out, args.subcommand, "numerical", err)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
