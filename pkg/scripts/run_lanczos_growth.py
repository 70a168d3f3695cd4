"""Recursion-coefficient growth: large-N law and finite-N saturation collapse.

Produces bn_largen.csv (n, b_n per model), bn_finiten.csv (N, n, b_n),
and prints the growth-law fits and the collapse quality.
"""

import argparse
import csv
from dataclasses import dataclass, field
from pathlib import Path

from alltoall import krylov, symops


@dataclass
class Config:
    lmg_coupling: float = 1.0
    euler_couplings: tuple = (0.0, -1.0, 0.5)
    operator: str = "x"
    max_degree: int = 300
    n_max: int = 100
    fit_window: tuple = (20, 100)
    finite_sizes: tuple = (20, 30, 40)
    finite_window: tuple = (0.5, 3.0)
    out: Path = field(default_factory=lambda: Path("out/lanczos"))


def largen_run(cfg, model):
    basis = symops.build_basis(max_degree=cfg.max_degree)
    seed = symops.collective_spin_vector(cfg.operator, basis).normalized()
    return krylov.lanczos(model, seed, cfg.n_max).b


def finiten_runs(cfg, model):
    runs = {}
    for n_sites in cfg.finite_sizes:
        basis = symops.build_basis(n_sites=n_sites)
        seed = symops.collective_spin_vector(cfg.operator, basis).normalized()
        n_max = int(cfg.finite_window[1] * n_sites) + 5
        runs[n_sites] = krylov.lanczos(model, seed, n_max).b
    return runs


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument("--n-max", type=int, default=None)
    args = parser.parse_args()
    cfg = Config()
    if args.out is not None:
        cfg.out = args.out
    if args.n_max is not None:
        cfg.n_max = args.n_max
    cfg.out.mkdir(parents=True, exist_ok=True)

    models = {
        "lmg": symops.lmg(cfg.lmg_coupling),
        "euler": symops.euler_top(*cfg.euler_couplings),
    }
    with open(cfg.out / "bn_largen.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "n", "b_n"])
        for name, model in models.items():
            b = largen_run(cfg, model)
            writer.writerows((name, n + 1, bn) for n, bn in enumerate(b))
            form = "power_log" if name == "lmg" else "power"
            fit = krylov.fit_bn_law(b, form, n_range=cfg.fit_window)
            print(f"{name}: {form} fit A={fit.A:.4f} a={fit.a} B={fit.B} "
                  f"residual={fit.residual:.4f}")

    runs = finiten_runs(cfg, models["lmg"])
    with open(cfg.out / "bn_finiten.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_sites", "n", "b_n"])
        for n_sites, b in runs.items():
            writer.writerows((n_sites, n + 1, bn) for n, bn in enumerate(b))
    col = krylov.saturation_collapse(runs, x_window=cfg.finite_window)
    print(f"finite-N collapse: mean pairwise deviation "
          f"{col.mean_pairwise_deviation:.4f} "
          f"(max {col.max_pairwise_deviation:.4f})")


if __name__ == "__main__":
    main()
