"""Squared-commutator (OTOC) trajectories via operator size.

The squared commutator of a collective operator with all single-site
spins equals the mean Pauli-string length of the Heisenberg-evolved
operator, i.e. the expectation of the diagonal size superoperator in
the symmetrized-Pauli expansion.  This module computes exact finite-N
trajectories and the finite-size diagnostics: the pre-saturation
interval t_p, the scrambling time t_S, data collapses, and fits of the
two-stage growth law.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import symops
from .krylov import _expm_grid

NORM_DRIFT_TOL = 1e-8


@dataclass
class OtocTrajectory:
    t: np.ndarray
    C: np.ndarray
    n_sites: int
    model: symops.ModelSpec
    label: str = ""
    norm_drift: float = 0.0


def otoc_trajectory(model, seed, t_grid, label=""):
    """Exact C(t) = (O(t)| size |O(t)) for a finite-N seed operator."""
    basis = seed.basis
    if not basis.finite:
        raise ValueError("the squared commutator is defined at finite N")
    t_grid = np.asarray(t_grid, dtype=float)
    liou = symops.liouvillian_matrix(model, basis)
    states = _expm_grid(1j * liou, seed.coeffs, t_grid)
    norms = np.sum(np.abs(states) ** 2, axis=1)
    drift = float(np.max(np.abs(norms - norms[0])))
    if drift > NORM_DRIFT_TOL:
        raise RuntimeError(
            f"norm drift {drift:.2e} exceeds {NORM_DRIFT_TOL}; "
            "evolution is untrustworthy"
        )
    c = np.abs(states) ** 2 @ basis.degrees
    return OtocTrajectory(
        t=t_grid, C=c, n_sites=basis.n_sites, model=model, label=label,
        norm_drift=drift,
    )


# ---------------------------------------------------------------------------
# finite differences on ln C


def _stencil_derivatives(t, y):
    """First and second derivatives by 5-point central stencils."""
    h = t[1] - t[0]
    if not np.allclose(np.diff(t), h, rtol=1e-9):
        raise ValueError("derivative stencils need a uniform grid")
    d1 = np.full_like(y, np.nan)
    d2 = np.full_like(y, np.nan)
    d1[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    d2[2:-2] = (-y[:-4] + 16 * y[1:-3] - 30 * y[2:-2] + 16 * y[3:-1] - y[4:]) / (
        12 * h**2
    )
    return d1, d2


@dataclass
class Presaturation:
    t_interval: tuple  # (argmax d ln C, argmin d^2 ln C)
    c_at_tp: float  # C at the interval midpoint
    c_uncertainty: float  # half-spread of C over the interval
    c_at_end: float  # C at the saturation-bend end of the interval


def presaturation(traj):
    """Bracket the departure from the N -> infinity growth curve.

    The interval runs from the maximum of d/dt ln C to the minimum of
    d^2/dt^2 ln C; both must be interior grid points.
    """
    lnc = np.log(traj.C)
    d1, d2 = _stencil_derivatives(traj.t, lnc)
    interior = slice(2, -2)
    i1 = 2 + int(np.nanargmax(d1[interior]))
    i2 = 2 + int(np.nanargmin(d2[interior]))
    if i1 in (2, len(traj.t) - 3) or i2 in (2, len(traj.t) - 3):
        raise ValueError(
            "no interior extremum of the log-derivatives: trajectory too short"
        )
    lo, hi = sorted((i1, i2))
    mid = (lo + hi) // 2
    spread = (np.max(traj.C[lo : hi + 1]) - np.min(traj.C[lo : hi + 1])) / 2
    return Presaturation(
        t_interval=(float(traj.t[lo]), float(traj.t[hi])),
        c_at_tp=float(traj.C[mid]),
        c_uncertainty=float(spread),
        c_at_end=float(traj.C[hi]),
    )


def scrambling_time(traj, theta=0.5, plateau_fraction=0.1):
    """First time C(t) reaches theta times its late-time plateau.

    The plateau is the mean of the trailing plateau_fraction of the
    trajectory (threshold relative to the plateau, not to N).
    """
    n_tail = max(2, int(len(traj.C) * plateau_fraction))
    tail = traj.C[-n_tail:]
    plateau = float(np.mean(tail))
    # the tail must actually be flat, not still growing
    if abs(tail[-1] - tail[0]) > 0.1 * plateau:
        raise ValueError("trajectory has not reached a plateau")
    hits = np.flatnonzero(traj.C >= theta * plateau)
    if hits.size == 0:
        raise ValueError("trajectory never reaches the requested threshold")
    return float(traj.t[hits[0]])


# ---------------------------------------------------------------------------
# collapses and regime fits


def collapse_metric(runs, nu, t_window=None):
    """Deviation of C/N vs t/N^nu curves across system sizes.

    runs: mapping N -> OtocTrajectory.  Curves are interpolated on the
    common rescaled-time overlap (optionally restricted to t_window in
    rescaled units) and scored by the max pairwise deviation of C/N.
    """
    if len(runs) < 2:
        raise ValueError("need at least two system sizes")
    scaled = {}
    for n_sites, traj in runs.items():
        x = traj.t / n_sites**nu
        scaled[n_sites] = (x, traj.C / n_sites)
    lo = max(x[0] for x, _ in scaled.values())
    hi = min(x[-1] for x, _ in scaled.values())
    if t_window is not None:
        lo, hi = max(lo, t_window[0]), min(hi, t_window[1])
    if hi <= lo:
        raise ValueError("rescaled time ranges do not overlap")
    grid = np.linspace(lo, hi, 200)
    curves = [np.interp(grid, x, y) for x, y in scaled.values()]
    dev = 0.0
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            dev = max(dev, float(np.max(np.abs(curves[i] - curves[j]))))
    return dev


def best_collapse(runs, nu_grid, t_window=None):
    """Exponent in the scanned grid minimizing the collapse deviation."""
    scores = [collapse_metric(runs, nu, t_window) for nu in nu_grid]
    i = int(np.argmin(scores))
    return float(nu_grid[i]), scores


def early_growth_fit(traj, exponent, c_window):
    """Fit ln C - ln C(0) = c * t^exponent over C(t)/C(0) in c_window."""
    y = np.log(traj.C / traj.C[0])
    ratio = traj.C / traj.C[0]
    mask = (ratio >= c_window[0]) & (ratio <= c_window[1]) & (traj.t > 0)
    if np.count_nonzero(mask) < 4:
        raise ValueError("early-growth window contains too few points")
    x = traj.t[mask] ** exponent
    c, intercept = np.polyfit(x, y[mask], 1)
    resid = y[mask] - (c * x + intercept)
    ss = np.sum((y[mask] - y[mask].mean()) ** 2)
    r2 = 1 - np.sum(resid**2) / ss if ss > 0 else 0.0
    return float(c), float(r2)


def loglog_slope(traj, t_window):
    """Slope of ln C against ln t over a time window."""
    mask = (traj.t >= t_window[0]) & (traj.t <= t_window[1])
    if np.count_nonzero(mask) < 3:
        raise ValueError("log-log window contains too few points")
    return float(np.polyfit(np.log(traj.t[mask]), np.log(traj.C[mask]), 1)[0])


@dataclass
class RegimeFit:
    b: float  # from C(t_p)/N ~ N^-b
    b_residual: float
    intermediate_power: float | None  # mean ln C vs ln t slope between t_p, t_S
    consistency_gap: float | None  # |intermediate_power - 2 b|


def regime_fit(runs, intermediate_windows=None, point="mid"):
    """Joint diagnostics of the two-stage growth across system sizes.

    runs: mapping N -> OtocTrajectory (>= 3 sizes spanning a factor >= 2).
    b is regressed from the pre-saturation values; the intermediate power
    is averaged over per-size log-log slopes (windows per N, optional);
    the consistency of the power with 2b is reported, never enforced.
    point selects where in the pre-saturation bracket C is read: 'mid'
    (interval midpoint) or 'end' (the saturation-bend endpoint).
    """
    if point not in ("mid", "end"):
        raise ValueError(f"unknown bracket point {point!r}")
    sizes = sorted(runs)
    if len(sizes) < 3 or sizes[-1] < 2 * sizes[0]:
        raise ValueError("need >= 3 sizes spanning a factor >= 2")
    logn, logc = [], []
    for n_sites in sizes:
        pre = presaturation(runs[n_sites])
        c_tp = pre.c_at_tp if point == "mid" else pre.c_at_end
        logn.append(np.log(n_sites))
        logc.append(np.log(c_tp / n_sites))
    coef, resid = np.polyfit(logn, logc, 1), None
    resid = float(
        np.linalg.norm(np.asarray(logc) - np.polyval(coef, logn))
    )
    b = -float(coef[0])
    power = gap = None
    if intermediate_windows is not None:
        slopes = [
            loglog_slope(runs[n_sites], intermediate_windows[n_sites])
            for n_sites in sizes
            if n_sites in intermediate_windows
        ]
        if slopes:
            power = float(np.mean(slopes))
            gap = abs(power - 2 * b)
    return RegimeFit(
        b=b, b_residual=resid, intermediate_power=power, consistency_gap=gap
    )
