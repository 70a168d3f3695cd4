"""Classical phase space of the large-N collective spins: Gaussian
ensemble sampling, equations of motion, Monte Carlo autocorrelators,
saddle instability exponents, super-exponential OTOC saddle predictions,
and the elliptic-integral growth-rate formula for the transverse-field
model.

The classical spins s = (s_x, s_y, s_z) live on R^3 with the bracket
{s_x, s_y} = s_z (cyclic) and the Gaussian measure prod_a exp(-2 s_a^2)
(each component has variance 1/4).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.special

from .symops import ModelSpec

CONSERVATION_TOL = 1e-8


@dataclass
class SaddleInfo:
    location: np.ndarray | None
    rate: float | None  # instability exponent lambda_r; None = no saddle
    radius: float
    omega: float | None = None  # Euler only: lambda_r / r


@dataclass
class McAutocorr:
    t: np.ndarray
    G: np.ndarray
    stderr: np.ndarray
    n_samples: int


def classical_hamiltonian(model, s):
    """h(s) whose bracket flow generates the classical dynamics."""
    s = np.asarray(s, dtype=float)
    sx, sy, sz = s[..., 0], s[..., 1], s[..., 2]
    if model.kind == "euler":
        jx, jy, jz = model.couplings
        return 0.5 * (jx * sx**2 + jy * sy**2 + jz * sz**2)
    (j,) = model.couplings
    return sx + 0.5 * j * sz**2


def eom_rhs(model, s):
    """ds/dt = {s, h} under {s_x, s_y} = s_z and cyclic."""
    s = np.asarray(s, dtype=float)
    sx, sy, sz = s[..., 0], s[..., 1], s[..., 2]
    out = np.empty_like(s)
    if model.kind == "euler":
        jx, jy, jz = model.couplings
        out[..., 0] = (jy - jz) * sy * sz
        out[..., 1] = (jz - jx) * sz * sx
        out[..., 2] = (jx - jy) * sx * sy
    else:
        (j,) = model.couplings
        out[..., 0] = -j * sy * sz
        out[..., 1] = -sz + j * sx * sz
        out[..., 2] = sy
    return out


def _default_step(model, s0):
    r = float(np.max(np.sqrt(np.sum(np.asarray(s0, float) ** 2, axis=-1))))
    jmax = max(abs(j) for j in model.couplings) or 1.0
    return 1e-3 * min(1.0, 1.0 / (jmax * max(r, 1e-12)))


def _rk4_to(model, s, dt, n_sub):
    h = dt / n_sub
    for _ in range(n_sub):
        k1 = eom_rhs(model, s)
        k2 = eom_rhs(model, s + 0.5 * h * k1)
        k3 = eom_rhs(model, s + 0.5 * h * k2)
        k4 = eom_rhs(model, s + h * k3)
        s = s + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return s


def eom_integrate(model, s0, t_grid, step=None, check_conservation=True):
    """RK4 trajectory of one point (or a batch) on the given time grid.

    Fixed step shrinking like 1/(|J| r) at large radius, where the dynamics
    is parametrically faster.  r^2 and h are conserved invariants; their
    drift is checked against 1e-8 per unit time unless disabled.
    """
    s0 = np.asarray(s0, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if step is None:
        step = _default_step(model, s0)
    traj = np.empty(t_grid.shape + s0.shape)
    s = s0
    t_prev = t_grid[0]
    traj[0] = s
    for i, t in enumerate(t_grid[1:], start=1):
        dt = t - t_prev
        n_sub = max(1, int(np.ceil(dt / step)))
        s = _rk4_to(model, s, dt, n_sub)
        traj[i] = s
        t_prev = t
    if check_conservation and len(t_grid) > 1:
        span = max(t_grid[-1] - t_grid[0], 1e-300)
        r2_drift = np.max(np.abs(np.sum(traj[-1] ** 2, -1) - np.sum(traj[0] ** 2, -1)))
        h_drift = np.max(
            np.abs(classical_hamiltonian(model, traj[-1])
                   - classical_hamiltonian(model, traj[0]))
        )
        if max(r2_drift, h_drift) / span > CONSERVATION_TOL:
            raise RuntimeError(
                f"conservation violated: dr2={r2_drift:.2e} dh={h_drift:.2e} "
                f"over t={span:.3g}; reduce the step"
            )
    return traj


# ---------------------------------------------------------------------------
# ensembles


def sample_gaussian(count, seed):
    """i.i.d. sample of the e^{-2s^2} measure: components N(0, 1/4)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, 0.5, size=(count, 3))


def quadrature_ensemble(n_nodes=40):
    """Deterministic Gauss-Hermite tensor grid for the same measure.

    Returns (points, weights) with sum(weights) = 1; phase-space averages
    of polynomials x smooth functions converge spectrally in n_nodes.
    """
    u, w = np.polynomial.hermite.hermgauss(n_nodes)
    x = u / np.sqrt(2.0)
    w = w / np.sqrt(np.pi)
    pts = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1).reshape(-1, 3)
    wts = (w[:, None, None] * w[None, :, None] * w[None, None, :]).reshape(-1)
    return pts, wts


def mc_autocorrelation(model, axis, ensemble, t_grid, step=None, n_batches=100):
    """Monte Carlo estimator of G(t) = <s_a(t) s_a(0)> with error bars.

    Batch-means standard errors over n_batches equal batches.
    """
    i = {"x": 0, "y": 1, "z": 2}[axis]
    ensemble = np.asarray(ensemble, dtype=float)
    traj = eom_integrate(model, ensemble, t_grid, step=step)
    prod = traj[..., i] * ensemble[None, :, i]  # (T, count)
    count = ensemble.shape[0]
    usable = count - count % n_batches
    batches = prod[:, :usable].reshape(len(t_grid), n_batches, -1).mean(axis=2)
    g = batches.mean(axis=1)
    stderr = batches.std(axis=1, ddof=1) / np.sqrt(n_batches)
    return McAutocorr(t=np.asarray(t_grid, float), G=g, stderr=stderr,
                      n_samples=count)


def quadrature_autocorrelation(model, axis, t_grid, n_nodes=40, step=None):
    """Deterministic G(t) via the tensor Gauss-Hermite ensemble."""
    i = {"x": 0, "y": 1, "z": 2}[axis]
    pts, wts = quadrature_ensemble(n_nodes)
    traj = eom_integrate(model, pts, t_grid, step=step)
    return traj[..., i] @ (wts * pts[:, i])


# ---------------------------------------------------------------------------
# saddles and the OTOC prediction


def saddle_exponent(model, r):
    """Instability exponent of the on-sphere saddle at radius r.

    Transverse-field model: the fixed point (r,0,0) turns into a saddle for
    Jr > 1, with rate sqrt(Jr - 1); below that there is no saddle (rate
    None).  Euler top: the saddle sits on the middle-coupling axis with
    rate omega * r, omega = sqrt((J_mid - J_min)(J_max - J_mid)).
    """
    if model.kind == "lmg":
        (j,) = model.couplings
        if j * r <= 1.0:
            return SaddleInfo(location=None, rate=None, radius=r)
        return SaddleInfo(
            location=np.array([r, 0.0, 0.0]),
            rate=float(np.sqrt(j * r - 1.0)),
            radius=r,
        )
    order = np.argsort(model.couplings)
    j_sorted = np.asarray(model.couplings)[order]
    omega = float(np.sqrt((j_sorted[1] - j_sorted[0]) * (j_sorted[2] - j_sorted[1])))
    loc = np.zeros(3)
    loc[order[1]] = r
    return SaddleInfo(location=loc, rate=omega * r, radius=r, omega=omega)


def _lambda_r(model, r):
    r = np.asarray(r, dtype=float)
    if model.kind == "lmg":
        (j,) = model.couplings
        return np.sqrt(np.maximum(j * r - 1.0, 0.0))
    info = saddle_exponent(model, 1.0)
    return info.omega * r


@dataclass
class SaddlePrediction:
    t: np.ndarray
    ln_c: np.ndarray  # ln C_pred(t) up to an additive constant
    exponent: float  # asymptotic a in ln C ~ c t^a


def otoc_saddle_prediction(model, t_grid, r_max=None):
    """Radial saddle-point integral predicting the squared-commutator growth.

    ln C_pred(t) = ln int dr exp(lambda_r t - 2 r^2) over the saddle family,
    evaluated stably by shifting out the max exponent.  The asymptotic
    exponent a (ln C ~ c t^a) is extracted by log-log slope at the largest
    times in the grid.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    t_max = t_grid.max()
    if r_max is None:
        # the Gaussian factor must dominate at the boundary
        r_max = 10.0 + 2.0 * _peak_radius(model, t_max)
    r = np.linspace(1e-6, r_max, 20001)
    lam = _lambda_r(model, r)
    expo = np.outer(t_grid, lam) - 2.0 * r**2
    if np.any(expo[:, -1] > expo.max(axis=1) - 30.0):
        raise RuntimeError("integrand not suppressed at r_max: divergent growth")
    shift = expo.max(axis=1, keepdims=True)
    ln_c = np.log(np.trapezoid(np.exp(expo - shift), r, axis=1)) + shift[:, 0]
    large = t_grid >= 0.5 * t_max
    if np.count_nonzero(large) < 2 or np.any(ln_c[large] <= 0):
        a = float("nan")
    else:
        a = float(np.polyfit(np.log(t_grid[large]), np.log(ln_c[large]), 1)[0])
    return SaddlePrediction(t=t_grid, ln_c=ln_c, exponent=a)


def _peak_radius(model, t):
    # location of max_r (lambda_r t - 2 r^2), coarse overestimate
    if model.kind == "euler":
        info = saddle_exponent(model, 1.0)
        return info.omega * t / 4.0 + 1.0
    (j,) = model.couplings
    # lambda ~ sqrt(J r): stationary at r ~ (J t^2 / 64)^(1/3)
    return (max(j, 1e-12) * t**2) ** (1.0 / 3.0) + 1.0


# ---------------------------------------------------------------------------
# elliptic growth rate


def lmg_omega0(j, energy):
    """Operator-growth rate at fixed classical energy for h = x + J z^2/2.

    omega0 = sqrt(sqrt(J^2 - 2EJ + 1) + EJ - 1) / (2 sqrt(2) K(m)),
    m = (1 - EJ + sqrt(J^2 - 2EJ + 1)) / (1 - EJ - sqrt(J^2 - 2EJ + 1)),
    with K the complete elliptic integral of the first kind.
    """
    j = float(j)
    energy = float(energy)
    if not (-1.0 < energy < (j + 1.0 / j) / 2.0):
        raise ValueError(f"energy {energy} outside (-1, (J + 1/J)/2)")
    disc = np.sqrt(j**2 - 2.0 * energy * j + 1.0)
    num = np.sqrt(disc + energy * j - 1.0)
    m = (1.0 - energy * j + disc) / (1.0 - energy * j - disc)
    return float(num / (2.0 * np.sqrt(2.0) * scipy.special.ellipk(m)))


def ellipk_quadrature(m, n_points=20001):
    """Complete elliptic integral K(m) by direct quadrature (test oracle)."""
    theta = np.linspace(0.0, np.pi / 2.0, n_points)
    return float(
        scipy.integrate.simpson(1.0 / np.sqrt(1.0 - m * np.sin(theta) ** 2), x=theta)
    )
