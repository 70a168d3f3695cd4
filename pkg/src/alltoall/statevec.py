"""Matrix-free exact state-vector simulation of kicked all-to-all spin
models from product states, with Renyi-2 entanglement, collective-spin
covariance, and saturation diagnostics.

Conventions: site j is bit j of the amplitude index (bit value 1 = spin
down); the Bloch gauge is |s> = cos(theta/2)|up> + e^{i phi}
sin(theta/2)|down>.  The interaction kick uses the 1/N-normalized
coupling (the convention in which entanglement growth has a large-N
limit); one kicked step applies the interaction kick first, then the
uniform rotation kick.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symops import CapacityError, ModelSpec

SITE_CAP = 24
SITE_CAP_HARD = 26
UNIT_TOL = 1e-12


@dataclass
class State:
    amplitudes: np.ndarray
    n_sites: int

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def copy(self):
        return State(self.amplitudes.copy(), self.n_sites)


def _check_cap(n_sites, allow_large=False):
    cap = SITE_CAP_HARD if allow_large else SITE_CAP
    if n_sites > cap:
        raise CapacityError(
            f"N={n_sites} exceeds the cap {cap}"
            + ("" if allow_large else " (pass allow_large=True up to 26)")
        )


# ---------------------------------------------------------------------------
# pointer distributions


def delta_pointers(s, n_sites):
    """All N pointers at the same point s on the Bloch sphere."""
    s = np.asarray(s, dtype=float)
    return np.tile(s, (n_sites, 1))


def great_circle_pointers(n_sites, axis="x"):
    """N/2 equally spaced points on the great circle normal to `axis`,
    each used twice with s_j = s_{j + N/2}, so the two halves of the
    chain carry the same distribution and the pointer sum is exactly zero.
    """
    if n_sites % 2:
        raise ValueError("great-circle distribution needs even N")
    half = n_sites // 2
    angles = 2.0 * np.pi * np.arange(half) / half
    circle = np.zeros((half, 3))
    if axis == "x":
        circle[:, 1] = np.sin(angles)
        circle[:, 2] = np.cos(angles)
    elif axis == "y":
        circle[:, 2] = np.sin(angles)
        circle[:, 0] = np.cos(angles)
    elif axis == "z":
        circle[:, 0] = np.cos(angles)
        circle[:, 1] = np.sin(angles)
    else:
        raise ValueError(f"bad axis {axis!r}")
    return np.concatenate([circle, circle], axis=0)


def uniform_sphere_pointers(n_sites):
    """Quasi-uniform cover of the sphere in antipodal pairs (sum = 0)."""
    if n_sites % 2:
        raise ValueError("uniform-sphere distribution needs even N")
    half = n_sites // 2
    # Fibonacci lattice on the half, antipodes on the other half
    k = np.arange(half)
    golden = (1 + np.sqrt(5)) / 2
    z = (2 * k + 1) / half - 1
    phi = 2 * np.pi * k / golden
    rho = np.sqrt(1 - z**2)
    pts = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    return np.concatenate([pts, -pts], axis=0)


def validate_pointers(pointers, require_zero_sum=False):
    pointers = np.asarray(pointers, dtype=float)
    norms = np.linalg.norm(pointers, axis=1)
    if np.max(np.abs(norms - 1.0)) > UNIT_TOL:
        raise ValueError("pointers must be unit vectors")
    if require_zero_sum and np.max(np.abs(pointers.sum(axis=0))) > 1e-9:
        raise ValueError("pointer center of mass must vanish")
    return pointers


# ---------------------------------------------------------------------------
# state construction


def bloch_qubit(s):
    """Single-qubit state with <s|2 S^a|s> = s_a in the standard polar gauge."""
    sx, sy, sz = s
    theta = np.arccos(np.clip(sz, -1.0, 1.0))
    phi = np.arctan2(sy, sx)
    return np.array(
        [np.cos(theta / 2.0), np.exp(1j * phi) * np.sin(theta / 2.0)],
        dtype=complex,
    )


def build_product_state(pointers, allow_large=False):
    pointers = validate_pointers(pointers)
    n_sites = pointers.shape[0]
    _check_cap(n_sites, allow_large)
    psi = np.ones(1, dtype=complex)
    for s in pointers:  # site j lands on bit j
        psi = np.kron(bloch_qubit(s), psi)
    return State(psi, n_sites)


def _popcount(n_sites):
    return np.bitwise_count(np.arange(1 << n_sites, dtype=np.uint32))


def half_spin_sum(n_sites):
    """Eigenvalues of sum_j S_j^z over the computational basis."""
    return 0.5 * (n_sites - 2 * _popcount(n_sites).astype(np.float64))


# ---------------------------------------------------------------------------
# matrix-free unitaries

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# G_a sigma^z G_a^dag = sigma^a
_TILT = {
    "z": np.eye(2, dtype=complex),
    "x": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0),
    "y": np.diag([1.0, 1j]) @ np.array([[1, 1], [1, -1]], dtype=complex)
    / np.sqrt(2.0),
}


def apply_single_qubit(gate, state):
    """Apply the same 2x2 gate to every site (in place on a copy)."""
    psi = state.amplitudes
    n = state.n_sites
    for j in range(n):
        shaped = psi.reshape(1 << (n - 1 - j), 2, 1 << j)
        psi = np.einsum("ab,ibj->iaj", gate, shaped).reshape(-1)
    return State(psi, n)


def apply_tz(state, u):
    """Diagonal kick exp(i u (sum_j S_j^z)^2)."""
    m = half_spin_sum(state.n_sites)
    return State(state.amplitudes * np.exp(1j * u * m**2), state.n_sites)


def apply_tkick(state, axis, u):
    """exp(i u (sum_j S_j^a)^2) via a per-site tilt to the z axis."""
    if axis == "z":
        return apply_tz(state, u)
    g = _TILT[axis]
    out = apply_single_qubit(g.conj().T, state)
    out = apply_tz(out, u)
    return apply_single_qubit(g, out)


def apply_rotation(state, axis, u):
    """Uniform rotation exp(i u sum_j S_j^a) = prod_j exp(i u sigma_j^a / 2)."""
    gate = (
        np.cos(u / 2.0) * np.eye(2, dtype=complex)
        + 1j * np.sin(u / 2.0) * _PAULI[axis]
    )
    return apply_single_qubit(gate, state)


def kicked_step(model, state, dt):
    """One Floquet step of the kicked model.

    LMG: interaction kick exp(-i (J/N) (sum S^z)^2 dt), then the uniform
    rotation exp(-i dt sum S^x).  Euler top: three interaction kicks
    exp(-i (J_a/N) (sum S^a)^2 dt) applied in z, y, x order.  Requires
    the 1/N ('over_n') coupling normalization.
    """
    if model.normalization != "over_n":
        raise ValueError("kicked state evolution uses the over_n normalization")
    n = state.n_sites
    if model.kind == "lmg":
        (j,) = model.couplings
        out = apply_tz(state, -j * dt / n)
        return apply_rotation(out, "x", -dt)
    jx, jy, jz = model.couplings
    out = state
    for axis, j in (("z", jz), ("y", jy), ("x", jx)):
        if j != 0.0:
            out = apply_tkick(out, axis, -j * dt / n)
    return out


def evolve_kicked(model, state, n_steps, dt, callback=None):
    """Repeat kicked_step n_steps times; callback(k, state) after each."""
    out = state
    for k in range(1, n_steps + 1):
        out = kicked_step(model, out, dt)
        if callback is not None:
            callback(k, out)
    return out


# ---------------------------------------------------------------------------
# entanglement and covariance


def renyi2(state, sites_a):
    """Second Renyi entropy of the sites in `sites_a`.

    -ln Tr rho_A^2 with Tr rho_A^2 = |M M^dag|_F^2 computed on the smaller
    side of the bipartition (never materializing the large reduced matrix).
    """
    sites_a = sorted(set(int(s) for s in sites_a))
    n = state.n_sites
    if not sites_a or len(sites_a) >= n:
        raise ValueError("bipartition must be a nonempty proper site subset")
    sites_b = [j for j in range(n) if j not in sites_a]
    # axis k of the reshaped tensor is site n-1-k
    tensor = state.amplitudes.reshape([2] * n)
    order = [n - 1 - j for j in reversed(sites_a)] + [
        n - 1 - j for j in reversed(sites_b)
    ]
    m = tensor.transpose(order).reshape(1 << len(sites_a), 1 << len(sites_b))
    if m.shape[0] > m.shape[1]:
        m = m.T
    gram = m @ m.conj().T
    tr2 = float(np.sum(np.abs(gram) ** 2))
    return -np.log(max(tr2, 1e-300))


def _apply_collective(state, axis):
    """(sum_j S_j^a) |psi> applied matrix-free."""
    psi = state.amplitudes
    n = state.n_sites
    if axis == "z":
        return State(half_spin_sum(n) * psi, n)
    out = np.zeros_like(psi)
    idx = np.arange(1 << n)
    for j in range(n):
        bit = (idx >> j) & 1
        flipped = idx ^ (1 << j)
        if axis == "x":
            out[flipped] += 0.5 * psi[idx]
        else:  # y: S^y|b> = (i/2)(-1)^b |1-b>
            out[flipped] += 0.5j * (1 - 2 * bit) * psi[idx]
    return State(out, n)


def collective_covariance(state):
    """Means and symmetrized second moments of the sqrt(N)-normalized
    collective spins, computed exactly.

    Returns (means[3], moments[3,3]) with moments_ab =
    Re <psi| S_a S_b |psi>_sym / N.
    """
    n = state.n_sites
    applied = [_apply_collective(state, a) for a in "xyz"]
    means = np.array(
        [np.vdot(state.amplitudes, ap.amplitudes).real for ap in applied]
    ) / np.sqrt(n)
    moments = np.empty((3, 3))
    for a in range(3):
        for b in range(a, 3):
            val = np.vdot(applied[a].amplitudes, applied[b].amplitudes).real / n
            moments[a, b] = moments[b, a] = val
    return means, moments


# ---------------------------------------------------------------------------
# saturation diagnostics


@dataclass
class SaturationStats:
    s_max: dict  # N -> first local maximum of S2
    t_ent: dict  # N -> its location
    slope_vs_logn: float  # regression of S_max on ln N
    t_ent_loglog_slope: float  # regression of ln t_ent on ln N


def first_local_maximum(t, s):
    """Earliest strict local maximum (plateaus resolve to their first index)."""
    s = np.asarray(s, dtype=float)
    drops = np.flatnonzero(np.diff(s) < 0)
    for k in drops:
        i = k
        while i > 0 and s[i - 1] == s[i]:
            i -= 1
        if i > 0 and s[i - 1] < s[i]:
            return float(t[i]), float(s[i])
    raise ValueError("no local maximum within the trajectory horizon")


def saturation_stats(trajectories):
    """trajectories: mapping N -> (t array, S2 array)."""
    s_max, t_ent = {}, {}
    for n_sites, (t, s) in trajectories.items():
        t_loc, s_loc = first_local_maximum(t, s)
        s_max[n_sites] = s_loc
        t_ent[n_sites] = t_loc
    ns = sorted(s_max)
    slope = float(
        np.polyfit(np.log(ns), [s_max[n] for n in ns], 1)[0]
    )
    tslope = float(
        np.polyfit(np.log(ns), np.log([t_ent[n] for n in ns]), 1)[0]
    )
    return SaturationStats(
        s_max=s_max, t_ent=t_ent, slope_vs_logn=slope, t_ent_loglog_slope=tslope
    )
