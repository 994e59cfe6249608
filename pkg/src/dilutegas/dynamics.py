"""Drift, reduced-dynamics generator, semigroup evolution and collision MC.

The drift contracts the scattering R matrices against the L-weighted
spectral densities; the evolution-operator expectation is e^{-Gamma t}.
The Heisenberg generator combines the drift with a quadratic collision
term; its pre-dual propagates density matrices.  A discrete collision
model unravels the same dynamics: collisions arrive as a Bernoulli
approximation of a Poisson clock, each one applies a bin S-block to the
system coupled to a freshly sampled mode and traces the mode out.

With the collision rate lambda = rate_scale * (dE/2pi) * sum_k L_k and
mode probabilities p_k proportional to L_k, the collision generator
lambda * (sum_k p_k C_k - id) reproduces the pre-dual generator exactly
(same R and sigma tables), so rate_scale = 1 is the calibrated default
and the residual is reported rather than fitted.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .kernels import gamma_pv, gamma_resolvent
from .limits import limit_correlator
from .model import spectral_density
from .wick import ResourceError


class CalibrationError(RuntimeError):
    """Raised when the collision model fails to match the generator."""


def _sigma_l_table(reservoir, mesh):
    """sigma^L_{g_m, g_n}(E_b) for the four formfactor pairs."""
    out = np.empty((2, 2, mesh.n_bins), dtype=complex)
    for m in range(2):
        for n in range(2):
            out[m, n] = spectral_density(reservoir, mesh,
                                         reservoir.formfactor(m),
                                         reservoir.formfactor(n),
                                         weight="L").values
    return out


def drift(sdata, reservoir, mesh):
    """Gamma = sum_b dE sum_{m,n} R_mn(E_b) sigma^L_{g_n, g_m}(E_b)."""
    sig_l = _sigma_l_table(reservoir, mesh)
    n_s = sdata.t0.shape[1]
    gamma = np.zeros((n_s, n_s), dtype=complex)
    for m in range(2):
        for n in range(2):
            gamma += mesh.delta_e * np.tensordot(sig_l[n, m], sdata.r[m, n],
                                                 axes=(0, 0))
    return gamma


def exp_drift(gamma, t_grid):
    """Snapshots of the evolution-operator expectation e^{-Gamma t}."""
    return [expm(-gamma * t) for t in np.atleast_1d(t_grid)]


def _word_slots(reservoir, word):
    """Slot vectors for an interaction word: 0 -> +D (g0,g1), 1 -> -D+ (g1,g0)."""
    slots = []
    for w in word:
        if w == 0:
            slots.append((reservoir.g0, reservoir.g1))
        else:
            slots.append((reservoir.g1, reservoir.g0))
    return tuple(slots)


def series_expectation(system, reservoir, mesh, t, max_order, route="pv"):
    """Perturbative evolution-operator expectation, with per-order terms.

    Returns (total, terms) with terms[n] the order-n matrix
    sum_{w in {0,1}^n} sign(w) D_{w_1}...D_{w_n} * (limit correlator of the
    matching slot word, simplex-smeared).
    """
    if max_order > 4:
        raise ResourceError("series order capped at 4", required=max_order)
    n_s = system.dim_s
    d_ops = (system.d_op, system.d_op.conj().T)
    terms = {0: np.eye(n_s, dtype=complex)}
    for order in range(1, max_order + 1):
        acc = np.zeros((n_s, n_s), dtype=complex)
        for word in np.ndindex(*(2,) * order):
            sign = (-1) ** sum(word)
            mat = np.eye(n_s, dtype=complex)
            for w in word:
                mat = mat @ d_ops[w]
            corr = limit_correlator(_word_slots(reservoir, word), t,
                                    reservoir, mesh, route=route)
            acc += sign * mat * corr
        terms[order] = acc
    total = sum(terms.values())
    return total, terms


@dataclass(frozen=True)
class GeneratorData:
    """Drift, Heisenberg generator and its pre-dual as vec-basis matrices.

    g_super acts on vec(X) (column stacking), g_star on vec(rho).
    """

    gamma_drift: np.ndarray
    g_super: np.ndarray
    g_star: np.ndarray
    dim: int

    def apply_heisenberg(self, x):
        return (self.g_super @ x.reshape(-1, order="F")).reshape(
            (self.dim, self.dim), order="F")

    def apply_schrodinger(self, rho):
        return (self.g_star @ rho.reshape(-1, order="F")).reshape(
            (self.dim, self.dim), order="F")


def assemble_generator(system, sdata, reservoir, mesh):
    """GeneratorData with G(X) = -Gamma+ X - X Gamma + collision term.

    The quadratic term is 2 pi sum_b dE sum R+_{mn} X R_{m'n'} *
    sigma_{g_m,g_m'}(b) sigma^L_{g_n',g_n}(b); with the PV kernels the
    identity G(1) = 0 holds to rounding, tying Gamma and the collision
    term together.
    """
    n_s = system.dim_s
    gamma = drift(sdata, reservoir, mesh)
    eye = np.eye(n_s)
    g_super = -np.kron(gamma.T, eye) - np.kron(eye, gamma.conj().T)
    g_star = -np.kron(eye, gamma) - np.kron(gamma.conj(), eye)
    sig = np.empty((2, 2, mesh.n_bins), dtype=complex)
    for m in range(2):
        for n in range(2):
            sig[m, n] = spectral_density(reservoir, mesh,
                                         reservoir.formfactor(m),
                                         reservoir.formfactor(n)).values
    sig_l = _sigma_l_table(reservoir, mesh)
    for b in range(mesh.n_bins):
        for m in range(2):
            for n in range(2):
                r_mn = sdata.r[m, n, b]
                for mp in range(2):
                    for npp in range(2):
                        w = (2.0 * np.pi * mesh.delta_e
                             * sig[m, mp, b] * sig_l[npp, n, b])
                        if w == 0.0:
                            continue
                        r_pq = sdata.r[mp, npp, b]
                        g_super += w * np.kron(r_pq.T, r_mn.conj().T)
                        g_star += w * np.kron(r_mn.conj(), r_pq)
    return GeneratorData(gamma_drift=gamma, g_super=g_super, g_star=g_star,
                         dim=n_s)


def series_generator_derivative(system, reservoir, mesh, x, route="pv"):
    """d/dt at t=0 of the two-sided series for T_t(X), orders <= 2.

    Same-side contractions follow the causal pair rules (they reproduce the
    single-block constants of the series expectation); contractions across
    the observable use the plain commutator kernel 2 pi sigma, since the
    two sides of the word are not mutually time ordered.  Agreement with
    the assembled generator up to third-order terms in the coupling
    validates the Ito-table derivation.
    """
    res = reservoir
    d_ops = (system.d_op, system.d_op.conj().T)
    signs = (1.0, -1.0)
    gvec = (res.g0, res.g1)
    if route == "pv":
        table = gamma_pv(res, mesh)
    else:
        table = gamma_resolvent(res, mesh)

    def sig_l(a, b_):
        return spectral_density(res, mesh, gvec[a], gvec[b_], weight="L").values

    def sig(a, b_):
        return spectral_density(res, mesh, gvec[a], gvec[b_]).values

    # single-side constants: K1 + K2
    k_sum = np.zeros_like(d_ops[0])
    for w in range(2):
        c1 = mesh.delta_e * np.sum(sig_l(1 - w, w))
        k_sum += signs[w] * d_ops[w] * c1
    for w1 in range(2):
        for w2 in range(2):
            c2 = mesh.delta_e * np.sum(
                sig_l(1 - w2, w1) * table.gamma[1 - w1, w2])
            k_sum += signs[w1] * signs[w2] * (d_ops[w1] @ d_ops[w2]) * c2
    out = k_sum.conj().T @ x + x @ k_sum
    # cross term: one interaction on each side of the observable
    for wb in range(2):
        for w in range(2):
            c = 2.0 * np.pi * mesh.delta_e * np.sum(
                sig_l(1 - w, wb) * sig(1 - wb, w))
            out -= signs[wb] * signs[w] * c * (d_ops[wb] @ x @ d_ops[w])
    return out


def choi_matrix(superop, dim):
    """Choi matrix of the channel whose vec-basis matrix is superop."""
    choi = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e_ij = np.zeros((dim, dim), dtype=complex)
            e_ij[i, j] = 1.0
            out = (superop @ e_ij.reshape(-1, order="F")).reshape(
                (dim, dim), order="F")
            choi[i * dim:(i + 1) * dim, j * dim:(j + 1) * dim] = out
    return choi


def evolve_semigroup(gen, rho0, t_grid, check_tol=1e-8):
    """rho(t) = e^{t G*} rho0 along a time grid, with safety monitoring.

    Returns (states, diagnostics); diagnostics track trace and hermiticity
    drift and the most negative eigenvalue seen.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (gen.dim, gen.dim):
        raise ValueError("rho0 has the wrong shape")
    if np.linalg.norm(rho0 - rho0.conj().T) > 1e-10 * max(np.linalg.norm(rho0), 1e-300):
        raise ValueError("rho0 must be hermitian")
    if abs(np.trace(rho0) - 1.0) > 1e-10:
        raise ValueError("rho0 must have unit trace")
    if np.linalg.eigvalsh(rho0).min() < -1e-10:
        raise ValueError("rho0 must be positive semidefinite")
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    states = []
    worst_trace = 0.0
    worst_herm = 0.0
    min_eig = np.inf
    v0 = rho0.reshape(-1, order="F")
    for t in t_grid:
        rho = (expm(t * gen.g_star) @ v0).reshape((gen.dim, gen.dim), order="F")
        states.append(rho)
        worst_trace = max(worst_trace, abs(np.trace(rho) - 1.0))
        worst_herm = max(worst_herm, np.linalg.norm(rho - rho.conj().T))
        min_eig = min(min_eig, np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    diag = {"max_trace_dev": float(worst_trace),
            "max_herm_dev": float(worst_herm),
            "min_eigenvalue": float(min_eig),
            "trace_ok": worst_trace <= check_tol,
            "herm_ok": worst_herm <= check_tol}
    return np.array(states), diag


@dataclass(frozen=True)
class TrajectoryConfig:
    """Collision Monte Carlo parameters."""

    dt: float
    horizon: float
    n_traj: int
    seed: int
    rate_scale: float = 1.0


def splitmix64(x):
    """SplitMix64 scrambler: deterministic 64-bit seed expansion."""
    x = (x + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def trajectory_seed(master, i):
    """Per-trajectory seed: splitmix64 applied to master XOR index."""
    return splitmix64((master ^ i) & 0xFFFFFFFFFFFFFFFF)


def collision_superops(smat, mesh, n_s):
    """Per-mode superoperator of one collision with that mode.

    C_k(rho) = Tr_bin[ S_b (rho (x) |e_k><e_k|) S_b+ ] as a vec-basis
    matrix, for every mode k in bin order.
    """
    n_modes = mesh.mode_to_bin.size
    sup = [None] * n_modes
    for b, block in enumerate(smat.blocks):
        modes = smat.bin_mode_indices[b]
        mb = modes.size
        if mb == 0:
            continue
        s_b = block.reshape(n_s, mb, n_s, mb)
        for pos, k in enumerate(modes):
            # kraus operators indexed by the outgoing bin mode
            kraus = s_b[:, :, :, pos]  # (N, mb_out, N)
            mat = np.zeros((n_s * n_s, n_s * n_s), dtype=complex)
            for out in range(mb):
                a = kraus[:, out, :]
                mat += np.kron(a.conj(), a)
            sup[k] = mat
    return sup


def calibrate_collision_model(smat, reservoir, mesh, gen, rate_scale=1.0,
                              tol=1e-6):
    """Collision rate, mode law and the generator-match residual.

    lambda * (sum_k p_k C_k - id) should equal the pre-dual generator; the
    residual is relative to the generator scale and must stay below tol.
    """
    n_s = gen.dim
    sup = collision_superops(smat, mesh, n_s)
    weights = reservoir.l_val.copy()
    total_w = weights.sum()
    if total_w <= 0:
        raise CalibrationError("reservoir occupation L vanishes; no collisions")
    p_modes = weights / total_w
    lam = rate_scale * mesh.delta_e * total_w / (2.0 * np.pi)
    eye = np.eye(n_s * n_s)
    mean_c = np.zeros_like(eye, dtype=complex)
    for k, p in enumerate(p_modes):
        if p == 0 or sup[k] is None:
            continue
        mean_c += p * sup[k]
    residual = np.linalg.norm(lam * (mean_c - eye) - gen.g_star, 2)
    scale = max(np.linalg.norm(gen.g_star, 2), 1e-300)
    if residual > tol * scale:
        raise CalibrationError(
            f"collision model residual {residual:.3e} exceeds "
            f"{tol:.1e} * generator scale {scale:.3e}")
    return {"lam": float(lam), "p_modes": p_modes, "superops": sup,
            "residual": float(residual), "relative_residual": float(residual / scale)}


def collision_monte_carlo(smat, reservoir, mesh, cfg, rho0, gen,
                          calibration_tol=1e-6):
    """Averaged collision-model trajectories with standard errors.

    Every trajectory consumes its own deterministic random stream derived
    from the master seed, so results are reproducible bit for bit and
    independent of batching.
    """
    n_s = gen.dim
    cal = calibrate_collision_model(smat, reservoir, mesh, gen,
                                    rate_scale=cfg.rate_scale,
                                    tol=calibration_tol)
    lam = cal["lam"]
    if cfg.dt * np.linalg.norm(gen.gamma_drift, 2) > 0.1:
        warnings.warn("dt is coarse relative to 1/||Gamma||", stacklevel=2)
    if lam * cfg.dt > 1.0:
        raise CalibrationError(
            f"lambda*dt = {lam * cfg.dt:.3f} > 1; decrease dt")
    n_steps = int(round(cfg.horizon / cfg.dt))
    n_traj = cfg.n_traj
    cum_p = np.cumsum(cal["p_modes"])
    # per-trajectory streams, drawn up front for determinism
    coll = np.empty((n_traj, n_steps), dtype=bool)
    mode_pick = np.empty((n_traj, n_steps), dtype=np.int64)
    for i in range(n_traj):
        rng = np.random.default_rng(trajectory_seed(cfg.seed, i))
        u = rng.random(n_steps)
        v = rng.random(n_steps)
        coll[i] = u < lam * cfg.dt
        mode_pick[i] = np.searchsorted(cum_p, v)
    sup = cal["superops"]
    rho0 = np.asarray(rho0, dtype=complex)
    vecs = np.tile(rho0.reshape(-1, order="F"), (n_traj, 1))
    mean_states = np.empty((n_steps + 1, n_s, n_s), dtype=complex)
    mean_states[0] = rho0
    max_trace_dev = 0.0
    for step in range(n_steps):
        hit = coll[:, step]
        if hit.any():
            picks = mode_pick[hit, step]
            rows = np.nonzero(hit)[0]
            for k in np.unique(picks):
                if sup[k] is None:
                    continue
                sel = rows[picks == k]
                vecs[sel] = vecs[sel] @ sup[k].T
        mean_vec = vecs.mean(axis=0)
        mean_states[step + 1] = mean_vec.reshape((n_s, n_s), order="F")
        # vec is column stacked, so the trace picks the stride n_s+1 entries
        traces = vecs[:, :: n_s + 1].sum(axis=1)
        max_trace_dev = max(max_trace_dev, float(np.abs(traces - 1.0).max()))
    finals = vecs.reshape(n_traj, n_s, n_s).transpose(0, 2, 1)
    stderr = (finals.real.std(axis=0, ddof=1)
              + 1j * finals.imag.std(axis=0, ddof=1)) / np.sqrt(n_traj)
    times = cfg.dt * np.arange(n_steps + 1)
    return {"times": times, "mean": mean_states, "final_mean": mean_states[-1],
            "stderr": stderr, "calibration": {k: cal[k] for k in
                                              ("lam", "residual",
                                               "relative_residual")},
            "max_trace_dev": max_trace_dev, "n_traj": n_traj}
