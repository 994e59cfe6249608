"""One-particle scattering data: T0/T1, the R block matrices, T and S.

Everything is resolved per energy bin.  The system-space matrices T0, T1
invert the normal-ordering denominators; the four R matrices combine them
with the coupling; the one-particle T operator and the S-matrix are then
finite-rank assemblies against the formfactors.  S conserves energy on the
bin level, so it is stored as one dense block per bin acting on
system (x) modes-in-bin.

An independent cross-check solves the stationary scattering equation
T = (1 - V1 G0(z))^{-1} V1 with the retarded resolvent G0(z) = (z - H0)^{-1}
at z = E + i eta on the full discretized space.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .kernels import gamma_pv, gamma_resolvent
from .model import spectral_density


class ScatteringError(RuntimeError):
    """Raised when a bin's normal-ordering matrix is numerically singular."""


@dataclass(frozen=True)
class ScatteringData:
    """Per-bin T0, T1 and R matrices on the system space.

    t0, t1: arrays (B, N_S, N_S); r: array (2, 2, B, N_S, N_S) indexed by the
    formfactor labels (m, n); cond: worst condition number per bin.
    """

    t0: np.ndarray
    t1: np.ndarray
    r: np.ndarray
    cond: np.ndarray


def build_t0_t1(system, gamma, cond_threshold=1e12):
    """Invert the bin-wise denominators defining T0 (with DD+) and T1 (with D+D).

    Raises ScatteringError naming the first offending bin if a denominator
    is ill-conditioned beyond cond_threshold; the closed form assumes these
    inverses exist and a silent regularization would mask that failure.
    """
    d = system.d_op
    dh = d.conj().T
    n_s = system.dim_s
    n_bins = gamma.n_bins
    eye = np.eye(n_s)
    g00, g01 = gamma.gamma[0, 0], gamma.gamma[0, 1]
    g10, g11 = gamma.gamma[1, 0], gamma.gamma[1, 1]
    det_coef = g00 * g11 - g10 * g01
    t0 = np.empty((n_bins, n_s, n_s), dtype=complex)
    t1 = np.empty_like(t0)
    cond = np.empty(n_bins)
    for b in range(n_bins):
        a0 = eye + g01[b] * dh - g10[b] * d + det_coef[b] * (d @ dh)
        a1 = eye + g01[b] * dh - g10[b] * d + det_coef[b] * (dh @ d)
        c0, c1 = np.linalg.cond(a0), np.linalg.cond(a1)
        cond[b] = max(c0, c1)
        if not np.isfinite(cond[b]) or cond[b] > cond_threshold:
            raise ScatteringError(
                f"normal-ordering matrix singular in bin {b} "
                f"(cond={cond[b]:.3e} > {cond_threshold:.1e})")
        t0[b] = np.linalg.inv(a0)
        t1[b] = np.linalg.inv(a1)
        for a, t in ((a0, t0[b]), (a1, t1[b])):
            res = np.linalg.norm(a @ t - eye)
            if res > 1e-10 * max(1.0, np.linalg.norm(a)):
                raise ScatteringError(f"inverse residual {res:.3e} in bin {b}")
    return t0, t1, cond


def build_r(system, gamma, cond_threshold=1e12):
    """ScatteringData with all four R matrices per bin."""
    d = system.d_op
    dh = d.conj().T
    t0, t1, cond = build_t0_t1(system, gamma, cond_threshold)
    g00, g01 = gamma.gamma[0, 0], gamma.gamma[0, 1]
    g10, g11 = gamma.gamma[1, 0], gamma.gamma[1, 1]
    n_bins = gamma.n_bins
    eye = np.eye(system.dim_s)
    r = np.empty((2, 2, n_bins, system.dim_s, system.dim_s), dtype=complex)
    for b in range(n_bins):
        r[0, 0, b] = g11[b] * (d @ t1[b] @ dh)
        r[1, 1, b] = g00[b] * (dh @ t0[b] @ d)
        r[0, 1, b] = -(d @ t1[b] @ (eye + g01[b] * dh))
        r[1, 0, b] = dh @ t0[b] @ (eye - g10[b] * d)
    return ScatteringData(t0=t0, t1=t1, r=r, cond=cond)


@dataclass(frozen=True)
class SMatrix:
    """Bin-diagonal S-matrix: one block per bin on system (x) bin modes.

    blocks[b] has shape (N_S*M_b, N_S*M_b) with the system index slow;
    bin_mode_indices[b] lists the global mode indices in bin order.
    """

    blocks: list
    bin_mode_indices: list
    delta_e: float


def assemble_s_matrix(sdata, reservoir, mesh):
    """S block per bin: 1 - (2 pi / dE) sum_{m,n} R_mn (x) |g_m><g_n| on the bin."""
    blocks = []
    bin_modes = []
    gvec = (reservoir.g0, reservoir.g1)
    for b in range(mesh.n_bins):
        modes = mesh.bin_modes(b)
        bin_modes.append(modes)
        mb = modes.size
        n_s = sdata.t0.shape[1]
        block = np.eye(n_s * mb, dtype=complex)
        for m in range(2):
            for n in range(2):
                proj = np.outer(gvec[m][modes], np.conj(gvec[n][modes]))
                block -= (2.0 * np.pi / mesh.delta_e) * np.kron(sdata.r[m, n, b], proj)
        blocks.append(block)
    return SMatrix(blocks=blocks, bin_mode_indices=bin_modes, delta_e=mesh.delta_e)


def assemble_t_operator(sdata, reservoir, mesh):
    """Dense T on system (x) all modes: -i sum_b sum_mn R_mn(E_b) (x) |g_m><P_b g_n|.

    Element [(s,j),(s',k)] = -i sum_mn R_mn(E_bin(k))[s,s'] g_m(j) conj(g_n(k)).
    """
    n_s = sdata.t0.shape[1]
    m_modes = reservoir.n_modes
    gvec = (reservoir.g0, reservoir.g1)
    bin_of = mesh.mode_to_bin
    t = np.zeros((n_s, m_modes, n_s, m_modes), dtype=complex)
    for m in range(2):
        for n in range(2):
            r_cols = sdata.r[m, n][bin_of]  # (M, N_S, N_S) per column mode
            t += -1j * np.einsum("kab,j,k->ajbk", r_cols, gvec[m],
                                 np.conj(gvec[n]))
    return t.reshape(n_s * m_modes, n_s * m_modes)


def interaction_v1(system, reservoir):
    """V1 = i (D (x) |g0><g1| - D+ (x) |g1><g0|) on system (x) modes."""
    d = system.d_op
    p01 = np.outer(reservoir.g0, np.conj(reservoir.g1))
    return 1j * (np.kron(d, p01) - np.kron(d.conj().T, p01.conj().T))


def lippmann_schwinger_oracle(system, reservoir, eta, energy):
    """Dense stationary T(E + i eta) = (1 - V1 G0)^{-1} V1 on the full space.

    Uses the retarded free resolvent G0(z) = (z - H0)^{-1}, z = E + i eta,
    H0 = H_S (x) 1 + 1 (x) H1.  The rotating-wave condition makes the
    on-shell elements insensitive to the H_S part for commuting couplings.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    n_s = system.dim_s
    m_modes = reservoir.n_modes
    dim = n_s * m_modes
    v1 = interaction_v1(system, reservoir)
    h0 = (np.kron(system.h_s, np.eye(m_modes))
          + np.kron(np.eye(n_s), np.diag(reservoir.omega)))
    z = energy + 1j * eta
    g0 = np.linalg.inv(z * np.eye(dim) - h0)
    lhs = np.eye(dim) - v1 @ g0
    try:
        return np.linalg.solve(lhs, v1)
    except np.linalg.LinAlgError as exc:
        raise ScatteringError(f"singular scattering system at E={energy}") from exc


def oracle_comparison(system, reservoir, mesh, sdata, bins=None, eta=None):
    """Max relative on-shell deviation of the closed-form T from the dense solve.

    For each sampled bin b the dense T(E_b + i eta) column block over the
    bin's modes is compared with the closed-form assembly.  Relative to the
    overall scale of the closed-form block.
    """
    if eta is None:
        eta = mesh.delta_e
    t_closed = assemble_t_operator(sdata, reservoir, mesh)
    n_s = system.dim_s
    m_modes = reservoir.n_modes
    if bins is None:
        bins = [b for b in range(mesh.n_bins) if mesh.bin_modes(b).size]
    centers = mesh.centers
    worst = 0.0
    scale = 0.0
    for b in bins:
        modes = mesh.bin_modes(b)
        if modes.size == 0:
            continue
        cols = (np.arange(n_s)[:, None] * m_modes + modes[None, :]).ravel()
        t_oracle = lippmann_schwinger_oracle(system, reservoir, eta, centers[b])
        diff = np.abs(t_closed[:, cols] - t_oracle[:, cols]).max()
        worst = max(worst, diff)
        scale = max(scale, np.abs(t_closed[:, cols]).max())
    return worst / max(scale, 1e-300)


def unitarity_defects(smat):
    """Per-bin unitarity defect ||S_b+ S_b - 1|| (spectral norm)."""
    out = np.zeros(len(smat.blocks))
    for b, block in enumerate(smat.blocks):
        if block.size == 0:
            continue
        gram = block.conj().T @ block
        out[b] = np.linalg.norm(gram - np.eye(block.shape[0]), 2)
    return out


def unitarity_report(smat):
    """Defect table for one S-matrix: per-bin values plus the maximum."""
    defects = unitarity_defects(smat)
    return {"defects": defects, "max_defect": float(defects.max(initial=0.0))}


def refinement_study(system, reservoir, delta_e_levels, route="resolvent",
                     log_subtraction=False):
    """Unitarity defects across a mesh refinement sequence, with fitted order.

    route selects the kernel construction: "resolvent" (eta = dE, defects
    track the regularization scale) or "pv" (defects at rounding level for
    every dE; the refinement trend is then vacuous).
    """
    from .model import build_mesh

    levels = []
    for de in delta_e_levels:
        mesh = build_mesh(reservoir, de)
        if route == "pv":
            gamma = gamma_pv(reservoir, mesh, log_subtraction=log_subtraction)
        else:
            gamma = gamma_resolvent(reservoir, mesh)
        sdata = build_r(system, gamma)
        smat = assemble_s_matrix(sdata, reservoir, mesh)
        levels.append({"delta_e": float(de),
                       "max_defect": unitarity_report(smat)["max_defect"]})
    des = np.array([lv["delta_e"] for lv in levels])
    defs_ = np.array([max(lv["max_defect"], 1e-300) for lv in levels])
    order = np.nan
    if len(levels) >= 2 and np.all(defs_ > 0):
        order = float(np.polyfit(np.log(des), np.log(defs_), 1)[0])
    return {"levels": levels, "fitted_order": order}


def write_r_csv(sdata, mesh, path):
    """Flattened per-bin R entries and condition numbers."""
    centers = mesh.centers
    n_s = sdata.t0.shape[1]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["bin_center", "m", "n", "row", "col", "re", "im", "cond"])
        for b in range(len(centers)):
            for m in range(2):
                for n in range(2):
                    for i in range(n_s):
                        for j in range(n_s):
                            z = sdata.r[m, n, b, i, j]
                            wr.writerow([repr(float(centers[b])), m, n, i, j,
                                         repr(z.real), repr(z.imag),
                                         repr(float(sdata.cond[b]))])


def write_refinement_json(report, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
