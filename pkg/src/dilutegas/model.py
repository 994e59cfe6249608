"""Discretized model data: system, reservoir, energy mesh, spectral densities.

The reservoir is a finite set of modes with energies omega_j, occupation
profile L_j >= 0 and two coupling amplitudes g0_j, g1_j per mode.  Quadrature
weights are folded into the amplitudes at construction, so every inner
product below is a plain conjugate-linear sum over modes.  Energy bins are
uniform and half-open; the bin projector divided by the bin width plays the
role of the spectral density delta(H1 - E).
"""

from dataclasses import dataclass, field

import numpy as np

WEIGHTS = ("none", "L", "L/(1-xiL)", "1/(1-xiL)")


class ModelError(ValueError):
    """Raised when model data violates a structural invariant."""


@dataclass(frozen=True)
class SystemModel:
    """Test-particle data: dimension, Hamiltonian h_s and coupling d_op.

    The coupling must commute with h_s (rotating-wave condition), so that
    the interaction conserves the system energy shell.
    """

    dim_s: int
    h_s: np.ndarray
    d_op: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h_s, dtype=complex)
        d = np.asarray(self.d_op, dtype=complex)
        if h.shape != (self.dim_s, self.dim_s) or d.shape != (self.dim_s, self.dim_s):
            raise ModelError("h_s and d_op must be dim_s x dim_s")
        object.__setattr__(self, "h_s", h)
        object.__setattr__(self, "d_op", d)
        hnorm = np.linalg.norm(h)
        if np.linalg.norm(h - h.conj().T) > 1e-12 * max(hnorm, 1e-300):
            raise ModelError("h_s is not hermitian")
        comm = h @ d - d @ h
        if np.linalg.norm(comm) > 1e-12 * max(hnorm * np.linalg.norm(d), 1e-300):
            raise ModelError("rotating-wave condition violated: [h_s, d_op] != 0")


@dataclass(frozen=True)
class ReservoirModel:
    """Finite mode grid with occupation profile and coupling amplitudes.

    omega, l_val are real arrays of length M; g0, g1 complex arrays of the
    same length.  xi is the fugacity; xi * max(l_val) must stay below 1 so
    that 1 - xi*L is invertible with positive spectrum.
    """

    omega: np.ndarray
    l_val: np.ndarray
    g0: np.ndarray
    g1: np.ndarray
    xi: float

    def __post_init__(self):
        om = np.atleast_1d(np.asarray(self.omega, dtype=float))
        lv = np.atleast_1d(np.asarray(self.l_val, dtype=float))
        g0 = np.atleast_1d(np.asarray(self.g0, dtype=complex))
        g1 = np.atleast_1d(np.asarray(self.g1, dtype=complex))
        if not (om.shape == lv.shape == g0.shape == g1.shape) or om.ndim != 1:
            raise ModelError("mode arrays must be 1-d and of equal length")
        if om.size < 1:
            raise ModelError("need at least one mode")
        if not np.all(np.isfinite(om)):
            raise ModelError("mode energies must be finite")
        if np.any(lv < 0):
            raise ModelError("l_val must be nonnegative")
        if self.xi <= 0:
            raise ModelError("fugacity must be positive")
        if self.xi * lv.max() >= 1.0:
            raise ModelError("xi * max(L) must be < 1")
        for name, arr in (("omega", om), ("l_val", lv), ("g0", g0), ("g1", g1)):
            object.__setattr__(self, name, arr)

    @property
    def n_modes(self):
        return self.omega.size

    def formfactor(self, which):
        """Return g0 or g1 by index 0/1."""
        return self.g0 if which == 0 else self.g1

    def weight_values(self, weight, xi=None):
        """Mode-wise values of the requested occupation weight function."""
        if weight not in WEIGHTS:
            raise ValueError(f"unknown weight {weight!r}; choose from {WEIGHTS}")
        x = self.xi if xi is None else xi
        if weight == "none":
            return np.ones_like(self.l_val)
        if weight == "L":
            return self.l_val.copy()
        if weight == "L/(1-xiL)":
            return self.l_val / (1.0 - x * self.l_val)
        return 1.0 / (1.0 - x * self.l_val)


def inner(g, f):
    """Plain mode-sum inner product <g, f>, conjugate-linear in g."""
    return np.vdot(np.asarray(g), np.asarray(f))


def weighted_inner(reservoir, g, f, weight, xi=None):
    """<g, w(L) f> with w one of the occupation weight functions."""
    w = reservoir.weight_values(weight, xi)
    return np.vdot(np.asarray(g), w * np.asarray(f))


@dataclass(frozen=True)
class EnergyMesh:
    """Uniform half-open energy bins [E_b - dE/2, E_b + dE/2) covering all modes."""

    e_min: float
    delta_e: float
    n_bins: int
    mode_to_bin: np.ndarray

    @property
    def e_max(self):
        return self.e_min + self.n_bins * self.delta_e

    @property
    def centers(self):
        return self.e_min + self.delta_e * (0.5 + np.arange(self.n_bins))

    def bin_modes(self, b):
        """Indices of the modes falling in bin b."""
        return np.nonzero(self.mode_to_bin == b)[0]


def build_mesh(reservoir, delta_e):
    """Bin the reservoir modes on a uniform energy grid of width delta_e.

    The lowest mode sits at the center of bin 0.  Empty bins between
    occupied ones are retained so refinement studies see a stable span.
    """
    if delta_e <= 0:
        raise ValueError("delta_e must be positive")
    om = reservoir.omega
    e_min = om.min() - 0.5 * delta_e
    idx = np.floor((om - e_min) / delta_e).astype(int)
    n_bins = int(np.floor((om.max() - e_min) / delta_e)) + 1
    # guard against float roundoff at the top edge
    idx = np.clip(idx, 0, n_bins - 1)
    return EnergyMesh(e_min=float(e_min), delta_e=float(delta_e),
                      n_bins=n_bins, mode_to_bin=idx)


@dataclass(frozen=True)
class SpectralDensity:
    """Binned density sigma_{g,f}(E_b), optionally weighted by an L function.

    values[b] = (1/dE) * sum over modes j in bin b of conj(g_j) w(L_j) f_j.
    Completeness sum_b dE*values[b] = <g, w(L) f> holds exactly.
    """

    values: np.ndarray
    weight: str
    labels: tuple = ("g", "f")


def spectral_density(reservoir, mesh, g, f, weight="none", xi=None, labels=("g", "f")):
    """Binned spectral density of the pair (g, f) with occupation weight."""
    g = np.asarray(g, dtype=complex)
    f = np.asarray(f, dtype=complex)
    if g.shape != reservoir.omega.shape or f.shape != reservoir.omega.shape:
        raise ValueError("vector length must match the number of modes")
    w = reservoir.weight_values(weight, xi)
    per_mode = np.conj(g) * w * f
    values = np.zeros(mesh.n_bins, dtype=complex)
    np.add.at(values, mesh.mode_to_bin, per_mode)
    values /= mesh.delta_e
    return SpectralDensity(values=values, weight=weight, labels=tuple(labels))


def free_phase(reservoir, f, t):
    """One-particle free evolution S_t f = e^{i omega t} f, mode-wise."""
    return np.exp(1j * reservoir.omega * t) * np.asarray(f, dtype=complex)
