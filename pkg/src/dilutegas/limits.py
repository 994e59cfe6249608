"""Causal-state limits of the number-operator correlators.

In the zero-fugacity limit only one connected diagram per block survives,
and the smeared correlator collapses to a sum over ordered compositions of
the slot sequence into consecutive blocks.  A block spanning slots i..j
contributes the energy sum

    C(i..j) = sum_b dE sigma^L_{g_j, f_i}(E_b) prod_{l=i}^{j-1}
              gamma_{g_l, f_{l+1}}(E_b)

(a single slot reduces to <g_i, L f_i>), and a composition with B blocks
carries the simplex volume factor t^B / B!.
"""

import itertools
import json
from math import factorial

import numpy as np

from .kernels import pair_gamma_pv, pair_gamma_resolvent
from .model import spectral_density, weighted_inner
from .wick import finite_xi_correlator, fit_power


def _gamma_pair_fn(reservoir, mesh, route="pv", eta=None, log_subtraction=False):
    if route == "pv":
        return lambda g, f: pair_gamma_pv(reservoir, mesh, g, f,
                                          log_subtraction=log_subtraction)
    if route == "resolvent":
        return lambda g, f: pair_gamma_resolvent(
            reservoir, mesh, g, f, mesh.delta_e if eta is None else eta)
    raise ValueError(f"unknown kernel route {route!r}")


def block_constant(slots, i, j, reservoir, mesh, gamma_fn):
    """C(i..j) for the consecutive block of slots i..j inclusive."""
    f_i = slots[i][0]
    g_j = slots[j][1]
    if i == j:
        return weighted_inner(reservoir, slots[i][1], slots[i][0], "L")
    sd = spectral_density(reservoir, mesh, g_j, f_i, weight="L")
    prod = np.ones(mesh.n_bins, dtype=complex)
    for l in range(i, j):
        prod *= gamma_fn(slots[l][1], slots[l + 1][0])
    return mesh.delta_e * np.sum(sd.values * prod)


def compositions(n):
    """Ordered compositions of n as lists of consecutive block lengths."""
    out = []
    for cuts in itertools.chain.from_iterable(
            itertools.combinations(range(1, n), r) for r in range(n)):
        bounds = (0,) + cuts + (n,)
        out.append([bounds[q + 1] - bounds[q] for q in range(len(bounds) - 1)])
    return out


def limit_correlator(slots, t, reservoir, mesh, route="pv", eta=None,
                     log_subtraction=False):
    """Smeared limit correlator by explicit composition enumeration."""
    n = len(slots)
    gamma_fn = _gamma_pair_fn(reservoir, mesh, route, eta, log_subtraction)
    cache = {}

    def block(i, j):
        if (i, j) not in cache:
            cache[i, j] = block_constant(slots, i, j, reservoir, mesh, gamma_fn)
        return cache[i, j]

    total = 0.0 + 0.0j
    for comp in compositions(n):
        start = 0
        prod = 1.0 + 0.0j
        for length in comp:
            prod *= block(start, start + length - 1)
            start += length
        b_count = len(comp)
        total += t ** b_count / factorial(b_count) * prod
    return total


def limit_correlator_recursive(slots, t, reservoir, mesh, route="pv", eta=None,
                               log_subtraction=False):
    """Same value by a tail recursion over the first block (independent path).

    Builds the polynomial in the block-count variable and applies the
    t^B/B! weights at the end; shares no enumeration code with
    limit_correlator.
    """
    n = len(slots)
    gamma_fn = _gamma_pair_fn(reservoir, mesh, route, eta, log_subtraction)
    cache = {}

    def block(i, j):
        if (i, j) not in cache:
            cache[i, j] = block_constant(slots, i, j, reservoir, mesh, gamma_fn)
        return cache[i, j]

    # poly[l] = coefficients (by block count) of the tail starting at slot l
    poly = [None] * (n + 1)
    poly[n] = np.zeros(1, dtype=complex)
    poly[n][0] = 1.0
    for l in range(n - 1, -1, -1):
        acc = np.zeros(n - l + 1, dtype=complex)
        for j in range(l, n):
            tail = poly[j + 1]
            acc[1:len(tail) + 1] += block(l, j) * tail
        poly[l] = acc
    return sum(c * t ** b / factorial(b)
               for b, c in enumerate(poly[0]))


def convergence_study(spec, reservoir, mesh, xis=(0.2, 0.1, 0.05, 0.025),
                      route="pv", budget=None):
    """|finite-xi - limit| across a fugacity list with fitted order in xi."""
    kwargs = {} if budget is None else {"budget": budget}
    limit = limit_correlator(spec.slots, spec.t, reservoir, mesh, route=route)
    errors = []
    for x in xis:
        val, _ = finite_xi_correlator(spec.with_xi(x), reservoir, **kwargs)
        errors.append(abs(val - limit))
    return {"order": spec.n, "xis": list(xis),
            "limit": limit, "errors": errors,
            "fitted_order": fit_power(xis, errors)}


def factorization_check(outer, bin_index, inner_slots, t, reservoir, mesh,
                        route="pv"):
    """Outer-pair factorization of the causal state, two code paths.

    outer = (f, g): the correlator with B+_f(E,t) ... B_g(E,t) wrapped
    around the inner word factorizes into sigma^L_{g,f}(E_b) times the
    inner correlator; outer-inner pairings are excluded by the simplex
    support of the causal pair rule.  Both sides evaluate the inner part
    through independent enumerations.
    """
    f, g = outer
    sd = spectral_density(reservoir, mesh, g, f, weight="L")
    weight = sd.values[bin_index]
    lhs = weight * limit_correlator_recursive(inner_slots, t, reservoir, mesh,
                                              route=route)
    rhs = weight * limit_correlator(inner_slots, t, reservoir, mesh,
                                    route=route)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return {"lhs": lhs, "rhs": rhs, "abs_error": abs(lhs - rhs),
            "rel_error": abs(lhs - rhs) / scale,
            "passed": abs(lhs - rhs) <= 1e-12 * max(scale, 1.0)}


def write_convergence_json(report, path):
    doc = dict(report)
    doc["limit"] = {"re": report["limit"].real, "im": report["limit"].imag}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
