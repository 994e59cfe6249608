"""Wick pairing combinatorics and exact finite-fugacity correlators.

Correlators of the rescaled number operators
N_l(t) = (1/xi) A+(S_{t/xi} f_l) A(S_{t/xi} g_l) in the gauge-invariant
Gaussian state are sums over pairings of the A+ slots with the A slots.
Each pair carries a single mode sum; the time dependence per mode tuple is
a pure product of oscillating phases, so the smearing over the ordered time
simplex reduces to closed-form iterated integrals of exponentials.

Pair values, with w+ = L/(1-xi L) and w- = 1/(1-xi L):

  A+ at slot i left of (or equal to) A at slot j ("forward"):
      xi * sum_k conj(g_j[k]) w+_k f_i[k] e^{i omega_k (t_i - t_j)/xi}
  A left of A+ ("backward"):
      sum_k conj(g_j[k]) w-_k f_i[k] e^{i omega_k (t_i - t_j)/xi}

The identity w- - xi*w+ = 1 is the CCR [A(g), A+(f)] = <g,f> in disguise.
"""

import itertools
from dataclasses import dataclass

import numpy as np

PAIRING_CAP = 6
TUPLE_BUDGET = 10_000_000
SMALL_FREQ = 1e-8  # switch to series integration when |freq|*t below this


class ResourceError(RuntimeError):
    """Raised when a correlator exceeds the configured tuple budget."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


@dataclass(frozen=True)
class PairingDiagram:
    """One gauge-invariant pairing of n A+ slots with n A slots.

    pairs[p] = (i_p, j_p): A+ at slot i_p with A at slot j_p (0-based).
    k counts forward pairs (i_p <= j_p); xi_order = k - number of connected
    blocks is the leading xi power after the 1/xi^n prefactor cancels,
    so a connected diagram has xi_order = k - 1.
    """

    n: int
    pairs: tuple
    connected: bool
    k: int
    xi_order: int
    blocks: tuple

    def label(self):
        return ",".join(f"{i}-{j}" for i, j in self.pairs)


def _cut_positions(n, pairs):
    """Slots m such that no pair crosses between {0..m} and {m+1..n-1}."""
    cuts = []
    for m in range(n - 1):
        if all((i <= m) == (j <= m) for i, j in pairs):
            cuts.append(m)
    return cuts


def classify_pairing(n, perm):
    """Build the PairingDiagram for A+ slot i paired with A slot perm[i]."""
    pairs = tuple((i, perm[i]) for i in range(n))
    k = sum(1 for i, j in pairs if i <= j)
    cuts = _cut_positions(n, pairs)
    bounds = [-1] + cuts + [n - 1]
    blocks = tuple((bounds[q] + 1, bounds[q + 1]) for q in range(len(bounds) - 1))
    return PairingDiagram(n=n, pairs=pairs, connected=len(blocks) == 1,
                          k=k, xi_order=k - len(blocks), blocks=blocks)


def enumerate_pairings(n, cap=PAIRING_CAP):
    """All n! gauge-invariant pairings, classified."""
    if n < 1:
        raise ValueError("order must be >= 1")
    if n > cap:
        raise ResourceError(f"pairing order {n} exceeds cap {cap}", required=n)
    return [classify_pairing(n, perm)
            for perm in itertools.permutations(range(n))]


def _integrate_term(coeff, power, freq, t, out):
    """Accumulate the term dict of int_0^s u^power e^{i freq u} du into out."""
    if abs(freq) * t < SMALL_FREQ:
        # stable series around freq = 0; three orders is far below 1e-8*t
        fac = coeff
        for q in range(4):
            key = (power + q + 1, 0.0)
            out[key] = out.get(key, 0.0) + fac / (power + q + 1)
            fac *= 1j * freq / (q + 1)
        return
    ib = 1j * freq
    # antiderivative e^{ibu} sum_q (-1)^q p!/(p-q)! u^{p-q} / (ib)^{q+1}
    c = coeff
    for q in range(power + 1):
        c_q = c * (-1) ** q / ib ** (q + 1)
        # p!/(p-q)! accumulated below
        fall = 1.0
        for r in range(q):
            fall *= power - r
        key = (power - q, freq)
        out[key] = out.get(key, 0.0) + c_q * fall
    fall = 1.0
    for r in range(power):
        fall *= power - r
    const = -c * (-1) ** power * fall / ib ** (power + 1)
    key = (0, 0.0)
    out[key] = out.get(key, 0.0) + const


def simplex_exp_integral(a, t):
    """Exact integral of prod_l e^{i a_l t_l} over t >= t_1 >= ... >= t_n >= 0.

    Evaluated by the recursion I(a_1..a_n; t) = int_0^t e^{i a_1 s}
    I(a_2..a_n; s) ds on a symbolic term list c * s^p * e^{i b s}.
    """
    terms = {(0, 0.0): 1.0 + 0.0j}
    for ak in reversed(list(a)):
        out = {}
        for (p, b), c in terms.items():
            _integrate_term(c, p, b + ak, t, out)
        terms = out
    return sum(c * t ** p * np.exp(1j * b * t) for (p, b), c in terms.items())


@dataclass(frozen=True)
class CorrelatorSpec:
    """Order-n number-operator correlator: slot vectors, horizon, fugacity.

    slots[l] = (f_l, g_l), each a length-M amplitude vector; slot 0 carries
    the latest time on the simplex.
    """

    slots: tuple
    t: float
    xi: float

    @property
    def n(self):
        return len(self.slots)

    def with_xi(self, xi):
        return CorrelatorSpec(slots=self.slots, t=self.t, xi=xi)


def _pair_weights(spec, reservoir, diagram):
    """Per-pair mode weight vectors and the forward count's xi factor."""
    wplus = reservoir.l_val / (1.0 - spec.xi * reservoir.l_val)
    wminus = 1.0 / (1.0 - spec.xi * reservoir.l_val)
    weights = []
    for i, j in diagram.pairs:
        f_i = np.asarray(spec.slots[i][0], dtype=complex)
        g_j = np.asarray(spec.slots[j][1], dtype=complex)
        w = spec.xi * wplus if i <= j else wminus
        weights.append(np.conj(g_j) * w * f_i)
    return weights


def diagram_value(spec, reservoir, diagram, budget=TUPLE_BUDGET):
    """Smeared value of one diagram: mode-tuple sum of simplex integrals."""
    n = spec.n
    weights = _pair_weights(spec, reservoir, diagram)
    supports = [np.nonzero(np.abs(w) > 0)[0] for w in weights]
    required = int(np.prod([max(s.size, 1) for s in supports]))
    if required > budget:
        raise ResourceError(
            f"diagram {diagram.label()} needs {required} mode tuples "
            f"(budget {budget})", required=required)
    if any(s.size == 0 for s in supports):
        return 0.0 + 0.0j
    om = reservoir.omega
    total = 0.0 + 0.0j
    for tup in itertools.product(*supports):
        w = 1.0 + 0.0j
        for p in range(n):
            w *= weights[p][tup[p]]
        freq = np.zeros(n)
        for p, (i, j) in enumerate(diagram.pairs):
            freq[i] += om[tup[p]]
            freq[j] -= om[tup[p]]
        total += w * simplex_exp_integral(freq / spec.xi, spec.t)
    return total * spec.xi ** (-n)


def finite_xi_correlator(spec, reservoir, diagrams=None, budget=TUPLE_BUDGET):
    """Exact smeared correlator: total plus per-diagram breakdown."""
    if diagrams is None:
        diagrams = enumerate_pairings(spec.n)
    per_diagram = {}
    total = 0.0 + 0.0j
    for dg in diagrams:
        val = diagram_value(spec, reservoir, dg, budget=budget)
        per_diagram[dg.label()] = val
        total += val
    return total, per_diagram


def pointwise_correlator(spec, reservoir, times, diagrams=None,
                         budget=TUPLE_BUDGET):
    """Unsmeared correlator at fixed times (oracle support, not pipeline).

    times[l] is the time of slot l; the pipeline itself only consumes the
    smeared values, but the Fock-space cross-check in the tests needs
    pointwise values.
    """
    if diagrams is None:
        diagrams = enumerate_pairings(spec.n)
    times = np.asarray(times, dtype=float)
    om = reservoir.omega
    total = 0.0 + 0.0j
    for dg in diagrams:
        weights = _pair_weights(spec, reservoir, dg)
        supports = [np.nonzero(np.abs(w) > 0)[0] for w in weights]
        if any(s.size == 0 for s in supports):
            continue
        required = int(np.prod([s.size for s in supports]))
        if required > budget:
            raise ResourceError("tuple budget exceeded", required=required)
        for tup in itertools.product(*supports):
            w = 1.0 + 0.0j
            phase = 0.0
            for p, (i, j) in enumerate(dg.pairs):
                w *= weights[p][tup[p]]
                phase += om[tup[p]] * (times[i] - times[j])
            total += w * np.exp(1j * phase / spec.xi)
    return total * spec.xi ** (-spec.n)


def fit_power(xis, values):
    """Log-log least-squares slope of |value| against xi."""
    xs = np.log(np.asarray(xis, dtype=float))
    ys = np.log(np.maximum(np.abs(np.asarray(values)), 1e-300))
    return float(np.polyfit(xs, ys, 1)[0])


def diagram_scaling_report(spec, reservoir, xis=(0.2, 0.1, 0.05, 0.025),
                           budget=TUPLE_BUDGET):
    """Per-diagram values across a fugacity list with fitted leading powers."""
    diagrams = enumerate_pairings(spec.n)
    rows = []
    for dg in diagrams:
        vals = [diagram_value(spec.with_xi(x), reservoir, dg, budget=budget)
                for x in xis]
        finite = [v for v in vals if abs(v) > 1e-300]
        fitted = fit_power(xis, vals) if len(finite) == len(vals) else np.nan
        rows.append({"label": dg.label(), "connected": dg.connected,
                     "k": dg.k, "xi_order": dg.xi_order,
                     "values": vals, "fitted_power": fitted})
    return {"xis": list(xis), "diagrams": rows}
