import numpy as np

from dilutegas import (CorrelatorSpec, build_mesh, convergence_study,
                       factorization_check, limit_correlator,
                       limit_correlator_recursive, weighted_inner)
from dilutegas.limits import block_constant, compositions, _gamma_pair_fn

from conftest import separated_slots, standard_reservoir


def test_composition_count_is_power_of_two():
    for n in (1, 2, 3, 4, 5, 6):
        assert len(compositions(n)) == 2 ** (n - 1)


def test_compositions_partition_the_slots():
    for comp in compositions(4):
        assert sum(comp) == 4
        assert all(length >= 1 for length in comp)


def test_order_one_limit_is_weighted_inner(reservoir, mesh):
    slots = ((reservoir.g0, reservoir.g1),)
    got = limit_correlator(slots, 1.3, reservoir, mesh)
    want = 1.3 * weighted_inner(reservoir, reservoir.g1, reservoir.g0, "L")
    assert abs(got - want) <= 1e-12 * max(abs(want), 1.0)


def test_enumeration_and_recursion_agree(reservoir, mesh):
    for n in (1, 2, 3, 4):
        slots = ((reservoir.g0, reservoir.g1), (reservoir.g1, reservoir.g0),
                 (reservoir.g0, reservoir.g0), (reservoir.g1, reservoir.g1))[:n]
        a = limit_correlator(slots, 0.8, reservoir, mesh)
        b = limit_correlator_recursive(slots, 0.8, reservoir, mesh)
        assert abs(a - b) <= 1e-12 * max(abs(a), 1.0)


def test_routes_converge_together():
    """PV and resolvent limits of the same word agree up to discretization
    on a dense smooth model."""
    res = standard_reservoir(m=192, amp=0.1)
    slots = ((res.g0, res.g1), (res.g1, res.g0))
    gaps = []
    for de in (0.6, 0.3):
        mesh = build_mesh(res, de)
        a = limit_correlator(slots, 1.0, res, mesh, route="pv")
        b = limit_correlator(slots, 1.0, res, mesh, route="resolvent")
        gaps.append(abs(a - b) / max(abs(a), 1e-300))
    assert gaps[0] <= 0.5
    assert gaps[1] <= gaps[0]


def test_block_constant_single_slot(reservoir, mesh):
    slots = ((reservoir.g0, reservoir.g1),)
    fn = _gamma_pair_fn(reservoir, mesh)
    c = block_constant(slots, 0, 0, reservoir, mesh, fn)
    want = weighted_inner(reservoir, reservoir.g1, reservoir.g0, "L")
    assert abs(c - want) <= 1e-12 * max(abs(want), 1.0)


def test_finite_xi_approaches_limit():
    res, slots = separated_slots()
    mesh = build_mesh(res, 0.5)
    spec = CorrelatorSpec(slots=slots, t=8.0, xi=0.2)
    rep = convergence_study(spec, res, mesh, xis=(0.2, 0.1, 0.05))
    assert rep["errors"][1] < rep["errors"][0]
    assert rep["errors"][2] < rep["errors"][1]
    assert 0.5 <= rep["fitted_order"] <= 1.5


def test_factorization_check_passes(reservoir, mesh):
    rng = np.random.default_rng(5)
    f = rng.normal(size=24) + 1j * rng.normal(size=24)
    g = rng.normal(size=24) + 1j * rng.normal(size=24)
    out = factorization_check((f, g), 4,
                              ((reservoir.g0, reservoir.g1),
                               (reservoir.g1, reservoir.g0)),
                              1.1, reservoir, mesh)
    assert out["passed"]
    assert out["abs_error"] <= 1e-12 * max(abs(out["lhs"]), 1.0)


def test_limit_polynomial_in_t(reservoir, mesh):
    """An order-2 word is a degree-2 polynomial in the horizon; three
    samples must determine it exactly at a fourth point."""
    slots = ((reservoir.g0, reservoir.g1), (reservoir.g1, reservoir.g0))
    ts = np.array([0.5, 1.0, 1.5])
    vals = [limit_correlator(slots, t, reservoir, mesh) for t in ts]
    coeff = np.polyfit(ts, vals, 2)
    probe = limit_correlator(slots, 2.2, reservoir, mesh)
    assert abs(np.polyval(coeff, 2.2) - probe) <= 1e-9 * max(abs(probe), 1.0)
