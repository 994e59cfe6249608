import numpy as np
import pytest
from scipy.linalg import expm

from dilutegas import (SystemModel, TrajectoryConfig, assemble_generator,
                       assemble_s_matrix, build_mesh, build_r,
                       collision_monte_carlo, drift, evolve_semigroup,
                       exp_drift, gamma_pv, series_expectation,
                       series_generator_derivative)
from dilutegas.dynamics import (CalibrationError, calibrate_collision_model,
                                choi_matrix, splitmix64, trajectory_seed)

from conftest import standard_reservoir, standard_system


@pytest.fixture
def pipeline(system, reservoir, mesh):
    table = gamma_pv(reservoir, mesh)
    sdata = build_r(system, table)
    gen = assemble_generator(system, sdata, reservoir, mesh)
    smat = assemble_s_matrix(sdata, reservoir, mesh)
    return sdata, gen, smat


def test_drift_vanishes_without_coupling(reservoir, mesh):
    system = SystemModel(dim_s=2, h_s=np.zeros((2, 2)),
                         d_op=np.zeros((2, 2)))
    table = gamma_pv(reservoir, mesh)
    sdata = build_r(system, table)
    assert np.abs(drift(sdata, reservoir, mesh)).max() <= 1e-14


def test_drift_coupling_powers_split_by_hermiticity(reservoir, mesh):
    """The anti-hermitian (level-shift) part of the drift opens at first
    order in the coupling, the hermitian (decay) part at second."""
    herms, antis = [], []
    eps_list = (0.2, 0.1, 0.05)
    table = gamma_pv(reservoir, mesh)
    for eps in eps_list:
        system = SystemModel(dim_s=2, h_s=np.zeros((2, 2)),
                             d_op=eps * standard_system(scale=1.0).d_op)
        gamma = drift(build_r(system, table), reservoir, mesh)
        herms.append(np.linalg.norm(0.5 * (gamma + gamma.conj().T)))
        antis.append(np.linalg.norm(0.5 * (gamma - gamma.conj().T)))
    herm_slope = np.polyfit(np.log(eps_list), np.log(herms), 1)[0]
    anti_slope = np.polyfit(np.log(eps_list), np.log(antis), 1)[0]
    assert abs(herm_slope - 2) <= 0.15
    assert abs(anti_slope - 1) <= 0.15


def test_exp_drift_matches_dense_exponential(pipeline, reservoir, mesh):
    sdata, gen, _ = pipeline
    gamma = gen.gamma_drift
    for t in (0.3, 1.7):
        direct = expm(-gamma * t)
        assert np.abs(exp_drift(gamma, [t])[0] - direct).max() <= 1e-10


def test_series_reproduces_exponential_orders(system, reservoir, mesh,
                                              pipeline):
    """Per-order series terms against the Taylor coefficients of
    e^{-Gamma t}: they agree up to higher-order energy-sum corrections, so
    a small horizon pins each order."""
    _, gen, _ = pipeline
    gamma = gen.gamma_drift
    t = 0.05 / np.linalg.norm(gamma, 2)
    total4, terms = series_expectation(system, reservoir, mesh, t, 4)
    partial3 = total4 - terms[4]
    dev = np.abs(partial3 - expm(-gamma * t))
    # the leftover is the missing order-4 word sum, entry by entry
    assert (dev <= 2 * np.abs(terms[4]) + 1e-15).all()
    # order 1 in closed form: the two one-letter words
    from dilutegas import weighted_inner
    d = system.d_op
    want = t * (d * weighted_inner(reservoir, reservoir.g1, reservoir.g0, "L")
                - d.conj().T * weighted_inner(reservoir, reservoir.g0,
                                              reservoir.g1, "L"))
    assert np.abs(terms[1] - want).max() <= 1e-12


def test_generator_annihilates_identity(pipeline):
    _, gen, _ = pipeline
    g1 = gen.apply_heisenberg(np.eye(2, dtype=complex))
    assert np.linalg.norm(g1) <= 1e-12 * np.linalg.norm(gen.gamma_drift)


def test_predual_is_trace_preserving(pipeline):
    _, gen, _ = pipeline
    rng = np.random.default_rng(2)
    for _ in range(5):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        rho = a @ a.conj().T
        rho /= np.trace(rho)
        out = gen.apply_schrodinger(rho)
        assert abs(np.trace(out)) <= 1e-12


def test_duality_of_generator_pair(pipeline):
    _, gen, _ = pipeline
    rng = np.random.default_rng(8)
    x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    lhs = np.trace(rho.conj().T.conj() @ gen.apply_heisenberg(x))
    lhs = np.trace(rho @ gen.apply_heisenberg(x))
    rhs = np.trace(gen.apply_schrodinger(rho) @ x)
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0)


def test_derivative_oracle_third_order_remainder(reservoir, mesh):
    """The independent two-sided series derivative matches the assembled
    generator with an O(coupling^3) remainder: the gap shrinks ~8x when
    the coupling halves."""
    rng = np.random.default_rng(4)
    x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    gaps = []
    for eps in (1.0, 0.5, 0.25):
        system = SystemModel(dim_s=2, h_s=np.zeros((2, 2)),
                             d_op=eps * standard_system(scale=1.0).d_op)
        table = gamma_pv(reservoir, mesh)
        sdata = build_r(system, table)
        gen = assemble_generator(system, sdata, reservoir, mesh)
        oracle = series_generator_derivative(system, reservoir, mesh, x)
        gaps.append(np.linalg.norm(gen.apply_heisenberg(x) - oracle))
    slopes = np.diff(np.log(gaps)) / np.diff(np.log([1.0, 0.5, 0.25]))
    assert slopes.min() >= 2.5


def test_choi_of_short_step_is_nearly_positive(pipeline):
    _, gen, _ = pipeline
    step = expm(0.5 * gen.g_star)
    choi = choi_matrix(step, 2)
    eigs = np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))
    assert eigs.min() >= -1e-6


def test_evolve_semigroup_validates_state(pipeline):
    _, gen, _ = pipeline
    with pytest.raises(ValueError):
        evolve_semigroup(gen, np.array([[1.0, 0.5], [0.1, 0.0]]), [1.0])
    with pytest.raises(ValueError):
        evolve_semigroup(gen, 2 * np.eye(2), [1.0])


def test_evolve_semigroup_diagnostics(pipeline):
    _, gen, _ = pipeline
    states, diag = evolve_semigroup(gen, np.eye(2) / 2, [0.0, 0.5, 2.0])
    assert diag["trace_ok"] and diag["herm_ok"]
    assert diag["min_eigenvalue"] >= -1e-8
    assert np.abs(states[0] - np.eye(2) / 2).max() <= 1e-12


def test_splitmix_seed_expansion_disperses():
    seeds = {trajectory_seed(1234, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert splitmix64(0) != 0


def test_collision_model_calibration_is_exact(pipeline, reservoir, mesh):
    _, gen, smat = pipeline
    cal = calibrate_collision_model(smat, reservoir, mesh, gen)
    assert cal["relative_residual"] <= 1e-12


def test_calibration_rejects_wrong_rate(pipeline, reservoir, mesh):
    _, gen, smat = pipeline
    with pytest.raises(CalibrationError):
        calibrate_collision_model(smat, reservoir, mesh, gen,
                                  rate_scale=1.05)


def test_monte_carlo_is_deterministic(pipeline, reservoir, mesh):
    _, gen, smat = pipeline
    cfg = TrajectoryConfig(dt=0.02, horizon=0.4, n_traj=64, seed=99)
    rho0 = np.eye(2) / 2
    a = collision_monte_carlo(smat, reservoir, mesh, cfg, rho0, gen)
    b = collision_monte_carlo(smat, reservoir, mesh, cfg, rho0, gen)
    assert np.array_equal(a["mean"], b["mean"])
    assert np.array_equal(a["stderr"], b["stderr"])


def test_monte_carlo_preserves_trace_exactly(pipeline, reservoir, mesh):
    _, gen, smat = pipeline
    cfg = TrajectoryConfig(dt=0.02, horizon=0.4, n_traj=64, seed=99)
    out = collision_monte_carlo(smat, reservoir, mesh, cfg, np.eye(2) / 2,
                                gen)
    assert out["max_trace_dev"] <= 1e-12


def test_monte_carlo_error_shrinks_like_sqrt_n():
    res = standard_reservoir(amp=0.3 / 0.15 * 0.15)
    system = standard_system()
    mesh = build_mesh(res, 0.3)
    table = gamma_pv(res, mesh)
    sdata = build_r(system, table)
    gen = assemble_generator(system, sdata, res, mesh)
    smat = assemble_s_matrix(sdata, res, mesh)
    t = 0.5 / np.linalg.norm(gen.gamma_drift, 2)
    exact, _ = evolve_semigroup(gen, np.eye(2) / 2, [t])
    errs = []
    for n_traj in (100, 1000, 10000):
        cfg = TrajectoryConfig(dt=t / 100, horizon=t, n_traj=n_traj, seed=5)
        out = collision_monte_carlo(smat, res, mesh, cfg, np.eye(2) / 2, gen)
        errs.append(np.abs(out["final_mean"] - exact[0]).max())
    slope = np.polyfit(np.log([100, 1000, 10000]), np.log(errs), 1)[0]
    assert -0.8 <= slope <= -0.2
