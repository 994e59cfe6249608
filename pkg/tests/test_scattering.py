import numpy as np
import pytest

from dilutegas import (SystemModel, assemble_s_matrix, assemble_t_operator,
                       build_mesh, build_r, build_t0_t1, gamma_pv,
                       lippmann_schwinger_oracle, oracle_comparison,
                       refinement_study, unitarity_report)
from dilutegas.kernels import gamma_resolvent
from dilutegas.scattering import ScatteringError, interaction_v1

from conftest import gaussian_reservoir, standard_reservoir, standard_system


def test_zero_coupling_is_trivial(reservoir, mesh):
    system = SystemModel(dim_s=2, h_s=np.zeros((2, 2)),
                         d_op=np.zeros((2, 2)))
    table = gamma_pv(reservoir, mesh)
    sdata = build_r(system, table)
    assert np.abs(sdata.t0 - np.eye(2)).max() <= 1e-14
    assert np.abs(sdata.r[0, 0]).max() <= 1e-14
    assert np.abs(sdata.r[1, 1]).max() <= 1e-14
    # off-diagonal R reduce to -D / D+ which vanish too
    assert np.abs(sdata.r[0, 1]).max() <= 1e-14
    smat = assemble_s_matrix(sdata, reservoir, mesh)
    assert unitarity_report(smat)["max_defect"] <= 1e-14


def test_r_leading_coupling_powers(reservoir, mesh):
    """R00, R11 open at second order in the coupling strength; R01, R10 at
    first.  Fitted log-log slopes across a 4x range pin the leading powers
    {2, 2, 1, 1}."""
    eps_list = (0.2, 0.1, 0.05)
    norms = {key: [] for key in ((0, 0), (1, 1), (0, 1), (1, 0))}
    table = gamma_pv(reservoir, mesh)
    base = standard_system(scale=1.0).d_op
    for eps in eps_list:
        system = SystemModel(dim_s=2, h_s=np.zeros((2, 2)), d_op=eps * base)
        sdata = build_r(system, table)
        for key in norms:
            norms[key].append(np.abs(sdata.r[key]).max())
    slopes = {key: np.polyfit(np.log(eps_list), np.log(v), 1)[0]
              for key, v in norms.items()}
    assert abs(slopes[0, 0] - 2) <= 0.1
    assert abs(slopes[1, 1] - 2) <= 0.1
    assert abs(slopes[0, 1] - 1) <= 0.1
    assert abs(slopes[1, 0] - 1) <= 0.1


def test_singular_denominator_is_reported():
    res = standard_reservoir()
    mesh = build_mesh(res, 0.3)
    table = gamma_pv(res, mesh)
    system = standard_system()
    with pytest.raises(ScatteringError, match="bin"):
        build_t0_t1(system, table, cond_threshold=1.0)


def test_s_matrix_blocks_are_bin_local(system, reservoir, mesh):
    table = gamma_pv(reservoir, mesh)
    sdata = build_r(system, table)
    smat = assemble_s_matrix(sdata, reservoir, mesh)
    assert len(smat.blocks) == mesh.n_bins
    for b, block in enumerate(smat.blocks):
        mb = smat.bin_mode_indices[b].size
        assert block.shape == (2 * mb, 2 * mb)


def test_s_unitary_with_pv_kernels(system, reservoir, mesh):
    table = gamma_pv(reservoir, mesh)
    sdata = build_r(system, table)
    smat = assemble_s_matrix(sdata, reservoir, mesh)
    assert unitarity_report(smat)["max_defect"] <= 1e-12


def test_corrupted_block_is_detected(system, reservoir, mesh):
    table = gamma_pv(reservoir, mesh)
    sdata = build_r(system, table)
    smat = assemble_s_matrix(sdata, reservoir, mesh)
    smat.blocks[3][0, 0] += 0.05
    assert unitarity_report(smat)["max_defect"] >= 0.01


def test_t_operator_matches_dense_solver(system, reservoir):
    """Closed-form T assembly against the stationary equation solved on the
    full discretized space, resolvent kernels at matching eta."""
    res = standard_reservoir(amp=0.05)
    mesh = build_mesh(res, 0.3)
    table = gamma_resolvent(res, mesh)
    sdata = build_r(system, table)
    rel = oracle_comparison(system, res, mesh, sdata, bins=[2, 6, 10])
    assert rel <= 1e-10


def test_oracle_second_born_term(system):
    """The dense solve carries the full Born series: subtracting V1 from
    T(z) leaves V1 G0 V1 + higher orders.  Checks the sign convention of
    the retarded resolvent."""
    res = standard_reservoir(m=8, amp=0.05)
    eta = 0.4
    energy = 0.8
    t_mat = lippmann_schwinger_oracle(system, res, eta, energy)
    v1 = interaction_v1(system, res)
    h0 = (np.kron(system.h_s, np.eye(8))
          + np.kron(np.eye(2), np.diag(res.omega)))
    g0 = np.linalg.inv((energy + 1j * eta) * np.eye(16) - h0)
    second = v1 @ g0 @ v1
    resid = np.linalg.norm(t_mat - v1 - second)
    assert resid <= 0.1 * max(np.linalg.norm(second), 1e-300)


def test_t_operator_shape(system, reservoir, mesh):
    table = gamma_pv(reservoir, mesh)
    sdata = build_r(system, table)
    t = assemble_t_operator(sdata, reservoir, mesh)
    assert t.shape == (2 * reservoir.n_modes, 2 * reservoir.n_modes)


def test_refinement_defects_shrink_for_resolvent_route(system):
    res = gaussian_reservoir(amp=0.025)
    rep = refinement_study(system, res, [0.5, 0.25, 0.125],
                           route="resolvent")
    defs_ = [lv["max_defect"] for lv in rep["levels"]]
    assert defs_[1] < defs_[0]
    assert defs_[2] < defs_[1]
