import numpy as np
import pytest

from dilutegas import ReservoirModel, SystemModel, build_mesh


def standard_reservoir(m=24, xi=0.1, amp=0.15, l_scale=1.0):
    j = np.arange(m)
    om = 0.2 + 0.15 * j
    lv = l_scale * (0.5 + 0.3 * np.sin(j) ** 2)
    prof = np.exp(-((om - 2.0) / 1.2) ** 2)
    g0 = amp * prof * (1 + 0.3j)
    g1 = amp * prof * (0.8 - 0.5j) * np.exp(0.2j * j)
    return ReservoirModel(omega=om, l_val=lv, g0=g0, g1=g1, xi=xi)


def gaussian_reservoir(m=256, amp=0.1, xi=0.1):
    """Smooth two-hump amplitude profiles on a dense uniform grid.

    Used wherever a refinement study needs profiles that look continuous
    at every bin width in play.
    """
    om = np.linspace(0.0, 4.0, m, endpoint=False) + 4.0 / (2 * m)
    lv = np.full(m, 0.5)
    g0 = amp * (np.exp(-(om - 1.1) ** 2 / 1.28)
                + np.exp(-(om - 2.9) ** 2 / 1.28)) * (1 + 0.3j)
    g1 = amp * (np.exp(-(om - 1.28) ** 2 / (2 * 0.88 ** 2))
                + np.exp(-(om - 2.72) ** 2 / (2 * 0.88 ** 2))) * (0.8 - 0.5j)
    return ReservoirModel(omega=om, l_val=lv, g0=g0, g1=g1, xi=xi)


def separated_slots(m=16, xi=0.2):
    """Order-2 slot pair with energy-separated supports.

    The two pair-weight products live on disjoint energy halves, so the
    zero-frequency coincidences that would otherwise dominate a sparse
    grid are absent and the fugacity scaling of the diagrams is clean.
    """
    om = 0.5 + 0.5 * np.arange(m)
    lv = np.full(m, 0.6)
    lo = np.arange(m) < m // 2
    hi = ~lo
    f1 = np.where(lo, 1.0 + 0.2j, 0.0)
    g2 = np.where(lo, 0.9 - 0.3j, 0.0)
    f2 = np.where(hi, 0.7 + 0.4j, 0.0)
    g1 = np.where(hi, 1.1 + 0.1j, 0.0)
    res = ReservoirModel(omega=om, l_val=lv, g0=f1, g1=g2, xi=xi)
    slots = ((f1, g1), (f2, g2))
    return res, slots


def standard_system(scale=0.6):
    d = scale * np.array([[0.5 + 0.2j, 0.1], [0.05j, -0.4 + 0.3j]])
    return SystemModel(dim_s=2, h_s=np.zeros((2, 2)), d_op=d)


@pytest.fixture
def reservoir():
    return standard_reservoir()


@pytest.fixture
def system():
    return standard_system()


@pytest.fixture
def mesh(reservoir):
    return build_mesh(reservoir, 0.3)
