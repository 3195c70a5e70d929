import numpy as np
import pytest

from ddmetapop import DispersalFunction, DispersalMatrix, GrowthMap, build_model
from ddmetapop._kernels import BACKEND

FIG2_R = ((0.2, 0.6), (0.7, 0.3))
FIG2_S = ((10, 3), (12, 6))


def fig2_model(a1, a2, b1=0.04, b2=0.01):
    """Ricker region 1, Hassell region 2, saturating dispersal with k = 0.5."""
    D = DispersalMatrix([[DispersalFunction.richards(FIG2_R[i][j], 0.5, FIG2_S[i][j])
                          for j in range(2)] for i in range(2)])
    return build_model([GrowthMap.ricker(a1, b1), GrowthMap.hassell(a2, b2)], D)


def philopatric_model(a1, a2, b1=0.04, b2=0.01):
    """Same maps; 0.75 retention, 0.1 exchange, k = s = 1."""
    R = ((0.75, 0.1), (0.1, 0.75))
    D = DispersalMatrix([[DispersalFunction.richards(R[i][j], 1, 1) for j in range(2)]
                         for i in range(2)])
    return build_model([GrowthMap.ricker(a1, b1), GrowthMap.hassell(a2, b2)], D)


def retention_model(a1, a2, r, d=0.499, b1=0.04, b2=0.01):
    """Constant self-retention d, Richards exchange with saturation r, k = s = 1."""
    c = DispersalFunction.constant(d)
    x = DispersalFunction.richards(r, 1, 1)
    return build_model([GrowthMap.ricker(a1, b1), GrowthMap.hassell(a2, b2)],
                       DispersalMatrix([[c, x], [x, c]]))


def remark_model():
    D = DispersalMatrix([[DispersalFunction.constant(0.5), DispersalFunction.constant(0.1)],
                         [DispersalFunction.constant(0.1), DispersalFunction.constant(0.1)]])
    return build_model([GrowthMap.ricker(0.01, 0.04), GrowthMap.ricker(36, 0.04)], D)


def random_model(rng, n=None):
    """A random valid model mixing every catalog kind except the logistic."""
    n = int(rng.integers(1, 5)) if n is None else n
    maps = []
    for _ in range(n):
        kind = rng.integers(0, 4)
        if kind == 0:
            maps.append(GrowthMap.ricker(rng.uniform(0.1, 30), rng.uniform(0.005, 0.5)))
        elif kind == 1:
            maps.append(GrowthMap.hassell(rng.uniform(0.1, 20), rng.uniform(0.005, 0.5), rng.uniform(1, 4)))
        elif kind == 2:
            maps.append(GrowthMap.gbh(rng.uniform(0.1, 20), rng.uniform(0.5, 50), rng.uniform(1, 4)))
        else:
            maps.append(GrowthMap.gamma_gauss(rng.uniform(0.5, 10)))
    rows = [[None] * n for _ in range(n)]
    for j in range(n):
        share = rng.dirichlet(np.ones(n)) * rng.uniform(0.05, 0.95)
        for i in range(n):
            if rng.random() < 0.5:
                rows[i][j] = DispersalFunction.constant(share[i])
            else:
                rows[i][j] = DispersalFunction.richards(share[i], rng.uniform(0, 2), rng.uniform(0, 20))
    return build_model(maps, DispersalMatrix(rows))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def backend_name():
    return BACKEND
