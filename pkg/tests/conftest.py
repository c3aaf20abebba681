import json
import os

import numpy as np
import pytest
from scipy import special

from core.constellation import SystemConfig, db_to_linear, design_constellation


def make_system(n_antennas=128, msg_order=4, tag_order=2, gamma_m_db=10.0, gamma_tot_db=None,
                **kwargs) -> SystemConfig:
    gamma_tot_db = gamma_m_db if gamma_tot_db is None else gamma_tot_db
    return SystemConfig(
        n_antennas=n_antennas,
        msg_order=msg_order,
        tag_order=tag_order,
        gamma_m=db_to_linear(gamma_m_db),
        gamma_tot=db_to_linear(gamma_tot_db),
        **kwargs,
    )


def conditional_tag_ser(scheme, N: int) -> float:
    """Exact P(tag wrong | message right), pooled over equiprobable grid cells."""
    L_m, L_t = scheme.A.shape
    bounds = np.concatenate(([0.0], scheme.B, [np.inf]))
    both_right = 0.0
    msg_right = 0.0
    for i in range(L_m):
        cuts = np.concatenate(([0.0], scheme.C[i], [np.inf]))
        for j in range(L_t):
            A = scheme.A[i, j]
            lo = max(bounds[i], cuts[j])
            hi = min(bounds[i + 1], cuts[j + 1])
            if hi > lo:
                both_right += special.gammainc(N, N * hi / A) - special.gammainc(N, N * lo / A)
            msg_right += (special.gammainc(N, N * bounds[i + 1] / A)
                          - special.gammainc(N, N * bounds[i] / A))
    return 1.0 - both_right / msg_right


@pytest.fixture
def system():
    """N=128, L_m=4, L_t=2 at 10 dB."""
    return make_system()


@pytest.fixture
def constellation(system):
    return design_constellation(system)


@pytest.fixture
def write_config(tmp_path):
    """Write a run config dictionary to a JSON file and return its path."""
    def _write(data, name="config.json"):
        path = os.path.join(tmp_path, name)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f)
        return path
    return _write
