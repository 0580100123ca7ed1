import sys

import numpy as np
import pytest

from witness_forge.maps import PositiveMap, apply_one_sided
from witness_forge.states import PHI_PLUS, PSI_MINUS, BipartiteState, make_rng, projector

TRANSPOSE = PositiveMap("transpose", 2)


def pt_by_loops(m, dA, dB):
    """Reference partial transpose written straight from the index definition."""
    out = np.zeros_like(m)
    for i in range(dA):
        for j in range(dB):
            for k in range(dA):
                for l in range(dB):
                    out[i * dB + j, k * dB + l] = m[i * dB + l, k * dB + j]
    return out


def random_complex(rng, d):
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


@pytest.fixture
def singlet():
    return BipartiteState(projector(PSI_MINUS), 2, 2)


@pytest.fixture
def phi_plus():
    return BipartiteState(projector(PHI_PLUS), 2, 2)


@pytest.fixture
def singlet_pt(singlet):
    return apply_one_sided(TRANSPOSE, singlet)


@pytest.fixture
def rng():
    return make_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
