import numpy as np
import pytest

from secrecy_lab.channel import AuxiliaryStructure, BroadcastChannelSpec, ConditionalPmf, bsc


def product_aux(p1=(0.5, 0.5), p2=(0.5, 0.5), xmap=(0, 1, 0, 1), x_size=2):
    """Independent U1, U2 with a deterministic input map given as a lookup table."""
    joint = np.outer(p1, p2)
    return AuxiliaryStructure.build(joint, ConditionalPmf.from_function(xmap, x_size))


def quaternary_channel(f1, f2, fz):
    """X = (b1, b2); Y1 sees b1 through BSC(f1), Y2 sees b2 through BSC(f2), Z sees b1 through BSC(fz)."""
    bits = [(x >> 1, x & 1) for x in range(4)]
    p_y1 = np.array([bsc(f1)[b1] for b1, _ in bits])
    p_y2 = np.array([bsc(f2)[b2] for _, b2 in bits])
    p_z = np.array([bsc(fz)[b1] for b1, _ in bits])
    return BroadcastChannelSpec.from_components(p_y1, p_y2, p_z)


@pytest.fixture
def binary_channel():
    """Binary X; Y1 = BSC(0.05), Y2 = BSC(0.1), Z = BSC(0.25)."""
    return BroadcastChannelSpec.from_components(bsc(0.05), bsc(0.1), bsc(0.25))


@pytest.fixture
def symmetric_aux():
    """Doubly symmetric binary pair with crossover 1/4 and x = u1 xor u2."""
    return AuxiliaryStructure.build(
        [[0.375, 0.125], [0.125, 0.375]], ConditionalPmf.from_function([0, 1, 1, 0], 2)
    )


# one line per acceptance criterion, printed again in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
