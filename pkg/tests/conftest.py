import numpy as np
import pytest

from diamondnet.channel import dmc_from_matrix
from diamondnet.prob import ConditionalKernel, JointPmf
from diamondnet.region import DiamondDistribution


def random_joint(rng, shape, sparsity=0.0):
    p = rng.dirichlet(np.full(int(np.prod(shape)), 0.7))
    if sparsity:
        p[rng.random(p.size) < sparsity] = 0.0
        if p.sum() == 0:
            p[0] = 1.0
        p /= p.sum()
    return p.reshape(shape)


def random_distribution(rng, card_u=2, card_z=2, card_x=2, card_y=2, channel=None):
    if channel is None:
        channel = dmc_from_matrix(rng.dirichlet(np.ones(card_y), size=card_x))
    card_x, card_y = channel.input_alphabet, channel.output_alphabet
    p_ux = rng.dirichlet(np.full(card_u * card_x, 0.8)).reshape(card_u, card_x)
    K = rng.dirichlet(np.full(card_z, 0.8), size=card_u * card_y)
    return DiamondDistribution(JointPmf(p_ux), channel, ConditionalKernel(K))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance
    if test_acceptance.LINES:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.LINES:
            terminalreporter.write_line(line)
