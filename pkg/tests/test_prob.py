import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diamondnet.errors import InvalidArgument, InvalidDistribution
from diamondnet.prob import (ConditionalKernel, JointPmf, Pmf, csiszar_sum_check,
                             entropy, mutual_information)

from conftest import random_joint
from oracles import bisect_binary_entropy, raw_entropy, raw_mi

LN2 = math.log(2)
# ln 2 - H(0.110028...) in nats; bisection oracle followed by direct summation
HALF_BIT = 0.34657359027997264


def test_uniform_binary_entropy():
    assert entropy(Pmf([0.5, 0.5]), [0]) == pytest.approx(LN2, abs=1e-15)


def test_point_mass_entropy():
    assert entropy(Pmf([0.0, 1.0, 0.0]), [0]) == 0.0


def test_half_bit_entropy():
    q = bisect_binary_entropy(0.5)
    assert entropy(Pmf([q, 1 - q]), [0]) == pytest.approx(0.5 * LN2, abs=1e-12)
    assert entropy(Pmf([0.110028, 0.889972]), [0]) == pytest.approx(0.346574, abs=1e-6)


def test_independent_mi_is_zero():
    p = np.outer([0.3, 0.7], [0.6, 0.4])
    assert mutual_information(JointPmf(p), [0], [1]) == pytest.approx(0.0, abs=1e-15)


def test_identity_channel_mi():
    p = np.diag([0.5, 0.5])
    assert mutual_information(JointPmf(p), [0], [1]) == pytest.approx(LN2, abs=1e-15)


def test_bsc_mi():
    q = bisect_binary_entropy(0.5)
    p = 0.5 * np.array([[1 - q, q], [q, 1 - q]])
    assert mutual_information(JointPmf(p), [0], [1]) == pytest.approx(HALF_BIT, abs=1e-12)


def test_against_raw_summation(rng):
    for _ in range(30):
        p = random_joint(rng, (2, 3, 2, 2), sparsity=0.2)
        j = JointPmf(p)
        assert entropy(j, [0, 2], [1]) == pytest.approx(raw_entropy(p, [0, 2], [1]), abs=1e-12)
        assert entropy(j, [3]) == pytest.approx(raw_entropy(p, [3]), abs=1e-12)
        assert mutual_information(j, [0], [1, 3], [2]) == pytest.approx(
            raw_mi(p, [0], [1, 3], [2]), abs=1e-12)


@pytest.mark.parametrize("t,g", [([0], [0]), ([0, 1], [1, 2])])
def test_overlapping_axes_rejected(t, g):
    j = JointPmf(np.full((2, 2, 2), 0.125))
    with pytest.raises(InvalidArgument):
        entropy(j, t, g)


def test_out_of_range_axis_rejected():
    with pytest.raises(InvalidArgument):
        entropy(JointPmf(np.full((2, 2), 0.25)), [2])
    with pytest.raises(InvalidArgument):
        mutual_information(JointPmf(np.full((2, 2), 0.25)), [0], [0])


def test_normalisation_is_not_silently_fixed():
    with pytest.raises(InvalidDistribution):
        Pmf([0.5, 0.5 + 1e-9])
    with pytest.raises(InvalidDistribution):
        Pmf([1.2, -0.2])
    with pytest.raises(InvalidDistribution):
        ConditionalKernel([[1.0, 0.0], [0.0, 0.9]])
    Pmf([0.5, 0.5 + 5e-13])


def test_marginal_is_valid():
    j = JointPmf(np.full((2, 3, 4), 1 / 24))
    m = j.marginal([2, 0])
    assert m.axes == (2, 4)


def test_csiszar_trivial_cases(rng):
    assert csiszar_sum_check(JointPmf(random_joint(rng, (2, 2)))) == (0.0, 0.0)
    px = random_joint(rng, (2, 2))
    py = random_joint(rng, (2, 2))
    lhs, rhs = csiszar_sum_check(JointPmf(np.einsum("ab,cd->abcd", px, py)))
    assert lhs == pytest.approx(0.0, abs=1e-15)
    assert rhs == pytest.approx(0.0, abs=1e-15)


def test_csiszar_n2_matches_raw(rng):
    p = random_joint(rng, (2, 2, 2, 2))
    lhs, rhs = csiszar_sum_check(JointPmf(p))
    # axes: X1=0, X2=1, Y1=2, Y2=3
    raw_lhs = raw_mi(p, [1], [2]) + 0.0
    raw_rhs = 0.0 + raw_mi(p, [2], [1])
    assert lhs == pytest.approx(raw_lhs, abs=1e-12)
    assert rhs == pytest.approx(raw_rhs, abs=1e-12)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_csiszar_odd_axes():
    with pytest.raises(InvalidArgument):
        csiszar_sum_check(JointPmf(np.full((2, 2, 2), 0.125)))


# --- properties -------------------------------------------------------------

shapes = st.lists(st.integers(1, 3), min_size=2, max_size=4)


@st.composite
def joints(draw):
    shape = tuple(draw(shapes))
    seed = draw(st.integers(0, 2**32 - 1))
    sparsity = draw(st.sampled_from([0.0, 0.3]))
    return random_joint(np.random.default_rng(seed), shape, sparsity)


@st.composite
def joint_and_partition(draw):
    p = draw(joints())
    labels = draw(st.lists(st.integers(0, 3), min_size=p.ndim, max_size=p.ndim))
    groups = [[a for a in range(p.ndim) if labels[a] == k] for k in range(4)]
    return p, groups


@settings(max_examples=1000, deadline=None)
@given(joint_and_partition())
def test_entropy_bounds(pg):
    p, (t, g, _, _) = pg
    h = entropy(p, t, g)
    cap = math.log(np.prod([p.shape[a] for a in t])) if t else 0.0
    assert -1e-12 <= h <= cap + 1e-12


@settings(max_examples=300, deadline=None)
@given(joint_and_partition())
def test_mi_chain_rule(pg):
    p, (a, b, c, _) = pg
    whole = mutual_information(p, a, b + c)
    parts = mutual_information(p, a, b) + mutual_information(p, a, c, b)
    assert whole == pytest.approx(parts, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(joint_and_partition())
def test_conditioning_reduces_entropy(pg):
    p, (t, g1, g2, _) = pg
    assert entropy(p, t, g1) >= entropy(p, t, g1 + g2) - 1e-12


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_csiszar_identity(n, seed):
    p = random_joint(np.random.default_rng(seed), (2,) * (2 * n))
    lhs, rhs = csiszar_sum_check(JointPmf(p))
    assert lhs == pytest.approx(rhs, abs=1e-12)
