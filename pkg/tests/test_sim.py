import math

import numpy as np
import pytest

from interlace_lab.errors import DivergenceError, RejectionBudgetExceeded
from interlace_lab.lattice import WalkSpec
from interlace_lab.reports import mc_report
from interlace_lab.sim import (Soup, SoupSampler, as_seed_sequence, backward_walk, child_seq,
                               child_stream, exp_moment_target, forward_walk, local_time_field)


@pytest.fixture(scope="module")
def sampler(line):
    return SoupSampler(line, [0, 1])


def test_same_seed_same_soup(sampler):
    a = sampler.sample(2.0, 123)
    b = sampler.sample(2.0, 123)
    assert a.to_json() == b.to_json()
    assert sampler.sample(2.0, 124).to_json() != a.to_json()


def test_child_streams_do_not_mutate_parent():
    seq = as_seed_sequence(9)
    x = child_stream(seq, 3).random()
    child_stream(seq, 4).random()
    assert child_stream(seq, 3).random() == x
    assert child_seq(seq, 1, 2).spawn_key == (1, 2)


def test_soup_structure(sampler):
    soup = sampler.sample(3.0, 5)
    assert soup.count > 0
    for t in soup.trajectories:
        assert t.entrance in sampler.K
        assert t.forward.sites[0] == t.entrance
        assert not set(t.backward.sites) & set(sampler.K)
        assert all(h > 0 for h in t.forward.holding + t.backward.holding)
        steps = np.diff(np.array(t.forward.sites), axis=0)
        assert np.all(np.abs(steps).sum(axis=1) == 1)
    back = Soup.from_json(soup.to_json())
    assert back == soup


def test_zero_intensity(sampler):
    soup = sampler.sample(0.0, 1)
    assert soup.count == 0
    assert local_time_field(soup, sampler.K).values == (0.0, 0.0)
    with pytest.raises(ValueError):
        sampler.sample(-1.0, 1)


def test_local_time_csv(sampler):
    text = local_time_field(sampler.sample(1.0, 2), sampler.K).to_csv()
    assert text.splitlines()[0] == "x0,L1" and len(text.splitlines()) == 3


def test_rejection_budget():
    spec = WalkSpec.nearest_neighbor(1, 0.01)
    K = np.array([[x] for x in range(-20, 21)])
    with pytest.raises(RejectionBudgetExceeded):
        for seed in range(50):
            backward_walk(spec, K, (0,), child_stream(as_seed_sequence(seed)), max_attempts=1)


def test_backward_must_start_in_K(line):
    with pytest.raises(ValueError):
        backward_walk(line, [0], (3,), np.random.default_rng(0))


def test_exp_target_diverges():
    u0 = 1 / math.sqrt(3)
    assert exp_moment_target(1.0, 0.5 / u0, u0) == pytest.approx(math.exp(1 / u0))
    with pytest.raises(DivergenceError):
        exp_moment_target(1.0, 1.0 / u0, u0)


@pytest.mark.slow
def test_forward_lifetime_is_exponential_kappa(line):
    # total lifetime of the killed walk is Exp(kappa): mean 1/kappa
    rng = np.random.default_rng(31)
    life = [sum(forward_walk(line, 0, rng).holding) for _ in range(20000)]
    assert abs(mc_report("lifetime", life, 1.0).z) < 4


@pytest.mark.slow
def test_entrance_frequencies_and_2d_first_moment():
    spec = WalkSpec.nearest_neighbor(2, 0.5)
    s = SoupSampler(spec, [(0, 0), (1, 0), (0, 2)])
    seq = as_seed_sequence(77)
    entr, lt = [], []
    for j in range(4000):
        soup = s.sample(0.7, child_seq(seq, j))
        entr += [s.K.index(t.entrance) for t in soup.trajectories]
        lt.append(local_time_field(soup, s.K).values)
    freq = np.bincount(entr, minlength=3) / len(entr)
    p = s.equilibrium.entrance_distribution
    se = np.sqrt(p * (1 - p) / len(entr))
    assert np.all(np.abs(freq - p) < 4 * se)
    lt = np.array(lt)
    for i in range(3):
        assert abs(mc_report("E L1", lt[:, i], 0.7).z) < 4
