import numpy as np
import pytest

from reinfog.replay import Experience, RandomReplayBuffer, ReservoirReplayBuffer


def exp(i: int) -> Experience:
    return Experience(state=(float(i),), action=i % 3, reward=float(i),
                      next_state=(float(i + 1),), done=False)


def test_fifo_eviction_order():
    buf = RandomReplayBuffer(capacity=3)
    for i in range(5):
        buf.push(exp(i))
    assert len(buf) == 3
    kept = sorted(e.action for e in buf.sample(3, np.random.default_rng(0)))
    rewards = sorted(e.reward for e in buf.sample(3, np.random.default_rng(0)))
    assert rewards == [2.0, 3.0, 4.0]
    assert kept == sorted(e % 3 for e in (2, 3, 4))


def test_sample_too_many_raises():
    buf = RandomReplayBuffer(capacity=4)
    buf.push(exp(0))
    with pytest.raises(ValueError):
        buf.sample(2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        RandomReplayBuffer(capacity=0)


def test_sample_without_replacement():
    buf = RandomReplayBuffer(capacity=8)
    for i in range(8):
        buf.push(exp(i))
    got = buf.sample(8, np.random.default_rng(1))
    assert sorted(e.reward for e in got) == [float(i) for i in range(8)]


def test_sample_uniformity():
    buf = RandomReplayBuffer(capacity=10)
    for i in range(10):
        buf.push(exp(i))
    rng = np.random.default_rng(2)
    counts = np.zeros(10)
    draws = 4000
    for _ in range(draws):
        counts[int(buf.sample(1, rng)[0].reward)] += 1
    # binomial p=0.1: sd = sqrt(n p (1-p)) ~ 19, allow 3 sigma
    expected = draws / 10
    sigma = np.sqrt(draws * 0.1 * 0.9)
    assert np.all(np.abs(counts - expected) <= 3 * sigma + 1)


def test_reservoir_fills_then_holds_capacity():
    buf = ReservoirReplayBuffer(capacity=5)
    rng = np.random.default_rng(0)
    for i in range(3):
        buf.push(exp(i), rng)
    assert len(buf) == 3 and buf.seen == 3
    for i in range(3, 50):
        buf.push(exp(i), rng)
    assert len(buf) == 5 and buf.seen == 50


def test_reservoir_inclusion_probability():
    # every item should be kept with probability k/N; aggregate by decile
    # so each bucket count is a fat binomial we can band at 3 sigma
    k, n, reps = 20, 400, 150
    decile = n // 10
    counts = np.zeros(10)
    rng = np.random.default_rng(7)
    for _ in range(reps):
        buf = ReservoirReplayBuffer(capacity=k)
        for i in range(n):
            buf.push(exp(i), rng)
        for e in buf.sample(k, rng):
            counts[int(e.reward) // decile] += 1
    p = k / n
    trials = reps * decile
    expected = trials * p
    sigma = np.sqrt(trials * p * (1 - p))
    assert np.all(np.abs(counts - expected) <= 3 * sigma)


def test_reservoir_deterministic_given_rng():
    def run():
        buf = ReservoirReplayBuffer(capacity=4)
        rng = np.random.default_rng(42)
        for i in range(100):
            buf.push(exp(i), rng)
        return [e.reward for e in buf.sample(4, rng)]

    assert run() == run()


def test_experience_is_hashable_record():
    a = exp(1)
    b = Experience(state=(1.0,), action=1, reward=1.0, next_state=(2.0,), done=False)
    assert a == b
    assert hash(a) == hash(b)
