import numpy as np
import pytest

from reinfog.dqn import FULL_SCALE_HIDDEN, DqnAgent, DqnConfig
from reinfog.network import dqn_target, forward
from reinfog.replay import Experience


def make_agent(**over) -> DqnAgent:
    cfg = DqnConfig(hidden_sizes=(8, 8), **over)
    return DqnAgent(state_dim=4, n_actions=3, cfg=cfg, rng=np.random.default_rng(0))


def test_config_validation():
    with pytest.raises(ValueError):
        DqnConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        DqnConfig(discount=1.5)
    with pytest.raises(ValueError):
        DqnConfig(hidden_sizes=())
    assert FULL_SCALE_HIDDEN == (256, 256, 128)


def test_epsilon_decays_with_decisions():
    agent = make_agent(eps_decay_steps=100)
    assert agent.epsilon == 1.0
    state = np.zeros(4)
    for _ in range(50):
        agent.act(state)
    assert agent.epsilon == pytest.approx(1.0 + (0.05 - 1.0) * 0.5)
    for _ in range(200):
        agent.act(state)
    assert agent.epsilon == 0.05


def test_greedy_matches_online_argmax():
    agent = make_agent()
    state = np.random.default_rng(1).normal(size=4)
    q = forward(agent.online, state)
    assert agent.greedy(state) == int(np.argmax(q))


def batch(rng, n=16):
    out = []
    for _ in range(n):
        out.append(Experience(state=tuple(rng.normal(size=4)),
                              action=int(rng.integers(3)),
                              reward=float(rng.normal()),
                              next_state=tuple(rng.normal(size=4)),
                              done=bool(rng.random() < 0.2)))
    return out


def test_train_step_targets_match_scalar_rule():
    agent = make_agent()
    rng = np.random.default_rng(2)
    exps = batch(rng)
    next_q = forward(agent.target, np.array([e.next_state for e in exps])).max(axis=1)
    want = np.array([
        dqn_target(e.reward, agent.cfg.discount, float(q), e.done)
        for e, q in zip(exps, next_q)
    ])
    got = agent._targets_for(exps)
    assert np.allclose(got, want, rtol=0, atol=0)


def test_target_network_sync_schedule():
    agent = make_agent(target_sync_interval=5, optimizer="sgd")
    rng = np.random.default_rng(3)
    exps = batch(rng)
    for step in range(1, 11):
        agent.train_step(exps)
        synced = all(
            np.array_equal(a, b)
            for a, b in zip(agent.online.weights, agent.target.weights)
        )
        assert synced == (step % 5 == 0)


def test_set_online_replaces_policy_and_keeps_target():
    agent = make_agent()
    other = make_agent()
    other.online.weights[0][0, 0] = 123.0
    before_target = [w.copy() for w in agent.target.weights]
    agent.set_online(other.online)
    assert agent.online.weights[0][0, 0] == 123.0
    assert agent.online is not other.online
    assert all(np.array_equal(a, b)
               for a, b in zip(before_target, agent.target.weights))


def test_learns_trivial_bandit():
    # single state, gamma 0, rewards fixed per action: greedy should
    # recover the best arm after a few hundred updates
    cfg = DqnConfig(hidden_sizes=(16,), learning_rate=0.05, discount=0.0,
                    eps_decay_steps=1, target_sync_interval=10, optimizer="adam")
    agent = DqnAgent(state_dim=2, n_actions=3, cfg=cfg, rng=np.random.default_rng(4))
    rewards = [0.0, 1.0, 0.2]
    state = (0.5, -0.5)
    rng = np.random.default_rng(5)
    pool = [Experience(state=state, action=a, reward=rewards[a],
                       next_state=state, done=True) for a in range(3)]
    for _ in range(300):
        agent.train_step([pool[int(rng.integers(3))] for _ in range(8)])
    assert agent.greedy(np.array(state)) == 1
    q = forward(agent.online, np.array(state))
    assert np.allclose(q, rewards, atol=0.15)
