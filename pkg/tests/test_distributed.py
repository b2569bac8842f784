import socket
import threading
import time

import numpy as np
import pytest

from reinfog.distributed import (
    CentralizedResult,
    Learner,
    SyncConfig,
    WorkerReport,
    centralized_mode,
    endpoint_from_env,
    learner_serve,
    parse_endpoint,
    replay_arrivals,
    worker_loop,
    _connect_with_retry,
)
from reinfog.dqn import DqnConfig
from reinfog.network import NetworkParams, policy_to_doc
from reinfog.protocol import (
    ExperienceBatch,
    PolicySync,
    Shutdown,
    WorkerHello,
    read_frame,
    write_frame,
)
from reinfog.replay import Experience
from reinfog.sim import make_reward_spec, generate_workload, uniform_cluster

CLUSTER = uniform_cluster(2, latency_s=0.0)
WORKLOAD = generate_workload(1, 4, rng=0, density=0.5)
SPEC = make_reward_spec(CLUSTER, WORKLOAD)
STATE_DIM = 3 * CLUSTER.n + 4

SMALL_CFG = DqnConfig(hidden_sizes=(8,), batch_size=8, buffer_capacity=512,
                      target_sync_interval=5, eps_decay_steps=50)


def small_learner(**over) -> Learner:
    kw = dict(cfg=SMALL_CFG, sync=SyncConfig(sync_interval=2, batch_flush=4),
              seed=7)
    kw.update(over)
    return learner_serve(STATE_DIM, CLUSTER.n, **kw)


def run_worker(address, wid, episodes=4, **over) -> WorkerReport:
    kw = dict(sync=SyncConfig(sync_interval=2, batch_flush=4),
              dqn_cfg=SMALL_CFG, reward_spec=SPEC, rng=hash(wid) % 1000)
    kw.update(over)
    return worker_loop(address, wid, CLUSTER, WORKLOAD, episodes, **kw)


def test_sync_config_validation():
    with pytest.raises(ValueError):
        SyncConfig(sync_interval=0)
    with pytest.raises(ValueError):
        SyncConfig(batch_flush=0)


def test_parse_endpoint(monkeypatch):
    assert parse_endpoint("127.0.0.1:9000") == ("127.0.0.1", 9000)
    with pytest.raises(ValueError):
        parse_endpoint("9000")
    monkeypatch.setenv("REINFOG_LEARNER_ADDR", "10.0.0.1:4242")
    assert endpoint_from_env() == ("10.0.0.1", 4242)
    monkeypatch.delenv("REINFOG_LEARNER_ADDR")
    with pytest.raises(ValueError):
        endpoint_from_env()


def test_zero_workers_learner_stays_idle():
    learner = small_learner(expected_workers=0)
    assert learner.join(timeout=10.0)
    assert learner.updates == 0
    assert learner.policy_version == 0


def test_single_worker_conservation_and_replay():
    learner = small_learner(expected_workers=1)
    report = run_worker(learner.address, "w0")
    assert learner.join(timeout=20.0)
    assert report.shutdown_reason is None
    assert report.episodes_run == 4
    assert report.experiences_sent == 16
    assert learner.received_experiences == report.experiences_sent
    assert len(learner.arrival_log) == report.batches_sent
    # batches landed in seq order
    seqs = [seq for _, seq, _ in learner.arrival_log]
    assert seqs == sorted(seqs)
    # deterministic replay of the recorded arrivals reproduces training
    updates, params = replay_arrivals(learner.arrival_log, STATE_DIM,
                                      CLUSTER.n, cfg=SMALL_CFG, seed=7)
    assert updates == learner.updates > 0
    assert policy_to_doc(params) == policy_to_doc(learner.agent.online)


def test_three_workers_no_loss_no_duplication():
    learner = small_learner(expected_workers=3)
    reports: list[WorkerReport] = []
    lock = threading.Lock()

    def drive(wid: str) -> None:
        rep = run_worker(learner.address, wid, episodes=3)
        with lock:
            reports.append(rep)

    threads = [threading.Thread(target=drive, args=(f"w{i}",)) for i in range(3)]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=30.0)
    assert learner.join(timeout=20.0)
    assert len(reports) == 3
    sent = sum(r.experiences_sent for r in reports)
    assert sent == 3 * 3 * 4  # workers x episodes x tasks
    assert learner.received_experiences == sent
    assert len(learner.arrival_log) == sum(r.batches_sent for r in reports)
    # per-worker seq order is preserved in the arrival log
    for rep in reports:
        seqs = [s for w, s, _ in learner.arrival_log if w == rep.worker_id]
        assert seqs == sorted(seqs)
    # replay the interleaved order: update count and weights match exactly
    updates, params = replay_arrivals(learner.arrival_log, STATE_DIM,
                                      CLUSTER.n, cfg=SMALL_CFG, seed=7)
    assert updates == learner.updates
    assert policy_to_doc(params) == policy_to_doc(learner.agent.online)


def test_policy_versions_monotone_and_sync_interval_one():
    learner = small_learner(expected_workers=1,
                            sync=SyncConfig(sync_interval=1, batch_flush=2),
                            cfg=DqnConfig(hidden_sizes=(8,), batch_size=2,
                                          buffer_capacity=64))
    report = run_worker(learner.address, "w0", episodes=3,
                        sync=SyncConfig(sync_interval=1, batch_flush=2),
                        dqn_cfg=DqnConfig(hidden_sizes=(8,), batch_size=2,
                                          buffer_capacity=64))
    assert learner.join(timeout=20.0)
    # 12 experiences in batches of 2: an update per arrival, a sync per update
    assert learner.updates == 6
    assert learner.policy_version == learner.updates
    assert list(report.versions_seen) == sorted(report.versions_seen)
    assert report.decision_log == tuple(sorted(report.decision_log))
    assert max(report.decision_log) <= max(report.versions_seen)


def test_worker_applies_longer_training_run_policies():
    # interval 1 keeps syncs flowing while the worker is still deciding;
    # once a version is in force, no later decision uses an older one
    learner = small_learner(expected_workers=1,
                            sync=SyncConfig(sync_interval=1, batch_flush=1),
                            cfg=DqnConfig(hidden_sizes=(8,), batch_size=1,
                                          buffer_capacity=64))
    report = run_worker(learner.address, "w0", episodes=10,
                        sync=SyncConfig(sync_interval=1, batch_flush=1))
    assert learner.join(timeout=30.0)
    assert report.decision_log == tuple(sorted(report.decision_log))
    assert report.versions_seen[0] == 0  # bootstrap snapshot arrives first


def test_duplicate_worker_id_rejected():
    learner = small_learner(expected_workers=1)
    first = socket.create_connection(learner.address)
    second = socket.create_connection(learner.address)
    try:
        write_frame(first, WorkerHello("dup"))
        assert isinstance(read_frame(first), PolicySync)
        write_frame(second, WorkerHello("dup"))
        msg = read_frame(second)
        assert isinstance(msg, Shutdown)
        assert "duplicate" in msg.reason
    finally:
        first.close()
        second.close()
        learner.stop()
        learner.join(timeout=10.0)


def exp_batch(wid: str, seq: int, k: int = 2) -> ExperienceBatch:
    exps = tuple(Experience((0.0,) * STATE_DIM, 0, -1.0, (0.0,) * STATE_DIM, True)
                 for _ in range(k))
    return ExperienceBatch(wid, seq, exps)


def test_out_of_order_seq_terminates_session():
    learner = small_learner(expected_workers=1)
    sock = socket.create_connection(learner.address)
    try:
        write_frame(sock, WorkerHello("w0"))
        assert isinstance(read_frame(sock), PolicySync)
        write_frame(sock, exp_batch("w0", 5))
        write_frame(sock, exp_batch("w0", 5))
        while True:
            msg = read_frame(sock)
            assert msg is not None
            if isinstance(msg, Shutdown):
                break
        assert "out-of-order" in msg.reason
    finally:
        sock.close()
        learner.stop()
        learner.join(timeout=10.0)


def test_worker_runs_without_any_policy_sync():
    # silent server: accepts, reads everything, never answers
    server = socket.create_server(("127.0.0.1", 0))
    got: list = []

    def serve() -> None:
        conn, _ = server.accept()
        with conn:
            while True:
                msg = read_frame(conn)
                if msg is None:
                    break
                got.append(msg)

    t = threading.Thread(target=serve, daemon=True)
    t.start()
    report = run_worker(server.getsockname(), "solo", episodes=2)
    t.join(timeout=10.0)
    server.close()
    assert report.episodes_run == 2
    assert report.versions_seen == ()
    assert all(v == -1 for v in report.decision_log)
    assert report.experiences_sent == 8
    assert isinstance(got[0], WorkerHello)


def test_connect_retry_gives_up():
    probe = socket.create_server(("127.0.0.1", 0))
    dead = probe.getsockname()
    probe.close()
    started = time.monotonic()
    with pytest.raises(ConnectionError, match="after 5 attempts"):
        _connect_with_retry(dead)
    # backoff schedule 0.1+0.2+0.4+0.8+1.6
    assert time.monotonic() - started >= 1.0


def test_centralized_zero_episodes_returns_initial():
    initial = NetworkParams.glorot((STATE_DIM, 8, CLUSTER.n), rng=3)
    res = centralized_mode(CLUSTER, WORKLOAD, episodes=0, dqn_cfg=SMALL_CFG,
                           initial=initial)
    assert isinstance(res, CentralizedResult)
    assert res.trace == ()
    assert res.updates == 0
    assert policy_to_doc(res.policy) == policy_to_doc(initial)


def test_centralized_trace_and_update_count_matches_one_worker():
    sync = SyncConfig(sync_interval=2, batch_flush=4)
    central = centralized_mode(CLUSTER, WORKLOAD, episodes=4,
                               dqn_cfg=SMALL_CFG, sync=sync,
                               reward_spec=SPEC, seed=123)
    assert len(central.trace) == 4
    assert [row.episode for row in central.trace] == [0, 1, 2, 3]
    learner = small_learner(expected_workers=1)
    run_worker(learner.address, "w0", episodes=4)
    assert learner.join(timeout=20.0)
    assert central.updates == learner.updates
