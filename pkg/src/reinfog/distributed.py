"""Distributed training runtime: one learner, many experience-streaming workers.

Topology and rules:

* Workers run episodes locally and stream Experience batches; the learner
  is the only thread that touches network parameters.
* Session threads never train. They validate ordering and push batches to
  one queue; a single trainer thread consumes arrivals in queue order, so
  given a recorded arrival order and a fixed seed the learner's parameter
  trajectory is reproducible bit for bit (see replay_arrivals).
* Per batch arrival the learner performs at most ONE gradient update
  (once the buffer holds a full batch), so update counts depend only on
  the arrival sizes, not on timing or experience content.
* Policy broadcasts go out every sync_interval updates with a strictly
  increasing policy_version; workers swap policies in between decisions.
"""

from __future__ import annotations

import os
import queue
import socket
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .dqn import DqnAgent, DqnConfig
from .network import NetworkParams
from .protocol import (
    PROTOCOL_VERSION,
    ExperienceBatch,
    PolicySync,
    ProtocolError,
    Shutdown,
    WireMessage,
    WorkerHello,
    read_frame,
    write_frame,
)
from .replay import Experience, RandomReplayBuffer
from .sim import (
    USER,
    ClusterSpec,
    RewardSpec,
    make_reward_spec,
    run_episode,
)

ENDPOINT_ENV_VAR = "REINFOG_LEARNER_ADDR"

RETRY_INITIAL_S = 0.1
RETRY_CAP_S = 5.0
RETRY_MAX_ATTEMPTS = 5


@dataclass(frozen=True)
class SyncConfig:
    sync_interval: int = 10  # learner updates between policy broadcasts
    batch_flush: int = 8     # experiences per ExperienceBatch

    def __post_init__(self) -> None:
        if self.sync_interval < 1 or self.batch_flush < 1:
            raise ValueError("sync_interval and batch_flush must be >= 1")


@dataclass
class SessionState:
    worker_id: str
    last_seq: int = -1
    last_policy_version_acked: int = -1


def parse_endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ValueError(f"endpoint must look like host:port, got {text!r}")
    return host, int(port)


def endpoint_from_env() -> tuple[str, int]:
    raw = os.environ.get(ENDPOINT_ENV_VAR)
    if not raw:
        raise ValueError(f"no endpoint given and {ENDPOINT_ENV_VAR} is unset")
    return parse_endpoint(raw)


class _TrainerCore:
    """Buffer-and-update cadence shared by the live learner and replays."""

    def __init__(self, agent: DqnAgent, rng: np.random.Generator) -> None:
        self.agent = agent
        self.rng = rng
        self.buffer = RandomReplayBuffer(agent.cfg.buffer_capacity)

    def ingest(self, experiences: tuple[Experience, ...]) -> bool:
        """Append one arrival; run a single update once a batch is buffered."""
        for exp in experiences:
            self.buffer.push(exp)
        if len(self.buffer) < self.agent.cfg.batch_size:
            return False
        batch = self.buffer.sample(self.agent.cfg.batch_size, self.rng)
        self.agent.train_step(batch)
        return True


def replay_arrivals(arrivals: list[tuple[str, int, tuple[Experience, ...]]],
                    state_dim: int, n_actions: int,
                    cfg: DqnConfig | None = None,
                    initial: NetworkParams | None = None,
                    seed: int | None = 0) -> tuple[int, NetworkParams]:
    """Re-run a recorded arrival log through a fresh trainer core.

    With the same initial parameters and seed as the live learner this
    reproduces its update count and final weights exactly.
    """
    rng = np.random.default_rng(seed)
    agent = DqnAgent(state_dim, n_actions, cfg, rng=rng, initial=initial)
    core = _TrainerCore(agent, rng)
    updates = 0
    for _, _, experiences in arrivals:
        if core.ingest(experiences):
            updates += 1
    return updates, agent.online


class _Session:
    def __init__(self, state: SessionState, sock: socket.socket) -> None:
        self.state = state
        self.sock = sock
        self.write_lock = threading.Lock()

    def send(self, msg: WireMessage) -> bool:
        try:
            with self.write_lock:
                write_frame(self.sock, msg)
            return True
        except OSError:
            return False


class Learner:
    """Accepts worker sessions, trains on streamed experience, broadcasts policy.

    Stops on its own once `max_updates` is reached, or once all
    `expected_workers` sessions have connected and drained. stop() forces
    teardown regardless.
    """

    def __init__(self, state_dim: int, n_actions: int,
                 cfg: DqnConfig | None = None, sync: SyncConfig | None = None,
                 initial: NetworkParams | None = None, seed: int | None = 0,
                 host: str = "127.0.0.1", port: int = 0,
                 max_updates: int | None = None,
                 expected_workers: int | None = None) -> None:
        self.cfg = cfg or DqnConfig()
        self.sync = sync or SyncConfig()
        rng = np.random.default_rng(seed)
        self.agent = DqnAgent(state_dim, n_actions, self.cfg, rng=rng,
                              initial=initial)
        self._core = _TrainerCore(self.agent, rng)
        self._host, self._port = host, port
        self._max_updates = max_updates
        self._expected_workers = expected_workers
        self.policy_version = 0
        self.updates = 0
        self.received_experiences = 0
        self.arrival_log: list[tuple[str, int, tuple[Experience, ...]]] = []
        self._queue: "queue.Queue" = queue.Queue()
        self._sessions: dict[str, _Session] = {}
        self._sessions_started = 0
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._train_done = threading.Event()
        self._listener: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._session_threads: list[threading.Thread] = []

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "Learner":
        self._listener = socket.create_server((self._host, self._port))
        self._listener.settimeout(0.2)
        for target in (self._accept_loop, self._train_loop):
            t = threading.Thread(target=target, daemon=True)
            t.start()
            self._threads.append(t)
        return self

    @property
    def address(self) -> tuple[str, int]:
        assert self._listener is not None, "learner not started"
        host, port = self._listener.getsockname()[:2]
        return host, port

    def stop(self, reason: str = "server stopped") -> None:
        if not self._stop.is_set():
            self._broadcast(Shutdown(reason))
            self._stop.set()
        with self._lock:
            for session in self._sessions.values():
                try:
                    session.sock.shutdown(socket.SHUT_RDWR)
                except OSError:
                    pass

    def join(self, timeout: float | None = None) -> bool:
        deadline = None if timeout is None else time.monotonic() + timeout

        def left() -> float | None:
            return None if deadline is None else max(deadline - time.monotonic(), 0.0)

        if not self._train_done.wait(left()):
            return False
        for t in list(self._session_threads):
            t.join(left())
            if t.is_alive():
                return False
        self._stop.set()
        for t in self._threads:
            t.join(left())
            if t.is_alive():
                return False
        if self._listener is not None:
            self._listener.close()
        return True

    # -- threads -----------------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                sock, _ = self._listener.accept()
            except TimeoutError:
                continue
            except OSError:
                break
            t = threading.Thread(target=self._session_loop, args=(sock,),
                                 daemon=True)
            t.start()
            self._session_threads.append(t)

    def _session_loop(self, sock: socket.socket) -> None:
        session: _Session | None = None
        try:
            hello = read_frame(sock)
            if not isinstance(hello, WorkerHello):
                write_frame(sock, Shutdown("expected worker_hello"))
                return
            if hello.protocol_version != PROTOCOL_VERSION:
                write_frame(sock, Shutdown(
                    f"protocol version {hello.protocol_version} unsupported"))
                return
            with self._lock:
                if hello.worker_id in self._sessions:
                    duplicate = True
                else:
                    duplicate = False
                    session = _Session(SessionState(hello.worker_id), sock)
                    self._sessions[hello.worker_id] = session
                    self._sessions_started += 1
            if duplicate:
                write_frame(sock, Shutdown("duplicate worker id"))
                return
            # bootstrap the worker onto the current global policy
            session.state.last_policy_version_acked = self.policy_version
            session.send(PolicySync(self.policy_version, self.agent.online.copy()))
            while not self._stop.is_set():
                msg = read_frame(sock)
                if msg is None or isinstance(msg, Shutdown):
                    break
                if not isinstance(msg, ExperienceBatch):
                    session.send(Shutdown("unexpected message type"))
                    break
                if msg.worker_id != session.state.worker_id:
                    session.send(Shutdown("worker id changed mid-session"))
                    break
                if msg.seq <= session.state.last_seq:
                    session.send(Shutdown(
                        f"out-of-order batch {msg.seq} after "
                        f"{session.state.last_seq}"))
                    break
                session.state.last_seq = msg.seq
                with self._lock:
                    self.received_experiences += len(msg.experiences)
                self._queue.put((msg.worker_id, msg.seq, msg.experiences))
        except (ProtocolError, OSError):
            pass
        finally:
            if session is not None:
                with self._lock:
                    self._sessions.pop(session.state.worker_id, None)
            sock.close()

    def _drained(self) -> bool:
        if self._expected_workers is None:
            return False
        with self._lock:
            all_seen = self._sessions_started >= self._expected_workers
            none_live = not self._sessions
        return all_seen and none_live and self._queue.empty()

    def _train_loop(self) -> None:
        try:
            while not self._stop.is_set():
                try:
                    arrival = self._queue.get(timeout=0.05)
                except queue.Empty:
                    if self._drained():
                        break
                    continue
                self.arrival_log.append(arrival)
                if not self._core.ingest(arrival[2]):
                    continue
                self.updates += 1
                if self.updates % self.sync.sync_interval == 0:
                    self._broadcast_policy()
                if self._max_updates is not None \
                        and self.updates >= self._max_updates:
                    self._broadcast(Shutdown("training complete"))
                    break
        finally:
            self._train_done.set()

    def _broadcast_policy(self) -> None:
        self.policy_version += 1
        snapshot = self.agent.online.copy()
        with self._lock:
            sessions = list(self._sessions.values())
        for session in sessions:
            if session.send(PolicySync(self.policy_version, snapshot)):
                session.state.last_policy_version_acked = self.policy_version

    def _broadcast(self, msg: WireMessage) -> None:
        with self._lock:
            sessions = list(self._sessions.values())
        for session in sessions:
            session.send(msg)


def learner_serve(state_dim: int, n_actions: int, **kwargs) -> Learner:
    """Start a learner and hand back its run handle."""
    return Learner(state_dim, n_actions, **kwargs).start()


def _connect_with_retry(endpoint: tuple[str, int]) -> socket.socket:
    delay = RETRY_INITIAL_S
    last: Exception | None = None
    for _ in range(RETRY_MAX_ATTEMPTS):
        try:
            return socket.create_connection(endpoint)
        except OSError as exc:
            last = exc
            time.sleep(delay)
            delay = min(delay * 2, RETRY_CAP_S)
    raise ConnectionError(
        f"could not reach learner at {endpoint[0]}:{endpoint[1]} "
        f"after {RETRY_MAX_ATTEMPTS} attempts") from last


class _PolicyMailbox:
    """Latest policy snapshot, swapped in between decision steps."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._latest: tuple[int, NetworkParams] | None = None
        self.versions_seen: list[int] = []

    def offer(self, version: int, params: NetworkParams) -> None:
        with self._lock:
            self.versions_seen.append(version)
            if self._latest is None or version >= self._latest[0]:
                self._latest = (version, params)

    def take(self, newer_than: int) -> tuple[int, NetworkParams] | None:
        with self._lock:
            if self._latest is not None and self._latest[0] > newer_than:
                return self._latest
        return None


@dataclass(frozen=True)
class WorkerReport:
    worker_id: str
    episodes_run: int
    batches_sent: int
    experiences_sent: int
    episode_rewards: tuple[float, ...]
    episode_wc: tuple[float, ...]
    decision_log: tuple[int, ...]     # policy version in force at each decision
    versions_seen: tuple[int, ...]    # every PolicySync received, in order
    shutdown_reason: str | None


def worker_loop(endpoint: tuple[str, int] | None, worker_id: str,
                cluster: ClusterSpec, workload, episodes: int,
                sync: SyncConfig | None = None,
                dqn_cfg: DqnConfig | None = None,
                reward_spec: RewardSpec | None = None,
                releases=None, origin: int = USER,
                rng: np.random.Generator | int | None = None,
                initial: NetworkParams | None = None) -> WorkerReport:
    """Collect episodes and stream them to the learner until done or told to stop.

    The endpoint falls back to the REINFOG_LEARNER_ADDR environment
    variable. Acting is epsilon-greedy on the latest synced policy; policy
    swaps happen only between decisions.
    """
    if endpoint is None:
        endpoint = endpoint_from_env()
    sync = sync or SyncConfig()
    spec = reward_spec or make_reward_spec(cluster, workload,
                                           releases=releases, origin=origin)
    n = cluster.n
    state_dim = 3 * n + 4
    agent = DqnAgent(state_dim, n, dqn_cfg, rng=rng, initial=initial)
    mailbox = _PolicyMailbox()
    stop = threading.Event()
    shutdown_reason: list[str | None] = [None]

    sock = _connect_with_retry(endpoint)

    def receive() -> None:
        try:
            while True:
                msg = read_frame(sock)
                if msg is None:
                    break
                if isinstance(msg, PolicySync):
                    mailbox.offer(msg.policy_version, msg.policy)
                elif isinstance(msg, Shutdown):
                    shutdown_reason[0] = msg.reason
                    stop.set()
                    break
        except (ProtocolError, OSError):
            stop.set()

    receiver = threading.Thread(target=receive, daemon=True)
    current_version = -1
    decision_log: list[int] = []
    pending: list[Experience] = []
    seq = 0
    batches = experiences_sent = 0
    rewards: list[float] = []
    wcs: list[float] = []
    episodes_run = 0

    def policy_step(state: np.ndarray) -> int:
        nonlocal current_version
        newer = mailbox.take(current_version)
        if newer is not None:
            current_version = newer[0]
            agent.set_online(newer[1])
        decision_log.append(current_version)
        return agent.act(state)

    def flush(everything: bool = False) -> None:
        nonlocal seq, batches, experiences_sent
        while len(pending) >= sync.batch_flush or (everything and pending):
            chunk = tuple(pending[:sync.batch_flush])
            del pending[:len(chunk)]
            seq += 1
            write_frame(sock, ExperienceBatch(worker_id, seq, chunk))
            batches += 1
            experiences_sent += len(chunk)

    try:
        write_frame(sock, WorkerHello(worker_id))
        receiver.start()
        for _ in range(episodes):
            if stop.is_set():
                break
            result = run_episode(cluster, workload, policy_step, spec,
                                 releases, origin)
            episodes_run += 1
            rewards.append(sum(result.rewards))
            wcs.append(result.total_wc)
            pending.extend(
                Experience(s.state, s.action, s.reward, s.next_state, s.done)
                for s in result.steps)
            flush()
        flush(everything=True)
        try:
            sock.shutdown(socket.SHUT_WR)
        except OSError:
            pass
        receiver.join(timeout=10.0)
    except OSError as exc:
        if shutdown_reason[0] is None:
            shutdown_reason[0] = f"connection lost: {exc}"
    finally:
        stop.set()
        sock.close()
        if receiver.is_alive():
            receiver.join(timeout=1.0)

    return WorkerReport(worker_id=worker_id, episodes_run=episodes_run,
                        batches_sent=batches,
                        experiences_sent=experiences_sent,
                        episode_rewards=tuple(rewards),
                        episode_wc=tuple(wcs),
                        decision_log=tuple(decision_log),
                        versions_seen=tuple(mailbox.versions_seen),
                        shutdown_reason=shutdown_reason[0])


@dataclass(frozen=True)
class EpisodeRow:
    episode: int
    steps: int
    total_reward: float
    total_wc: float
    epsilon: float
    updates: int


@dataclass(frozen=True)
class CentralizedResult:
    policy: NetworkParams
    trace: tuple[EpisodeRow, ...]
    updates: int


def centralized_mode(cluster: ClusterSpec, workload, episodes: int,
                     dqn_cfg: DqnConfig | None = None,
                     sync: SyncConfig | None = None,
                     reward_spec: RewardSpec | None = None,
                     releases=None, origin: int = USER,
                     seed: int | None = 0,
                     initial: NetworkParams | None = None) -> CentralizedResult:
    """Single-process act/store/update loop; no sockets involved.

    Experiences enter the buffer in groups of batch_flush (the remainder
    only at the very end), reproducing the arrival pattern of one worker
    feeding a learner, so update counts match that setup exactly.
    """
    sync = sync or SyncConfig()
    spec = reward_spec or make_reward_spec(cluster, workload,
                                           releases=releases, origin=origin)
    n = cluster.n
    rng = np.random.default_rng(seed)
    agent = DqnAgent(3 * n + 4, n, dqn_cfg, rng=rng, initial=initial)
    core = _TrainerCore(agent, rng)
    pending: list[Experience] = []
    trace: list[EpisodeRow] = []
    updates = 0

    def drain(everything: bool = False) -> int:
        nonlocal updates
        done = 0
        while len(pending) >= sync.batch_flush or (everything and pending):
            chunk = tuple(pending[:sync.batch_flush])
            del pending[:len(chunk)]
            if core.ingest(chunk):
                updates += 1
                done += 1
        return done

    for episode in range(episodes):
        result = run_episode(cluster, workload, agent.act, spec,
                             releases, origin)
        pending.extend(
            Experience(s.state, s.action, s.reward, s.next_state, s.done)
            for s in result.steps)
        drain()
        trace.append(EpisodeRow(episode=episode, steps=len(result.steps),
                                total_reward=sum(result.rewards),
                                total_wc=result.total_wc,
                                epsilon=agent.epsilon, updates=updates))
    drain(everything=True)
    return CentralizedResult(policy=agent.online.copy(), trace=tuple(trace),
                             updates=updates)
